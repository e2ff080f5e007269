//! The fitted-model type shared by every method, and its JSON file format.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::{subtract_mean, LabeledDataset};
use crate::error::{Error, Result};

/// Version of the model JSON document.
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Slce,
    Pca,
    Lda,
    BairSpca,
    HsicSpca,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Slce,
        Method::Pca,
        Method::Lda,
        Method::BairSpca,
        Method::HsicSpca,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Slce => "slce",
            Method::Pca => "pca",
            Method::Lda => "lda",
            Method::BairSpca => "bair_spca",
            Method::HsicSpca => "hsic_spca",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown method {s:?}")))
    }
}

/// Cross-validation score of one Bair threshold fraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridScore {
    pub fraction: f64,
    pub cv_accuracy: f64,
}

/// Method-specific metadata.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Aux {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub positive_count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shrinkage: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub selected_features: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold_fraction: Option<f64>,
    /// Smallest screening score among the selected features.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold_score: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cv_scores: Option<Vec<GridScore>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label_kernel: Option<String>,
}

/// A fitted linear map `y = basisᵀ((x − mean) ⊘ scale)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearReducer {
    pub method: Method,
    /// `d × k`.
    pub basis: DMatrix<f64>,
    pub mean: DVector<f64>,
    /// Eigenvalues associated with the basis columns.
    pub spectrum: DVector<f64>,
    pub n_classes: usize,
    pub class_names: Vec<String>,
    /// Optional per-feature divisor applied after centering.
    pub scale: Option<DVector<f64>>,
    pub trace_ctc: Option<f64>,
    pub aux: Aux,
}

impl LinearReducer {
    pub fn d(&self) -> usize {
        self.basis.nrows()
    }

    pub fn k(&self) -> usize {
        self.basis.ncols()
    }

    /// Applies centering (and scaling, if any) to `x`.
    pub fn prepare(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.nrows() != self.d() {
            return Err(Error::Shape(format!(
                "model expects {} features, data has {}",
                self.d(),
                x.nrows()
            )));
        }
        let mut centered = subtract_mean(x, &self.mean);
        if let Some(scale) = &self.scale {
            for mut col in centered.column_iter_mut() {
                col.component_div_assign(scale);
            }
        }
        Ok(centered)
    }

    /// `k × m` embedding of the columns of `x`.
    pub fn transform(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        Ok(self.basis.transpose() * self.prepare(x)?)
    }

    /// Embedding restricted to the first `dim` coordinates.
    pub fn transform_dim(&self, x: &DMatrix<f64>, dim: usize) -> Result<DMatrix<f64>> {
        if dim > self.k() {
            return Err(Error::InvalidInput(format!(
                "requested {dim} coordinates from a {}-dimensional model",
                self.k()
            )));
        }
        Ok(self.basis.columns(0, dim).transpose() * self.prepare(x)?)
    }

    pub fn transform_dataset(&self, ds: &LabeledDataset) -> Result<DMatrix<f64>> {
        self.transform(ds.data())
    }

    /// The same model keeping only the first `k` basis columns.
    pub fn truncated(&self, k: usize) -> Result<Self> {
        if k > self.k() {
            return Err(Error::InvalidInput(format!(
                "cannot truncate a {}-dimensional model to {k}",
                self.k()
            )));
        }
        let mut out = self.clone();
        out.basis = self.basis.columns(0, k).into_owned();
        out.spectrum = self.spectrum.rows(0, k.min(self.spectrum.len())).into_owned();
        Ok(out)
    }

    /// Folds a standardization step into the model: data given to
    /// [`transform`](Self::transform) is raw, and is centered by `mean` and
    /// divided by `scale` before projecting. Valid when the model was fitted
    /// on already standardized (hence centered) data.
    pub fn with_standardization(mut self, mean: DVector<f64>, scale: DVector<f64>) -> Self {
        self.mean = mean;
        self.scale = Some(scale);
        self
    }

    pub fn to_document(&self) -> ModelDocument {
        ModelDocument {
            method: self.method,
            version: MODEL_FORMAT_VERSION,
            d: self.d(),
            k: self.k(),
            mean: self.mean.as_slice().to_vec(),
            basis: self.basis.as_slice().to_vec(),
            spectrum: self.spectrum.as_slice().to_vec(),
            n_classes: self.n_classes,
            class_names: self.class_names.clone(),
            trace_ctc: self.trace_ctc,
            centered: true,
            scale: self.scale.as_ref().map(|s| s.as_slice().to_vec()),
            aux: self.aux.clone(),
        }
    }

    pub fn from_document(doc: ModelDocument) -> Result<Self> {
        if doc.version != MODEL_FORMAT_VERSION {
            return Err(Error::InvalidInput(format!(
                "unsupported model version {} (expected {MODEL_FORMAT_VERSION})",
                doc.version
            )));
        }
        if doc.mean.len() != doc.d || doc.basis.len() != doc.d * doc.k {
            return Err(Error::Shape(format!(
                "model document with d = {}, k = {} has {} mean and {} basis entries",
                doc.d,
                doc.k,
                doc.mean.len(),
                doc.basis.len()
            )));
        }
        if doc.scale.as_ref().is_some_and(|s| s.len() != doc.d) {
            return Err(Error::Shape("scale vector length differs from d".into()));
        }
        Ok(Self {
            method: doc.method,
            basis: DMatrix::from_vec(doc.d, doc.k, doc.basis),
            mean: DVector::from_vec(doc.mean),
            spectrum: DVector::from_vec(doc.spectrum),
            n_classes: doc.n_classes,
            class_names: doc.class_names,
            scale: doc.scale.map(DVector::from_vec),
            trace_ctc: doc.trace_ctc,
            aux: doc.aux,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_document())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_document(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Serialized form of a [`LinearReducer`]; `basis` is column-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub method: Method,
    pub version: u32,
    pub d: usize,
    pub k: usize,
    pub mean: Vec<f64>,
    pub basis: Vec<f64>,
    pub spectrum: Vec<f64>,
    pub n_classes: usize,
    #[serde(default)]
    pub class_names: Vec<String>,
    #[serde(default)]
    pub trace_ctc: Option<f64>,
    pub centered: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<Vec<f64>>,
    #[serde(default)]
    pub aux: Aux,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn reducer(d: usize, k: usize, vals: &[f64]) -> LinearReducer {
        LinearReducer {
            method: Method::Lda,
            basis: DMatrix::from_fn(d, k, |r, c| vals[(r * 7 + c * 3) % vals.len()]),
            mean: DVector::from_fn(d, |r, _| vals[r % vals.len()] * 0.5),
            spectrum: DVector::from_fn(k, |r, _| vals[r % vals.len()]),
            n_classes: 3,
            class_names: vec!["a".into(), "b".into(), "c".into()],
            scale: None,
            trace_ctc: None,
            aux: Aux {
                shrinkage: Some(1e-4),
                ..Aux::default()
            },
        }
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
            assert_eq!(serde_json::to_string(&m).unwrap(), format!("\"{m}\""));
        }
        assert!("svd".parse::<Method>().is_err());
    }

    #[test]
    fn document_fields() {
        let r = reducer(3, 2, &[0.1, -0.4, 2.5]);
        let v: serde_json::Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        for key in [
            "method",
            "d",
            "k",
            "mean",
            "basis",
            "spectrum",
            "n_classes",
            "trace_ctc",
            "centered",
            "version",
        ] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["method"], "lda");
        assert_eq!(v["basis"].as_array().unwrap().len(), 6);
        assert_eq!(v["aux"]["shrinkage"], 1e-4);
    }

    #[test]
    fn rejects_malformed_documents() {
        let mut doc = reducer(3, 2, &[1.0]).to_document();
        doc.basis.pop();
        assert!(LinearReducer::from_document(doc.clone()).is_err());
        doc = reducer(3, 2, &[1.0]).to_document();
        doc.version = 99;
        assert!(LinearReducer::from_document(doc).is_err());
    }

    #[test]
    fn truncation() {
        let r = reducer(4, 3, &[0.3, 1.1, -0.2, 0.9]);
        let t = r.truncated(2).unwrap();
        assert_eq!(t.k(), 2);
        assert_eq!(t.basis.column(1), r.basis.column(1));
        assert!(r.truncated(4).is_err());
    }

    proptest! {
        #[test]
        fn json_round_trip_reproduces_transform(
            vals in prop::collection::vec(-1e3f64..1e3, 8..40),
            d in 1usize..6,
            k in 1usize..4,
        ) {
            let r = reducer(d, k, &vals);
            let back = LinearReducer::from_json(&r.to_json().unwrap()).unwrap();
            let x = DMatrix::from_fn(d, 5, |i, j| vals[(i + 2 * j) % vals.len()] - 3.0);
            let diff = (r.transform(&x).unwrap() - back.transform(&x).unwrap()).amax();
            prop_assert!(diff <= 1e-12);
            prop_assert_eq!(back, r);
        }
    }
}
