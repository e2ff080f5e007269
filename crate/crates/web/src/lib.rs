//! Browser demo. Three operations, each a plain function returning a
//! serializable summary plus a thin `wasm_bindgen` wrapper that hands JSON to
//! the page:
//!
//! - fit the best centroid-reconstructing line through two Iris species and
//!   score any other line against it;
//! - show the two spectra of a synthetic dataset;
//! - embed held-out synthetic samples with SLCE and with PCA when loud
//!   class-free features are present.

use nalgebra::DMatrix;
use serde::Serialize;
use wasm_bindgen::prelude::*;

use slce_core::baselines::{fit_lda, fit_pca};
use slce_core::dataset::{center, centroid_matrix, read_csv};
use slce_core::harness::{spectrum_diagnostics, EmbeddingTable, Partition};
use slce_core::linalg::centroid_cost;
use slce_core::synthetic::GaussianClasses;
use slce_core::{slce, split, CsvOptions, LabeledDataset, LinearReducer, Result, SolverOptions};

const IRIS: &str = include_str!("../../../data/iris.csv");

/// Setosa and versicolor on the two sepal measurements.
pub fn sepal_pair() -> Result<LabeledDataset> {
    let iris = read_csv(IRIS.as_bytes(), &CsvOptions::default())?;
    let keep: Vec<usize> = (0..iris.n_samples()).filter(|&i| iris.labels()[i] < 2).collect();
    let sub = iris.select(&keep)?.select_features(&[0, 1])?;
    LabeledDataset::new(sub.data().clone(), sub.labels().to_vec())?.with_class_names(iris.class_names()[..2].to_vec())
}

fn direction(theta: f64) -> DMatrix<f64> {
    DMatrix::from_column_slice(2, 1, &[theta.cos(), theta.sin()])
}

/// Angle of a 2-D direction, folded into `[0, π)`.
fn line_angle(model: &LinearReducer) -> f64 {
    let a = model.basis.column(0);
    a[1].atan2(a[0]).rem_euclid(std::f64::consts::PI)
}

#[derive(Debug, Clone, Serialize)]
pub struct FittedLine {
    pub method: String,
    /// Radians in `[0, π)`.
    pub angle: f64,
    pub cost: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LineSummary {
    pub class_names: Vec<String>,
    /// Centered `[x, y, class]` triples.
    pub points: Vec<(f64, f64, usize)>,
    pub lines: Vec<FittedLine>,
    /// Cost at `k · π / curve.len()` for every `k`.
    pub curve: Vec<f64>,
}

/// Scores lines through the mean of the Iris sepal pair.
pub struct LineDemo {
    ds: LabeledDataset,
    centered: DMatrix<f64>,
    ctilde: DMatrix<f64>,
}

impl LineDemo {
    pub fn new() -> Result<Self> {
        let ds = sepal_pair()?;
        let (c, _) = center(&ds);
        let ctilde = centroid_matrix(&c).data;
        Ok(Self {
            centered: c.data().clone(),
            ds,
            ctilde,
        })
    }

    /// Summed squared distance between each projected sample and its class
    /// centroid for the line at angle `theta`.
    pub fn cost(&self, theta: f64) -> Result<f64> {
        centroid_cost(&self.ctilde, &direction(theta), &self.centered)
    }

    pub fn summary(&self, samples: usize) -> Result<LineSummary> {
        let fits = [
            slce::fit(&self.ds, 1)?.to_reducer(),
            fit_pca(&self.ds, 1)?,
            fit_lda(&self.ds, 1, slce_core::baselines::DEFAULT_LDA_SHRINKAGE)?,
        ];
        let lines = fits
            .iter()
            .map(|m| {
                let angle = line_angle(m);
                Ok(FittedLine {
                    method: m.method.to_string(),
                    angle,
                    cost: self.cost(angle)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let curve = (0..samples)
            .map(|k| self.cost(std::f64::consts::PI * k as f64 / samples as f64))
            .collect::<Result<Vec<_>>>()?;
        let points = self
            .centered
            .column_iter()
            .zip(self.ds.labels())
            .map(|(c, &l)| (c[0], c[1], l))
            .collect();
        Ok(LineSummary {
            class_names: self.ds.class_names().to_vec(),
            points,
            lines,
            curve,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumSummary {
    pub n_classes: usize,
    pub positive_count: usize,
    pub trace_ctc: f64,
    /// `(cross eigenvalue, system eigenvalue, one-direction cost)` per index.
    pub rows: Vec<(f64, f64, f64)>,
}

/// Spectra of 16-feature Gaussian classes, 25 samples each.
pub fn spectrum_summary(classes: usize, separation: f64, seed: u64) -> Result<SpectrumSummary> {
    let ds = GaussianClasses::balanced(16, classes, 25, separation).generate(seed)?;
    let diag = spectrum_diagnostics(&ds, Some(16), &SolverOptions::default())?;
    Ok(SpectrumSummary {
        n_classes: diag.n_classes,
        positive_count: diag.positive_count,
        trace_ctc: diag.trace_ctc,
        rows: diag
            .rows
            .iter()
            .map(|r| (r.cross_eigenvalue, r.system_eigenvalue, r.cost_1d))
            .collect(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Embedding {
    pub method: String,
    /// `[x, y, class, is_test]` per sample.
    pub points: Vec<(f64, f64, usize, bool)>,
    /// Smallest centroid gap over mean spread, on the test points.
    pub test_separation: f64,
}

/// Forty features, 40 samples per class: 32 carry the classes with unit
/// noise, 8 are class-independent noise with standard deviation `nuisance`.
pub fn nuisance_classes(classes: usize, separation: f64, nuisance: f64, seed: u64) -> Result<LabeledDataset> {
    let signal = GaussianClasses::balanced(32, classes, 40, separation).generate(seed)?;
    let noise = GaussianClasses {
        noise: nuisance,
        ..GaussianClasses::balanced(8, classes, 40, 0.0)
    }
    .generate(seed.wrapping_add(1))?;
    let mut x = DMatrix::zeros(40, signal.n_samples());
    x.rows_mut(0, 32).copy_from(signal.data());
    x.rows_mut(32, 8).copy_from(noise.data());
    signal.with_data(x)
}

/// SLCE and PCA planes fitted on 80% of [`nuisance_classes`] and shown with
/// the held-out 20%.
pub fn embeddings(classes: usize, separation: f64, nuisance: f64, seed: u64) -> Result<Vec<Embedding>> {
    let ds = nuisance_classes(classes, separation, nuisance, seed)?;
    let pair = split(&ds, 0.8, seed)?;
    let models = [slce::fit(&pair.train, 2)?.to_reducer(), fit_pca(&pair.train, 2)?];
    models
        .iter()
        .map(|m| {
            let table = EmbeddingTable::build(m, &pair.train, Some(&pair.test), 2)?;
            let points = (0..table.len())
                .map(|i| {
                    let c = table.coordinates.column(i);
                    let class = ds.class_names().iter().position(|n| *n == table.labels[i]).unwrap_or(0);
                    (c[0], c[1], class, table.partition[i] == Partition::Test)
                })
                .collect();
            Ok(Embedding {
                method: m.method.to_string(),
                points,
                test_separation: table.centroid_separation(Some(Partition::Test))?,
            })
        })
        .collect()
}

fn to_js<T: Serialize>(r: Result<T>) -> std::result::Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e.to_string()))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

/// JSON [`LineSummary`] with a 360-step cost curve.
#[wasm_bindgen(js_name = irisLines)]
pub fn iris_lines() -> std::result::Result<String, JsError> {
    to_js(LineDemo::new().and_then(|d| d.summary(360)))
}

#[wasm_bindgen(js_name = irisLineCost)]
pub fn iris_line_cost(theta: f64) -> std::result::Result<f64, JsError> {
    LineDemo::new()
        .and_then(|d| d.cost(theta))
        .map_err(|e| JsError::new(&e.to_string()))
}

/// JSON [`SpectrumSummary`].
#[wasm_bindgen(js_name = syntheticSpectrum)]
pub fn synthetic_spectrum(classes: u32, separation: f64, seed: u32) -> std::result::Result<String, JsError> {
    to_js(spectrum_summary(classes as usize, separation, u64::from(seed)))
}

/// JSON array of two [`Embedding`]s, SLCE first.
#[wasm_bindgen(js_name = compareEmbeddings)]
pub fn compare_embeddings(
    classes: u32,
    separation: f64,
    nuisance: f64,
    seed: u32,
) -> std::result::Result<String, JsError> {
    to_js(embeddings(classes as usize, separation, nuisance, u64::from(seed)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slce_line_is_the_cheapest() {
        let demo = LineDemo::new().unwrap();
        let s = demo.summary(720).unwrap();
        assert_eq!(s.points.len(), 100);
        assert_eq!(s.class_names, ["setosa", "versicolor"]);
        let slce_cost = s.lines[0].cost;
        assert!(s.curve.iter().all(|&c| slce_cost <= c + 1e-9));
        assert!(s.lines.iter().all(|l| slce_cost <= l.cost + 1e-9));
        assert!((demo.cost(s.lines[0].angle + std::f64::consts::PI).unwrap() - slce_cost).abs() < 1e-9);
    }

    #[test]
    fn spectrum_has_at_most_m_minus_one_positive_values() {
        for m in 2..=6 {
            let s = spectrum_summary(m, 3.0, 1).unwrap();
            assert_eq!(s.rows.len(), 16);
            assert!(s.positive_count < m);
            assert!(s.rows.iter().all(|r| r.1 <= r.0 + 1e-8 * s.trace_ctc.max(1.0)));
        }
    }

    #[test]
    fn embeddings_cover_train_and_test() {
        let e = embeddings(3, 1.0, 6.0, 5).unwrap();
        assert_eq!((e[0].method.as_str(), e[1].method.as_str()), ("slce", "pca"));
        for emb in &e {
            assert_eq!(emb.points.len(), 120);
            assert_eq!(emb.points.iter().filter(|p| p.3).count(), 24);
        }
        // Loud class-free features pull PCA away from the class structure.
        assert!(e[0].test_separation > 2.0 * e[1].test_separation);
    }

    #[test]
    fn wrappers_return_json() {
        let v: serde_json::Value = serde_json::from_str(&iris_lines().unwrap()).unwrap();
        assert_eq!(v["curve"].as_array().unwrap().len(), 360);
        let v: serde_json::Value = serde_json::from_str(&compare_embeddings(4, 1.5, 3.0, 2).unwrap()).unwrap();
        assert_eq!(v.as_array().unwrap().len(), 2);
        assert!(synthetic_spectrum(3, 2.0, 0).is_ok());
    }
}
