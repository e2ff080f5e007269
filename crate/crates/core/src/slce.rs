//! Supervised linear centroid-encoder.
//!
//! Finds the orthonormal `d × k` basis `A` minimizing the centroid
//! reconstruction loss `‖C̃ − A AᵀX‖_F²` on centered data. The minimizer is
//! given by the top-`k` eigenvectors of the symmetric system matrix
//! `X C̃ᵀ + C̃ Xᵀ − X Xᵀ`, and the loss of that basis is
//! `Tr(C̃ᵀC̃) − Σ μ_i` over the chosen eigenvalues. At most `M − 1` eigenvalues
//! are positive, so only that many directions reduce the loss.

use nalgebra::{DMatrix, DVector};

use crate::dataset::{center, centroid_matrix, class_centroids, expand_centroids, LabeledDataset};
use crate::error::{invalid, Error, Result};
use crate::linalg::{self, SolverOptions};
use crate::reducer::{Aux, LinearReducer, Method};

/// Relative tolerance separating positive eigenvalues from numerical zeros.
pub const POSITIVE_REL_TOL: f64 = 1e-8;

/// A fitted centroid-encoder projection.
#[derive(Debug, Clone, PartialEq)]
pub struct SlceModel {
    /// `d × k`, orthonormal columns.
    pub basis: DMatrix<f64>,
    /// Top-`k` eigenvalues of the system matrix, descending.
    pub spectrum: DVector<f64>,
    /// Global mean of the training data.
    pub mean: DVector<f64>,
    pub n_classes: usize,
    /// `Tr(C̃ᵀC̃)` of the centered training centroid matrix.
    pub trace_ctc: f64,
    /// Number of system-matrix eigenvalues above [`positivity_tol`]; at most `M − 1`.
    pub positive_count: usize,
    pub class_names: Vec<String>,
    /// Non-fatal conditions noticed while fitting.
    pub warnings: Vec<String>,
}

/// `1e-8 · max |λ|` over a spectrum.
pub fn positivity_tol(spectrum: &DVector<f64>) -> f64 {
    POSITIVE_REL_TOL * spectrum.amax()
}

pub fn count_positive(spectrum: &DVector<f64>) -> usize {
    let tol = positivity_tol(spectrum);
    spectrum.iter().filter(|&&v| v > tol).count()
}

fn check_centered(x: &DMatrix<f64>) {
    let mean = x.column_sum() / x.ncols().max(1) as f64;
    let scale = x.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
    if mean.norm() > 1e-8 * scale.max(f64::MIN_POSITIVE) {
        log::warn!(
            "data passed to the system matrix is not centered (‖mean‖ = {:.3e})",
            mean.norm()
        );
    }
}

/// `X C̃ᵀ + C̃ Xᵀ − X Xᵀ`, explicitly symmetrized.
pub fn build_system_matrix(x: &DMatrix<f64>, ctilde: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let cross = cross_term(x, ctilde)?;
    let s = cross - x * x.transpose();
    Ok((&s + s.transpose()) * 0.5)
}

/// `X C̃ᵀ + C̃ Xᵀ` (positive semi-definite), explicitly symmetrized.
pub fn build_cross_matrix(x: &DMatrix<f64>, ctilde: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    cross_term(x, ctilde)
}

fn cross_term(x: &DMatrix<f64>, ctilde: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if x.shape() != ctilde.shape() {
        return Err(Error::Shape(format!(
            "data is {:?} but centroid matrix is {:?}",
            x.shape(),
            ctilde.shape()
        )));
    }
    check_centered(x);
    let xc = x * ctilde.transpose();
    Ok(&xc + xc.transpose())
}

/// Everything a fit or a diagnostic needs from one eigendecomposition.
#[derive(Debug, Clone)]
pub struct SystemDecomposition {
    /// Full system-matrix spectrum, length `d`, descending.
    pub spectrum: DVector<f64>,
    /// Top eigenvectors, `d × k`.
    pub basis: DMatrix<f64>,
    pub mean: DVector<f64>,
    /// Centered training data.
    pub centered: DMatrix<f64>,
    /// Centroid matrix of the centered data.
    pub ctilde: DMatrix<f64>,
    pub trace_ctc: f64,
    pub reduced: bool,
}

/// Centers `train`, builds `C̃` and returns the top-`k` eigenpairs of the
/// system matrix via the dense or reduced formulation.
pub fn decompose(train: &LabeledDataset, k: usize, opts: &SolverOptions) -> Result<SystemDecomposition> {
    train.ensure_populated()?;
    let (centered_ds, mean) = center(train);
    let xc = centered_ds.data().clone();
    let cm = centroid_matrix(&centered_ds);
    let trace_ctc = cm.data.norm_squared();
    let (d, n) = xc.shape();
    let reduced = opts.use_reduced(d, n);
    let (spectrum, basis) = if reduced {
        let (q, y, ctilde_r) = reduce(&xc, train)?;
        let s_r = build_system_matrix(&y, &ctilde_r)?;
        linalg::lifted_top_eigen(&s_r, &q, k)?
    } else {
        let s = build_system_matrix(&xc, &cm.data)?;
        linalg::dense_top_eigen(&s, k)?
    };
    Ok(SystemDecomposition {
        spectrum,
        basis,
        mean,
        centered: xc,
        ctilde: cm.data,
        trace_ctc,
        reduced,
    })
}

/// `(Q, QᵀX, centroid matrix of QᵀX)` for centered `X`. The centroid matrix of
/// `QᵀX` equals `QᵀC̃` because centroids are linear in the data.
fn reduce(xc: &DMatrix<f64>, ds: &LabeledDataset) -> Result<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)> {
    let q = linalg::range_basis(xc)?;
    let y = q.transpose() * xc;
    let centroids = class_centroids(&y, ds.all_class_indices());
    let ctilde = expand_centroids(&centroids, ds.labels());
    Ok((q, y, ctilde))
}

/// Full spectrum (length `d`) of `X C̃ᵀ + C̃ Xᵀ` on the centered data.
pub fn cross_spectrum(train: &LabeledDataset, opts: &SolverOptions) -> Result<DVector<f64>> {
    train.ensure_populated()?;
    let (centered_ds, _) = center(train);
    let xc = centered_ds.data();
    let (d, n) = xc.shape();
    if opts.use_reduced(d, n) {
        let (q, y, ctilde_r) = reduce(xc, train)?;
        let p_r = build_cross_matrix(&y, &ctilde_r)?;
        Ok(linalg::lifted_top_eigen(&p_r, &q, 0)?.0)
    } else {
        let p = build_cross_matrix(xc, &centroid_matrix(&centered_ds).data)?;
        Ok(linalg::sym_eig(&p)?.eigenvalues)
    }
}

pub fn fit(train: &LabeledDataset, k: usize) -> Result<SlceModel> {
    fit_with(train, k, &SolverOptions::default())
}

pub fn fit_with(train: &LabeledDataset, k: usize, opts: &SolverOptions) -> Result<SlceModel> {
    let d = train.n_features();
    if k < 1 {
        return invalid("embedding dimension k must be at least 1");
    }
    if k > d {
        return invalid(format!("embedding dimension k = {k} exceeds the {d} features"));
    }
    let dec = decompose(train, k, opts)?;
    let positive_count = count_positive(&dec.spectrum);
    let mut warnings = Vec::new();
    if k > positive_count {
        let msg = format!(
            "k = {k} exceeds the {positive_count} positive eigenvalues; the extra directions \
             will not decrease the centroid reconstruction loss"
        );
        log::debug!("{msg}");
        warnings.push(msg);
    }
    Ok(SlceModel {
        spectrum: dec.spectrum.rows(0, k).into_owned(),
        basis: dec.basis,
        mean: dec.mean,
        n_classes: train.n_classes(),
        trace_ctc: dec.trace_ctc,
        positive_count,
        class_names: train.class_names().to_vec(),
        warnings,
    })
}

impl SlceModel {
    pub fn k(&self) -> usize {
        self.basis.ncols()
    }

    pub fn d(&self) -> usize {
        self.basis.nrows()
    }

    fn check_dim(&self, x: &DMatrix<f64>) -> Result<()> {
        if x.nrows() != self.d() {
            return Err(Error::Shape(format!(
                "model expects {} features, data has {}",
                self.d(),
                x.nrows()
            )));
        }
        Ok(())
    }

    /// `Aᵀ(X − mean)`, a `k × m` matrix.
    pub fn transform(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check_dim(x)?;
        Ok(self.basis.transpose() * crate::dataset::subtract_mean(x, &self.mean))
    }

    /// `A Aᵀ(X − mean) + mean`.
    pub fn reconstruct(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let coords = self.transform(x)?;
        let mut out = &self.basis * coords;
        for mut col in out.column_iter_mut() {
            col += &self.mean;
        }
        Ok(out)
    }

    /// Centroid reconstruction loss of this basis on (centered) `train`.
    pub fn training_cost(&self, train: &LabeledDataset) -> Result<f64> {
        self.check_dim(train.data())?;
        if train.n_classes() != self.n_classes {
            return invalid(format!(
                "model was fitted on {} classes, data has {}",
                self.n_classes,
                train.n_classes()
            ));
        }
        train.ensure_populated()?;
        let centered = train.with_data(crate::dataset::subtract_mean(train.data(), &self.mean))?;
        let ctilde = centroid_matrix(&centered).data;
        linalg::centroid_cost(&ctilde, &self.basis, centered.data())
    }

    /// `Tr(C̃ᵀC̃) − Σ μ_i` over the fitted spectrum.
    pub fn predicted_cost(&self) -> f64 {
        self.trace_ctc - self.spectrum.sum()
    }

    pub fn to_reducer(&self) -> LinearReducer {
        LinearReducer {
            method: Method::Slce,
            basis: self.basis.clone(),
            mean: self.mean.clone(),
            spectrum: self.spectrum.clone(),
            n_classes: self.n_classes,
            class_names: self.class_names.clone(),
            scale: None,
            trace_ctc: Some(self.trace_ctc),
            aux: Aux {
                positive_count: Some(self.positive_count),
                ..Aux::default()
            },
        }
    }
}

pub fn transform(model: &SlceModel, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    model.transform(x)
}

pub fn reconstruct(model: &SlceModel, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    model.reconstruct(x)
}

pub fn training_cost(model: &SlceModel, train: &LabeledDataset) -> Result<f64> {
    model.training_cost(train)
}
