//! Reference linear reducers: PCA, shrinkage-regularized Fisher LDA, Bair's
//! supervised PCA (regression screening + PCA) and HSIC supervised PCA with a
//! delta label kernel.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{center, centroid_matrix, class_centroids, LabeledDataset};
use crate::error::{invalid, Error, Result};
use crate::knn;
use crate::linalg::{self, fix_sign, SolverOptions};
use crate::reducer::{Aux, GridScore, LinearReducer, Method};

fn check_k_range(k: usize, ds: &LabeledDataset) -> Result<()> {
    let limit = ds.n_features().min(ds.n_samples());
    if k < 1 || k > limit {
        return invalid(format!(
            "k = {k} must lie in 1..={limit} (min of {} features and {} samples)",
            ds.n_features(),
            ds.n_samples()
        ));
    }
    Ok(())
}

fn reducer(
    method: Method,
    ds: &LabeledDataset,
    basis: DMatrix<f64>,
    mean: DVector<f64>,
    spectrum: DVector<f64>,
    aux: Aux,
) -> LinearReducer {
    LinearReducer {
        method,
        basis,
        mean,
        spectrum,
        n_classes: ds.n_classes(),
        class_names: ds.class_names().to_vec(),
        scale: None,
        trace_ctc: None,
        aux,
    }
}

/// Top-`k` eigenvectors of `G Gᵀ` for a `d × p` factor `G` whose columns lie
/// in the range of the centered data `xc`.
fn top_of_gram(
    g: &DMatrix<f64>,
    xc: &DMatrix<f64>,
    k: usize,
    opts: &SolverOptions,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let (d, n) = xc.shape();
    if opts.use_reduced(d, n) {
        let q = linalg::range_basis(xc)?;
        let gr = q.transpose() * g;
        linalg::lifted_top_eigen(&(&gr * gr.transpose()), &q, k)
    } else {
        linalg::dense_top_eigen(&(g * g.transpose()), k)
    }
}

pub fn fit_pca(train: &LabeledDataset, k: usize) -> Result<LinearReducer> {
    fit_pca_with(train, k, &SolverOptions::default())
}

/// Top-`k` eigenvectors of the centered scatter `X Xᵀ`.
pub fn fit_pca_with(train: &LabeledDataset, k: usize, opts: &SolverOptions) -> Result<LinearReducer> {
    check_k_range(k, train)?;
    let (c, mean) = center(train);
    let (spectrum, basis) = top_of_gram(c.data(), c.data(), k, opts)?;
    Ok(reducer(
        Method::Pca,
        train,
        basis,
        mean,
        spectrum.rows(0, k).into_owned(),
        Aux::default(),
    ))
}

/// Top-`k` eigenvectors of `Q = X H L H Xᵀ` with `L = YᵀY` for one-hot `Y`.
pub fn fit_hsic_spca(train: &LabeledDataset, k: usize) -> Result<LinearReducer> {
    fit_hsic_spca_with(train, k, &SolverOptions::default())
}

pub fn fit_hsic_spca_with(train: &LabeledDataset, k: usize, opts: &SolverOptions) -> Result<LinearReducer> {
    check_k_range(k, train)?;
    if train.populated_classes() < 2 {
        return invalid("degenerate single-class supervision: HSIC objective is identically zero");
    }
    let (c, mean) = center(train);
    // X H Yᵀ: H is absorbed by centering X; column j sums the samples of class j.
    let onehot = one_hot(train);
    let g = c.data() * onehot.transpose();
    let (spectrum, basis) = top_of_gram(&g, c.data(), k, opts)?;
    Ok(reducer(
        Method::HsicSpca,
        train,
        basis,
        mean,
        spectrum.rows(0, k).into_owned(),
        Aux {
            label_kernel: Some("delta".into()),
            ..Aux::default()
        },
    ))
}

/// `M × n` one-hot label matrix.
pub fn one_hot(ds: &LabeledDataset) -> DMatrix<f64> {
    DMatrix::from_fn(ds.n_classes(), ds.n_samples(), |j, i| {
        if ds.labels()[i] == j {
            1.0
        } else {
            0.0
        }
    })
}

/// Default LDA shrinkage, as a fraction of `Tr(S_w)/d`.
pub const DEFAULT_LDA_SHRINKAGE: f64 = 1e-4;

/// Within- and between-class scatter of centered data.
pub fn scatter_matrices(c: &LabeledDataset) -> (DMatrix<f64>, DMatrix<f64>) {
    let cm = centroid_matrix(c);
    let within = c.data() - &cm.data;
    let sw = &within * within.transpose();
    let weighted = DMatrix::from_fn(cm.centroids.nrows(), cm.centroids.ncols(), |r, j| {
        cm.centroids[(r, j)] * (c.class_indices(j).len() as f64).sqrt()
    });
    let sb = &weighted * weighted.transpose();
    (sw, sb)
}

/// Top-`k` generalized eigenvectors of `S_b v = λ (S_w + δ I) v`, columns
/// normalized to unit length. Returns `(eigenvalues, directions)`.
pub fn lda_directions(
    sw: &DMatrix<f64>,
    sb: &DMatrix<f64>,
    shrink: f64,
    k: usize,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let r = sw.nrows();
    let w = sw + DMatrix::identity(r, r) * shrink;
    let max_diag = w.diagonal().amax();
    let chol = nalgebra::Cholesky::new(w).filter(|ch| {
        let l = ch.l_dirty();
        (0..r).all(|i| l[(i, i)] * l[(i, i)] > 1e-12 * max_diag)
    });
    let chol =
        chol.ok_or_else(|| Error::Numerical("within-class scatter is singular; increase the LDA shrinkage".into()))?;
    let l = chol.l();
    // L⁻¹ S_b L⁻ᵀ is symmetric with the same eigenvalues as W⁻¹ S_b.
    let linv_sb = l
        .solve_lower_triangular(sb)
        .ok_or_else(|| Error::Numerical("triangular solve failed".into()))?;
    let m = l
        .solve_lower_triangular(&linv_sb.transpose())
        .ok_or_else(|| Error::Numerical("triangular solve failed".into()))?;
    let eig = linalg::sym_eig(&m)?;
    let u = eig.top(k);
    let mut v = l
        .transpose()
        .solve_upper_triangular(&u)
        .ok_or_else(|| Error::Numerical("triangular solve failed".into()))?;
    for mut col in v.column_iter_mut() {
        let norm = col.norm();
        col /= norm;
    }
    Ok((eig.eigenvalues.rows(0, k).into_owned(), v))
}

pub fn fit_lda(train: &LabeledDataset, k: usize, shrinkage: f64) -> Result<LinearReducer> {
    fit_lda_with(train, k, shrinkage, &SolverOptions::default())
}

pub fn fit_lda_with(train: &LabeledDataset, k: usize, shrinkage: f64, opts: &SolverOptions) -> Result<LinearReducer> {
    let m = train.populated_classes();
    if k < 1 || k + 1 > m {
        return invalid(format!(
            "LDA supports at most M − 1 = {} components, got k = {k}",
            m.saturating_sub(1)
        ));
    }
    if !(0.0..=1.0).contains(&shrinkage) {
        return invalid(format!("shrinkage {shrinkage} must lie in [0, 1]"));
    }
    let d = train.n_features();
    let (c, mean) = center(train);
    let (sw, sb) = scatter_matrices(&c);
    let delta = shrinkage * sw.trace() / d as f64;
    let (spectrum, mut basis) = if opts.use_reduced(d, train.n_samples()) {
        // S_w and S_b live in the range of the centered data, so every
        // direction with a nonzero eigenvalue does too.
        let q = linalg::range_basis(c.data())?;
        let swr = q.transpose() * &sw * &q;
        let sbr = q.transpose() * &sb * &q;
        let (vals, vr) = lda_directions(&swr, &sbr, delta, k)?;
        (vals, q * vr)
    } else {
        lda_directions(&sw, &sb, delta, k)?
    };
    for mut col in basis.column_iter_mut() {
        fix_sign(col.as_mut_slice());
    }
    Ok(reducer(
        Method::Lda,
        train,
        basis,
        mean,
        spectrum,
        Aux {
            shrinkage: Some(shrinkage),
            ..Aux::default()
        },
    ))
}

/// Regularized Fisher ratio `wᵀS_b w / wᵀ(S_w + δI)w`.
pub fn fisher_ratio(sw: &DMatrix<f64>, sb: &DMatrix<f64>, shrink: f64, w: &DVector<f64>) -> f64 {
    let num = w.dot(&(sb * w));
    let den = w.dot(&(sw * w)) + shrink * w.norm_squared();
    num / den
}

/// Hyperparameters of Bair's supervised PCA.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BairOptions {
    /// Fractions of the best-scoring features to keep, tried in order.
    pub threshold_grid: Vec<f64>,
    pub cv_folds: usize,
    pub seed: u64,
    /// Neighbors of the k-NN classifier scored during cross-validation.
    pub neighbors: usize,
}

impl Default for BairOptions {
    fn default() -> Self {
        Self {
            threshold_grid: vec![0.01, 0.05, 0.1, 0.25, 0.5, 1.0],
            cv_folds: 5,
            seed: 0,
            neighbors: 5,
        }
    }
}

/// Screening score per feature: `max_c |x_jᵀ y_c| / ‖x_j‖` over centered
/// features and centered one-hot responses. `None` marks a constant feature.
pub fn bair_scores(ds: &LabeledDataset) -> Vec<Option<f64>> {
    let (c, _) = center(ds);
    let n = ds.n_samples() as f64;
    let mut responses = one_hot(ds);
    for (j, mut row) in responses.row_iter_mut().enumerate() {
        let share = ds.class_indices(j).len() as f64 / n;
        row.add_scalar_mut(-share);
    }
    let max_norm = c.data().row_iter().map(|r| r.norm()).fold(0.0, f64::max);
    let zero_tol = max_norm * f64::EPSILON * n.sqrt();
    c.data()
        .row_iter()
        .map(|x| {
            let norm = x.norm();
            if norm <= zero_tol || norm == 0.0 {
                return None;
            }
            let best = responses.row_iter().map(|y| x.dot(&y).abs()).fold(0.0, f64::max);
            Some(best / norm)
        })
        .collect()
}

/// Indices (ascending) of the `fraction` best-scoring non-constant features,
/// never fewer than `min_keep`.
fn select_features(scores: &[Option<f64>], fraction: f64, min_keep: usize) -> Vec<usize> {
    let mut ranked: Vec<(usize, f64)> = scores
        .iter()
        .enumerate()
        .filter_map(|(j, s)| s.map(|s| (j, s)))
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let valid = ranked.len();
    let want = ((fraction * valid as f64) - 1e-9).ceil().max(0.0) as usize;
    let keep = want.max(min_keep).min(valid);
    let mut selected: Vec<usize> = ranked[..keep].iter().map(|&(j, _)| j).collect();
    selected.sort_unstable();
    selected
}

/// PCA on the selected features, embedded back into `d × k` with zero rows elsewhere.
fn pca_on_features(ds: &LabeledDataset, selected: &[usize], k: usize) -> Result<LinearReducer> {
    let sub = ds.select_features(selected)?;
    let pca = fit_pca(&sub, k)?;
    let mut basis = DMatrix::zeros(ds.n_features(), k);
    for (row, &j) in selected.iter().enumerate() {
        basis.set_row(j, &pca.basis.row(row));
    }
    let mean = crate::dataset::column_mean(ds.data());
    Ok(reducer(Method::BairSpca, ds, basis, mean, pca.spectrum, Aux::default()))
}

/// Stratified fold assignment: within each class, a seeded shuffle dealt
/// round-robin over the folds.
fn stratified_folds(ds: &LabeledDataset, folds: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold_of = vec![0; ds.n_samples()];
    let mut offset = 0;
    for idx in ds.all_class_indices() {
        let mut shuffled = idx.clone();
        shuffled.shuffle(&mut rng);
        for (pos, &i) in shuffled.iter().enumerate() {
            fold_of[i] = (pos + offset) % folds;
        }
        offset += shuffled.len();
    }
    fold_of
}

fn cv_accuracy(
    ds: &LabeledDataset,
    fold_of: &[usize],
    folds: usize,
    fraction: f64,
    k: usize,
    neighbors: usize,
) -> Result<f64> {
    let mut total = 0.0;
    let mut used = 0usize;
    for f in 0..folds {
        let (val_idx, fit_idx): (Vec<usize>, Vec<usize>) = (0..ds.n_samples()).partition(|&i| fold_of[i] == f);
        if val_idx.is_empty() || fit_idx.len() < k.max(neighbors) {
            continue;
        }
        let fit_part = ds.select(&fit_idx)?;
        let val_part = ds.select(&val_idx)?;
        let selected = select_features(&bair_scores(&fit_part), fraction, k);
        let model = pca_on_features(&fit_part, &selected, k)?;
        let r = knn::evaluate(
            &model.transform(fit_part.data())?,
            fit_part.labels(),
            &model.transform(val_part.data())?,
            val_part.labels(),
            neighbors,
        )?;
        total += r.accuracy;
        used += 1;
    }
    if used == 0 {
        return Err(Error::InvalidInput("no usable cross-validation fold".into()));
    }
    Ok(total / used as f64)
}

/// Bair's supervised PCA: screen features by their regression score, choose
/// the kept fraction by cross-validated k-NN accuracy on `train`, then run PCA
/// on the kept features.
pub fn fit_bair_spca(train: &LabeledDataset, k: usize, opts: &BairOptions) -> Result<LinearReducer> {
    if k < 1 {
        return invalid("k must be at least 1");
    }
    if opts.threshold_grid.is_empty() {
        return invalid("threshold grid is empty");
    }
    if let Some(f) = opts.threshold_grid.iter().find(|f| !(**f > 0.0 && **f <= 1.0)) {
        return invalid(format!("threshold fraction {f} must lie in (0, 1]"));
    }
    if opts.cv_folds < 2 {
        return invalid("cross-validation needs at least 2 folds");
    }
    let scores = bair_scores(train);
    let dropped: Vec<usize> = (0..scores.len()).filter(|&j| scores[j].is_none()).collect();
    if !dropped.is_empty() {
        log::warn!("dropping {} constant feature(s): {:?}", dropped.len(), dropped);
    }
    let valid = scores.len() - dropped.len();
    if k > valid.min(train.n_samples()) {
        return invalid(format!(
            "k = {k} exceeds min(non-constant features = {valid}, samples = {})",
            train.n_samples()
        ));
    }

    let smallest = train
        .all_class_indices()
        .iter()
        .map(Vec::len)
        .filter(|&c| c > 0)
        .min()
        .unwrap_or(0);
    let folds = opts.cv_folds.min(smallest).max(2);
    if folds != opts.cv_folds {
        log::warn!("re-stratifying Bair cross-validation into {folds} folds (smallest class has {smallest} samples)");
    }

    let (fraction, cv_scores) = if opts.threshold_grid.len() == 1 {
        (opts.threshold_grid[0], Vec::new())
    } else {
        let fold_of = stratified_folds(train, folds, opts.seed);
        let mut cv_scores = Vec::with_capacity(opts.threshold_grid.len());
        for &fraction in &opts.threshold_grid {
            let acc = cv_accuracy(train, &fold_of, folds, fraction, k, opts.neighbors)?;
            cv_scores.push(GridScore {
                fraction,
                cv_accuracy: acc,
            });
        }
        // First grid entry wins ties.
        let best = cv_scores
            .iter()
            .fold(None::<&GridScore>, |best, s| match best {
                Some(b) if b.cv_accuracy >= s.cv_accuracy => Some(b),
                _ => Some(s),
            })
            .expect("non-empty grid");
        (best.fraction, cv_scores)
    };

    let selected = select_features(&scores, fraction, k);
    let threshold_score = selected.iter().filter_map(|&j| scores[j]).fold(f64::INFINITY, f64::min);
    let mut model = pca_on_features(train, &selected, k)?;
    model.aux = Aux {
        selected_features: Some(selected),
        threshold_fraction: Some(fraction),
        threshold_score: Some(threshold_score),
        cv_scores: (!cv_scores.is_empty()).then_some(cv_scores),
        ..Aux::default()
    };
    Ok(model)
}

/// Class sums `X H Yᵀ` as `d × M` (exposed for diagnostics).
pub fn class_sums(c: &LabeledDataset) -> DMatrix<f64> {
    let mut sums = class_centroids(c.data(), c.all_class_indices());
    for (j, mut col) in sums.column_iter_mut().enumerate() {
        col *= c.class_indices(j).len() as f64;
    }
    sums
}
