//! Dense numerical kernels shared by every reducer: the symmetric
//! eigendecomposition contract, the centroid-reconstruction cost, range bases
//! for the wide-data path and subspace comparison.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative asymmetry accepted by [`sym_eig`] before symmetrizing.
pub const SYMMETRY_TOL: f64 = 1e-8;

/// Orthonormality slack accepted by [`centroid_cost`] without a warning.
pub const ORTHONORMAL_TOL: f64 = 1e-8;

/// Which eigenproblem formulation a fit uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverPath {
    /// Reduced when `d > wide_ratio · n`, dense otherwise.
    #[default]
    Auto,
    /// Form and decompose the full `d × d` matrix.
    Dense,
    /// Decompose in the coordinates of an orthonormal basis for the range of
    /// the centered data.
    Reduced,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub path: SolverPath,
    pub wide_ratio: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            path: SolverPath::Auto,
            wide_ratio: 2.0,
        }
    }
}

impl SolverOptions {
    pub fn dense() -> Self {
        Self {
            path: SolverPath::Dense,
            ..Self::default()
        }
    }

    pub fn reduced() -> Self {
        Self {
            path: SolverPath::Reduced,
            ..Self::default()
        }
    }

    /// Resolves `Auto` for data with `d` features and `n` samples.
    pub fn use_reduced(&self, d: usize, n: usize) -> bool {
        match self.path {
            SolverPath::Dense => false,
            SolverPath::Reduced => true,
            SolverPath::Auto => d as f64 > self.wide_ratio * n as f64,
        }
    }
}

/// Eigenpairs of a real symmetric matrix, eigenvalues descending.
///
/// Column `i` of `eigenvectors` pairs with `eigenvalues[i]`. Each eigenvector
/// has its largest-magnitude entry positive (lowest index wins ties), so the
/// output is fully determined by the input.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricEigen {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl SymmetricEigen {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// First `k` eigenvectors as a `d × k` matrix.
    pub fn top(&self, k: usize) -> DMatrix<f64> {
        self.eigenvectors.columns(0, k).into_owned()
    }
}

pub fn sym_eig(s: &DMatrix<f64>) -> Result<SymmetricEigen> {
    if !s.is_square() {
        return Err(Error::Shape(format!(
            "eigendecomposition needs a square matrix, got {}×{}",
            s.nrows(),
            s.ncols()
        )));
    }
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    let d = s.nrows();
    if d == 0 {
        return Ok(SymmetricEigen {
            eigenvalues: DVector::zeros(0),
            eigenvectors: DMatrix::zeros(0, 0),
        });
    }
    let norm = s.norm();
    let asym = (s - s.transpose()).norm();
    if asym > SYMMETRY_TOL * norm {
        return Err(Error::InvalidInput(format!(
            "matrix is not symmetric: ‖S − Sᵀ‖_F = {asym:.3e} exceeds {SYMMETRY_TOL:.0e}·‖S‖_F"
        )));
    }
    let sym = (s + s.transpose()) * 0.5;
    let max_iter = 1000.max(100 * d);
    let eig = nalgebra::SymmetricEigen::try_new(sym, f64::EPSILON, max_iter).ok_or_else(|| {
        let diag = s.diagonal();
        Error::Numerical(format!(
            "symmetric eigensolver did not converge in {max_iter} iterations \
             (d = {d}, ‖S‖_F = {norm:.3e}, diagonal range [{:.3e}, {:.3e}])",
            diag.min(),
            diag.max()
        ))
    })?;

    let mut order: Vec<usize> = (0..d).collect();
    // Stable sort keeps solver order among equal eigenvalues.
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues = DVector::from_iterator(d, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut eigenvectors = eig.eigenvectors.select_columns(&order);
    for mut col in eigenvectors.column_iter_mut() {
        fix_sign(col.as_mut_slice());
    }
    Ok(SymmetricEigen {
        eigenvalues,
        eigenvectors,
    })
}

/// Flips `v` so its largest-magnitude entry (first on ties) is positive.
pub fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// `max |AᵀA − I|` entrywise.
pub fn orthonormality_error(a: &DMatrix<f64>) -> f64 {
    let k = a.ncols();
    (a.transpose() * a - DMatrix::identity(k, k)).amax()
}

/// Centroid-reconstruction cost `‖C̃ − A AᵀX‖_F²` for an orthonormal `A` (`d × k`, `k` may be 0).
pub fn centroid_cost(ctilde: &DMatrix<f64>, a: &DMatrix<f64>, x: &DMatrix<f64>) -> Result<f64> {
    if ctilde.shape() != x.shape() {
        return Err(Error::Shape(format!(
            "centroid matrix is {:?} but data is {:?}",
            ctilde.shape(),
            x.shape()
        )));
    }
    if a.nrows() != x.nrows() {
        return Err(Error::Shape(format!(
            "basis has {} rows, data has {} features",
            a.nrows(),
            x.nrows()
        )));
    }
    let err = orthonormality_error(a);
    if err > ORTHONORMAL_TOL {
        log::warn!("basis is not orthonormal (max |AᵀA − I| = {err:.3e}); cost computed anyway");
    }
    let coords = a.transpose() * x;
    let residual = ctilde - a * coords;
    Ok(residual.norm_squared())
}

/// Thin SVD `m = U diag(σ) Vᵀ`, returned as `(U, σ, V)` with `σ` unsorted.
///
/// nalgebra's bidiagonal SVD occasionally returns an inaccurate factorization
/// for triangular input, so the reconstruction is verified and the transpose
/// is tried before giving up.
pub fn checked_svd(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, DVector<f64>, DMatrix<f64>)> {
    let scale = m.amax().max(f64::MIN_POSITIVE);
    let tol = 1e-10 * scale * (m.nrows().max(m.ncols()) as f64).sqrt();
    let attempt = |a: &DMatrix<f64>| {
        let svd = nalgebra::SVD::try_new(a.clone(), true, true, f64::EPSILON, 0)?;
        let u = svd.u?;
        let v_t = svd.v_t?;
        let rebuilt = &u * DMatrix::from_diagonal(&svd.singular_values) * &v_t;
        ((rebuilt - a).amax() <= tol).then(|| (u, svd.singular_values, v_t.transpose()))
    };
    if let Some(f) = attempt(m) {
        return Ok(f);
    }
    if let Some((u, s, v)) = attempt(&m.transpose()) {
        return Ok((v, s, u));
    }
    let (u, s, v) = if m.nrows() >= m.ncols() {
        jacobi_svd(m)
    } else {
        let (u, s, v) = jacobi_svd(&m.transpose());
        (v, s, u)
    };
    let rebuilt = &u * DMatrix::from_diagonal(&s) * v.transpose();
    if (rebuilt - m).amax() <= tol {
        return Ok((u, s, v));
    }
    Err(Error::Numerical(format!(
        "SVD of a {}x{} matrix failed its reconstruction check",
        m.nrows(),
        m.ncols()
    )))
}

/// One-sided Jacobi SVD of a tall matrix (`rows ≥ cols`): thin `U`, singular
/// values in decreasing order, square `V`. Slow but accurate; only reached
/// when the LAPACK-style routine fails its check.
fn jacobi_svd(a: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
    let (rows, cols) = a.shape();
    let mut w = a.clone();
    let mut v = DMatrix::<f64>::identity(cols, cols);
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let alpha = w.column(p).norm_squared();
                let beta = w.column(q).norm_squared();
                let gamma = w.column(p).dot(&w.column(q));
                if gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = c * t;
                for mat in [&mut w, &mut v] {
                    for i in 0..mat.nrows() {
                        let (x, y) = (mat[(i, p)], mat[(i, q)]);
                        mat[(i, p)] = c * x - sn * y;
                        mat[(i, q)] = sn * x + c * y;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = w.column_iter().map(|c| c.norm()).collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]).then(a.cmp(&b)));
    let sigma = DVector::from_iterator(cols, order.iter().map(|&j| norms[j]));
    let v = v.select_columns(&order);
    let smax = sigma.max();
    let live: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&j| norms[j] > rows as f64 * f64::EPSILON * smax)
        .collect();
    let mut u = DMatrix::<f64>::zeros(rows, cols);
    for (slot, &j) in live.iter().enumerate() {
        u.set_column(slot, &(w.column(j) / norms[j]));
    }
    if live.len() < cols {
        let fill = orthonormal_complement(&u.columns(0, live.len()).into_owned(), cols - live.len());
        u.columns_mut(live.len(), cols - live.len()).copy_from(&fill);
    }
    (u, sigma, v)
}

/// Orthonormal basis (`d × r`) for the column space of `x`, where `r` is the
/// numerical rank: singular values above `max(d, n)·ε·σ_max`.
///
/// Computed as a thin Householder QR followed by an SVD of the small
/// triangular factor.
pub fn range_basis(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (d, n) = x.shape();
    let m = d.min(n);
    if m == 0 {
        return Ok(DMatrix::zeros(d, 0));
    }
    let qr = x.clone().qr();
    let q = qr.q(); // d × m
    let r = qr.r(); // m × n
    let (u, sigma, _) = checked_svd(&r)?;
    let smax = sigma.max();
    if smax == 0.0 {
        return Ok(DMatrix::zeros(d, 0));
    }
    let tol = d.max(n) as f64 * f64::EPSILON * smax;
    let mut keep: Vec<usize> = (0..sigma.len()).filter(|&i| sigma[i] > tol).collect();
    keep.sort_by(|&a, &b| sigma[b].total_cmp(&sigma[a]));
    Ok(q * u.select_columns(&keep))
}

/// `count` orthonormal vectors orthogonal to the orthonormal columns of `q`,
/// built deterministically from the standard basis: each step takes the
/// basis vector with the largest residual (lowest index on ties).
pub fn orthonormal_complement(q: &DMatrix<f64>, count: usize) -> DMatrix<f64> {
    let d = q.nrows();
    assert!(q.ncols() + count <= d, "complement larger than the ambient space");
    let mut out = DMatrix::<f64>::zeros(d, count);
    // Squared norm of row i of [q, out] = squared length of e_i's projection.
    let mut captured: Vec<f64> = q.row_iter().map(|r| r.norm_squared()).collect();
    for found in 0..count {
        let pick = (0..d)
            .min_by(|&a, &b| captured[a].total_cmp(&captured[b]).then(a.cmp(&b)))
            .expect("d > 0");
        let mut v = DVector::<f64>::zeros(d);
        v[pick] = 1.0;
        for _ in 0..2 {
            let pq = q * (q.transpose() * &v);
            v -= pq;
            let w = out.columns(0, found);
            let pw = w * (w.transpose() * &v);
            v -= pw;
        }
        v /= v.norm();
        for (c, x) in captured.iter_mut().zip(v.iter()) {
            *c += x * x;
        }
        out.set_column(found, &v);
    }
    out
}

/// Principal angles (radians, ascending) between the column spans of two
/// matrices with orthonormal columns. Computed from sines so that angles near
/// zero keep full precision.
pub fn principal_angles(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Vec<f64> {
    assert_eq!(a.nrows(), b.nrows(), "subspaces live in different spaces");
    if b.ncols() == 0 {
        return Vec::new();
    }
    let residual = b - a * (a.transpose() * b);
    let sv = match checked_svd(&residual) {
        Ok((_, sv, _)) => sv,
        Err(_) => residual.singular_values(),
    };
    let mut angles: Vec<f64> = sv.iter().map(|s| s.min(1.0).asin()).collect();
    angles.sort_by(f64::total_cmp);
    angles
}

/// Largest principal angle between two spans of equal dimension.
pub fn max_principal_angle(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    principal_angles(a, b).into_iter().fold(0.0, f64::max)
}

/// Full descending spectrum (length `d`) and top-`k` eigenvectors of a dense
/// symmetric `d × d` matrix.
pub fn dense_top_eigen(s: &DMatrix<f64>, k: usize) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let eig = sym_eig(s)?;
    let basis = eig.top(k);
    Ok((eig.eigenvalues, basis))
}

/// Same contract as [`dense_top_eigen`] for `S = Q S_r Qᵀ`, given the small
/// `r × r` matrix `S_r` and the orthonormal `d × r` factor `Q`.
///
/// The `d − r` directions orthogonal to `Q` carry eigenvalue zero. They are
/// ordered after the non-negative eigenvalues of `S_r` and before its negative
/// ones, and are filled from [`orthonormal_complement`] when `k` reaches them.
pub fn lifted_top_eigen(s_reduced: &DMatrix<f64>, q: &DMatrix<f64>, k: usize) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let (d, r) = q.shape();
    if s_reduced.shape() != (r, r) {
        return Err(Error::Shape(format!(
            "reduced matrix is {:?}, expected {r}×{r}",
            s_reduced.shape()
        )));
    }
    if k > d {
        return Err(Error::InvalidInput(format!(
            "requested {k} eigenvectors in dimension {d}"
        )));
    }
    let eig = sym_eig(s_reduced)?;
    let nonneg = eig.eigenvalues.iter().take_while(|&&v| v >= 0.0).count();
    let zeros = d - r;

    let mut spectrum = Vec::with_capacity(d);
    spectrum.extend_from_slice(&eig.eigenvalues.as_slice()[..nonneg]);
    spectrum.extend(std::iter::repeat_n(0.0, zeros));
    spectrum.extend_from_slice(&eig.eigenvalues.as_slice()[nonneg..]);

    let complement_needed = zeros.min(k.saturating_sub(nonneg));
    let complement = orthonormal_complement(q, complement_needed);
    let mut basis = DMatrix::zeros(d, k);
    for slot in 0..k {
        let mut col = if slot < nonneg {
            q * eig.eigenvectors.column(slot)
        } else if slot < nonneg + zeros {
            complement.column(slot - nonneg).into_owned()
        } else {
            q * eig.eigenvectors.column(slot - zeros)
        };
        fix_sign(col.as_mut_slice());
        basis.set_column(slot, &col);
    }
    Ok((DVector::from_vec(spectrum), basis))
}

/// `X Yᵀ` for two `d × n` matrices.
pub fn cross_gram(x: &DMatrix<f64>, y: &DMatrix<f64>) -> DMatrix<f64> {
    x * y.transpose()
}

pub fn trace_gram(m: &DMatrix<f64>) -> f64 {
    m.norm_squared()
}
