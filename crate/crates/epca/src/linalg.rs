//! Dense matrix primitives and the spectral kernels the rest of the
//! toolkit builds on: centering, covariance, symmetric eigendecomposition,
//! SVD, soft thresholding and singular value thresholding.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense N x m data matrix, rows are samples and columns are features.
/// All entries are finite by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataMatrix(DMatrix<f64>);

impl DataMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(Error::InvalidInput("matrix must be at least 1x1".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("matrix contains non-finite entries".into()));
        }
        Ok(Self(values))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::InvalidInput("matrix must be at least 1x1".into()));
        }
        let m = rows[0].len();
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::ShapeError("ragged rows".into()));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::new(DMatrix::from_row_slice(rows.len(), m, &flat))
    }

    pub fn nrows(&self) -> usize {
        self.0.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.0.ncols()
    }

    pub fn inner(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    /// Build a new matrix from a subset of rows (indices may repeat).
    pub fn select_rows(&self, indices: &[usize]) -> DataMatrix {
        DataMatrix(self.0.select_rows(indices.iter()))
    }
}

/// Top-k eigenpairs of a symmetric matrix, eigenvalues descending,
/// eigenvectors unit-norm with a deterministic sign.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenPairs {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<DVector<f64>>,
}

/// Thin SVD result with singular values in descending order.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DMatrix<f64>,
    pub singular_values: DVector<f64>,
    pub v_t: DMatrix<f64>,
}

/// Fix the sign of a vector so its largest-magnitude coordinate is
/// positive (ties broken by lowest index). Makes eigendecompositions
/// reproducible across runs.
pub fn orient_sign(v: &mut DVector<f64>) {
    let mut best = 0usize;
    let mut best_abs = 0.0f64;
    for (i, &x) in v.iter().enumerate() {
        if x.abs() > best_abs {
            best_abs = x.abs();
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.neg_mut();
    }
}

/// Subtract the column means. Returns the centered matrix and the mean vector.
pub fn mean_center(x: &DataMatrix) -> (DataMatrix, DVector<f64>) {
    let a = x.inner();
    let n = a.nrows() as f64;
    let mean = DVector::from_iterator(a.ncols(), a.column_iter().map(|c| c.sum() / n));
    let mut centered = a.clone();
    for (j, mut col) in centered.column_iter_mut().enumerate() {
        col.add_scalar_mut(-mean[j]);
    }
    (DataMatrix(centered), mean)
}

/// Sample covariance C = Xbar^T Xbar / (N - 1) of a mean-centered matrix.
pub fn covariance(xbar: &DataMatrix) -> Result<DMatrix<f64>> {
    let n = xbar.nrows();
    if n < 2 {
        return Err(Error::InsufficientSamples { n });
    }
    let a = xbar.inner();
    let mut c = a.transpose() * a;
    c /= (n - 1) as f64;
    // gemm output can carry tiny asymmetry; symmetrize exactly
    let m = c.ncols();
    for i in 0..m {
        for j in (i + 1)..m {
            let avg = 0.5 * (c[(i, j)] + c[(j, i)]);
            c[(i, j)] = avg;
            c[(j, i)] = avg;
        }
    }
    Ok(c)
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

/// Top-k eigenpairs of a symmetric matrix, descending eigenvalues.
pub fn sym_eig(c: &DMatrix<f64>, k: usize) -> Result<EigenPairs> {
    let m = c.ncols();
    if c.nrows() != m {
        return Err(Error::ShapeError("matrix must be square".into()));
    }
    if k == 0 || k > m {
        return Err(Error::InvalidRank { d: k, max: m });
    }
    let scale = max_abs(c).max(1.0);
    for i in 0..m {
        for j in (i + 1)..m {
            if (c[(i, j)] - c[(j, i)]).abs() > 1e-10 * scale {
                return Err(Error::InvalidInput("matrix is not symmetric".into()));
            }
        }
    }
    let eig = c.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());

    let mut eigenvalues = Vec::with_capacity(k);
    let mut eigenvectors = Vec::with_capacity(k);
    for &idx in order.iter().take(k) {
        eigenvalues.push(eig.eigenvalues[idx]);
        let mut v: DVector<f64> = eig.eigenvectors.column(idx).into_owned();
        let norm = v.norm();
        if norm > 0.0 {
            v /= norm;
        }
        orient_sign(&mut v);
        eigenvectors.push(v);
    }
    Ok(EigenPairs {
        eigenvalues,
        eigenvectors,
    })
}

/// Thin SVD with singular values sorted descending.
pub fn svd(x: &DataMatrix) -> Svd {
    svd_matrix(x.inner())
}

/// SVD of a raw matrix (same contract as [`svd`]).
pub fn svd_matrix(a: &DMatrix<f64>) -> Svd {
    let mut dec = a.clone().svd(true, true);
    dec.sort_by_singular_values();
    Svd {
        u: dec.u.expect("svd requested u"),
        singular_values: dec.singular_values,
        v_t: dec.v_t.expect("svd requested v_t"),
    }
}

/// Dominant singular value.
pub fn spectral_norm(x: &DataMatrix) -> f64 {
    spectral_norm_of(x.inner())
}

pub(crate) fn spectral_norm_of(a: &DMatrix<f64>) -> f64 {
    if a.iter().all(|&v| v == 0.0) {
        return 0.0;
    }
    let dec = a.clone().svd(false, false);
    dec.singular_values.max()
}

/// Entrywise soft threshold sgn(x) * max(|x| - tau, 0).
pub fn soft_threshold(x: &DMatrix<f64>, tau: f64) -> Result<DMatrix<f64>> {
    if !(tau >= 0.0) {
        return Err(Error::InvalidInput(format!("tau must be >= 0, got {tau}")));
    }
    Ok(x.map(|v| v.signum() * (v.abs() - tau).max(0.0)))
}

/// Singular value thresholding: U * soft_threshold(Sigma, tau) * V^T.
pub fn svt(x: &DMatrix<f64>, tau: f64) -> Result<DMatrix<f64>> {
    if !(tau >= 0.0) {
        return Err(Error::InvalidInput(format!("tau must be >= 0, got {tau}")));
    }
    let dec = svd_matrix(x);
    let kept: usize = dec.singular_values.iter().take_while(|&&s| s > tau).count();
    if kept == 0 {
        return Ok(DMatrix::zeros(x.nrows(), x.ncols()));
    }
    let u = dec.u.columns(0, kept);
    let vt = dec.v_t.rows(0, kept);
    let mut scaled = u.into_owned();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= dec.singular_values[j] - tau;
    }
    Ok(scaled * vt)
}
