//! Classical PCA: mean-center, covariance, top-d eigenpairs, projection.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, DataMatrix};

/// Fitted PCA model: d unit-norm components (rows of length m) with their
/// explained variances in descending order, plus the training mean.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PcaModel {
    pub components: Vec<DVector<f64>>,
    pub eigenvalues: Vec<f64>,
    pub mean: DVector<f64>,
    pub d: usize,
}

/// Fit PCA with rank d on X. Requires 1 <= d <= min(N-1, m).
pub fn fit_pca(x: &DataMatrix, d: usize) -> Result<PcaModel> {
    let max = (x.nrows().saturating_sub(1)).min(x.ncols());
    if d == 0 || d > max {
        return Err(Error::InvalidRank { d, max });
    }
    let (centered, mean) = linalg::mean_center(x);
    let cov = linalg::covariance(&centered)?;
    let eig = linalg::sym_eig(&cov, d)?;
    // covariance is PSD analytically; clamp float-level negatives
    let eigenvalues = eig.eigenvalues.iter().map(|&l| l.max(0.0)).collect();
    Ok(PcaModel {
        components: eig.eigenvectors,
        eigenvalues,
        mean,
        d,
    })
}

/// Project rows of X onto the model components: (X - mean) * components^T.
pub fn project(model: &PcaModel, x: &DataMatrix) -> Result<DMatrix<f64>> {
    let m = model.mean.len();
    if x.ncols() != m {
        return Err(Error::ShapeError(format!(
            "expected {} columns, got {}",
            m,
            x.ncols()
        )));
    }
    let mut scores = DMatrix::zeros(x.nrows(), model.d);
    for (i, row) in x.inner().row_iter().enumerate() {
        let centered = row.transpose() - &model.mean;
        for (k, comp) in model.components.iter().enumerate() {
            scores[(i, k)] = centered.dot(comp);
        }
    }
    Ok(scores)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;
    use rand::Rng;

    fn mat(rows: usize, cols: usize, v: &[f64]) -> DataMatrix {
        DataMatrix::new(DMatrix::from_row_slice(rows, cols, v)).unwrap()
    }

    #[test]
    fn axis_aligned_data() {
        let x = mat(4, 2, &[1.0, 0.0, 2.0, 0.0, 3.0, 0.0, 4.0, 0.0]);
        let model = fit_pca(&x, 1).unwrap();
        assert_abs_diff_eq!(model.components[0][0].abs(), 1.0, epsilon = 1e-12);
        assert!(model.components[0][1].abs() < 1e-12);
        // eigenvalue equals the sample variance of the x coordinate
        let var = [1.0f64, 2.0, 3.0, 4.0]
            .iter()
            .map(|v| (v - 2.5).powi(2))
            .sum::<f64>()
            / 3.0;
        assert_abs_diff_eq!(model.eigenvalues[0], var, epsilon = 1e-12);
    }

    #[test]
    fn rank_two_wave_has_vanishing_tail() {
        let (x, _, _) = crate::dataio::synth_wave(200, 16, 3.0, 1.5, 0.0, 7).unwrap();
        let model = fit_pca(&x, 5).unwrap();
        assert!(model.eigenvalues[0] > model.eigenvalues[1]);
        for &l in &model.eigenvalues[2..] {
            assert!(l < 1e-12, "tail eigenvalue {l}");
        }
    }

    #[test]
    fn eigenvalue_sum_matches_trace() {
        let mut rng = crate::seed::rng(21, &[0]);
        let x = DataMatrix::new(DMatrix::from_fn(9, 4, |_, _| rng.gen_range(-1.0..1.0))).unwrap();
        let d = 4; // min(N-1, m)
        let model = fit_pca(&x, d).unwrap();
        let (c, _) = crate::linalg::mean_center(&x);
        let cov = crate::linalg::covariance(&c).unwrap();
        let sum: f64 = model.eigenvalues.iter().sum();
        assert_abs_diff_eq!(sum, cov.trace(), epsilon = 1e-8);
    }

    #[test]
    fn rank_bounds_checked() {
        let x = mat(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        assert!(matches!(fit_pca(&x, 0), Err(Error::InvalidRank { .. })));
        assert!(matches!(fit_pca(&x, 3), Err(Error::InvalidRank { .. })));
        assert!(fit_pca(&x, 2).is_ok());
    }

    #[test]
    fn project_mean_rows_gives_zero() {
        let x = mat(4, 2, &[1.0, 2.0, 3.0, 1.0, 0.0, 0.5, 2.0, 2.5]);
        let model = fit_pca(&x, 2).unwrap();
        let mean_rows =
            DataMatrix::new(DMatrix::from_fn(3, 2, |_, j| model.mean[j])).unwrap();
        let scores = project(&model, &mean_rows).unwrap();
        assert!(scores.iter().all(|&v| v.abs() < 1e-12));
    }

    #[test]
    fn full_basis_reconstructs() {
        let mut rng = crate::seed::rng(22, &[0]);
        let x = DataMatrix::new(DMatrix::from_fn(10, 3, |_, _| rng.gen_range(-1.0..1.0))).unwrap();
        let model = fit_pca(&x, 3).unwrap();
        let scores = project(&model, &x).unwrap();
        for i in 0..10 {
            let mut recon = model.mean.clone();
            for k in 0..3 {
                recon += &model.components[k] * scores[(i, k)];
            }
            for j in 0..3 {
                assert_abs_diff_eq!(recon[j], x.inner()[(i, j)], epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn constructed_sample_scores() {
        let x = mat(4, 2, &[2.0, 0.0, -2.0, 0.0, 0.0, 0.5, 0.0, -0.5]);
        let model = fit_pca(&x, 2).unwrap();
        let c = 0.75;
        let sample = &model.mean + &model.components[0] * c;
        let s = DataMatrix::new(DMatrix::from_row_slice(1, 2, sample.as_slice())).unwrap();
        let scores = project(&model, &s).unwrap();
        assert_abs_diff_eq!(scores[(0, 0)], c, epsilon = 1e-12);
        assert!(scores[(0, 1)].abs() < 1e-12);
    }

    #[test]
    fn project_shape_mismatch() {
        let x = mat(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let model = fit_pca(&x, 1).unwrap();
        let bad = mat(2, 3, &[1.0; 6]);
        assert!(matches!(project(&model, &bad), Err(Error::ShapeError(_))));
    }

    #[test]
    fn score_variance_equals_eigenvalue() {
        let mut rng = crate::seed::rng(23, &[0]);
        let x = DataMatrix::new(DMatrix::from_fn(40, 5, |_, _| rng.gen_range(-2.0..2.0))).unwrap();
        let model = fit_pca(&x, 4).unwrap();
        let scores = project(&model, &x).unwrap();
        for k in 0..4 {
            let col = scores.column(k);
            let mean = col.sum() / 40.0;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 39.0;
            assert_abs_diff_eq!(var, model.eigenvalues[k], epsilon = 1e-8);
        }
    }

    #[test]
    fn row_permutation_invariant() {
        let x = mat(4, 2, &[1.0, 2.0, 3.0, 1.0, 0.0, 0.5, 2.0, 2.5]);
        let perm = x.select_rows(&[2, 0, 3, 1]);
        let a = fit_pca(&x, 2).unwrap();
        let b = fit_pca(&perm, 2).unwrap();
        assert_eq!(a.eigenvalues, b.eigenvalues);
        for (va, vb) in a.components.iter().zip(&b.components) {
            assert_eq!(va.as_slice(), vb.as_slice());
        }
    }
}
