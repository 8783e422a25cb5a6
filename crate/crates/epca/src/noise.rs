//! Seeded corruption generators: sparse entry replacement, additive white
//! noise (Gaussian or uniform), and multiplicative row outliers.

use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{spectral_norm, DataMatrix};
use crate::seed;

/// Noise model and its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseKind {
    /// Each entry replaced by `c` with probability `p`.
    Sparse { p: f64, c: f64 },
    /// Additive Gaussian noise with variance sigma1(X)/f.
    Gaussian { f: f64 },
    /// Additive uniform noise with variance sigma1(X)/f.
    Uniform { f: f64 },
    /// A random s% of rows multiplied by `scale`.
    Outliers { s: f64, scale: f64 },
}

impl NoiseKind {
    pub fn label(&self) -> &'static str {
        match self {
            NoiseKind::Sparse { .. } => "sparse",
            NoiseKind::Gaussian { .. } => "gaussian",
            NoiseKind::Uniform { .. } => "uniform",
            NoiseKind::Outliers { .. } => "outliers",
        }
    }

    pub fn params_label(&self) -> String {
        match self {
            NoiseKind::Sparse { p, c } => format!("p={p};c={c}"),
            NoiseKind::Gaussian { f } | NoiseKind::Uniform { f } => format!("f={f}"),
            NoiseKind::Outliers { s, scale } => format!("s={s};S={scale}"),
        }
    }
}

/// A noise model plus the seed that makes its draws reproducible.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    #[serde(flatten)]
    pub kind: NoiseKind,
    pub seed: u64,
}

/// What a generator touched, for diagnostics and sidecar files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum CorruptionMask {
    Entries(Vec<(usize, usize)>),
    Rows(Vec<usize>),
    Dense,
}

/// Apply a noise spec, returning the corrupted matrix and its mask.
pub fn apply(x: &DataMatrix, spec: &NoiseSpec) -> Result<(DataMatrix, CorruptionMask)> {
    match spec.kind {
        NoiseKind::Sparse { p, c } => {
            let (y, mask) = corrupt_sparse(x, p, c, spec.seed)?;
            Ok((y, CorruptionMask::Entries(mask)))
        }
        NoiseKind::Gaussian { f } => {
            Ok((corrupt_white(x, f, WhiteKind::Gaussian, spec.seed)?, CorruptionMask::Dense))
        }
        NoiseKind::Uniform { f } => {
            Ok((corrupt_white(x, f, WhiteKind::Uniform, spec.seed)?, CorruptionMask::Dense))
        }
        NoiseKind::Outliers { s, scale } => {
            let (y, rows) = corrupt_outliers(x, s, scale, spec.seed)?;
            Ok((y, CorruptionMask::Rows(rows)))
        }
    }
}

/// Replace each entry by `c` independently with probability `p`.
/// Returns the corrupted matrix and the (row, col) list of touched entries.
pub fn corrupt_sparse(
    x: &DataMatrix,
    p: f64,
    c: f64,
    seed_value: u64,
) -> Result<(DataMatrix, Vec<(usize, usize)>)> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidInput(format!("p must be in [0,1], got {p}")));
    }
    if !c.is_finite() {
        return Err(Error::InvalidInput("corruption value must be finite".into()));
    }
    let mut rng = seed::rng(seed_value, &[seed::tag::NOISE, 0]);
    let mut out = x.inner().clone();
    let mut mask = Vec::new();
    for i in 0..out.nrows() {
        for j in 0..out.ncols() {
            if rng.gen::<f64>() < p {
                out[(i, j)] = c;
                mask.push((i, j));
            }
        }
    }
    Ok((DataMatrix::new(out)?, mask))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WhiteKind {
    Gaussian,
    Uniform,
}

/// Additive zero-mean white noise with variance v = sigma1(X)/f.
/// sigma1 is taken on the clean input, before corruption.
pub fn corrupt_white(x: &DataMatrix, f: f64, kind: WhiteKind, seed_value: u64) -> Result<DataMatrix> {
    if !(f > 0.0) {
        return Err(Error::InvalidInput(format!("f must be > 0, got {f}")));
    }
    let v = spectral_norm(x) / f;
    let mut rng = seed::rng(seed_value, &[seed::tag::NOISE, 1]);
    let mut out = x.inner().clone();
    match kind {
        WhiteKind::Gaussian => {
            let dist = Normal::new(0.0, v.sqrt())
                .map_err(|e| Error::InvalidInput(format!("bad normal params: {e}")))?;
            for val in out.iter_mut() {
                *val += dist.sample(&mut rng);
            }
        }
        WhiteKind::Uniform => {
            // bound a = sqrt(3v) gives mean 0, variance v
            let a = (3.0 * v).sqrt();
            if a > 0.0 {
                let dist = Uniform::new_inclusive(-a, a);
                for val in out.iter_mut() {
                    *val += dist.sample(&mut rng);
                }
            }
        }
    }
    DataMatrix::new(out)
}

/// Multiply ceil(s * N / 100) distinct random rows entrywise by `scale`.
/// Returns the corrupted matrix and the sorted corrupted row indices.
pub fn corrupt_outliers(
    x: &DataMatrix,
    s: f64,
    scale: f64,
    seed_value: u64,
) -> Result<(DataMatrix, Vec<usize>)> {
    if !(0.0..=100.0).contains(&s) {
        return Err(Error::InvalidInput(format!("s must be in [0,100], got {s}")));
    }
    if !scale.is_finite() {
        return Err(Error::InvalidInput("outlier scale must be finite".into()));
    }
    let n = x.nrows();
    let count = ((s * n as f64) / 100.0).ceil() as usize;
    let count = count.min(n);
    let mut rng = seed::rng(seed_value, &[seed::tag::NOISE, 2]);
    let mut rows: Vec<usize> = rand::seq::index::sample(&mut rng, n, count).into_vec();
    rows.sort_unstable();
    let mut out = x.inner().clone();
    for &r in &rows {
        for j in 0..out.ncols() {
            out[(r, j)] *= scale;
        }
    }
    Ok((DataMatrix::new(out)?, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn rand_matrix(rows: usize, cols: usize, seed_value: u64) -> DataMatrix {
        let mut rng = seed::rng(seed_value, &[seed::tag::SYNTH]);
        DataMatrix::new(DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))).unwrap()
    }

    #[test]
    fn sparse_p_zero_and_one() {
        let x = rand_matrix(10, 5, 1);
        let (y, mask) = corrupt_sparse(&x, 0.0, 7.0, 3).unwrap();
        assert_eq!(y, x);
        assert!(mask.is_empty());

        let (y, mask) = corrupt_sparse(&x, 1.0, 7.0, 3).unwrap();
        assert!(y.inner().iter().all(|&v| v == 7.0));
        assert_eq!(mask.len(), 50);
    }

    #[test]
    fn sparse_count_concentrates() {
        let x = rand_matrix(1000, 1000, 2);
        let p = 0.01;
        let (_, mask) = corrupt_sparse(&x, p, 2.0, 5).unwrap();
        let n = 1_000_000.0;
        let expected = n * p;
        let dev = 3.0 * (n * p * (1.0 - p)).sqrt();
        assert!((mask.len() as f64 - expected).abs() < dev, "count {}", mask.len());
    }

    #[test]
    fn sparse_untouched_entries_identical() {
        let x = rand_matrix(20, 20, 3);
        let (y, mask) = corrupt_sparse(&x, 0.1, 2.0, 9).unwrap();
        let masked: std::collections::HashSet<(usize, usize)> = mask.into_iter().collect();
        for i in 0..20 {
            for j in 0..20 {
                if !masked.contains(&(i, j)) {
                    assert_eq!(y.inner()[(i, j)].to_bits(), x.inner()[(i, j)].to_bits());
                }
            }
        }
    }

    #[test]
    fn sparse_validates_p() {
        let x = rand_matrix(3, 3, 4);
        assert!(corrupt_sparse(&x, -0.1, 0.0, 0).is_err());
        assert!(corrupt_sparse(&x, 1.1, 0.0, 0).is_err());
    }

    #[test]
    fn white_vanishing_variance() {
        let x = rand_matrix(30, 10, 5);
        let s1 = spectral_norm(&x);
        let y = corrupt_white(&x, 1e12, WhiteKind::Gaussian, 7).unwrap();
        let max_pert = (y.inner() - x.inner()).amax();
        assert!(max_pert < 1e-4 * s1);
    }

    #[test]
    fn uniform_bounds() {
        let x = rand_matrix(50, 20, 6);
        let s1 = spectral_norm(&x);
        let f = s1 / 3.0; // v = 3, bound sqrt(9) = 3
        let y = corrupt_white(&x, f, WhiteKind::Uniform, 8).unwrap();
        let max_pert = (y.inner() - x.inner()).amax();
        assert!(max_pert <= 3.0 + 1e-12);
    }

    #[test]
    fn gaussian_variance_matches() {
        let (x, _, _) = crate::dataio::synth_wave(2000, 50, 3.0, 1.5, 0.1, 11).unwrap();
        let f = 1000.0;
        let v = spectral_norm(&x) / f;
        let y = corrupt_white(&x, f, WhiteKind::Gaussian, 12).unwrap();
        let diff = y.inner() - x.inner();
        let n = diff.len() as f64;
        let mean = diff.iter().sum::<f64>() / n;
        let var = diff.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((var - v).abs() < 0.05 * v, "var {var} vs {v}");
    }

    #[test]
    fn white_rejects_bad_f() {
        let x = rand_matrix(3, 3, 7);
        assert!(corrupt_white(&x, 0.0, WhiteKind::Gaussian, 0).is_err());
        assert!(corrupt_white(&x, -2.0, WhiteKind::Uniform, 0).is_err());
    }

    #[test]
    fn outliers_s_zero_and_identity_scale() {
        let x = rand_matrix(10, 4, 8);
        let (y, rows) = corrupt_outliers(&x, 0.0, 5.0, 1).unwrap();
        assert_eq!(y, x);
        assert!(rows.is_empty());

        let (y, rows) = corrupt_outliers(&x, 30.0, 1.0, 1).unwrap();
        assert_eq!(y, x);
        assert_eq!(rows.len(), 3);
    }

    #[test]
    fn outliers_exact_row_count() {
        let x = rand_matrix(100, 4, 9);
        let (y, rows) = corrupt_outliers(&x, 5.0, 5.0, 2).unwrap();
        assert_eq!(rows.len(), 5);
        // distinct and scaled
        let set: std::collections::HashSet<usize> = rows.iter().copied().collect();
        assert_eq!(set.len(), 5);
        for &r in &rows {
            for j in 0..4 {
                assert_eq!(y.inner()[(r, j)], 5.0 * x.inner()[(r, j)]);
            }
        }
    }

    #[test]
    fn outliers_ceiling_guarantees_one() {
        let x = rand_matrix(10, 2, 10);
        let (_, rows) = corrupt_outliers(&x, 0.1, 2.0, 3).unwrap();
        assert_eq!(rows.len(), 1);
    }

    #[test]
    fn outliers_validates_s() {
        let x = rand_matrix(3, 3, 11);
        assert!(corrupt_outliers(&x, -1.0, 2.0, 0).is_err());
        assert!(corrupt_outliers(&x, 101.0, 2.0, 0).is_err());
    }

    #[test]
    fn generators_deterministic() {
        let x = rand_matrix(15, 6, 12);
        let a = corrupt_sparse(&x, 0.2, 3.0, 42).unwrap();
        let b = corrupt_sparse(&x, 0.2, 3.0, 42).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
        let a = corrupt_white(&x, 10.0, WhiteKind::Uniform, 42).unwrap();
        let b = corrupt_white(&x, 10.0, WhiteKind::Uniform, 42).unwrap();
        assert_eq!(a, b);
        let a = corrupt_outliers(&x, 20.0, 3.0, 42).unwrap();
        let b = corrupt_outliers(&x, 20.0, 3.0, 42).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
    }

    #[test]
    fn sparse_zero_value_simulates_missing() {
        let x = rand_matrix(10, 10, 13);
        let (y, mask) = corrupt_sparse(&x, 0.3, 0.0, 21).unwrap();
        for &(i, j) in &mask {
            assert_eq!(y.inner()[(i, j)], 0.0);
        }
        assert!(!mask.is_empty());
    }
}
