//! Robust PCA baseline: Principal Component Pursuit solved with the
//! inexact Augmented Lagrange Multipliers scheme, with a wall-clock
//! timeout so oversized problems produce a reportable outcome instead of
//! hanging a benchmark run.

use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, DataMatrix};
use crate::pca::{self, PcaModel};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RpcaConfig {
    /// Sparse regularization weight. 0.20 matches the benchmark setting;
    /// 1/sqrt(max(N, m)) is the standard exact-recovery choice.
    pub alpha: f64,
    /// Initial penalty; `None` picks 1.25 / sigma1(X).
    pub mu0: Option<f64>,
    /// Penalty growth factor.
    pub rho: f64,
    /// Relative convergence tolerance on ||X - L - S||_F / ||X||_F.
    pub tol: f64,
    pub max_iter: usize,
    /// Wall-clock budget in seconds; `None` disables the timeout.
    pub timeout: Option<f64>,
}

impl Default for RpcaConfig {
    fn default() -> Self {
        Self {
            alpha: 0.20,
            mu0: None,
            rho: 1.5,
            tol: 1e-7,
            max_iter: 1000,
            timeout: Some(120.0),
        }
    }
}

impl RpcaConfig {
    /// The standard exact-recovery weight 1/sqrt(max(N, m)).
    pub fn exact_recovery_alpha(n: usize, m: usize) -> f64 {
        1.0 / (n.max(m) as f64).sqrt()
    }

    fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) {
            return Err(Error::InvalidInput(format!("alpha must be > 0, got {}", self.alpha)));
        }
        if !(self.rho > 1.0) {
            return Err(Error::InvalidInput(format!("rho must be > 1, got {}", self.rho)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidInput(format!("tol must be > 0, got {}", self.tol)));
        }
        if let Some(mu0) = self.mu0 {
            if !(mu0 > 0.0) {
                return Err(Error::InvalidInput(format!("mu0 must be > 0, got {mu0}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RpcaResult {
    pub l: DataMatrix,
    pub s: DataMatrix,
    pub iterations: usize,
    pub converged: bool,
    pub residual: f64,
    pub elapsed: f64,
    pub timed_out: bool,
}

/// Solve min ||L||_* + alpha ||S||_1 subject to X = L + S by inexact ALM.
pub fn rpca_ialm(x: &DataMatrix, config: &RpcaConfig) -> Result<RpcaResult> {
    config.validate()?;
    let start = Instant::now();
    let a = x.inner();
    let (n, m) = (a.nrows(), a.ncols());
    let norm_x = a.norm();

    if norm_x == 0.0 {
        return Ok(RpcaResult {
            l: DataMatrix::new(DMatrix::zeros(n, m))?,
            s: DataMatrix::new(DMatrix::zeros(n, m))?,
            iterations: 1,
            converged: true,
            residual: 0.0,
            elapsed: start.elapsed().as_secs_f64(),
            timed_out: false,
        });
    }

    let sigma1 = linalg::spectral_norm(x);
    let inf_norm = a.amax();
    let dual_scale = sigma1.max(inf_norm / config.alpha);
    let mut y = a / dual_scale;
    let mut s = DMatrix::zeros(n, m);
    let mut l = DMatrix::zeros(n, m);
    let mut mu = config.mu0.unwrap_or(1.25 / sigma1);

    let mut iterations = 0;
    let mut converged = false;
    let mut timed_out = false;
    let mut residual = f64::INFINITY;

    for iter in 1..=config.max_iter {
        iterations = iter;
        l = linalg::svt(&(a - &s + &y / mu), 1.0 / mu)?;
        s = linalg::soft_threshold(&(a - &l + &y / mu), config.alpha / mu)?;
        let r = a - &l - &s;
        y += &r * mu;
        residual = r.norm() / norm_x;
        mu *= config.rho;
        if residual <= config.tol {
            converged = true;
            break;
        }
        if let Some(budget) = config.timeout {
            if start.elapsed().as_secs_f64() > budget {
                timed_out = true;
                break;
            }
        }
    }

    Ok(RpcaResult {
        l: DataMatrix::new(l)?,
        s: DataMatrix::new(s)?,
        iterations,
        converged,
        residual,
        elapsed: start.elapsed().as_secs_f64(),
        timed_out,
    })
}

/// PCA on the recovered low-rank part.
pub fn rpca_components(result: &RpcaResult, d: usize) -> Result<PcaModel> {
    pca::fit_pca(&result.l, d)
}
