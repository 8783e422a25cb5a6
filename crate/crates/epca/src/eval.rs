//! Scoring, method comparison, experiment grids, fixed-noise trials,
//! runtime measurement and boxplot statistics.

use std::time::Instant;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::epca::{fit_epca, EpcaConfig};
use crate::error::{Error, Result};
use crate::kmeans::KmeansParams;
use crate::linalg::DataMatrix;
use crate::noise::{self, NoiseKind, NoiseSpec};
use crate::pca::{fit_pca, PcaModel};
use crate::rpca::{rpca_components, rpca_ialm, RpcaConfig};
use crate::seed;

/// Percent relative error between a true and a predicted unit component,
/// sign-aligned before scoring: min over +/- p of ||t - p|| / ||t|| * 100.
pub fn relative_error(t: &DVector<f64>, p: &DVector<f64>) -> Result<f64> {
    if t.len() != p.len() {
        return Err(Error::ShapeError(format!(
            "component lengths differ: {} vs {}",
            t.len(),
            p.len()
        )));
    }
    let norm_t = t.norm();
    if norm_t == 0.0 {
        return Err(Error::InvalidInput("true component must be nonzero".into()));
    }
    let minus = (t - p).norm();
    let plus = (t + p).norm();
    Ok(minus.min(plus) / norm_t * 100.0)
}

/// Score predicted components against the true model, matched by rank index.
pub fn score_components(truth: &PcaModel, predicted: &[DVector<f64>]) -> Result<Vec<f64>> {
    if predicted.len() != truth.components.len() {
        return Err(Error::ShapeError(format!(
            "expected {} components, got {}",
            truth.components.len(),
            predicted.len()
        )));
    }
    truth
        .components
        .iter()
        .zip(predicted)
        .map(|(t, p)| relative_error(t, p))
        .collect()
}

/// EPCA parameters without a seed; per-trial seeds are derived by the
/// runners so results are independent of scheduling.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpcaParams {
    pub bags: usize,
    pub bag_size: Option<usize>,
    pub kmeans: KmeansParams,
    pub confidence: f64,
}

impl Default for EpcaParams {
    fn default() -> Self {
        Self {
            bags: 100,
            bag_size: None,
            kmeans: KmeansParams::default(),
            confidence: 0.95,
        }
    }
}

impl EpcaParams {
    pub fn config(&self, d: usize, seed_value: u64) -> EpcaConfig {
        EpcaConfig {
            bags: self.bags,
            bag_size: self.bag_size,
            d,
            seed: seed_value,
            kmeans: self.kmeans,
            confidence: self.confidence,
        }
    }
}

/// A method under comparison.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Method {
    Pca,
    Epca(EpcaParams),
    Rpca(RpcaConfig),
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::Pca => "pca",
            Method::Epca(_) => "epca",
            Method::Rpca(_) => "rpca",
        }
    }
}

/// Per-run outcome: one percent relative error per component, plus timing.
/// `errors` is empty when the run timed out.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorReport {
    pub method: String,
    pub dataset: String,
    pub noise_kind: String,
    pub noise_params: String,
    pub trial: usize,
    pub errors: Vec<f64>,
    pub elapsed_s: f64,
    pub timed_out: bool,
}

/// Five-number summary with 1.5 IQR whiskers; samples beyond the whiskers
/// are listed as outliers.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoxplotStats {
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub whisker_low: f64,
    pub whisker_high: f64,
    pub outliers: Vec<f64>,
}

fn quantile_interp(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Quartiles by linear interpolation, whiskers at the furthest samples
/// within 1.5 IQR of the quartiles.
pub fn boxplot_stats(samples: &[f64]) -> Result<BoxplotStats> {
    if samples.is_empty() {
        return Err(Error::InvalidInput("boxplot needs at least one sample".into()));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("boxplot samples must be finite".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let q1 = quantile_interp(&sorted, 0.25);
    let median = quantile_interp(&sorted, 0.5);
    let q3 = quantile_interp(&sorted, 0.75);
    let iqr = q3 - q1;
    let lo_fence = q1 - 1.5 * iqr;
    let hi_fence = q3 + 1.5 * iqr;
    let whisker_low = sorted
        .iter()
        .copied()
        .find(|&v| v >= lo_fence)
        .unwrap_or(q1);
    let whisker_high = sorted
        .iter()
        .rev()
        .copied()
        .find(|&v| v <= hi_fence)
        .unwrap_or(q3);
    let outliers = sorted
        .iter()
        .copied()
        .filter(|&v| v < lo_fence || v > hi_fence)
        .collect();
    Ok(BoxplotStats {
        median,
        q1,
        q3,
        whisker_low,
        whisker_high,
        outliers,
    })
}

/// A named dataset ready to benchmark.
pub struct Dataset {
    pub name: String,
    pub matrix: DataMatrix,
}

/// Mean percent relative error over the non-timed-out runs of one
/// (dataset, noise level, method, component) cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeanRow {
    pub dataset: String,
    pub noise_kind: String,
    pub noise_params: String,
    pub method: String,
    pub component_index: usize,
    pub mean_error: f64,
    pub runs: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridReport {
    pub trials: Vec<ErrorReport>,
    pub means: Vec<MeanRow>,
}

/// Boxplot summary of one (dataset, noise, method, component) cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorStatRow {
    pub dataset: String,
    pub noise_kind: String,
    pub method: String,
    pub component_index: usize,
    pub stats: BoxplotStats,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RuntimeStatRow {
    pub dataset: String,
    pub noise_kind: String,
    pub method: String,
    pub stats: BoxplotStats,
}

/// A (dataset, noise, method) combination dropped from the statistics
/// because at least one of its runs exceeded the timeout.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExclusionFlag {
    pub dataset: String,
    pub noise_kind: String,
    pub method: String,
    pub timed_out_runs: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FixedReport {
    pub trials: Vec<ErrorReport>,
    pub error_stats: Vec<ErrorStatRow>,
    pub runtime_stats: Vec<RuntimeStatRow>,
    pub excluded: Vec<ExclusionFlag>,
}

fn run_method(
    method: &Method,
    corrupted: &DataMatrix,
    truth: &PcaModel,
    d: usize,
    run_seed: u64,
) -> Result<(Vec<f64>, f64, bool)> {
    let start = Instant::now();
    match method {
        Method::Pca => {
            let model = fit_pca(corrupted, d)?;
            let elapsed = start.elapsed().as_secs_f64();
            Ok((score_components(truth, &model.components)?, elapsed, false))
        }
        Method::Epca(params) => {
            let model = fit_epca(corrupted, &params.config(d, run_seed))?;
            let elapsed = start.elapsed().as_secs_f64();
            Ok((score_components(truth, &model.components)?, elapsed, false))
        }
        Method::Rpca(config) => {
            let result = rpca_ialm(corrupted, config)?;
            if result.timed_out {
                return Ok((Vec::new(), result.elapsed, true));
            }
            let model = rpca_components(&result, d)?;
            let elapsed = start.elapsed().as_secs_f64();
            Ok((score_components(truth, &model.components)?, elapsed, false))
        }
    }
}

struct Task {
    dataset_idx: usize,
    noise_idx: usize,
    trial: usize,
    method_idx: usize,
    run: usize,
}

fn execute_tasks(
    tasks: &[Task],
    datasets: &[Dataset],
    truths: &[PcaModel],
    noise_levels: &[NoiseKind],
    methods: &[Method],
    d: usize,
    master_seed: u64,
) -> Result<Vec<ErrorReport>> {
    tasks
        .par_iter()
        .map(|task| {
            let ds = &datasets[task.dataset_idx];
            let kind = noise_levels[task.noise_idx];
            let noise_seed = seed::derive(
                master_seed,
                &[
                    seed::tag::TRIAL,
                    task.dataset_idx as u64,
                    task.noise_idx as u64,
                    task.trial as u64,
                ],
            );
            let spec = NoiseSpec {
                kind,
                seed: noise_seed,
            };
            let (corrupted, _) = noise::apply(&ds.matrix, &spec)?;
            let method = &methods[task.method_idx];
            let run_seed = seed::derive(noise_seed, &[task.method_idx as u64, task.run as u64]);
            let (errors, elapsed_s, timed_out) =
                run_method(method, &corrupted, &truths[task.dataset_idx], d, run_seed)?;
            Ok(ErrorReport {
                method: method.label().to_string(),
                dataset: ds.name.clone(),
                noise_kind: kind.label().to_string(),
                noise_params: kind.params_label(),
                trial: task.trial * 1000 + task.run,
                errors,
                elapsed_s,
                timed_out,
            })
        })
        .collect()
}

fn fit_truths(datasets: &[Dataset], d: usize) -> Result<Vec<PcaModel>> {
    datasets.iter().map(|ds| fit_pca(&ds.matrix, d)).collect()
}

/// Noise-level sweep: r random corruptions per level, deterministic methods
/// once per corruption and EPCA `epca_runs` times, averaged per cell.
pub fn run_grid(
    datasets: &[Dataset],
    d: usize,
    methods: &[Method],
    noise_levels: &[NoiseKind],
    repetitions: usize,
    epca_runs: usize,
    master_seed: u64,
) -> Result<GridReport> {
    let truths = fit_truths(datasets, d)?;
    let mut tasks = Vec::new();
    for dataset_idx in 0..datasets.len() {
        for noise_idx in 0..noise_levels.len() {
            for trial in 0..repetitions {
                for (method_idx, method) in methods.iter().enumerate() {
                    let runs = match method {
                        Method::Epca(_) => epca_runs,
                        _ => 1,
                    };
                    for run in 0..runs {
                        tasks.push(Task {
                            dataset_idx,
                            noise_idx,
                            trial,
                            method_idx,
                            run,
                        });
                    }
                }
            }
        }
    }
    let trials = execute_tasks(&tasks, datasets, &truths, noise_levels, methods, d, master_seed)?;

    // cell means over non-timed-out runs
    let mut means = Vec::new();
    for ds in datasets {
        for kind in noise_levels {
            for method in methods {
                for component_index in 0..d {
                    let errs: Vec<f64> = trials
                        .iter()
                        .filter(|r| {
                            r.dataset == ds.name
                                && r.noise_kind == kind.label()
                                && r.noise_params == kind.params_label()
                                && r.method == method.label()
                                && !r.timed_out
                        })
                        .map(|r| r.errors[component_index])
                        .collect();
                    if errs.is_empty() {
                        continue;
                    }
                    means.push(MeanRow {
                        dataset: ds.name.clone(),
                        noise_kind: kind.label().to_string(),
                        noise_params: kind.params_label(),
                        method: method.label().to_string(),
                        component_index,
                        mean_error: errs.iter().sum::<f64>() / errs.len() as f64,
                        runs: errs.len(),
                    });
                }
            }
        }
    }
    Ok(GridReport { trials, means })
}

/// Fixed-noise comparison: every method once per corruption trial, with
/// error and runtime boxplots per cell. Methods that time out on a dataset
/// are excluded from that dataset's statistics and flagged.
pub fn run_fixed(
    datasets: &[Dataset],
    d: usize,
    methods: &[Method],
    noise_specs: &[NoiseKind],
    trials: usize,
    master_seed: u64,
) -> Result<FixedReport> {
    let truths = fit_truths(datasets, d)?;
    let mut tasks = Vec::new();
    for dataset_idx in 0..datasets.len() {
        for noise_idx in 0..noise_specs.len() {
            for trial in 0..trials {
                for method_idx in 0..methods.len() {
                    tasks.push(Task {
                        dataset_idx,
                        noise_idx,
                        trial,
                        method_idx,
                        run: 0,
                    });
                }
            }
        }
    }
    let reports = execute_tasks(&tasks, datasets, &truths, noise_specs, methods, d, master_seed)?;

    let mut error_stats = Vec::new();
    let mut runtime_stats = Vec::new();
    let mut excluded = Vec::new();
    for ds in datasets {
        for kind in noise_specs {
            for method in methods {
                let cell: Vec<&ErrorReport> = reports
                    .iter()
                    .filter(|r| {
                        r.dataset == ds.name
                            && r.noise_kind == kind.label()
                            && r.method == method.label()
                    })
                    .collect();
                if cell.is_empty() {
                    continue;
                }
                let timed_out_runs = cell.iter().filter(|r| r.timed_out).count();
                if timed_out_runs > 0 {
                    excluded.push(ExclusionFlag {
                        dataset: ds.name.clone(),
                        noise_kind: kind.label().to_string(),
                        method: method.label().to_string(),
                        timed_out_runs,
                    });
                    continue;
                }
                for component_index in 0..d {
                    let errs: Vec<f64> = cell.iter().map(|r| r.errors[component_index]).collect();
                    error_stats.push(ErrorStatRow {
                        dataset: ds.name.clone(),
                        noise_kind: kind.label().to_string(),
                        method: method.label().to_string(),
                        component_index,
                        stats: boxplot_stats(&errs)?,
                    });
                }
                let times: Vec<f64> = cell.iter().map(|r| r.elapsed_s).collect();
                runtime_stats.push(RuntimeStatRow {
                    dataset: ds.name.clone(),
                    noise_kind: kind.label().to_string(),
                    method: method.label().to_string(),
                    stats: boxplot_stats(&times)?,
                });
            }
        }
    }
    Ok(FixedReport {
        trials: reports,
        error_stats,
        runtime_stats,
        excluded,
    })
}
