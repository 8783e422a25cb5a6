//! Ensemble PCA: bootstrap bags, per-bag PCA, reflection stacking,
//! 2d-cluster aggregation with antipodal pairing, and percentile-band
//! uncertainty quantification.

use nalgebra::DVector;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kmeans::{self, KmeansParams};
use crate::linalg::{self, DataMatrix};
use crate::pca;
use crate::seed;

/// Ensemble configuration. `bag_size = None` uses n = N (the full-size
/// bootstrap, suited to white and sparse noise); pick smaller bags for
/// outlier-contaminated data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpcaConfig {
    pub bags: usize,
    pub bag_size: Option<usize>,
    pub d: usize,
    pub seed: u64,
    pub kmeans: KmeansParams,
    /// Confidence level for the component bands.
    pub confidence: f64,
}

impl EpcaConfig {
    pub fn new(d: usize, seed: u64) -> Self {
        Self {
            bags: 100,
            bag_size: None,
            d,
            seed,
            kmeans: KmeansParams::default(),
            confidence: 0.95,
        }
    }

    /// Small-bag heuristic for outlier-heavy data: n = max(2d+1, N/10).
    pub fn outlier_bag_size(d: usize, n_samples: usize) -> usize {
        (2 * d + 1).max(n_samples.div_ceil(10))
    }
}

/// Per-bag PCA output: d components (rows) and their eigenvalues.
#[derive(Debug, Clone)]
pub struct BagResult {
    pub components: Vec<DVector<f64>>,
    pub eigenvalues: Vec<f64>,
}

/// All bagged components and their reflections, rows aligned with the
/// duplicated eigenvalue vector. Row i + B*d is the negation of row i.
#[derive(Debug, Clone)]
pub struct StackedComponents {
    pub rows: Vec<DVector<f64>>,
    pub eigenvalues: Vec<f64>,
    pub bags: usize,
    pub d: usize,
}

/// Aggregation diagnostics: how antipodal the matched cluster-center pairs
/// were, cluster sizes, and any pairing warnings.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct EpcaDiagnostics {
    pub pairing_dots: Vec<f64>,
    pub cluster_sizes: Vec<usize>,
    pub warnings: Vec<String>,
    pub degenerate_clustering: bool,
}

/// Fitted ensemble model, components ordered by descending mean eigenvalue.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpcaModel {
    pub components: Vec<DVector<f64>>,
    pub eigenvalue_samples: Vec<Vec<f64>>,
    pub eigenvalue_mean: Vec<f64>,
    pub eigenvalue_variance: Vec<f64>,
    /// Coordinate-wise (lower, upper) percentile band per component.
    pub component_ci: Vec<(DVector<f64>, DVector<f64>)>,
    /// Coordinate-wise variance of the cluster members per component.
    pub component_variance: Vec<DVector<f64>>,
    pub confidence: f64,
    pub diagnostics: EpcaDiagnostics,
}

/// Draw B bags of size n with replacement. Bag j depends only on (seed, j).
pub fn draw_bags(n_samples: usize, bags: usize, n: usize, seed_value: u64) -> Result<Vec<Vec<usize>>> {
    if n < 2 {
        return Err(Error::InvalidBagSize { n, max: n_samples });
    }
    Ok((0..bags)
        .map(|j| {
            let mut rng = seed::rng(seed_value, &[seed::tag::BAG, j as u64]);
            (0..n).map(|_| rng.gen_range(0..n_samples)).collect()
        })
        .collect())
}

/// Run PCA independently on each bag. Each bag is re-centered on its own
/// mean before decomposition.
pub fn fit_bags(x: &DataMatrix, bags: &[Vec<usize>], d: usize) -> Result<Vec<BagResult>> {
    if let Some(bag) = bags.first() {
        let max = (bag.len().saturating_sub(1)).min(x.ncols());
        if d == 0 || d > max {
            return Err(Error::InvalidRank { d, max });
        }
    }
    bags.par_iter()
        .map(|indices| {
            let sub = x.select_rows(indices);
            let model = pca::fit_pca(&sub, d)?;
            Ok(BagResult {
                components: model.components,
                eigenvalues: model.eigenvalues,
            })
        })
        .collect()
}

/// Stack all bag components followed by their reflections; eigenvalues are
/// duplicated row-for-row.
pub fn stack_with_reflections(bag_results: &[BagResult]) -> Result<StackedComponents> {
    let bags = bag_results.len();
    if bags == 0 {
        return Err(Error::InvalidInput("need at least one bag result".into()));
    }
    let d = bag_results[0].components.len();
    let mut rows = Vec::with_capacity(2 * bags * d);
    let mut eigenvalues = Vec::with_capacity(2 * bags * d);
    for bag in bag_results {
        for (c, comp) in bag.components.iter().enumerate() {
            rows.push(comp.clone());
            eigenvalues.push(bag.eigenvalues[c]);
        }
    }
    for i in 0..bags * d {
        rows.push(-&rows[i]);
        eigenvalues.push(eigenvalues[i]);
    }
    Ok(StackedComponents {
        rows,
        eigenvalues,
        bags,
        d,
    })
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q * (n - 1) as f64;
    // round outward so the band always covers >= the nominal fraction of
    // members
    if q <= 0.5 {
        sorted[pos.floor() as usize]
    } else {
        sorted[(pos.ceil() as usize).min(n - 1)]
    }
}

/// Cluster the stacked components into 2d groups, resolve antipodal pairs,
/// and summarize each retained cluster into a representative component with
/// eigenvalue statistics and a coordinate-wise percentile band.
pub fn aggregate(
    stacked: &StackedComponents,
    d: usize,
    kmeans_seed: u64,
    kmeans_params: &KmeansParams,
    confidence: f64,
) -> Result<EpcaModel> {
    let k = 2 * d;
    if stacked.rows.len() < k {
        return Err(Error::InvalidInput(format!(
            "need at least {k} stacked rows for d={d}, got {}",
            stacked.rows.len()
        )));
    }
    if !(0.0 < confidence && confidence < 1.0) {
        return Err(Error::InvalidInput(format!(
            "confidence must be in (0,1), got {confidence}"
        )));
    }

    let clustering = kmeans::kmeans(&stacked.rows, k, kmeans_seed, kmeans_params)?;
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, &c) in clustering.assignments.iter().enumerate() {
        members[c].push(i);
    }

    let mut diagnostics = EpcaDiagnostics {
        cluster_sizes: members.iter().map(Vec::len).collect(),
        degenerate_clustering: clustering.degenerate,
        ..EpcaDiagnostics::default()
    };

    // pair clusters antipodally, visiting centers from largest cluster to
    // smallest; each center greedily takes the most anti-aligned partner
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| members[b].len().cmp(&members[a].len()).then(a.cmp(&b)));
    let unit_centers: Vec<DVector<f64>> = clustering
        .centers
        .iter()
        .map(|c| {
            let norm = c.norm();
            if norm > 0.0 {
                c / norm
            } else {
                c.clone()
            }
        })
        .collect();

    let mut consumed = vec![false; k];
    let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(d);
    for &a in &order {
        if consumed[a] {
            continue;
        }
        consumed[a] = true;
        let mut best: Option<(usize, f64)> = None;
        for b in 0..k {
            if consumed[b] {
                continue;
            }
            let dot = unit_centers[a].dot(&unit_centers[b]);
            if best.map_or(true, |(_, bd)| dot < bd) {
                best = Some((b, dot));
            }
        }
        let (b, dot) = best.ok_or_else(|| {
            Error::InvalidInput("odd number of clusters left unpaired".into())
        })?;
        consumed[b] = true;
        diagnostics.pairing_dots.push(dot);
        if dot > -0.5 {
            diagnostics.warnings.push(format!(
                "pairing warning: clusters {a} and {b} are not antipodal (dot = {dot:.3})"
            ));
        }
        pairs.push((a, b));
    }

    struct Candidate {
        component: DVector<f64>,
        samples: Vec<f64>,
        mean: f64,
        variance: f64,
        lower: DVector<f64>,
        upper: DVector<f64>,
        coord_var: DVector<f64>,
    }

    let mut candidates = Vec::with_capacity(d);
    for &(a, b) in &pairs {
        // keep the cluster whose center already carries the deterministic
        // orientation; its twin holds the duplicated reflections
        let mut oriented = unit_centers[a].clone();
        linalg::orient_sign(&mut oriented);
        let rep = if oriented.dot(&clustering.centers[a]) >= 0.0 { a } else { b };
        let mut component = unit_centers[rep].clone();
        linalg::orient_sign(&mut component);

        let member_rows = &members[rep];
        if member_rows.is_empty() {
            return Err(Error::InvalidInput("empty representative cluster".into()));
        }
        let samples: Vec<f64> = member_rows.iter().map(|&i| stacked.eigenvalues[i]).collect();
        let count = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / count;
        let variance = if samples.len() > 1 {
            samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1.0)
        } else {
            0.0
        };

        let dim = component.len();
        let q_lo = 0.5 * (1.0 - confidence);
        let q_hi = 1.0 - q_lo;
        let mut lower = DVector::zeros(dim);
        let mut upper = DVector::zeros(dim);
        let mut coord_var = DVector::zeros(dim);
        let mut coord: Vec<f64> = Vec::with_capacity(member_rows.len());
        for j in 0..dim {
            coord.clear();
            coord.extend(member_rows.iter().map(|&i| stacked.rows[i][j]));
            coord.sort_by(|x, y| x.partial_cmp(y).unwrap());
            lower[j] = percentile(&coord, q_lo);
            upper[j] = percentile(&coord, q_hi);
            let cm = coord.iter().sum::<f64>() / count;
            coord_var[j] = if coord.len() > 1 {
                coord.iter().map(|v| (v - cm).powi(2)).sum::<f64>() / (count - 1.0)
            } else {
                0.0
            };
        }

        candidates.push(Candidate {
            component,
            samples,
            mean,
            variance,
            lower,
            upper,
            coord_var,
        });
    }

    candidates.sort_by(|x, y| y.mean.partial_cmp(&x.mean).unwrap());

    let mut model = EpcaModel {
        components: Vec::with_capacity(d),
        eigenvalue_samples: Vec::with_capacity(d),
        eigenvalue_mean: Vec::with_capacity(d),
        eigenvalue_variance: Vec::with_capacity(d),
        component_ci: Vec::with_capacity(d),
        component_variance: Vec::with_capacity(d),
        confidence,
        diagnostics,
    };
    for c in candidates {
        model.components.push(c.component);
        model.eigenvalue_samples.push(c.samples);
        model.eigenvalue_mean.push(c.mean);
        model.eigenvalue_variance.push(c.variance);
        model.component_ci.push((c.lower, c.upper));
        model.component_variance.push(c.coord_var);
    }
    Ok(model)
}

/// Full ensemble fit: global centering, bagging, per-bag PCA, stacking,
/// and 2d-cluster aggregation.
pub fn fit_epca(x: &DataMatrix, config: &EpcaConfig) -> Result<EpcaModel> {
    if config.bags < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 bags, got {}",
            config.bags
        )));
    }
    let n_samples = x.nrows();
    let n = config.bag_size.unwrap_or(n_samples);
    if n < 2 || n > n_samples {
        return Err(Error::InvalidBagSize { n, max: n_samples });
    }
    let max_rank = (n - 1).min(x.ncols());
    if config.d == 0 || config.d > max_rank {
        return Err(Error::InvalidRank {
            d: config.d,
            max: max_rank,
        });
    }

    let (centered, _) = linalg::mean_center(x);
    let bags = draw_bags(n_samples, config.bags, n, config.seed)?;
    let bag_results = fit_bags(&centered, &bags, config.d)?;
    let stacked = stack_with_reflections(&bag_results)?;
    let kmeans_seed = seed::derive(config.seed, &[seed::tag::KMEANS]);
    aggregate(&stacked, config.d, kmeans_seed, &config.kmeans, config.confidence)
}
