//! Seeded Lloyd's k-means with k-means++ initialization.

use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// Iteration and restart controls.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct KmeansParams {
    pub max_iter: usize,
    pub tol: f64,
    pub n_init: usize,
}

impl Default for KmeansParams {
    fn default() -> Self {
        Self {
            max_iter: 300,
            tol: 1e-6,
            n_init: 10,
        }
    }
}

/// Result of a k-means run. `degenerate` flags inputs with fewer distinct
/// points than clusters, where duplicate centers are unavoidable.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Clustering {
    pub centers: Vec<DVector<f64>>,
    pub assignments: Vec<usize>,
    pub inertia: f64,
    pub iterations: usize,
    pub degenerate: bool,
}

fn sq_dist(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        let d = a[i] - b[i];
        s += d * d;
    }
    s
}

fn nearest(point: &DVector<f64>, centers: &[DVector<f64>]) -> (usize, f64) {
    let mut best = 0usize;
    let mut best_d = f64::INFINITY;
    for (c, center) in centers.iter().enumerate() {
        let d = sq_dist(point, center);
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    (best, best_d)
}

fn kmeanspp_init(points: &[DVector<f64>], k: usize, rng: &mut impl Rng) -> Vec<DVector<f64>> {
    let n = points.len();
    let mut centers = Vec::with_capacity(k);
    centers.push(points[rng.gen_range(0..n)].clone());
    let mut dist: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = dist.iter().sum();
        let idx = if total > 0.0 {
            let target = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = n - 1;
            for (i, &d) in dist.iter().enumerate() {
                acc += d;
                if acc >= target {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.gen_range(0..n)
        };
        centers.push(points[idx].clone());
        let last = centers.last().unwrap();
        for (i, p) in points.iter().enumerate() {
            let d = sq_dist(p, last);
            if d < dist[i] {
                dist[i] = d;
            }
        }
    }
    centers
}

struct RunResult {
    centers: Vec<DVector<f64>>,
    inertia: f64,
    iterations: usize,
}

fn lloyd(
    points: &[DVector<f64>],
    k: usize,
    params: &KmeansParams,
    rng: &mut impl Rng,
) -> RunResult {
    let n = points.len();
    let dim = points[0].len();
    let mut centers = kmeanspp_init(points, k, rng);
    let mut assignments = vec![0usize; n];
    let mut prev_inertia = f64::INFINITY;
    let mut iterations = 0;

    for iter in 1..=params.max_iter {
        iterations = iter;
        let mut inertia = 0.0;
        for (i, p) in points.iter().enumerate() {
            let (c, d) = nearest(p, &centers);
            assignments[i] = c;
            inertia += d;
        }
        debug_assert!(inertia <= prev_inertia + 1e-9 * prev_inertia.max(1.0));
        prev_inertia = inertia;

        let mut sums = vec![DVector::<f64>::zeros(dim); k];
        let mut counts = vec![0usize; k];
        for (i, p) in points.iter().enumerate() {
            sums[assignments[i]] += p;
            counts[assignments[i]] += 1;
        }
        let mut new_centers = Vec::with_capacity(k);
        for c in 0..k {
            if counts[c] > 0 {
                new_centers.push(&sums[c] / counts[c] as f64);
            } else {
                // reseed an empty cluster at the point farthest from its
                // assigned center (ties to the lowest index)
                let mut far_idx = 0usize;
                let mut far_d = -1.0;
                for (i, p) in points.iter().enumerate() {
                    let d = sq_dist(p, &centers[assignments[i]]);
                    if d > far_d {
                        far_d = d;
                        far_idx = i;
                    }
                }
                new_centers.push(points[far_idx].clone());
            }
        }
        let movement = centers
            .iter()
            .zip(&new_centers)
            .map(|(a, b)| sq_dist(a, b).sqrt())
            .fold(0.0f64, f64::max);
        centers = new_centers;
        if movement < params.tol {
            break;
        }
    }

    // final inertia against the returned centers
    let inertia: f64 = points.iter().map(|p| nearest(p, &centers).1).sum();
    RunResult {
        centers,
        inertia,
        iterations,
    }
}

/// Cluster `points` into k groups, best of `n_init` seeded restarts.
/// Deterministic given `seed`.
pub fn kmeans(
    points: &[DVector<f64>],
    k: usize,
    seed_value: u64,
    params: &KmeansParams,
) -> Result<Clustering> {
    if k == 0 {
        return Err(Error::InvalidInput("k must be >= 1".into()));
    }
    if points.len() < k {
        return Err(Error::InvalidInput(format!(
            "need at least {} points for k={}, got {}",
            k,
            k,
            points.len()
        )));
    }
    if params.n_init == 0 {
        return Err(Error::InvalidInput("n_init must be >= 1".into()));
    }

    let mut distinct: Vec<&DVector<f64>> = Vec::new();
    for p in points {
        if !distinct.iter().any(|q| q.as_slice() == p.as_slice()) {
            distinct.push(p);
        }
        if distinct.len() >= k {
            break;
        }
    }
    let degenerate = distinct.len() < k;

    let mut best: Option<RunResult> = None;
    for restart in 0..params.n_init {
        let mut rng = seed::rng(seed_value, &[seed::tag::KMEANS, restart as u64]);
        let run = lloyd(points, k, params, &mut rng);
        let better = match &best {
            None => true,
            Some(b) => run.inertia < b.inertia,
        };
        if better {
            best = Some(run);
        }
    }
    let best = best.unwrap();

    // nearest-center assignments with ties broken by lowest index
    let assignments: Vec<usize> = points.iter().map(|p| nearest(p, &best.centers).0).collect();
    Ok(Clustering {
        centers: best.centers,
        assignments,
        inertia: best.inertia,
        iterations: best.iterations,
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn pts(rows: &[&[f64]]) -> Vec<DVector<f64>> {
        rows.iter().map(|r| DVector::from_row_slice(r)).collect()
    }

    #[test]
    fn k1_center_is_mean() {
        let points = pts(&[&[1.0, 0.0], &[3.0, 2.0], &[5.0, 4.0]]);
        let c = kmeans(&points, 1, 0, &KmeansParams::default()).unwrap();
        assert_abs_diff_eq!(c.centers[0][0], 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.centers[0][1], 2.0, epsilon = 1e-12);
        assert!(!c.degenerate);
    }

    #[test]
    fn separated_blobs() {
        let mut rng = crate::seed::rng(13, &[0]);
        use rand::Rng;
        let mut points = Vec::new();
        for _ in 0..30 {
            points.push(DVector::from_vec(vec![
                10.0 + rng.gen_range(-0.5..0.5),
                rng.gen_range(-0.5..0.5),
            ]));
        }
        for _ in 0..30 {
            points.push(DVector::from_vec(vec![
                -10.0 + rng.gen_range(-0.5..0.5),
                rng.gen_range(-0.5..0.5),
            ]));
        }
        let c = kmeans(&points, 2, 1, &KmeansParams::default()).unwrap();
        let mut xs: Vec<f64> = c.centers.iter().map(|v| v[0]).collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((xs[0] + 10.0).abs() < 0.5);
        assert!((xs[1] - 10.0).abs() < 0.5);
    }

    #[test]
    fn antipodal_blobs() {
        // mirrors how EPCA clusters stacked components and reflections
        let u = DVector::from_vec(vec![0.6, 0.8]);
        let mut points = Vec::new();
        for i in 0..20 {
            let wobble = DVector::from_vec(vec![0.001 * i as f64, -0.001 * i as f64]);
            points.push(&u + &wobble);
            points.push(-(&u + &wobble));
        }
        let c = kmeans(&points, 2, 2, &KmeansParams::default()).unwrap();
        let d0 = c.centers[0].dot(&u);
        let d1 = c.centers[1].dot(&u);
        assert!(d0 * d1 < 0.0, "centers should straddle the origin");
        for center in &c.centers {
            assert!((center.norm() - u.norm()).abs() < 0.05);
        }
    }

    #[test]
    fn same_seed_bit_identical() {
        let mut rng = crate::seed::rng(14, &[0]);
        use rand::Rng;
        let points: Vec<DVector<f64>> = (0..50)
            .map(|_| DVector::from_vec(vec![rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()]))
            .collect();
        let a = kmeans(&points, 4, 99, &KmeansParams::default()).unwrap();
        let b = kmeans(&points, 4, 99, &KmeansParams::default()).unwrap();
        assert_eq!(a.assignments, b.assignments);
        assert_eq!(a.inertia.to_bits(), b.inertia.to_bits());
        for (ca, cb) in a.centers.iter().zip(&b.centers) {
            assert_eq!(ca.as_slice(), cb.as_slice());
        }
    }

    #[test]
    fn assignments_are_nearest() {
        let mut rng = crate::seed::rng(15, &[0]);
        use rand::Rng;
        let points: Vec<DVector<f64>> = (0..40)
            .map(|_| DVector::from_vec(vec![rng.gen::<f64>(), rng.gen::<f64>()]))
            .collect();
        let c = kmeans(&points, 3, 5, &KmeansParams::default()).unwrap();
        for (i, p) in points.iter().enumerate() {
            let (nearest_c, _) = nearest(p, &c.centers);
            assert_eq!(c.assignments[i], nearest_c);
        }
        assert!(c.inertia.is_finite() && c.inertia >= 0.0);
    }

    #[test]
    fn clusters_nonempty() {
        let points = pts(&[&[0.0, 0.0], &[0.1, 0.0], &[10.0, 0.0], &[10.1, 0.0], &[20.0, 0.0]]);
        let c = kmeans(&points, 3, 3, &KmeansParams::default()).unwrap();
        let mut counts = vec![0usize; 3];
        for &a in &c.assignments {
            counts[a] += 1;
        }
        assert!(counts.iter().all(|&n| n > 0));
    }

    #[test]
    fn degenerate_flagged() {
        let points = pts(&[&[1.0, 1.0], &[1.0, 1.0], &[1.0, 1.0]]);
        let c = kmeans(&points, 2, 4, &KmeansParams::default()).unwrap();
        assert!(c.degenerate);
        assert_eq!(c.centers.len(), 2);
    }

    #[test]
    fn too_few_points_rejected() {
        let points = pts(&[&[1.0], &[2.0]]);
        assert!(kmeans(&points, 3, 0, &KmeansParams::default()).is_err());
        assert!(kmeans(&points, 0, 0, &KmeansParams::default()).is_err());
    }
}
