//! k-NN graph construction and fuzzy simplicial set calibration.

use super::Metric;

const SMOOTH_ITERS: usize = 64;
const MIN_SIGMA: f64 = 1e-12;

pub(crate) fn metric_distance(metric: Metric, a: &[f64], b: &[f64]) -> f64 {
    match metric {
        Metric::Euclidean => a
            .iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt(),
        Metric::Hamming => a.iter().zip(b).filter(|(x, y)| x != y).count() as f64,
    }
}

/// Exact k nearest neighbors per row, self excluded, ties by lower index.
pub(crate) fn knn(
    data: &[Vec<f64>],
    metric: Metric,
    k: usize,
) -> (Vec<Vec<usize>>, Vec<Vec<f64>>) {
    let n = data.len();
    let mut indices = Vec::with_capacity(n);
    let mut distances = Vec::with_capacity(n);
    for i in 0..n {
        let mut candidates: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| (metric_distance(metric, &data[i], &data[j]), j))
            .collect();
        candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        candidates.truncate(k);
        indices.push(candidates.iter().map(|&(_, j)| j).collect());
        distances.push(candidates.iter().map(|&(d, _)| d).collect());
    }
    (indices, distances)
}

/// Smoothed-distance calibration: per point, `rho` is the distance to its
/// nearest neighbor and `sigma` solves
/// `sum_j exp(-(max(0, d_ij - rho_i)) / sigma_i) = log2(k)` by bisection.
pub(crate) fn smooth_knn(distances: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let n = distances.len();
    let mut rho = vec![0.0; n];
    let mut sigma = vec![1.0; n];
    for i in 0..n {
        let dists = &distances[i];
        let k = dists.len();
        if k == 0 {
            continue;
        }
        rho[i] = dists[0];
        let target = (k as f64).log2().max(MIN_SIGMA);
        let mut lo = 0.0f64;
        let mut hi = f64::INFINITY;
        let mut mid = 1.0f64;
        for _ in 0..SMOOTH_ITERS {
            let sum: f64 = dists
                .iter()
                .map(|&d| (-((d - rho[i]).max(0.0)) / mid).exp())
                .sum();
            if (sum - target).abs() < 1e-5 {
                break;
            }
            if sum > target {
                hi = mid;
                mid = (lo + hi) / 2.0;
            } else {
                lo = mid;
                mid = if hi.is_infinite() { mid * 2.0 } else { (lo + hi) / 2.0 };
            }
        }
        sigma[i] = mid.max(MIN_SIGMA);
    }
    (rho, sigma)
}

/// Directed membership strengths turned into a symmetric fuzzy union:
/// `w = w_ij + w_ji - w_ij * w_ji`, one entry per unordered pair.
pub(crate) fn fuzzy_union_edges(
    indices: &[Vec<usize>],
    distances: &[Vec<f64>],
    rho: &[f64],
    sigma: &[f64],
) -> Vec<(usize, usize, f64)> {
    use std::collections::BTreeMap;
    let mut directed: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (i, (nbrs, dists)) in indices.iter().zip(distances).enumerate() {
        for (&j, &d) in nbrs.iter().zip(dists) {
            let w = (-((d - rho[i]).max(0.0)) / sigma[i]).exp();
            directed.insert((i, j), w);
        }
    }
    let mut union: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (&(i, j), &w_ij) in &directed {
        let key = if i < j { (i, j) } else { (j, i) };
        if union.contains_key(&key) {
            continue;
        }
        let w_ji = directed.get(&(j, i)).copied().unwrap_or(0.0);
        union.insert(key, w_ij + w_ji - w_ij * w_ji);
    }
    union
        .into_iter()
        .map(|((i, j), w)| (i, j, w))
        .collect()
}
