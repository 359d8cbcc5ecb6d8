//! Lloyd's algorithm with k-means++ initialization and restarts.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_finite, sq_euclidean, Algorithm, AlgorithmParams, ClusterError, ClusteringResult, Labels};

const MAX_ITERS: usize = 300;

/// Fitted centroids, reusable for assigning new points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansModel {
    pub centroids: Vec<Vec<f64>>,
    pub k: usize,
    pub seed: u64,
    pub n_init: usize,
}

impl KMeansModel {
    /// Nearest-centroid assignment, ties to the lowest centroid index.
    pub fn assign(&self, point: &[f64]) -> usize {
        nearest_centroid(point, &self.centroids).0
    }
}

fn nearest_centroid(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = 0usize;
    let mut best_d = f64::INFINITY;
    for (c, centroid) in centroids.iter().enumerate() {
        let d = sq_euclidean(point, centroid);
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    (best, best_d)
}

/// Greedy k-means++ seeding: first centroid uniform, then each subsequent
/// centroid drawn as the best of several D^2-weighted candidates, judged by
/// the potential it leaves behind.
fn plusplus_init(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let n_candidates = 2 + (k as f64).ln().floor() as usize;
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(k);
    centroids.push(points[rng.random_range(0..n)].clone());
    let mut dist_sq: Vec<f64> = points
        .iter()
        .map(|p| sq_euclidean(p, &centroids[0]))
        .collect();
    while centroids.len() < k {
        let total: f64 = dist_sq.iter().sum();
        let mut best: Option<(f64, usize, Vec<f64>)> = None;
        for _ in 0..n_candidates {
            let candidate = if total > 0.0 {
                let mut target = rng.random::<f64>() * total;
                let mut chosen = n - 1;
                for (i, &d) in dist_sq.iter().enumerate() {
                    target -= d;
                    if target <= 0.0 {
                        chosen = i;
                        break;
                    }
                }
                chosen
            } else {
                // All remaining mass is zero (duplicate points); fall back to
                // a uniform draw so seeding still terminates.
                rng.random_range(0..n)
            };
            let new_dist: Vec<f64> = points
                .iter()
                .zip(&dist_sq)
                .map(|(p, &d)| d.min(sq_euclidean(p, &points[candidate])))
                .collect();
            let potential: f64 = new_dist.iter().sum();
            if best.as_ref().is_none_or(|(bp, _, _)| potential < *bp) {
                best = Some((potential, candidate, new_dist));
            }
        }
        let (_, chosen, new_dist) = best.expect("at least one candidate");
        centroids.push(points[chosen].clone());
        dist_sq = new_dist;
    }
    centroids
}

fn lloyd(points: &[Vec<f64>], mut centroids: Vec<Vec<f64>>) -> (Vec<Vec<f64>>, Vec<i32>, f64) {
    let n = points.len();
    let d = points[0].len();
    let k = centroids.len();
    // Start from an invalid assignment so the first pass always updates.
    let mut labels = vec![-1i32; n];
    let mut previous_inertia = f64::INFINITY;

    for _ in 0..MAX_ITERS {
        // Assignment step.
        let mut changed = false;
        let mut inertia = 0.0;
        for (i, p) in points.iter().enumerate() {
            let (c, dist) = nearest_centroid(p, &centroids);
            inertia += dist;
            if labels[i] != c as i32 {
                labels[i] = c as i32;
                changed = true;
            }
        }
        debug_assert!(inertia <= previous_inertia + 1e-9);
        previous_inertia = inertia;

        // Re-seat empty clusters on the point farthest from its centroid so
        // every cluster id stays populated. Lowest point index wins ties.
        let mut counts = vec![0usize; k];
        for &l in &labels {
            counts[l as usize] += 1;
        }
        for c in 0..k {
            if counts[c] > 0 {
                continue;
            }
            let mut far_i = 0usize;
            let mut far_d = -1.0;
            for (i, p) in points.iter().enumerate() {
                if counts[labels[i] as usize] <= 1 {
                    continue;
                }
                let dist = sq_euclidean(p, &centroids[labels[i] as usize]);
                if dist > far_d {
                    far_d = dist;
                    far_i = i;
                }
            }
            counts[labels[far_i] as usize] -= 1;
            labels[far_i] = c as i32;
            counts[c] = 1;
            centroids[c] = points[far_i].clone();
            changed = true;
        }

        if !changed {
            break;
        }

        // Update step.
        let mut sums = vec![vec![0.0; d]; k];
        let mut sizes = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            sizes[l as usize] += 1;
            for (s, v) in sums[l as usize].iter_mut().zip(p) {
                *s += v;
            }
        }
        for c in 0..k {
            if sizes[c] > 0 {
                for s in sums[c].iter_mut() {
                    *s /= sizes[c] as f64;
                }
                centroids[c] = sums[c].clone();
            }
        }
    }

    let inertia = points
        .iter()
        .zip(&labels)
        .map(|(p, &l)| sq_euclidean(p, &centroids[l as usize]))
        .sum();
    (centroids, labels, inertia)
}

/// Single-point polish after Lloyd converges: move a point to another
/// cluster whenever that strictly lowers inertia, first improvement in
/// (point, cluster) order, until no move helps. The size-weighted move delta
/// means every fixed point still assigns each point to its nearest centroid.
fn polish(points: &[Vec<f64>], centroids: &mut [Vec<f64>], labels: &mut [i32]) {
    let k = centroids.len();
    let d = points[0].len();
    if k < 2 {
        return;
    }
    let mut sizes = vec![0usize; k];
    for &l in labels.iter() {
        sizes[l as usize] += 1;
    }
    loop {
        let mut moved = false;
        for i in 0..points.len() {
            let from = labels[i] as usize;
            if sizes[from] <= 1 {
                continue;
            }
            let d_from = sq_euclidean(&points[i], &centroids[from]);
            let removal_gain = sizes[from] as f64 / (sizes[from] - 1) as f64 * d_from;
            for to in 0..k {
                if to == from {
                    continue;
                }
                let d_to = sq_euclidean(&points[i], &centroids[to]);
                let insertion_cost = sizes[to] as f64 / (sizes[to] + 1) as f64 * d_to;
                if insertion_cost < removal_gain - 1e-12 {
                    // Apply the move and refresh both affected centroids.
                    labels[i] = to as i32;
                    sizes[from] -= 1;
                    sizes[to] += 1;
                    for c in [from, to] {
                        let mut sum = vec![0.0; d];
                        for (p, &l) in points.iter().zip(labels.iter()) {
                            if l as usize == c {
                                for (s, v) in sum.iter_mut().zip(p) {
                                    *s += v;
                                }
                            }
                        }
                        for s in sum.iter_mut() {
                            *s /= sizes[c] as f64;
                        }
                        centroids[c] = sum;
                    }
                    moved = true;
                    break;
                }
            }
        }
        if !moved {
            break;
        }
    }
}

/// K-means: best of `n_init` k-means++ restarts by inertia; the earliest
/// restart wins inertia ties.
pub fn kmeans(
    points: &[Vec<f64>],
    k: usize,
    seed: u64,
    n_init: usize,
) -> Result<(KMeansModel, ClusteringResult), ClusterError> {
    let n = points.len();
    if k == 0 || k > n {
        return Err(ClusterError::BadK { k, n });
    }
    check_finite(points)?;
    let n_init = n_init.max(1);

    let mut best: Option<(Vec<Vec<f64>>, Vec<i32>, f64)> = None;
    for restart in 0..n_init {
        // Mix seed and restart so streams stay unrelated across nearby seeds.
        let stream = crate::rng::keyed_u64(seed, 0x6B6D65616E73, restart as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(stream);
        let init = plusplus_init(points, k, &mut rng);
        let (mut centroids, mut labels, _) = lloyd(points, init);
        polish(points, &mut centroids, &mut labels);
        let inertia: f64 = points
            .iter()
            .zip(&labels)
            .map(|(p, &l)| sq_euclidean(p, &centroids[l as usize]))
            .sum();
        if best.as_ref().is_none_or(|(_, _, b)| inertia < *b) {
            best = Some((centroids, labels, inertia));
        }
    }
    let (centroids, labels, inertia) = best.expect("n_init >= 1");

    let model = KMeansModel {
        centroids,
        k,
        seed,
        n_init,
    };
    let result = ClusteringResult {
        algorithm: Algorithm::KMeans,
        params: AlgorithmParams::KMeans { k, seed, n_init },
        labels: Labels(labels),
        silhouette: None,
        objective: Some(inertia),
    };
    Ok((model, result))
}
