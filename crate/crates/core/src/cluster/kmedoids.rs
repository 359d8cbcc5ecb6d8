//! PAM (partitioning around medoids): greedy BUILD, then steepest-descent
//! SWAP, plus seeded random restarts since the single-swap neighborhood has
//! local minima even on tiny inputs. A final canonicalization pass walks
//! cost-neutral swaps toward the lowest medoid indices.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{check_finite, distance_matrix, Algorithm, AlgorithmParams, ClusterError, ClusteringResult, Labels};

const RESTARTS: usize = 20;

fn total_cost(distances: &[Vec<f64>], medoids: &[usize]) -> f64 {
    let mut cost = 0.0;
    for row in distances {
        cost += medoids
            .iter()
            .map(|&m| row[m])
            .fold(f64::INFINITY, f64::min);
    }
    cost
}

fn build(distances: &[Vec<f64>], k: usize) -> Vec<usize> {
    let n = distances.len();
    let mut medoids: Vec<usize> = Vec::with_capacity(k);

    // First medoid: the point with the smallest total distance to everyone;
    // lowest index wins ties.
    let mut best = 0usize;
    let mut best_sum = f64::INFINITY;
    for (i, row) in distances.iter().enumerate() {
        let sum: f64 = row.iter().sum();
        if sum < best_sum {
            best_sum = sum;
            best = i;
        }
    }
    medoids.push(best);

    // Remaining medoids: greedily add the candidate with the largest cost
    // reduction; lowest index wins ties.
    let mut nearest: Vec<f64> = distances.iter().map(|row| row[medoids[0]]).collect();
    while medoids.len() < k {
        let mut best_gain = -1.0;
        let mut best_h = usize::MAX;
        for h in 0..n {
            if medoids.contains(&h) {
                continue;
            }
            let gain: f64 = (0..n)
                .map(|i| (nearest[i] - distances[i][h]).max(0.0))
                .sum();
            if gain > best_gain {
                best_gain = gain;
                best_h = h;
            }
        }
        medoids.push(best_h);
        for i in 0..n {
            nearest[i] = nearest[i].min(distances[i][best_h]);
        }
    }
    medoids
}

/// One steepest-descent pass: the most cost-reducing (medoid, candidate)
/// swap, ties toward the lexicographically smallest pair.
fn best_swap(distances: &[Vec<f64>], medoids: &[usize]) -> Option<(usize, usize, f64)> {
    let n = distances.len();
    let current = total_cost(distances, medoids);
    let mut best: Option<(usize, usize, f64)> = None;
    for (mi, &m) in medoids.iter().enumerate() {
        for h in 0..n {
            if medoids.contains(&h) {
                continue;
            }
            let mut trial: Vec<usize> = medoids.to_vec();
            trial[mi] = h;
            let delta = total_cost(distances, &trial) - current;
            if delta < -1e-12 {
                let better = match best {
                    None => true,
                    Some((bm, bh, bd)) => {
                        delta < bd - 1e-12
                            || ((delta - bd).abs() <= 1e-12 && (m, h) < (bm, bh))
                    }
                };
                if better {
                    best = Some((m, h, delta));
                }
            }
        }
    }
    best
}

/// After SWAP converges, walk cost-neutral swaps toward the lexicographically
/// smallest sorted medoid set, so equal-cost solutions come out canonical.
fn canonicalize(distances: &[Vec<f64>], medoids: &mut Vec<usize>) {
    let n = distances.len();
    loop {
        let current = total_cost(distances, medoids);
        let mut sorted_now = medoids.clone();
        sorted_now.sort_unstable();
        let mut improved = false;
        let mut best_set: Option<Vec<usize>> = None;
        for mi in 0..medoids.len() {
            for h in 0..n {
                if medoids.contains(&h) {
                    continue;
                }
                let mut trial = medoids.clone();
                trial[mi] = h;
                if (total_cost(distances, &trial) - current).abs() > 1e-12 {
                    continue;
                }
                let mut sorted_trial = trial.clone();
                sorted_trial.sort_unstable();
                let candidate_best = best_set
                    .as_ref()
                    .map(|b| {
                        let mut sb = b.clone();
                        sb.sort_unstable();
                        sorted_trial < sb
                    })
                    .unwrap_or(sorted_trial < sorted_now);
                if candidate_best {
                    best_set = Some(trial);
                }
            }
        }
        if let Some(set) = best_set {
            *medoids = set;
            improved = true;
        }
        if !improved {
            break;
        }
    }
}

fn swap_to_convergence(distances: &[Vec<f64>], medoids: &mut [usize]) {
    while let Some((m, h, _)) = best_swap(distances, medoids) {
        let mi = medoids.iter().position(|&x| x == m).expect("medoid present");
        medoids[mi] = h;
    }
}

/// K-medoids over a precomputed distance matrix. The first start is the
/// greedy BUILD; the rest are seeded random medoid sets. Best final cost
/// wins, with the canonical (lowest-index) set among equal-cost outcomes.
pub fn kmedoids_from_distances(
    distances: &[Vec<f64>],
    k: usize,
    seed: u64,
) -> Result<ClusteringResult, ClusterError> {
    let n = distances.len();
    if k == 0 || k > n {
        return Err(ClusterError::BadK { k, n });
    }

    let mut medoids = build(distances, k);
    swap_to_convergence(distances, &mut medoids);
    let mut best_cost = total_cost(distances, &medoids);

    for restart in 0..RESTARTS {
        let stream = crate::rng::keyed_u64(seed, 0x70616D, restart as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(stream);
        let mut trial: Vec<usize> = sample(&mut rng, n, k).into_vec();
        trial.sort_unstable();
        swap_to_convergence(distances, &mut trial);
        let cost = total_cost(distances, &trial);
        if cost < best_cost - 1e-12 {
            best_cost = cost;
            medoids = trial;
        }
    }

    canonicalize(distances, &mut medoids);
    medoids.sort_unstable();

    // Cluster id = rank of the medoid. A medoid owns itself; other points go
    // to the nearest medoid, ties toward the lower medoid index.
    let labels: Vec<i32> = (0..n)
        .map(|i| {
            if let Some(c) = medoids.iter().position(|&m| m == i) {
                return c as i32;
            }
            let mut best_c = 0usize;
            let mut best_d = f64::INFINITY;
            for (c, &m) in medoids.iter().enumerate() {
                if distances[i][m] < best_d {
                    best_d = distances[i][m];
                    best_c = c;
                }
            }
            best_c as i32
        })
        .collect();
    let cost = total_cost(distances, &medoids);

    Ok(ClusteringResult {
        algorithm: Algorithm::KMedoids,
        params: AlgorithmParams::KMedoids { k, seed },
        labels: Labels(labels),
        silhouette: None,
        objective: Some(cost),
    })
}

/// K-medoids on points under euclidean distance.
pub fn kmedoids(points: &[Vec<f64>], k: usize, seed: u64) -> Result<ClusteringResult, ClusterError> {
    check_finite(points)?;
    kmedoids_from_distances(&distance_matrix(points), k, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn points_1d(values: &[f64]) -> Vec<Vec<f64>> {
        values.iter().map(|&v| vec![v]).collect()
    }

    /// Exhaustive search over medoid subsets; lexicographically smallest
    /// optimal subset wins.
    fn exhaustive(distances: &[Vec<f64>], k: usize) -> (Vec<usize>, f64) {
        let n = distances.len();
        let mut best_set = Vec::new();
        let mut best_cost = f64::INFINITY;
        let mut subset: Vec<usize> = (0..k).collect();
        loop {
            let cost = total_cost(distances, &subset);
            if cost < best_cost - 1e-12 {
                best_cost = cost;
                best_set = subset.clone();
            }
            // Next k-combination in lexicographic order.
            let mut i = k;
            loop {
                if i == 0 {
                    return (best_set, best_cost);
                }
                i -= 1;
                if subset[i] != i + n - k {
                    subset[i] += 1;
                    for j in (i + 1)..k {
                        subset[j] = subset[j - 1] + 1;
                    }
                    break;
                }
            }
        }
    }

    #[test]
    fn four_point_line_matches_exhaustive_tiebreak() {
        let points = points_1d(&[0.0, 1.0, 10.0, 11.0]);
        let distances = distance_matrix(&points);
        let result = kmedoids(&points, 2, 0).unwrap();
        assert!((result.objective.unwrap() - 2.0).abs() < 1e-12);
        let (oracle_set, oracle_cost) = exhaustive(&distances, 2);
        assert!((oracle_cost - 2.0).abs() < 1e-12);
        assert_eq!(oracle_set, vec![0, 2]);
        // Labels reflect the canonical medoids {0, 2}.
        assert_eq!(result.labels.as_slice(), &[0, 0, 1, 1]);
    }

    #[test]
    fn k_equals_n_costs_zero() {
        let points = points_1d(&[0.0, 2.0, 5.0]);
        let result = kmedoids(&points, 3, 0).unwrap();
        assert!(result.objective.unwrap().abs() < 1e-12);
        assert_eq!(result.labels.n_clusters(), 3);
    }

    #[test]
    fn identical_points_pick_lowest_indices() {
        let points = points_1d(&[4.0, 4.0, 4.0, 4.0]);
        let result = kmedoids(&points, 2, 0).unwrap();
        assert!(result.objective.unwrap().abs() < 1e-12);
        result.labels.validate().unwrap();
        assert_eq!(result.labels.n_clusters(), 2);
        // Medoids are the two lowest indices; everything else ties to 0.
        assert_eq!(result.labels.as_slice(), &[0, 1, 0, 0]);
    }

    #[test]
    fn repeat_runs_are_identical() {
        let points: Vec<Vec<f64>> = (0..20)
            .map(|i| vec![(i as f64 * 0.9).sin() * 3.0, (i as f64 * 0.4).cos()])
            .collect();
        let a = kmedoids(&points, 3, 0).unwrap();
        let b = kmedoids(&points, 3, 0).unwrap();
        assert_eq!(a, b);
    }
}
