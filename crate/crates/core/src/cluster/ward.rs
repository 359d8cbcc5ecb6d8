//! Agglomerative clustering with Ward's minimum-variance criterion.
//!
//! Merge costs follow the Lance–Williams update on the Ward objective
//! (the increase in total within-cluster sum of squares). Clusters are
//! identified by their smallest member index; merge ties go to the
//! lexicographically smallest such pair.

use super::{check_finite, sq_euclidean, Algorithm, AlgorithmParams, ClusterError, ClusteringResult, Labels};

/// (merge cost, ordered cluster reps, active indices) of one candidate.
type MergeCandidate = (f64, (usize, usize), (usize, usize));

struct Active {
    /// Smallest original point index in the cluster; doubles as its identity.
    rep: usize,
    size: usize,
    members: Vec<usize>,
}

/// Cuts the Ward merge tree at `k` clusters.
pub fn agglomerative_ward(points: &[Vec<f64>], k: usize) -> Result<ClusteringResult, ClusterError> {
    let n = points.len();
    if k == 0 || k > n {
        return Err(ClusterError::BadK { k, n });
    }
    check_finite(points)?;

    let mut clusters: Vec<Active> = (0..n)
        .map(|i| Active {
            rep: i,
            size: 1,
            members: vec![i],
        })
        .collect();

    // cost[i][j]: Ward merge cost between active clusters i and j, kept as
    // 2 * delta (the Lance–Williams recurrence is linear, so the constant
    // factor never affects comparisons). Singletons start at the squared
    // euclidean distance.
    let mut cost: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        0.0
                    } else {
                        sq_euclidean(&points[i], &points[j])
                    }
                })
                .collect()
        })
        .collect();

    while clusters.len() > k {
        // Best pair by cost, ties to the smallest (rep_a, rep_b) pair.
        let mut best: Option<MergeCandidate> = None;
        for a in 0..clusters.len() {
            for b in (a + 1)..clusters.len() {
                let c = cost[a][b];
                let reps = ordered_reps(&clusters[a], &clusters[b]);
                let take = match &best {
                    None => true,
                    Some((bc, breps, _)) => {
                        let tol = 1e-12 * bc.abs().max(1.0);
                        c < bc - tol || ((c - bc).abs() <= tol && reps < *breps)
                    }
                };
                if take {
                    best = Some((c, reps, (a, b)));
                }
            }
        }
        let (a, b) = best.expect("more than k >= 1 clusters remain").2;
        let (na, nb) = (clusters[a].size as f64, clusters[b].size as f64);

        // Lance–Williams for Ward: cost(a∪b, c) =
        // ((na+nc) cost(a,c) + (nb+nc) cost(b,c) - nc cost(a,b)) / (na+nb+nc)
        let merged_cost: Vec<f64> = (0..clusters.len())
            .filter(|&c| c != a && c != b)
            .map(|c| {
                let nc = clusters[c].size as f64;
                ((na + nc) * cost[a][c] + (nb + nc) * cost[b][c] - nc * cost[a][b])
                    / (na + nb + nc)
            })
            .collect();

        // Merge b into a, drop b, rewrite the cost matrix rows.
        let removed = clusters.remove(b);
        clusters[a].rep = clusters[a].rep.min(removed.rep);
        clusters[a].size += removed.size;
        clusters[a].members.extend(removed.members);

        let mut next_cost = vec![vec![0.0; clusters.len()]; clusters.len()];
        let surviving: Vec<usize> = (0..=clusters.len())
            .filter(|&c| c != b)
            .collect();
        for (new_i, &old_i) in surviving.iter().enumerate() {
            for (new_j, &old_j) in surviving.iter().enumerate() {
                if new_i == new_j {
                    continue;
                }
                next_cost[new_i][new_j] = cost[old_i][old_j];
            }
        }
        // Row/column of the merged cluster (index a survives unchanged since
        // a < b).
        let mut mc = merged_cost.into_iter();
        for new_j in 0..clusters.len() {
            if new_j == a {
                continue;
            }
            let value = mc.next().expect("one cost per surviving cluster");
            next_cost[a][new_j] = value;
            next_cost[new_j][a] = value;
        }
        cost = next_cost;
    }

    // Cluster ids in order of smallest member index.
    let mut order: Vec<usize> = (0..clusters.len()).collect();
    order.sort_by_key(|&c| clusters[c].rep);
    let mut labels = vec![0i32; n];
    for (id, &c) in order.iter().enumerate() {
        for &p in &clusters[c].members {
            labels[p] = id as i32;
        }
    }

    Ok(ClusteringResult {
        algorithm: Algorithm::AgglomerativeWard,
        params: AlgorithmParams::AgglomerativeWard { k },
        labels: Labels(labels),
        silhouette: None,
        objective: None,
    })
}

fn ordered_reps(a: &Active, b: &Active) -> (usize, usize) {
    if a.rep < b.rep {
        (a.rep, b.rep)
    } else {
        (b.rep, a.rep)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn points_1d(values: &[f64]) -> Vec<Vec<f64>> {
        values.iter().map(|&v| vec![v]).collect()
    }

    #[test]
    fn k_equals_n_gives_singletons() {
        let points = points_1d(&[1.0, 5.0, 9.0]);
        let result = agglomerative_ward(&points, 3).unwrap();
        assert_eq!(result.labels.as_slice(), &[0, 1, 2]);
    }

    #[test]
    fn k_equals_one_is_a_single_cluster() {
        let points = points_1d(&[1.0, 5.0, 9.0]);
        let result = agglomerative_ward(&points, 1).unwrap();
        assert_eq!(result.labels.as_slice(), &[0, 0, 0]);
    }

    #[test]
    fn splits_the_four_point_line() {
        let points = points_1d(&[0.0, 1.0, 10.0, 11.0]);
        let result = agglomerative_ward(&points, 2).unwrap();
        assert_eq!(result.labels.as_slice(), &[0, 0, 1, 1]);
    }

    #[test]
    fn deterministic_on_repeat() {
        let points: Vec<Vec<f64>> = (0..25)
            .map(|i| vec![(i as f64 * 1.7).sin() * 4.0, (i as f64 * 0.3).cos() * 4.0])
            .collect();
        let a = agglomerative_ward(&points, 4).unwrap();
        let b = agglomerative_ward(&points, 4).unwrap();
        assert_eq!(a, b);
        a.labels.validate().unwrap();
    }
}
