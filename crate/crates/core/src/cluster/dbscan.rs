//! Density-based clustering by core-point expansion.

use std::collections::VecDeque;

use super::{check_finite, distance_matrix, Algorithm, AlgorithmParams, ClusterError, ClusteringResult, Labels, NOISE};

/// Standard DBSCAN. Neighborhoods are closed balls (`d <= eps`) and include
/// the point itself when counted against `min_pts`. Points are scanned in
/// ascending index order, so border points attach to the first discovered
/// core cluster and output is reproducible.
pub fn dbscan(
    points: &[Vec<f64>],
    eps: f64,
    min_pts: usize,
) -> Result<ClusteringResult, ClusterError> {
    if eps.is_nan() || eps <= 0.0 {
        return Err(ClusterError::BadParam(format!("eps must be positive, got {eps}")));
    }
    if min_pts == 0 {
        return Err(ClusterError::BadParam("min_pts must be at least 1".into()));
    }
    check_finite(points)?;
    let n = points.len();
    let distances = distance_matrix(points);

    let neighborhoods: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| distances[i][j] <= eps).collect())
        .collect();
    let core: Vec<bool> = neighborhoods.iter().map(|nb| nb.len() >= min_pts).collect();

    let mut labels = vec![NOISE; n];
    let mut cluster = 0i32;
    for start in 0..n {
        if labels[start] != NOISE || !core[start] {
            continue;
        }
        labels[start] = cluster;
        let mut queue: VecDeque<usize> = VecDeque::from([start]);
        while let Some(p) = queue.pop_front() {
            for &q in &neighborhoods[p] {
                if labels[q] != NOISE {
                    continue;
                }
                labels[q] = cluster;
                if core[q] {
                    queue.push_back(q);
                }
            }
        }
        cluster += 1;
    }

    Ok(ClusteringResult {
        algorithm: Algorithm::Dbscan,
        params: AlgorithmParams::Dbscan { eps, min_pts },
        labels: Labels(labels),
        silhouette: None,
        objective: None,
    })
}
