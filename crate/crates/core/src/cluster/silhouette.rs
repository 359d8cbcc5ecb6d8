//! Silhouette coefficient from Rousseeuw's definition.

use super::{distance_matrix, ClusterError, Labels, NOISE};

/// Mean silhouette over non-noise points, computed on euclidean distances.
pub fn silhouette(points: &[Vec<f64>], labels: &Labels) -> Result<f64, ClusterError> {
    silhouette_from_distances(&distance_matrix(points), labels)
}

/// Mean silhouette over non-noise points, from a precomputed distance matrix.
///
/// For a point in a cluster of size >= 2, s = (b - a) / max(a, b) with `a`
/// its mean intra-cluster distance and `b` the smallest mean distance to any
/// other cluster. Points in singleton clusters score 0. Noise points are
/// excluded entirely: they join no cluster's pool and do not enter the mean.
pub fn silhouette_from_distances(
    distances: &[Vec<f64>],
    labels: &Labels,
) -> Result<f64, ClusterError> {
    let n = labels.len();
    if distances.len() != n {
        return Err(ClusterError::InvalidLabels(format!(
            "distance matrix is {}x{} but there are {} labels",
            distances.len(),
            distances.first().map_or(0, Vec::len),
            n
        )));
    }
    labels.validate()?;
    let k = labels.n_clusters();
    if k < 2 {
        return Err(ClusterError::UndefinedSilhouette(format!(
            "need at least 2 clusters, have {k}"
        )));
    }
    let members: Vec<Vec<usize>> = {
        let mut m = vec![Vec::new(); k];
        for (i, &l) in labels.as_slice().iter().enumerate() {
            if l != NOISE {
                m[l as usize].push(i);
            }
        }
        m
    };
    let scored: usize = members.iter().map(Vec::len).sum();
    if scored < 2 {
        return Err(ClusterError::UndefinedSilhouette(
            "need at least 2 scored points".into(),
        ));
    }

    // Scores accumulate per point and sum in point order, so renaming
    // cluster ids cannot perturb the floating-point result.
    let mut scores = vec![None::<f64>; n];
    for (cluster, own) in members.iter().enumerate() {
        for &i in own {
            if own.len() == 1 {
                // Singleton clusters contribute 0 by convention.
                scores[i] = Some(0.0);
                continue;
            }
            let a = own
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| distances[i][j])
                .sum::<f64>()
                / (own.len() - 1) as f64;
            let b = members
                .iter()
                .enumerate()
                .filter(|(other, m)| *other != cluster && !m.is_empty())
                .map(|(_, m)| m.iter().map(|&j| distances[i][j]).sum::<f64>() / m.len() as f64)
                .fold(f64::INFINITY, f64::min);
            let denom = a.max(b);
            scores[i] = Some(if denom > 0.0 { (b - a) / denom } else { 0.0 });
        }
    }
    let total: f64 = scores.iter().flatten().sum();
    Ok(total / scored as f64)
}
