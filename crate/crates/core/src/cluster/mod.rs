//! Clustering algorithms and the silhouette coefficient.
//!
//! Every algorithm is implemented from its standard definition with explicit,
//! documented tie-breaks so runs are reproducible across platforms. Density
//! methods mark unassigned points with the noise label `-1`; partitional
//! methods always label every point.

mod dbscan;
mod hdbscan;
mod kmeans;
mod kmedoids;
mod silhouette;
mod ward;

pub use dbscan::dbscan;
pub use hdbscan::{hdbscan, hdbscan_with};
pub use kmeans::{kmeans, KMeansModel};
pub use kmedoids::kmedoids;
pub use silhouette::{silhouette, silhouette_from_distances};
pub use ward::agglomerative_ward;

use serde::{Deserialize, Serialize};

/// Sentinel label for points density methods leave unassigned.
pub const NOISE: i32 = -1;

/// Per-point cluster assignments. Non-noise ids are dense `0..k`, each with
/// at least one member.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Labels(pub Vec<i32>);

impl Labels {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[i32] {
        &self.0
    }

    /// Number of non-noise clusters.
    pub fn n_clusters(&self) -> usize {
        self.0.iter().filter(|&&l| l != NOISE).max().map_or(0, |&m| m as usize + 1)
    }

    /// Number of noise points.
    pub fn n_noise(&self) -> usize {
        self.0.iter().filter(|&&l| l == NOISE).count()
    }

    /// Member counts per cluster id, ignoring noise.
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let k = self.n_clusters();
        let mut sizes = vec![0usize; k];
        for &l in &self.0 {
            if l != NOISE {
                sizes[l as usize] += 1;
            }
        }
        sizes
    }

    /// Checks density: ids 0..k all non-empty, nothing below -1.
    pub fn validate(&self) -> Result<(), ClusterError> {
        if self.0.iter().any(|&l| l < NOISE) {
            return Err(ClusterError::InvalidLabels("label below -1".into()));
        }
        let sizes = self.cluster_sizes();
        if sizes.contains(&0) {
            return Err(ClusterError::InvalidLabels(
                "cluster ids are not dense".into(),
            ));
        }
        Ok(())
    }
}

/// Which algorithm produced a result. The enum order is also the tie-break
/// order model selection uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Algorithm {
    KMeans,
    KMedoids,
    AgglomerativeWard,
    Dbscan,
    Hdbscan,
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Algorithm::KMeans => "kmeans",
            Algorithm::KMedoids => "kmedoids",
            Algorithm::AgglomerativeWard => "ward",
            Algorithm::Dbscan => "dbscan",
            Algorithm::Hdbscan => "hdbscan",
        };
        f.write_str(name)
    }
}

/// Parameters a result was produced with, for artifacts and reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm")]
pub enum AlgorithmParams {
    KMeans { k: usize, seed: u64, n_init: usize },
    KMedoids { k: usize, seed: u64 },
    AgglomerativeWard { k: usize },
    Dbscan { eps: f64, min_pts: usize },
    Hdbscan { min_cluster_size: usize, min_samples: usize },
}

/// A clustering with its quality metadata.
///
/// `silhouette` is populated by callers that score the result; it stays
/// `None` when undefined (fewer than two clusters or two scored points).
/// `objective` is inertia for K-means and total medoid cost for K-medoids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringResult {
    pub algorithm: Algorithm,
    pub params: AlgorithmParams,
    pub labels: Labels,
    pub silhouette: Option<f64>,
    pub objective: Option<f64>,
}

#[derive(Debug, thiserror::Error)]
pub enum ClusterError {
    #[error("k={k} is out of range for n={n} points")]
    BadK { k: usize, n: usize },
    #[error("need at least {needed} points, got {n}")]
    TooFewPoints { n: usize, needed: usize },
    #[error("invalid parameter: {0}")]
    BadParam(String),
    #[error("silhouette is undefined: {0}")]
    UndefinedSilhouette(String),
    #[error("invalid labels: {0}")]
    InvalidLabels(String),
    #[error("input contains non-finite coordinates")]
    NonFinite,
}

/// Euclidean distance between two points.
pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Squared euclidean distance.
pub(crate) fn sq_euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Full pairwise euclidean distance matrix.
pub(crate) fn distance_matrix(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let dist = euclidean(&points[i], &points[j]);
            d[i][j] = dist;
            d[j][i] = dist;
        }
    }
    d
}

pub(crate) fn check_finite(points: &[Vec<f64>]) -> Result<(), ClusterError> {
    for row in points {
        if row.iter().any(|v| !v.is_finite()) {
            return Err(ClusterError::NonFinite);
        }
    }
    Ok(())
}
