//! UMAP dimensionality reduction with a fit/transform split.
//!
//! `fit` follows the reference algorithm: exact k-NN graph, fuzzy simplicial
//! set with smoothed-distance calibration, symmetrization by fuzzy union, and
//! a negative-sampling SGD layout. Randomness comes from a counter-based
//! generator keyed by (seed, edge, epoch), so fits are bit-reproducible.
//! `transform` projects new points into a frozen layout so a fitted model can
//! place tales it never saw.

mod graph;
mod layout;

use serde::{Deserialize, Serialize};

use graph::{fuzzy_union_edges, knn, metric_distance, smooth_knn};
use layout::{fit_curve_params, optimize_layout, random_init, refine_point, LayoutConfig};

/// Input-space metric. On 0/1 rows euclidean ranks pairs exactly like
/// hamming (squared euclidean equals the hamming count), so euclidean is the
/// default everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Euclidean,
    Hamming,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducerParams {
    pub n_neighbors: usize,
    pub min_dist: f64,
    pub target_dim: usize,
    pub n_epochs: usize,
    pub metric: Metric,
    pub seed: u64,
}

impl Default for ReducerParams {
    fn default() -> Self {
        ReducerParams {
            n_neighbors: 15,
            min_dist: 0.1,
            target_dim: 2,
            n_epochs: 500,
            metric: Metric::Euclidean,
            seed: 0,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ReduceError {
    #[error("need more points than n_neighbors: n={n}, n_neighbors={n_neighbors}")]
    TooFewPoints { n: usize, n_neighbors: usize },
    #[error("target_dim {target_dim} must be smaller than the input dimension {input_dim}")]
    BadTargetDim { target_dim: usize, input_dim: usize },
    #[error("input contains NaN or infinite values")]
    NonFinite,
    #[error("column mismatch: reducer was fit on {expected} columns, got {got}")]
    ColumnMismatch { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    BadParam(String),
    #[error("k={k} is invalid for n={n}")]
    BadNeighborCount { k: usize, n: usize },
    #[error("serialization error: {0}")]
    Serde(String),
    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

/// A fitted reduction: the training data, the fuzzy graph it induced, and the
/// optimized layout. Re-fitting with the same data and params reproduces it
/// bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedReducer {
    pub version: u32,
    pub params: ReducerParams,
    pub train_data: Vec<Vec<f64>>,
    pub embedding: Vec<Vec<f64>>,
    /// Symmetrized fuzzy graph over distinct training rows, as
    /// (unique index a, unique index b, weight).
    pub graph: Vec<(usize, usize, f64)>,
    /// Low-dimensional similarity curve parameters.
    pub curve_a: f64,
    pub curve_b: f64,
}

const FORMAT_VERSION: u32 = 1;
const NEGATIVE_SAMPLE_RATE: usize = 5;
const FIT_ALPHA: f64 = 1.0;
const TRANSFORM_ALPHA: f64 = 0.25;
const TRANSFORM_EPOCHS: usize = 50;

fn check_matrix(data: &[Vec<f64>]) -> Result<usize, ReduceError> {
    let width = data.first().map_or(0, Vec::len);
    for row in data {
        if row.len() != width {
            return Err(ReduceError::BadParam("ragged input matrix".into()));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(ReduceError::NonFinite);
        }
    }
    Ok(width)
}

/// Groups exact-duplicate rows: returns (unique rows, row -> unique index).
/// Collapsing before graph construction keeps the smoothed-distance
/// calibration away from zero-distance neighbors; duplicates are re-expanded
/// onto their group's coordinate after layout.
fn collapse_duplicates(data: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<usize>) {
    use std::collections::HashMap;
    let mut seen: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut unique: Vec<Vec<f64>> = Vec::new();
    let mut map = Vec::with_capacity(data.len());
    for row in data {
        let key: Vec<u64> = row.iter().map(|v| v.to_bits()).collect();
        let idx = *seen.entry(key).or_insert_with(|| {
            unique.push(row.clone());
            unique.len() - 1
        });
        map.push(idx);
    }
    (unique, map)
}

/// Fits a UMAP layout. Deterministic given `(data, params)` including the
/// seed; the output contains no NaN or infinity.
pub fn fit(data: &[Vec<f64>], params: &ReducerParams) -> Result<FittedReducer, ReduceError> {
    let n = data.len();
    if params.n_neighbors == 0 {
        return Err(ReduceError::BadParam("n_neighbors must be positive".into()));
    }
    if n <= params.n_neighbors {
        return Err(ReduceError::TooFewPoints {
            n,
            n_neighbors: params.n_neighbors,
        });
    }
    let input_dim = check_matrix(data)?;
    if params.target_dim == 0 || params.target_dim >= input_dim {
        return Err(ReduceError::BadTargetDim {
            target_dim: params.target_dim,
            input_dim,
        });
    }
    if params.n_epochs == 0 {
        return Err(ReduceError::BadParam("n_epochs must be positive".into()));
    }

    let (unique, row_map) = collapse_duplicates(data);
    let n_unique = unique.len();
    let (curve_a, curve_b) = fit_curve_params(params.min_dist, 1.0);

    let (graph_edges, unique_embedding) = if n_unique == 1 {
        // Every row identical: a single coordinate at the origin.
        (Vec::new(), vec![vec![0.0; params.target_dim]])
    } else {
        let k = params.n_neighbors.min(n_unique - 1);
        let (indices, distances) = knn(&unique, params.metric, k);
        let (rho, sigma) = smooth_knn(&distances);
        let edges = fuzzy_union_edges(&indices, &distances, &rho, &sigma);
        // The optimizer wants directed edges: each endpoint is sampled as a
        // head, so both receive negative-sample repulsion.
        let directed: Vec<(usize, usize, f64)> = edges
            .iter()
            .flat_map(|&(i, j, w)| [(i, j, w), (j, i, w)])
            .collect();
        let mut embedding = random_init(n_unique, params.target_dim, params.seed);
        optimize_layout(
            &mut embedding,
            &directed,
            &LayoutConfig {
                n_epochs: params.n_epochs,
                a: curve_a,
                b: curve_b,
                gamma: 1.0,
                initial_alpha: FIT_ALPHA,
                negative_sample_rate: NEGATIVE_SAMPLE_RATE,
                seed: params.seed,
                move_other: true,
            },
        );
        (edges, embedding)
    };

    let embedding: Vec<Vec<f64>> = row_map
        .iter()
        .map(|&u| unique_embedding[u].clone())
        .collect();
    debug_assert!(embedding.iter().flatten().all(|v| v.is_finite()));

    Ok(FittedReducer {
        version: FORMAT_VERSION,
        params: params.clone(),
        train_data: data.to_vec(),
        embedding,
        graph: graph_edges,
        curve_a,
        curve_b,
    })
}

impl FittedReducer {
    /// Largest pairwise distance in the fitted layout.
    pub fn embedding_diameter(&self) -> f64 {
        let mut diameter = 0.0f64;
        for i in 0..self.embedding.len() {
            for j in (i + 1)..self.embedding.len() {
                let d: f64 = self.embedding[i]
                    .iter()
                    .zip(&self.embedding[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                diameter = diameter.max(d);
            }
        }
        diameter
    }

    /// k nearest training rows for a query: (row index, input distance),
    /// ties resolved toward lower indices.
    fn training_neighbors(&self, query: &[f64]) -> Vec<(usize, f64)> {
        let k = self.params.n_neighbors.min(self.train_data.len());
        let mut candidates: Vec<(f64, usize)> = self
            .train_data
            .iter()
            .enumerate()
            .map(|(j, row)| (metric_distance(self.params.metric, query, row), j))
            .collect();
        candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        candidates.truncate(k);
        candidates.into_iter().map(|(d, j)| (j, d)).collect()
    }

    /// The initialization stage of `transform`: exact matches land on the
    /// mean of their coincident training coordinates, everything else at the
    /// inverse-distance weighted mean of its k nearest training embeddings.
    pub fn transform_init(&self, query: &[f64]) -> Result<Vec<f64>, ReduceError> {
        if query.len() != self.train_data[0].len() {
            return Err(ReduceError::ColumnMismatch {
                expected: self.train_data[0].len(),
                got: query.len(),
            });
        }
        let neighbors = self.training_neighbors(query);
        let dim = self.params.target_dim;
        let exact: Vec<usize> = neighbors
            .iter()
            .filter(|&&(_, d)| d == 0.0)
            .map(|&(j, _)| j)
            .collect();
        let mut init = vec![0.0; dim];
        if !exact.is_empty() {
            for &j in &exact {
                for d in 0..dim {
                    init[d] += self.embedding[j][d];
                }
            }
            for v in init.iter_mut() {
                *v /= exact.len() as f64;
            }
        } else {
            let mut total = 0.0;
            for &(j, dist) in &neighbors {
                let w = 1.0 / dist;
                total += w;
                for d in 0..dim {
                    init[d] += w * self.embedding[j][d];
                }
            }
            for v in init.iter_mut() {
                *v /= total;
            }
        }
        Ok(init)
    }

    /// Projects query rows into the fitted space. Each point is initialized
    /// by `transform_init` and refined with a short SGD against the frozen
    /// training layout; queries are independent, so mapping one at a time
    /// equals mapping a batch.
    pub fn transform(&self, queries: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, ReduceError> {
        check_matrix(queries)?;
        let mut out = Vec::with_capacity(queries.len());
        for query in queries {
            let mut point = self.transform_init(query)?;
            let neighbors = self.training_neighbors(query);
            let dists: Vec<Vec<f64>> = vec![neighbors.iter().map(|&(_, d)| d).collect()];
            let (rho, sigma) = smooth_knn(&dists);
            let weighted: Vec<(usize, f64)> = neighbors
                .iter()
                .zip(&dists[0])
                .map(|(&(j, _), &d)| {
                    let w = (-((d - rho[0]).max(0.0)) / sigma[0]).exp();
                    (j, w)
                })
                .collect();
            refine_point(
                &mut point,
                &self.embedding,
                &weighted,
                &LayoutConfig {
                    n_epochs: TRANSFORM_EPOCHS,
                    a: self.curve_a,
                    b: self.curve_b,
                    gamma: 1.0,
                    initial_alpha: TRANSFORM_ALPHA,
                    negative_sample_rate: NEGATIVE_SAMPLE_RATE,
                    seed: self.params.seed,
                    move_other: false,
                },
            );
            out.push(point);
        }
        Ok(out)
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<(), ReduceError> {
        let path = path.as_ref();
        let bytes = serde_json::to_vec_pretty(self).map_err(|e| ReduceError::Serde(e.to_string()))?;
        std::fs::write(path, bytes).map_err(|e| ReduceError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self, ReduceError> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| ReduceError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let reducer: FittedReducer =
            serde_json::from_slice(&bytes).map_err(|e| ReduceError::Serde(e.to_string()))?;
        if reducer.version != FORMAT_VERSION {
            return Err(ReduceError::Serde(format!(
                "unsupported reducer format version {}",
                reducer.version
            )));
        }
        Ok(reducer)
    }
}

/// Trustworthiness of an embedding: 1 minus the normalized rank penalty of
/// embedding-space neighbors that are not input-space neighbors. 1.0 means
/// every k-neighborhood is preserved.
pub fn trustworthiness(
    data: &[Vec<f64>],
    embedding: &[Vec<f64>],
    k: usize,
) -> Result<f64, ReduceError> {
    let n = data.len();
    if embedding.len() != n {
        return Err(ReduceError::BadParam(
            "data and embedding row counts differ".into(),
        ));
    }
    if k == 0 || k >= n {
        return Err(ReduceError::BadNeighborCount { k, n });
    }
    let normalizer = n as f64 * k as f64 * (2.0 * n as f64 - 3.0 * k as f64 - 1.0);
    if normalizer <= 0.0 {
        return Err(ReduceError::BadNeighborCount { k, n });
    }
    check_matrix(data)?;
    check_matrix(embedding)?;

    let neighbors_of = |points: &[Vec<f64>], i: usize| -> Vec<usize> {
        let mut order: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| (metric_distance(Metric::Euclidean, &points[i], &points[j]), j))
            .collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        order.into_iter().map(|(_, j)| j).collect()
    };

    let mut penalty = 0.0;
    for i in 0..n {
        let input_order = neighbors_of(data, i);
        let embed_order = neighbors_of(embedding, i);
        // rank[j] = 1-based position of j among i's input-space neighbors.
        let mut rank = vec![0usize; n];
        for (r, &j) in input_order.iter().enumerate() {
            rank[j] = r + 1;
        }
        let input_top: std::collections::BTreeSet<usize> =
            input_order.iter().take(k).copied().collect();
        for &j in embed_order.iter().take(k) {
            if !input_top.contains(&j) {
                penalty += (rank[j] - k) as f64;
            }
        }
    }
    Ok(1.0 - 2.0 * penalty / normalizer)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::keyed_unit_f64;

    /// Two gaussian-ish blobs far apart, deterministic.
    pub(crate) fn two_blobs(n_per: usize, dim: usize, separation: f64, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut data = Vec::with_capacity(2 * n_per);
        let mut truth = Vec::with_capacity(2 * n_per);
        for i in 0..(2 * n_per) {
            let blob = i / n_per;
            let center = if blob == 0 { 0.0 } else { separation };
            let row: Vec<f64> = (0..dim)
                .map(|d| center + keyed_unit_f64(seed, i as u64, d as u64) - 0.5)
                .collect();
            data.push(row);
            truth.push(blob);
        }
        (data, truth)
    }

    #[test]
    fn fit_is_bit_deterministic() {
        let (data, _) = two_blobs(15, 4, 50.0, 3);
        let params = ReducerParams {
            n_neighbors: 5,
            n_epochs: 80,
            ..Default::default()
        };
        let a = fit(&data, &params).unwrap();
        let b = fit(&data, &params).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn fit_separates_distant_blobs() {
        let (data, truth) = two_blobs(30, 4, 100.0, 11);
        let params = ReducerParams {
            n_neighbors: 10,
            n_epochs: 200,
            ..Default::default()
        };
        let reducer = fit(&data, &params).unwrap();
        let dist = |a: &[f64], b: &[f64]| -> f64 {
            a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
        };
        let mut max_intra = 0.0f64;
        let mut min_inter = f64::INFINITY;
        for i in 0..data.len() {
            for j in (i + 1)..data.len() {
                let d = dist(&reducer.embedding[i], &reducer.embedding[j]);
                if truth[i] == truth[j] {
                    max_intra = max_intra.max(d);
                } else {
                    min_inter = min_inter.min(d);
                }
            }
        }
        assert!(
            min_inter > max_intra,
            "blobs overlap in embedding: min_inter={min_inter}, max_intra={max_intra}"
        );
    }

    #[test]
    fn n_equal_to_neighbors_is_rejected() {
        let data: Vec<Vec<f64>> = (0..15).map(|i| vec![i as f64, 0.0, 1.0]).collect();
        let params = ReducerParams::default(); // n_neighbors = 15
        assert!(matches!(
            fit(&data, &params),
            Err(ReduceError::TooFewPoints { .. })
        ));
    }

    #[test]
    fn all_identical_rows_collapse_to_one_coordinate() {
        let data: Vec<Vec<f64>> = vec![vec![1.0, 0.0, 1.0]; 20];
        let params = ReducerParams {
            n_neighbors: 5,
            n_epochs: 20,
            ..Default::default()
        };
        let reducer = fit(&data, &params).unwrap();
        assert!(reducer.embedding.iter().all(|r| r == &reducer.embedding[0]));
    }

    #[test]
    fn transform_of_training_row_stays_close() {
        let (data, _) = two_blobs(25, 4, 80.0, 5);
        let params = ReducerParams {
            n_neighbors: 8,
            n_epochs: 150,
            ..Default::default()
        };
        let reducer = fit(&data, &params).unwrap();
        let diameter = reducer.embedding_diameter();
        for &i in &[0usize, 10, 30, 49] {
            let projected = reducer.transform(&[data[i].clone()]).unwrap();
            let drift: f64 = projected[0]
                .iter()
                .zip(&reducer.embedding[i])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            assert!(
                drift <= 0.10 * diameter,
                "row {i} drifted {drift} of diameter {diameter}"
            );
        }
    }

    #[test]
    fn transform_init_of_duplicate_lands_on_training_coordinate() {
        let (data, _) = two_blobs(20, 4, 60.0, 9);
        let params = ReducerParams {
            n_neighbors: 6,
            n_epochs: 100,
            ..Default::default()
        };
        let reducer = fit(&data, &params).unwrap();
        let init = reducer.transform_init(&data[7]).unwrap();
        assert_eq!(init, reducer.embedding[7]);
    }

    #[test]
    fn transform_rejects_wrong_width() {
        let (data, _) = two_blobs(10, 4, 60.0, 2);
        let params = ReducerParams {
            n_neighbors: 4,
            n_epochs: 30,
            ..Default::default()
        };
        let reducer = fit(&data, &params).unwrap();
        assert!(matches!(
            reducer.transform(&[vec![0.0, 0.0]]),
            Err(ReduceError::ColumnMismatch { .. })
        ));
    }

    #[test]
    fn identity_embedding_is_fully_trustworthy() {
        let (data, _) = two_blobs(10, 3, 10.0, 4);
        let score = trustworthiness(&data, &data, 5).unwrap();
        assert_eq!(score, 1.0);
    }

    #[test]
    fn shuffled_embedding_scores_poorly() {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let (data, _) = two_blobs(25, 3, 10.0, 6);
        let mut shuffled = data.clone();
        shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(123));
        let score = trustworthiness(&data, &shuffled, 5).unwrap();
        assert!(score < 0.9, "score = {score}");
    }

    #[test]
    fn random_binary_matrices_embed_without_nan() {
        use crate::rng::keyed_unit_f64;
        for (case, &n) in [20usize, 77, 200].iter().enumerate() {
            let data: Vec<Vec<f64>> = (0..n)
                .map(|i| {
                    (0..15)
                        .map(|j| f64::from(keyed_unit_f64(case as u64, i as u64, j) < 0.5))
                        .collect()
                })
                .collect();
            let params = ReducerParams {
                n_neighbors: 10,
                n_epochs: 50,
                seed: case as u64,
                ..Default::default()
            };
            let reducer = fit(&data, &params).unwrap();
            assert!(
                reducer.embedding.iter().flatten().all(|v| v.is_finite()),
                "n={n}: embedding contains NaN/Inf"
            );
        }
    }

    #[test]
    fn row_permutation_preserves_cluster_structure() {
        use crate::cluster::kmeans;
        let (data, _) = two_blobs(25, 4, 80.0, 21);
        let n = data.len();
        // Fixed permutation: multiplicative shuffle coprime to n.
        let perm: Vec<usize> = (0..n).map(|i| (i * 17 + 3) % n).collect();
        let permuted: Vec<Vec<f64>> = perm.iter().map(|&p| data[p].clone()).collect();

        let params = ReducerParams {
            n_neighbors: 10,
            n_epochs: 150,
            seed: 21,
            ..Default::default()
        };
        let base = fit(&data, &params).unwrap();
        let shuffled = fit(&permuted, &params).unwrap();
        let (_, base_result) = kmeans(&base.embedding, 2, 21, 10).unwrap();
        let (_, perm_result) = kmeans(&shuffled.embedding, 2, 21, 10).unwrap();

        // Labels agree up to renaming after undoing the permutation.
        let base_labels = base_result.labels.as_slice();
        let perm_labels = perm_result.labels.as_slice();
        let mut mapping: std::collections::BTreeMap<i32, i32> = Default::default();
        for (new_i, &orig_i) in perm.iter().enumerate() {
            let expected = mapping.entry(perm_labels[new_i]).or_insert(base_labels[orig_i]);
            assert_eq!(
                *expected, base_labels[orig_i],
                "cluster structure changed under row permutation"
            );
        }
    }

    #[test]
    fn trustworthiness_k_bounds() {
        let (data, _) = two_blobs(5, 3, 10.0, 4);
        assert!(trustworthiness(&data, &data, 10).is_err());
        assert!(trustworthiness(&data, &data, 0).is_err());
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let (data, _) = two_blobs(10, 3, 40.0, 8);
        let params = ReducerParams {
            n_neighbors: 4,
            n_epochs: 30,
            ..Default::default()
        };
        let reducer = fit(&data, &params).unwrap();
        let path = dir.path().join("reducer.json");
        reducer.save(&path).unwrap();
        let loaded = FittedReducer::load(&path).unwrap();
        assert_eq!(reducer, loaded);
    }
}
