//! Workflow orchestration: silhouette-driven model selection over the
//! clustering grid, type-model fitting, mapping new tales onto a fitted
//! model, and the embedding-based alternative route.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cluster::{
    agglomerative_ward, dbscan, hdbscan, kmeans, kmedoids, silhouette, Algorithm, AlgorithmParams,
    ClusterError, ClusteringResult, Labels, NOISE,
};
use crate::corpus::{Corpus, Region};
use crate::matrix::{hamming_rows, MotifMatrix};
use crate::providers::{EmbeddingProvider, ProviderError};
use crate::reduce::{fit, FittedReducer, ReduceError, ReducerParams};

/// One evaluated configuration in a selection grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridEntry {
    pub algorithm: Algorithm,
    pub params: AlgorithmParams,
    pub n_clusters: usize,
    pub n_noise: usize,
    /// None when the silhouette is undefined for this configuration.
    pub silhouette: Option<f64>,
}

/// Model-selection outcome: the grid on the reduced space, the same grid on
/// the raw matrix, and the reduced-space winner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub reduced_grid: Vec<GridEntry>,
    pub raw_grid: Vec<GridEntry>,
    pub winner: ClusteringResult,
    pub reducer: FittedReducer,
}

impl SelectionReport {
    pub fn best_reduced_silhouette(&self) -> Option<f64> {
        self.reduced_grid.iter().filter_map(|e| e.silhouette).fold(None, |acc, s| {
            Some(acc.map_or(s, |a: f64| a.max(s)))
        })
    }

    pub fn best_raw_silhouette(&self) -> Option<f64> {
        self.raw_grid.iter().filter_map(|e| e.silhouette).fold(None, |acc, s| {
            Some(acc.map_or(s, |a: f64| a.max(s)))
        })
    }
}

/// A fitted tale-type model, reusable for classifying new tales.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeModel {
    pub motif_set: String,
    pub motif_codes: Vec<String>,
    pub reducer: FittedReducer,
    pub clustering: ClusteringResult,
    /// Mean reduced coordinates per cluster id.
    pub centroids: Vec<Vec<f64>>,
    /// Per-cluster motif presence fractions, cluster id -> column order.
    pub profiles: Vec<Vec<f64>>,
    /// Per-cluster region counts joined from the training corpus.
    pub region_counts: Vec<BTreeMap<Region, usize>>,
    /// Training rows (tale ids) per cluster id; noise under id -1 is dropped.
    pub train_labels: Labels,
    pub train_ids: Vec<String>,
}

/// The classification of new tales against a fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappingReport {
    pub assignments: Vec<TaleAssignment>,
    /// New-tale counts per cluster id.
    pub per_cluster: Vec<usize>,
    /// Fraction of tales whose raw-space Hamming vote disagrees with the
    /// projected assignment.
    pub disagreement_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaleAssignment {
    pub tale_id: String,
    pub cluster: usize,
    pub distance: f64,
    /// Cluster of the Hamming-nearest training row, as a cross-check.
    pub hamming_vote: Option<usize>,
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("k range {lo}..={hi} is invalid for n={n}")]
    BadKRange { lo: usize, hi: usize, n: usize },
    #[error("no clustering configuration produced a defined silhouette")]
    NothingSelectable,
    #[error("matrix columns {got:?} do not match model columns {expected:?}")]
    ColumnMismatch {
        expected: Vec<String>,
        got: Vec<String>,
    },
    #[error("corpus rows do not match matrix rows: {0}")]
    RowMismatch(String),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Reduce(#[from] ReduceError),
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("serialization error: {0}")]
    Serde(String),
    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

/// Percentile of the positive pairwise distances, nearest-rank on the sorted
/// list. Used to build the DBSCAN eps grid.
fn distance_percentiles(points: &[Vec<f64>], quantiles: &[f64]) -> Vec<f64> {
    let mut dists = Vec::new();
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let d: f64 = points[i]
                .iter()
                .zip(&points[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            if d > 0.0 {
                dists.push(d);
            }
        }
    }
    if dists.is_empty() {
        return Vec::new();
    }
    dists.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = quantiles
        .iter()
        .map(|&q| {
            let idx = ((q * (dists.len() - 1) as f64).round() as usize).min(dists.len() - 1);
            dists[idx]
        })
        .collect();
    out.dedup();
    out
}

type ScoredEntry = (GridEntry, ClusteringResult);

/// Runs KMeans/KMedoids/Ward over `k_range` plus DBSCAN over an eps grid on
/// `points`, scoring each configuration by silhouette.
fn evaluate_grid(
    points: &[Vec<f64>],
    k_range: (usize, usize),
    seed: u64,
) -> Result<(Vec<GridEntry>, Vec<ScoredEntry>), PipelineError> {
    let mut entries = Vec::new();
    let mut scored = Vec::new();
    let (k_lo, k_hi) = k_range;

    let mut push = |result: ClusteringResult| {
        let score = silhouette(points, &result.labels).ok();
        let entry = GridEntry {
            algorithm: result.algorithm,
            params: result.params.clone(),
            n_clusters: result.labels.n_clusters(),
            n_noise: result.labels.n_noise(),
            silhouette: score,
        };
        entries.push(entry.clone());
        if score.is_some() {
            let mut result = result;
            result.silhouette = score;
            scored.push((entry, result));
        }
    };

    for k in k_lo..=k_hi {
        let (_, result) = kmeans(points, k, seed, 20)?;
        push(result);
    }
    for k in k_lo..=k_hi {
        push(kmedoids(points, k, seed)?);
    }
    for k in k_lo..=k_hi {
        push(agglomerative_ward(points, k)?);
    }
    for eps in distance_percentiles(points, &[0.10, 0.25, 0.50]) {
        for min_pts in [3usize, 5] {
            push(dbscan(points, eps, min_pts)?);
        }
    }
    Ok((entries, scored))
}

/// Picks the scored entry with the highest silhouette; ties go to fewer
/// clusters, then to algorithm order.
fn pick_winner(scored: Vec<ScoredEntry>) -> Option<ClusteringResult> {
    scored
        .into_iter()
        .max_by(|(ea, ra), (eb, rb)| {
            ra.silhouette
                .unwrap_or(f64::NEG_INFINITY)
                .total_cmp(&rb.silhouette.unwrap_or(f64::NEG_INFINITY))
                // Reversed: fewer clusters and earlier algorithms win ties.
                .then(eb.n_clusters.cmp(&ea.n_clusters))
                .then(eb.algorithm.cmp(&ea.algorithm))
        })
        .map(|(_, r)| r)
}

/// Model selection over the motif matrix: every algorithm/parameter cell is
/// evaluated both directly on the binary rows (raw pass) and on the UMAP
/// embedding (reduced pass); the winner is the reduced-pass maximum.
pub fn select_clustering(
    matrix: &MotifMatrix,
    reducer_params: &ReducerParams,
    k_range: (usize, usize),
    seed: u64,
) -> Result<SelectionReport, PipelineError> {
    let n = matrix.n_rows();
    let (k_lo, k_hi) = k_range;
    if k_lo < 2 || k_hi < k_lo || k_hi >= n {
        return Err(PipelineError::BadKRange {
            lo: k_lo,
            hi: k_hi,
            n,
        });
    }
    let raw = matrix.to_f64();
    let (raw_grid, _) = evaluate_grid(&raw, k_range, seed)?;

    let reducer = fit(&raw, reducer_params)?;
    let (reduced_grid, scored) = evaluate_grid(&reducer.embedding, k_range, seed)?;
    let winner = pick_winner(scored).ok_or(PipelineError::NothingSelectable)?;

    Ok(SelectionReport {
        reduced_grid,
        raw_grid,
        winner,
        reducer,
    })
}

/// Builds the reusable type model from a selection: per-cluster centroids in
/// the reduced space, motif frequency profiles, and region counts.
pub fn fit_type_model(
    matrix: &MotifMatrix,
    corpus: Option<&Corpus>,
    selection: &SelectionReport,
) -> Result<TypeModel, PipelineError> {
    let labels = &selection.winner.labels;
    if labels.len() != matrix.n_rows() {
        return Err(PipelineError::RowMismatch(format!(
            "{} labels for {} rows",
            labels.len(),
            matrix.n_rows()
        )));
    }
    if let Some(corpus) = corpus {
        if corpus.len() != matrix.n_rows() {
            return Err(PipelineError::RowMismatch(format!(
                "corpus has {} tales, matrix has {} rows",
                corpus.len(),
                matrix.n_rows()
            )));
        }
        for (tale, row_id) in corpus.tales.iter().zip(&matrix.row_ids) {
            if &tale.id != row_id {
                return Err(PipelineError::RowMismatch(format!(
                    "corpus tale {:?} does not match matrix row {:?}",
                    tale.id, row_id
                )));
            }
        }
    }

    let k = labels.n_clusters();
    let dim = selection.reducer.params.target_dim;
    let m = matrix.n_cols();
    let mut centroids = vec![vec![0.0; dim]; k];
    let mut profiles = vec![vec![0.0; m]; k];
    let mut region_counts: Vec<BTreeMap<Region, usize>> = vec![BTreeMap::new(); k];
    let mut sizes = vec![0usize; k];

    for (i, &label) in labels.as_slice().iter().enumerate() {
        if label == NOISE {
            continue;
        }
        let c = label as usize;
        sizes[c] += 1;
        for d in 0..dim {
            centroids[c][d] += selection.reducer.embedding[i][d];
        }
        for j in 0..m {
            profiles[c][j] += matrix.values[i][j] as f64;
        }
        if let Some(corpus) = corpus {
            *region_counts[c].entry(corpus.tales[i].region).or_insert(0) += 1;
        }
    }
    for c in 0..k {
        if sizes[c] == 0 {
            continue;
        }
        for v in centroids[c].iter_mut() {
            *v /= sizes[c] as f64;
        }
        for v in profiles[c].iter_mut() {
            *v /= sizes[c] as f64;
        }
    }

    let motif_set = crate::catalog::identify_set(&matrix.col_codes)
        .map(|name| name.as_str().to_string())
        .unwrap_or_else(|| "custom".to_string());
    Ok(TypeModel {
        motif_set,
        motif_codes: matrix.col_codes.clone(),
        reducer: selection.reducer.clone(),
        clustering: selection.winner.clone(),
        centroids,
        profiles,
        region_counts,
        train_labels: labels.clone(),
        train_ids: matrix.row_ids.clone(),
    })
}

/// Nearest training row by Hamming distance, ties to the lower row index;
/// returns its cluster when that row is not noise.
fn hamming_vote(model: &TypeModel, row: &[u8], new_matrix_width: usize) -> Option<usize> {
    debug_assert_eq!(row.len(), new_matrix_width);
    let mut best: Option<(u32, usize)> = None;
    for (i, train_row) in model.reducer.train_data.iter().enumerate() {
        let train_bits: Vec<u8> = train_row.iter().map(|&v| if v >= 0.5 { 1 } else { 0 }).collect();
        let d = hamming_rows(row, &train_bits);
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, i));
        }
    }
    let (_, idx) = best?;
    let label = model.train_labels.as_slice()[idx];
    (label != NOISE).then_some(label as usize)
}

/// Projects new tales through the fitted reducer and assigns each to the
/// nearest centroid (euclidean, ties to the lowest cluster id).
pub fn map_new_tales(
    model: &TypeModel,
    new_matrix: &MotifMatrix,
) -> Result<MappingReport, PipelineError> {
    if new_matrix.col_codes != model.motif_codes {
        return Err(PipelineError::ColumnMismatch {
            expected: model.motif_codes.clone(),
            got: new_matrix.col_codes.clone(),
        });
    }
    let projected = model.reducer.transform(&new_matrix.to_f64())?;
    let k = model.centroids.len();
    let mut per_cluster = vec![0usize; k];
    let mut assignments = Vec::with_capacity(new_matrix.n_rows());
    let mut disagreements = 0usize;

    for (i, point) in projected.iter().enumerate() {
        let mut cluster = 0usize;
        let mut best = f64::INFINITY;
        for (c, centroid) in model.centroids.iter().enumerate() {
            let d: f64 = point
                .iter()
                .zip(centroid)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            if d < best {
                best = d;
                cluster = c;
            }
        }
        per_cluster[cluster] += 1;
        let vote = hamming_vote(model, &new_matrix.values[i], new_matrix.n_cols());
        if vote.is_some_and(|v| v != cluster) {
            disagreements += 1;
        }
        assignments.push(TaleAssignment {
            tale_id: new_matrix.row_ids[i].clone(),
            cluster,
            distance: best,
            hamming_vote: vote,
        });
    }
    let disagreement_rate = if assignments.is_empty() {
        0.0
    } else {
        disagreements as f64 / assignments.len() as f64
    };
    Ok(MappingReport {
        assignments,
        per_cluster,
        disagreement_rate,
    })
}

const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct VersionedModel {
    version: u32,
    model: TypeModel,
}

impl TypeModel {
    /// Writes the model as a versioned artifact directory: the complete
    /// model, the reducer on its own for reuse, the winning clustering, and
    /// a human-readable profiles CSV.
    pub fn save_dir(&self, dir: impl AsRef<std::path::Path>) -> Result<(), PipelineError> {
        let dir = dir.as_ref();
        let io_err = |path: &std::path::Path, e: std::io::Error| PipelineError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        };
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;

        let versioned = VersionedModel {
            version: MODEL_FORMAT_VERSION,
            model: self.clone(),
        };
        let model_path = dir.join("model.json");
        let bytes =
            serde_json::to_vec_pretty(&versioned).map_err(|e| PipelineError::Serde(e.to_string()))?;
        std::fs::write(&model_path, bytes).map_err(|e| io_err(&model_path, e))?;

        self.reducer.save(dir.join("reducer.json"))?;

        let clustering_path = dir.join("clustering.json");
        let bytes = serde_json::to_vec_pretty(&self.clustering)
            .map_err(|e| PipelineError::Serde(e.to_string()))?;
        std::fs::write(&clustering_path, bytes).map_err(|e| io_err(&clustering_path, e))?;

        let mut csv = String::from("cluster,code,frequency\n");
        for (cluster, profile) in self.profiles.iter().enumerate() {
            for (code, freq) in self.motif_codes.iter().zip(profile) {
                csv.push_str(&format!("{cluster},{code},{freq:.6}\n"));
            }
        }
        let profiles_path = dir.join("profiles.csv");
        std::fs::write(&profiles_path, csv).map_err(|e| io_err(&profiles_path, e))?;
        Ok(())
    }

    pub fn load_dir(dir: impl AsRef<std::path::Path>) -> Result<TypeModel, PipelineError> {
        let path = dir.as_ref().join("model.json");
        let bytes = std::fs::read(&path).map_err(|e| PipelineError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let versioned: VersionedModel =
            serde_json::from_slice(&bytes).map_err(|e| PipelineError::Serde(e.to_string()))?;
        if versioned.version != MODEL_FORMAT_VERSION {
            return Err(PipelineError::Serde(format!(
                "unsupported model format version {}",
                versioned.version
            )));
        }
        Ok(versioned.model)
    }
}

/// Re-runs the winning algorithm with the model's parameters on new points.
fn rerun_winner(
    params: &AlgorithmParams,
    points: &[Vec<f64>],
) -> Result<ClusteringResult, PipelineError> {
    let result = match params {
        AlgorithmParams::KMeans { k, seed, n_init } => kmeans(points, *k, *seed, *n_init)?.1,
        AlgorithmParams::KMedoids { k, seed } => kmedoids(points, *k, *seed)?,
        AlgorithmParams::AgglomerativeWard { k } => agglomerative_ward(points, *k)?,
        AlgorithmParams::Dbscan { eps, min_pts } => dbscan(points, *eps, *min_pts)?,
        AlgorithmParams::Hdbscan {
            min_cluster_size,
            min_samples,
        } => crate::cluster::hdbscan_with(points, *min_cluster_size, *min_samples)?,
    };
    Ok(result)
}

/// The joint-refit alternative to [`map_new_tales`]: pool training and new
/// rows, refit the reducer on the pool, re-run the winning configuration,
/// and carry each new tale to the model cluster its pooled cluster's
/// training members vote for. Tales in pure-new or noise pooled clusters
/// fall back to the projection assignment.
pub fn map_new_tales_joint(
    model: &TypeModel,
    new_matrix: &MotifMatrix,
) -> Result<MappingReport, PipelineError> {
    if new_matrix.col_codes != model.motif_codes {
        return Err(PipelineError::ColumnMismatch {
            expected: model.motif_codes.clone(),
            got: new_matrix.col_codes.clone(),
        });
    }
    let projection = map_new_tales(model, new_matrix)?;

    let n_train = model.reducer.train_data.len();
    let mut pooled = model.reducer.train_data.clone();
    pooled.extend(new_matrix.to_f64());
    let mut params = model.reducer.params.clone();
    params.n_neighbors = params.n_neighbors.min(pooled.len().saturating_sub(1));
    let joint = fit(&pooled, &params)?;
    let clustering = rerun_winner(&model.clustering.params, &joint.embedding)?;
    let labels = clustering.labels.as_slice();

    // Majority vote of training members per pooled cluster, ties to the
    // lower model cluster id.
    let k_model = model.centroids.len();
    let k_pool = clustering.labels.n_clusters();
    let mut votes = vec![vec![0usize; k_model]; k_pool];
    for (i, &pool_label) in labels.iter().take(n_train).enumerate() {
        if pool_label == NOISE {
            continue;
        }
        let model_label = model.train_labels.as_slice()[i];
        if model_label != NOISE {
            votes[pool_label as usize][model_label as usize] += 1;
        }
    }
    let matched: Vec<Option<usize>> = votes
        .iter()
        .map(|counts| {
            let best = counts.iter().max().copied().unwrap_or(0);
            if best == 0 {
                None
            } else {
                counts.iter().position(|&c| c == best)
            }
        })
        .collect();

    // Mean pooled coordinate per pooled cluster, for the distance column.
    let dim = params.target_dim;
    let mut centers = vec![vec![0.0; dim]; k_pool];
    let mut sizes = vec![0usize; k_pool];
    for (i, &l) in labels.iter().enumerate() {
        if l == NOISE {
            continue;
        }
        sizes[l as usize] += 1;
        for d in 0..dim {
            centers[l as usize][d] += joint.embedding[i][d];
        }
    }
    for (center, &size) in centers.iter_mut().zip(&sizes) {
        if size > 0 {
            for v in center.iter_mut() {
                *v /= size as f64;
            }
        }
    }

    let mut per_cluster = vec![0usize; k_model];
    let mut assignments = Vec::with_capacity(new_matrix.n_rows());
    let mut disagreements = 0usize;
    for (i, fallback) in projection.assignments.iter().enumerate() {
        let pool_label = labels[n_train + i];
        let (cluster, distance) = match (pool_label != NOISE)
            .then(|| matched[pool_label as usize])
            .flatten()
        {
            Some(model_cluster) => {
                let center = &centers[pool_label as usize];
                let dist: f64 = joint.embedding[n_train + i]
                    .iter()
                    .zip(center)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                (model_cluster, dist)
            }
            None => (fallback.cluster, fallback.distance),
        };
        per_cluster[cluster] += 1;
        let vote = fallback.hamming_vote;
        if vote.is_some_and(|v| v != cluster) {
            disagreements += 1;
        }
        assignments.push(TaleAssignment {
            tale_id: new_matrix.row_ids[i].clone(),
            cluster,
            distance,
            hamming_vote: vote,
        });
    }
    let disagreement_rate = if assignments.is_empty() {
        0.0
    } else {
        disagreements as f64 / assignments.len() as f64
    };
    Ok(MappingReport {
        assignments,
        per_cluster,
        disagreement_rate,
    })
}

/// The embedding route: embed all tale texts, reduce with UMAP, cluster with
/// HDBSCAN over a `min_cluster_size` grid, keep the best silhouette.
pub fn embedding_clusters(
    corpus: &Corpus,
    provider: &dyn EmbeddingProvider,
    reducer_params: &ReducerParams,
    min_cluster_sizes: &[usize],
) -> Result<(ClusteringResult, FittedReducer), PipelineError> {
    let texts: Vec<String> = corpus.tales.iter().map(|t| t.text.clone()).collect();
    let response = provider.embed(&texts)?;
    if response.vectors.len() != corpus.len() {
        return Err(PipelineError::Provider(ProviderError::Protocol(format!(
            "provider returned {} vectors for {} tales",
            response.vectors.len(),
            corpus.len()
        ))));
    }
    let reducer = fit(&response.vectors, reducer_params)?;

    let mut best: Option<ClusteringResult> = None;
    for &mcs in min_cluster_sizes {
        let mut result = match hdbscan(&reducer.embedding, mcs) {
            Ok(r) => r,
            Err(ClusterError::TooFewPoints { .. }) => continue,
            Err(e) => return Err(e.into()),
        };
        result.silhouette = silhouette(&reducer.embedding, &result.labels).ok();
        if result.silhouette.is_none() {
            continue;
        }
        let better = match &best {
            None => true,
            Some(b) => {
                let (sa, sb) = (result.silhouette.unwrap(), b.silhouette.unwrap());
                sa > sb
                    || (sa == sb
                        && result.labels.n_clusters() < b.labels.n_clusters())
            }
        };
        if better {
            best = Some(result);
        }
    }
    let best = best.ok_or(PipelineError::NothingSelectable)?;
    Ok((best, reducer))
}
