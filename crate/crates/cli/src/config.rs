//! TOML configuration shared by every command. Flags override config values;
//! config values override defaults.

use std::path::Path;

use anyhow::Context;
use serde::Deserialize;

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub api_base: Option<String>,
    pub model_name: Option<String>,
    pub embed_model: Option<String>,
    pub cache_dir: Option<String>,
    pub concurrency: Option<usize>,
    pub seed: Option<u64>,
    pub k_min: Option<usize>,
    pub k_max: Option<usize>,
    pub n_neighbors: Option<usize>,
    pub min_dist: Option<f64>,
    pub epochs: Option<usize>,
    pub target_dim: Option<usize>,
    pub metric: Option<String>,
    pub max_chars: Option<usize>,
    pub truncate_chars: Option<usize>,
    // Sections the replicate harness reads from the same file; accepted
    // here so a shared file passes strict parsing.
    #[allow(dead_code)]
    pub inputs: Option<toml::Value>,
    #[allow(dead_code)]
    pub provider: Option<toml::Value>,
    #[allow(dead_code)]
    pub expectations: Option<toml::Value>,
}

impl FileConfig {
    pub fn load(path: impl AsRef<Path>) -> anyhow::Result<FileConfig> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("cannot parse config {}", path.display()))
    }
}

/// Effective settings after merging flag > config > default.
#[derive(Debug, Clone)]
pub struct Settings {
    pub api_base: String,
    pub model_name: String,
    pub embed_model: String,
    pub cache_dir: String,
    pub concurrency: usize,
    pub seed: u64,
    pub k_min: usize,
    pub k_max: usize,
    pub n_neighbors: usize,
    pub min_dist: f64,
    pub epochs: usize,
    pub target_dim: usize,
    pub metric: motif_typer_core::reduce::Metric,
    pub max_chars: Option<usize>,
    pub truncate_chars: Option<usize>,
}

pub fn merge<T: Clone>(flag: Option<T>, config: Option<T>, default: T) -> T {
    flag.or(config).unwrap_or(default)
}

impl Settings {
    pub fn resolve(flags: &crate::GlobalFlags, file: &FileConfig) -> Settings {
        Settings {
            api_base: merge(
                flags.api_base.clone(),
                file.api_base.clone(),
                "https://api.openai.com/v1".to_string(),
            ),
            model_name: merge(
                flags.model_name.clone(),
                file.model_name.clone(),
                "gpt-4.5-preview".to_string(),
            ),
            embed_model: merge(
                flags.embed_model.clone(),
                file.embed_model.clone(),
                "labse".to_string(),
            ),
            cache_dir: merge(
                flags.cache_dir.clone(),
                file.cache_dir.clone(),
                ".motif-cache".to_string(),
            ),
            concurrency: merge(flags.concurrency, file.concurrency, 4),
            seed: merge(flags.seed, file.seed, 0),
            k_min: merge(flags.k_min, file.k_min, 2),
            k_max: merge(flags.k_max, file.k_max, 10),
            n_neighbors: merge(flags.n_neighbors, file.n_neighbors, 15),
            min_dist: merge(flags.min_dist, file.min_dist, 0.1),
            epochs: merge(flags.epochs, file.epochs, 500),
            target_dim: merge(flags.target_dim, file.target_dim, 2),
            metric: match merge(
                flags.metric.clone(),
                file.metric.clone(),
                "euclidean".to_string(),
            )
            .as_str()
            {
                "hamming" => motif_typer_core::reduce::Metric::Hamming,
                _ => motif_typer_core::reduce::Metric::Euclidean,
            },
            max_chars: flags.max_chars.or(file.max_chars),
            truncate_chars: flags.truncate_chars.or(file.truncate_chars),
        }
    }

    pub fn reducer_params(&self, n_rows: usize) -> motif_typer_core::reduce::ReducerParams {
        motif_typer_core::reduce::ReducerParams {
            // UMAP needs n_neighbors < n; shrink quietly for small corpora.
            n_neighbors: self.n_neighbors.min(n_rows.saturating_sub(1)).max(2),
            min_dist: self.min_dist,
            target_dim: self.target_dim,
            n_epochs: self.epochs,
            metric: self.metric,
            seed: self.seed,
        }
    }

    pub fn http_config(&self) -> motif_typer_core::providers::HttpConfig {
        motif_typer_core::providers::HttpConfig {
            base_url: self.api_base.clone(),
            api_key: None,
            max_input_chars: self.max_chars,
            truncate_chars: self.truncate_chars,
            ..Default::default()
        }
    }
}
