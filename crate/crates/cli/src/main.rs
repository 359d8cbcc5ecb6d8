//! motif-typer: detect folktale motifs with a chat model, build binary motif
//! matrices, cluster tales into types, and map new tales onto fitted models.

mod config;
mod replicate;

use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use motif_typer_core::catalog::{resolve_set, SetName};
use motif_typer_core::corpus::{load_corpus, load_gold};
use motif_typer_core::detect::{
    evaluate_accuracy, gold_oracle_provider, render_response, run_detection, DetectionRun,
    MotifResponse,
};
use motif_typer_core::matrix::{build_matrix, frequencies, load_matrix, save_matrix, MotifMatrix};
use motif_typer_core::pipeline::{
    embedding_clusters, fit_type_model, map_new_tales, map_new_tales_joint, select_clustering,
    MappingReport, TypeModel,
};
use motif_typer_core::providers::{
    CachedChatProvider, ChatProvider, EmbeddingProvider, HttpChatProvider, HttpEmbeddingProvider,
    MockChatProvider, MockEmbeddingProvider, ResponseCache,
};
use motif_typer_core::report::{cluster_profile, emit, geo_distribution, Report};
use motif_typer_core::synth::{generate_fixture, FixtureSpec};

use config::{FileConfig, Settings};

#[derive(Parser)]
#[command(
    name = "motif-typer",
    about = "Folktale motif detection and tale-type clustering",
    version
)]
struct Cli {
    #[command(flatten)]
    global: GlobalFlags,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
pub struct GlobalFlags {
    /// Chat/embedding endpoint base URL (OpenAI-compatible).
    #[arg(long, global = true)]
    pub api_base: Option<String>,
    /// Chat model name sent with detection requests.
    #[arg(long, global = true)]
    pub model_name: Option<String>,
    /// Embedding model name for embed-cluster.
    #[arg(long, global = true)]
    pub embed_model: Option<String>,
    /// Response cache directory.
    #[arg(long, global = true)]
    pub cache_dir: Option<String>,
    /// Maximum provider requests in flight.
    #[arg(long, global = true)]
    pub concurrency: Option<usize>,
    /// Seed for every stochastic step.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Smallest cluster count in the selection sweep.
    #[arg(long, global = true)]
    pub k_min: Option<usize>,
    /// Largest cluster count in the selection sweep.
    #[arg(long, global = true)]
    pub k_max: Option<usize>,
    /// UMAP neighborhood size.
    #[arg(long, global = true)]
    pub n_neighbors: Option<usize>,
    /// UMAP minimum embedded distance.
    #[arg(long, global = true)]
    pub min_dist: Option<f64>,
    /// UMAP optimization epochs.
    #[arg(long, global = true)]
    pub epochs: Option<usize>,
    /// UMAP output dimensionality.
    #[arg(long, global = true)]
    pub target_dim: Option<usize>,
    /// Input-space metric for UMAP: euclidean or hamming.
    #[arg(long, global = true)]
    pub metric: Option<String>,
    /// Reject chat inputs above this many characters instead of truncating.
    #[arg(long, global = true)]
    pub max_chars: Option<usize>,
    /// Truncate embedding inputs to this many characters.
    #[arg(long, global = true)]
    pub truncate_chars: Option<usize>,
    /// TOML config file mirroring these flags (flags win).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Detect motifs in every tale of a corpus.
    Detect {
        /// Corpus JSONL file.
        #[arg(long)]
        corpus: PathBuf,
        /// Motif set: atu15, ext18, super14, or a JSON file.
        #[arg(long)]
        set: String,
        /// Output run JSON.
        #[arg(long)]
        out: PathBuf,
        /// Answer from gold annotations instead of a live provider.
        #[arg(long)]
        mock_gold: Option<PathBuf>,
        /// Answer "no" for every motif (offline smoke runs).
        #[arg(long, default_value_t = false)]
        mock_all_no: bool,
    },
    /// Convert a detection run into a binary matrix CSV.
    Matrix {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Motif set override for runs over custom sets.
        #[arg(long)]
        set: Option<String>,
    },
    /// Select a clustering over a matrix and fit a type model.
    Cluster {
        #[arg(long)]
        matrix: PathBuf,
        /// Training corpus, for per-cluster region counts.
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Output model directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Map new tales onto a fitted type model.
    Map {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also re-cluster the pooled tales jointly and report that mapping
        /// alongside the projection (written next to --out).
        #[arg(long, default_value_t = false)]
        refit_joint: bool,
    },
    /// Embed tale texts and cluster them with HDBSCAN.
    EmbedCluster {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Use deterministic hash embeddings of this dimension (offline).
        #[arg(long)]
        mock_hash_embed: Option<usize>,
        /// HDBSCAN min_cluster_size grid.
        #[arg(long, value_delimiter = ',', default_value = "2,3,4,5,6,7,8,9,10")]
        min_cluster_sizes: Vec<usize>,
    },
    /// Emit report tables for a fitted model.
    Report {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Include a mapping JSON produced by `map`.
        #[arg(long)]
        mapping: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
        /// Comma-separated formats: json, csv, svg.
        #[arg(long, value_delimiter = ',', default_value = "json,csv")]
        format: Vec<String>,
    },
    /// Score a detection run against gold annotations.
    Evaluate {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        /// Motif set override for runs over custom sets.
        #[arg(long)]
        set: Option<String>,
    },
    /// Run the full replication harness against published values. Reads the
    /// `[inputs]`, `[provider]`, and `[expectations]` sections of --config.
    Replicate,
    /// Generate a synthetic two-profile fixture corpus with gold labels.
    Synth {
        #[arg(long)]
        out_dir: PathBuf,
    },
}

fn resolve_run_set(run: &DetectionRun, set_arg: &Option<String>) -> anyhow::Result<motif_typer_core::catalog::MotifSet> {
    if let Some(arg) = set_arg {
        return Ok(resolve_set(arg)?);
    }
    match SetName::parse(&run.motif_set) {
        Some(name) => Ok(motif_typer_core::catalog::builtin_set(name)),
        None => bail!(
            "run uses custom motif set {:?}; pass --set with its JSON file",
            run.motif_set
        ),
    }
}

fn chat_provider(
    settings: &Settings,
    mock_gold: &Option<PathBuf>,
    mock_all_no: bool,
    corpus: &motif_typer_core::corpus::Corpus,
    set: &motif_typer_core::catalog::MotifSet,
) -> anyhow::Result<(Arc<dyn ChatProvider>, String)> {
    if let Some(gold_path) = mock_gold {
        let gold = load_gold(gold_path, set)?;
        let model = "mock-gold".to_string();
        let provider = gold_oracle_provider(corpus, set, &gold, &model)?;
        return Ok((Arc::new(provider), model));
    }
    if mock_all_no {
        let model = "mock-all-no".to_string();
        let text = render_response(&MotifResponse::all_absent(set.len()));
        return Ok((Arc::new(MockChatProvider::constant(text)), model));
    }
    let http = Arc::new(HttpChatProvider::new(settings.http_config()));
    let cache = ResponseCache::new(&settings.cache_dir)?;
    Ok((
        Arc::new(CachedChatProvider::new(http, cache)),
        settings.model_name.clone(),
    ))
}

fn matrix_from_model(model: &TypeModel) -> MotifMatrix {
    MotifMatrix {
        values: model
            .reducer
            .train_data
            .iter()
            .map(|row| row.iter().map(|&v| u8::from(v >= 0.5)).collect())
            .collect(),
        row_ids: model.train_ids.clone(),
        col_codes: model.motif_codes.clone(),
    }
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    let file = match &cli.global.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let settings = Settings::resolve(&cli.global, &file);

    match cli.command {
        Command::Detect {
            corpus,
            set,
            out,
            mock_gold,
            mock_all_no,
        } => {
            let corpus = load_corpus(&corpus)?;
            let set = resolve_set(&set)?;
            let (provider, model) =
                chat_provider(&settings, &mock_gold, mock_all_no, &corpus, &set)?;
            let run = run_detection(&corpus, &set, provider.as_ref(), &model, settings.concurrency)?;
            run.save(&out)?;
            println!(
                "detected {} motifs across {} tales -> {}",
                set.len(),
                run.results.len(),
                out.display()
            );
        }
        Command::Matrix { run, out, set } => {
            let run = DetectionRun::load(&run)?;
            let set = resolve_run_set(&run, &set)?;
            let matrix = build_matrix(&run, &set)?;
            save_matrix(&matrix, &out)?;
            println!(
                "wrote {}x{} matrix -> {}",
                matrix.n_rows(),
                matrix.n_cols(),
                out.display()
            );
        }
        Command::Cluster { matrix, corpus, out } => {
            let matrix = load_matrix(&matrix)?;
            let corpus = match corpus {
                Some(path) => Some(load_corpus(&path)?),
                None => None,
            };
            let params = settings.reducer_params(matrix.n_rows());
            let k_max = settings.k_max.min(matrix.n_rows().saturating_sub(1));
            let selection =
                select_clustering(&matrix, &params, (settings.k_min, k_max), settings.seed)?;
            let model = fit_type_model(&matrix, corpus.as_ref(), &selection)?;
            model.save_dir(&out)?;
            let selection_path = out.join("selection.json");
            std::fs::write(
                &selection_path,
                serde_json::to_vec_pretty(&serde_json::json!({
                    "reduced_grid": selection.reduced_grid,
                    "raw_grid": selection.raw_grid,
                }))?,
            )
            .with_context(|| format!("cannot write {}", selection_path.display()))?;
            let winner = &selection.winner;
            println!(
                "winner: {} with {} clusters, silhouette {:.4} -> {}",
                winner.algorithm,
                winner.labels.n_clusters(),
                winner.silhouette.unwrap_or(f64::NAN),
                out.display()
            );
        }
        Command::Map {
            model,
            matrix,
            out,
            refit_joint,
        } => {
            let model = TypeModel::load_dir(&model)?;
            let matrix = load_matrix(&matrix)?;
            let mapping = map_new_tales(&model, &matrix)?;
            std::fs::write(&out, serde_json::to_vec_pretty(&mapping)?)
                .with_context(|| format!("cannot write {}", out.display()))?;
            for (cluster, count) in mapping.per_cluster.iter().enumerate() {
                println!("cluster {cluster}: {count} tale(s)");
            }
            println!(
                "hamming cross-check disagreement rate: {:.3}",
                mapping.disagreement_rate
            );
            if refit_joint {
                let joint = map_new_tales_joint(&model, &matrix)?;
                let joint_out = out.with_file_name(format!(
                    "{}-joint.json",
                    out.file_stem().and_then(|s| s.to_str()).unwrap_or("mapping")
                ));
                std::fs::write(&joint_out, serde_json::to_vec_pretty(&joint)?)
                    .with_context(|| format!("cannot write {}", joint_out.display()))?;
                let agree = mapping
                    .assignments
                    .iter()
                    .zip(&joint.assignments)
                    .filter(|(a, b)| a.cluster == b.cluster)
                    .count();
                println!(
                    "joint refit: per-cluster {:?}; agrees with projection on {agree}/{} tales -> {}",
                    joint.per_cluster,
                    mapping.assignments.len(),
                    joint_out.display()
                );
            }
        }
        Command::EmbedCluster {
            corpus,
            out,
            mock_hash_embed,
            min_cluster_sizes,
        } => {
            let corpus = load_corpus(&corpus)?;
            let provider: Box<dyn EmbeddingProvider> = match mock_hash_embed {
                Some(dim) => Box::new(MockEmbeddingProvider::hash(dim)),
                None => Box::new(HttpEmbeddingProvider::new(
                    settings.http_config(),
                    settings.embed_model.clone(),
                )),
            };
            let params = settings.reducer_params(corpus.len());
            let (result, _) =
                embedding_clusters(&corpus, provider.as_ref(), &params, &min_cluster_sizes)?;
            std::fs::write(&out, serde_json::to_vec_pretty(&result)?)
                .with_context(|| format!("cannot write {}", out.display()))?;
            println!(
                "embedding clusters: {} (noise {}), silhouette {:.4} -> {}",
                result.labels.n_clusters(),
                result.labels.n_noise(),
                result.silhouette.unwrap_or(f64::NAN),
                out.display()
            );
        }
        Command::Report {
            model,
            corpus,
            mapping,
            out_dir,
            format,
        } => {
            let model = TypeModel::load_dir(&model)?;
            let matrix = matrix_from_model(&model);
            let mut report = Report {
                frequencies: Some(frequencies(&matrix)?),
                profiles: Some(cluster_profile(&matrix, &model.train_labels)?),
                geography: None,
                mapping: None,
            };
            if let Some(path) = corpus {
                let corpus = load_corpus(&path)?;
                report.geography = Some(geo_distribution(&corpus, &model.train_labels)?);
            }
            if let Some(path) = mapping {
                let bytes = std::fs::read(&path)
                    .with_context(|| format!("cannot read {}", path.display()))?;
                let mapping: MappingReport = serde_json::from_slice(&bytes)?;
                report.mapping = Some(mapping);
            }
            let written = emit(&report, &out_dir, &format)?;
            for path in written {
                println!("wrote {}", path.display());
            }
        }
        Command::Evaluate { run, gold, set } => {
            let run = DetectionRun::load(&run)?;
            let set = resolve_run_set(&run, &set)?;
            let gold = load_gold(&gold, &set)?;
            let accuracy = evaluate_accuracy(&run, &gold)?;
            println!("accuracy: {accuracy:.4} over {} tales", run.results.len());
        }
        Command::Replicate => {
            let path = cli.global.config.as_ref().ok_or_else(|| {
                anyhow::anyhow!("replicate needs --config pointing at a replication TOML")
            })?;
            replicate::run(path, &settings)?;
        }
        Command::Synth { out_dir } => {
            std::fs::create_dir_all(&out_dir)
                .with_context(|| format!("cannot create {}", out_dir.display()))?;
            let fixture = generate_fixture(&FixtureSpec::default_two_profile(), settings.seed);
            motif_typer_core::corpus::save_corpus(
                &fixture.train_corpus,
                out_dir.join("train.jsonl"),
            )?;
            motif_typer_core::corpus::save_corpus(&fixture.new_corpus, out_dir.join("new.jsonl"))?;
            write_gold_csv(&fixture.train_gold, &out_dir.join("train-gold.csv"))?;
            write_gold_csv(&fixture.new_gold, &out_dir.join("new-gold.csv"))?;
            println!(
                "wrote fixture ({} train, {} held-out tales) -> {}",
                fixture.train_corpus.len(),
                fixture.new_corpus.len(),
                out_dir.display()
            );
        }
    }
    Ok(())
}

fn write_gold_csv(
    gold: &motif_typer_core::corpus::GoldAnnotations,
    path: &PathBuf,
) -> anyhow::Result<()> {
    let mut out = String::from("tale_id");
    for code in &gold.codes {
        out.push(',');
        out.push_str(code);
    }
    out.push('\n');
    for id in &gold.tale_ids {
        out.push_str(id);
        let row = gold.row(id).expect("gold row exists");
        for &cell in row {
            out.push(',');
            out.push(if cell { '1' } else { '0' });
        }
        out.push('\n');
    }
    std::fs::write(path, out).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}
