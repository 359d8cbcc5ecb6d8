//! End-to-end CLI tests: the whole pipeline driven through the binary with
//! mock providers, no network.

use std::path::Path;
use std::process::{Command, Output};

fn motif_typer(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_motif-typer"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn assert_ok(output: &Output, what: &str) {
    assert!(
        output.status.success(),
        "{what} failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

/// Generates the fixture, then walks detect -> matrix -> cluster -> map ->
/// report -> evaluate, asserting every artifact lands on disk.
#[test]
fn full_offline_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();

    let out = motif_typer(&["synth", "--out-dir", "fixture", "--seed", "42"], root);
    assert_ok(&out, "synth");
    assert!(root.join("fixture/train.jsonl").exists());
    assert!(root.join("fixture/train-gold.csv").exists());

    let out = motif_typer(
        &[
            "detect",
            "--corpus",
            "fixture/train.jsonl",
            "--set",
            "atu15",
            "--mock-gold",
            "fixture/train-gold.csv",
            "--out",
            "run.json",
        ],
        root,
    );
    assert_ok(&out, "detect");

    let out = motif_typer(&["matrix", "--run", "run.json", "--out", "m.csv"], root);
    assert_ok(&out, "matrix");

    let out = motif_typer(
        &[
            "evaluate",
            "--run",
            "run.json",
            "--gold",
            "fixture/train-gold.csv",
        ],
        root,
    );
    assert_ok(&out, "evaluate");
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("accuracy: 1.0000"), "stdout: {stdout}");

    let out = motif_typer(
        &[
            "cluster",
            "--matrix",
            "m.csv",
            "--corpus",
            "fixture/train.jsonl",
            "--out",
            "model",
            "--seed",
            "42",
            "--epochs",
            "300",
        ],
        root,
    );
    assert_ok(&out, "cluster");
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("2 clusters"), "stdout: {stdout}");
    for artifact in ["model.json", "reducer.json", "clustering.json", "profiles.csv", "selection.json"] {
        assert!(root.join("model").join(artifact).exists(), "missing {artifact}");
    }

    // Held-out tales: detect + matrix + map.
    let out = motif_typer(
        &[
            "detect",
            "--corpus",
            "fixture/new.jsonl",
            "--set",
            "atu15",
            "--mock-gold",
            "fixture/new-gold.csv",
            "--out",
            "new-run.json",
        ],
        root,
    );
    assert_ok(&out, "detect new");
    let out = motif_typer(&["matrix", "--run", "new-run.json", "--out", "new.csv"], root);
    assert_ok(&out, "matrix new");
    let out = motif_typer(
        &[
            "map",
            "--model",
            "model",
            "--matrix",
            "new.csv",
            "--out",
            "mapping.json",
            "--refit-joint",
        ],
        root,
    );
    assert_ok(&out, "map");
    assert!(root.join("mapping-joint.json").exists());
    let mapping: serde_json::Value =
        serde_json::from_slice(&std::fs::read(root.join("mapping.json")).unwrap()).unwrap();
    let per_cluster: Vec<u64> = mapping["per_cluster"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_u64().unwrap())
        .collect();
    assert_eq!(per_cluster.iter().sum::<u64>(), 33);

    let out = motif_typer(
        &[
            "report",
            "--model",
            "model",
            "--corpus",
            "fixture/train.jsonl",
            "--mapping",
            "mapping.json",
            "--out-dir",
            "reports",
            "--format",
            "json,csv,svg",
        ],
        root,
    );
    assert_ok(&out, "report");
    for artifact in [
        "report.json",
        "frequencies.csv",
        "profiles.csv",
        "geography.csv",
        "mapping.csv",
        "frequencies.svg",
    ] {
        assert!(root.join("reports").join(artifact).exists(), "missing {artifact}");
    }
    let svg = std::fs::read_to_string(root.join("reports/frequencies.svg")).unwrap();
    assert!(svg.contains("data-frequency="));
}

#[test]
fn cluster_artifacts_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    assert_ok(&motif_typer(&["synth", "--out-dir", "fixture", "--seed", "7"], root), "synth");
    assert_ok(
        &motif_typer(
            &[
                "detect",
                "--corpus",
                "fixture/train.jsonl",
                "--set",
                "atu15",
                "--mock-gold",
                "fixture/train-gold.csv",
                "--out",
                "run.json",
            ],
            root,
        ),
        "detect",
    );
    assert_ok(&motif_typer(&["matrix", "--run", "run.json", "--out", "m.csv"], root), "matrix");
    for model_dir in ["model-a", "model-b"] {
        assert_ok(
            &motif_typer(
                &[
                    "cluster", "--matrix", "m.csv", "--out", model_dir, "--seed", "7",
                    "--epochs", "200",
                ],
                root,
            ),
            "cluster",
        );
    }
    for artifact in ["model.json", "reducer.json", "clustering.json", "profiles.csv"] {
        let a = std::fs::read(root.join("model-a").join(artifact)).unwrap();
        let b = std::fs::read(root.join("model-b").join(artifact)).unwrap();
        assert_eq!(a, b, "{artifact} differs between identical runs");
    }
}

#[test]
fn embed_cluster_runs_offline_with_hash_embeddings() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    assert_ok(&motif_typer(&["synth", "--out-dir", "fixture", "--seed", "3"], root), "synth");
    let out = motif_typer(
        &[
            "embed-cluster",
            "--corpus",
            "fixture/train.jsonl",
            "--out",
            "embed.json",
            "--mock-hash-embed",
            "32",
            "--seed",
            "3",
            "--epochs",
            "150",
        ],
        root,
    );
    assert_ok(&out, "embed-cluster");
    let result: serde_json::Value =
        serde_json::from_slice(&std::fs::read(root.join("embed.json")).unwrap()).unwrap();
    assert_eq!(result["algorithm"], "Hdbscan");
    assert_eq!(result["labels"].as_array().unwrap().len(), 77);
}

#[test]
fn replicate_scoreboard_on_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    assert_ok(&motif_typer(&["synth", "--out-dir", "fixture", "--seed", "42"], root), "synth");

    // Fixture expectations: the generator plants sizes {58,19} and the
    // held-out split {29,4}; the oracle mock makes accuracy exactly 1.0.
    std::fs::write(
        root.join("replicate.toml"),
        r#"
[inputs]
corpus = "fixture/train.jsonl"
corpus_new = "fixture/new.jsonl"
gold = "fixture/train-gold.csv"

[provider]
mock_gold = true
mock_hash_embed = 32

[expectations]
defaults = "none"
accuracy = 1.0
clusters_atu15 = 2
sizes_atu15 = [58, 19]
mapping_atu15 = [29, 4]
"#,
    )
    .unwrap();

    let out = motif_typer(
        &[
            "replicate",
            "--config",
            "replicate.toml",
            "--seed",
            "42",
            "--epochs",
            "300",
        ],
        root,
    );
    assert_ok(&out, "replicate");
    let stdout = String::from_utf8_lossy(&out.stdout);
    for line in [
        "accuracy_vs_gold",
        "clusters_atu15",
        "size_atu15[0]",
        "mapping_atu15[0]",
        "embedding_clusters",
        "summary:",
    ] {
        assert!(stdout.contains(line), "scoreboard missing {line}:\n{stdout}");
    }
    // The planted items must pass outright; un-targeted items report N/A.
    for must_pass in ["accuracy_vs_gold", "clusters_atu15", "size_atu15[0]", "size_atu15[1]"] {
        let row = stdout
            .lines()
            .find(|l| l.starts_with(must_pass))
            .unwrap_or_else(|| panic!("no row for {must_pass}:\n{stdout}"));
        assert!(row.trim_end().ends_with("PASS"), "{must_pass} not PASS: {row}");
    }
    for not_targeted in ["freq_S31", "silhouette_atu15"] {
        let row = stdout
            .lines()
            .find(|l| l.starts_with(not_targeted))
            .unwrap_or_else(|| panic!("no row for {not_targeted}:\n{stdout}"));
        assert!(row.trim_end().ends_with("N/A"), "{not_targeted} not N/A: {row}");
    }
}

#[test]
fn missing_provider_errors_actionably() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    assert_ok(&motif_typer(&["synth", "--out-dir", "fixture", "--seed", "1"], root), "synth");
    // No credential, no cache, no mock: detect must fail with the env var
    // named in the message.
    let out = Command::new(env!("CARGO_BIN_EXE_motif-typer"))
        .args([
            "detect",
            "--corpus",
            "fixture/train.jsonl",
            "--set",
            "atu15",
            "--out",
            "run.json",
        ])
        .current_dir(root)
        .env_remove("MOTIF_TYPER_API_KEY")
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("MOTIF_TYPER_API_KEY"), "stderr: {stderr}");
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    assert_ok(&motif_typer(&["synth", "--out-dir", "fx1", "--seed", "5"], root), "synth");
    // Config sets seed 5; the flag overrides to 6; outputs must differ from
    // a pure seed-5 run only via the seed path (sanity: both run fine).
    std::fs::write(root.join("cfg.toml"), "seed = 5\nepochs = 150\n").unwrap();
    let out = motif_typer(
        &["synth", "--out-dir", "fx2", "--config", "cfg.toml"],
        root,
    );
    assert_ok(&out, "synth with config");
    let a = std::fs::read(root.join("fx1/train.jsonl")).unwrap();
    let b = std::fs::read(root.join("fx2/train.jsonl")).unwrap();
    assert_eq!(a, b, "config seed 5 should match flag seed 5");

    let out = motif_typer(
        &["synth", "--out-dir", "fx3", "--config", "cfg.toml", "--seed", "6"],
        root,
    );
    assert_ok(&out, "synth with override");
    let c = std::fs::read(root.join("fx3/train.jsonl")).unwrap();
    assert_ne!(a, c, "flag seed 6 must override config seed 5");
}
