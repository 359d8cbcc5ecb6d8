//! Synthetic two-profile fixtures.
//!
//! Generates corpora whose tales carry motifs sampled from planted binary
//! profiles with a small bit-flip rate, together with gold annotations that
//! record exactly what was sampled. Everything is keyed by an explicit seed,
//! so fixtures are reproducible across runs and platforms. These drive the
//! offline end-to-end checks and give users a network-free way to exercise
//! the full pipeline.

use crate::catalog::{builtin_set, MotifSet, SetName};
use crate::corpus::{Corpus, GoldAnnotations, Region, Tale};
use crate::matrix::MotifMatrix;
use crate::rng::keyed_unit_f64;

/// Shape of a planted two-profile fixture.
#[derive(Debug, Clone)]
pub struct FixtureSpec {
    /// Training tales drawn from profile A, then from profile B.
    pub train_a: usize,
    pub train_b: usize,
    /// Held-out tales drawn from profile A, then from profile B.
    pub new_a: usize,
    pub new_b: usize,
    pub profile_a: Vec<u8>,
    pub profile_b: Vec<u8>,
    /// Per-cell probability that a sampled bit is flipped.
    pub flip_probability: f64,
}

impl FixtureSpec {
    /// The default fixture mirrors the published corpus shape: 77 training
    /// tales (58 + 19) over 15 motifs, with 33 held-out tales (29 + 4) and a
    /// 5% flip rate.
    pub fn default_two_profile() -> Self {
        let mut profile_a = vec![0u8; 15];
        let mut profile_b = vec![0u8; 15];
        for bit in profile_a.iter_mut().take(8) {
            *bit = 1;
        }
        for bit in profile_b.iter_mut().skip(8) {
            *bit = 1;
        }
        FixtureSpec {
            train_a: 58,
            train_b: 19,
            new_a: 29,
            new_b: 4,
            profile_a,
            profile_b,
            flip_probability: 0.05,
        }
    }

    pub fn motif_count(&self) -> usize {
        self.profile_a.len()
    }
}

/// A complete offline fixture: corpora, gold annotations matching what was
/// sampled, the matrices, and the planted profile of every tale.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub set: MotifSet,
    pub train_corpus: Corpus,
    pub new_corpus: Corpus,
    pub train_gold: GoldAnnotations,
    pub new_gold: GoldAnnotations,
    pub train_matrix: MotifMatrix,
    pub new_matrix: MotifMatrix,
    /// Planted profile (0 = A, 1 = B) per training tale.
    pub train_truth: Vec<usize>,
    /// Planted profile per held-out tale.
    pub new_truth: Vec<usize>,
}

fn sample_row(spec: &FixtureSpec, profile: &[u8], seed: u64, lane: u64) -> Vec<u8> {
    profile
        .iter()
        .enumerate()
        .map(|(j, &bit)| {
            let flip = keyed_unit_f64(seed, lane, j as u64) < spec.flip_probability;
            if flip {
                1 - bit
            } else {
                bit
            }
        })
        .collect()
}

fn region_for(index: usize) -> Region {
    Region::ALL[index % 5]
}

fn tale_for(id_prefix: &str, index: usize, language: &str, row: &[u8], codes: &[String]) -> Tale {
    let present: Vec<&str> = codes
        .iter()
        .zip(row)
        .filter(|(_, &v)| v == 1)
        .map(|(c, _)| c.as_str())
        .collect();
    // The text names the sampled motifs so each tale is distinct and the
    // content plausibly carries its annotations.
    let text = format!(
        "Synthetic tale {id_prefix}-{index}. The narrative weaves together: {}.",
        if present.is_empty() {
            "no listed motifs".to_string()
        } else {
            present.join("; ")
        }
    );
    Tale {
        id: format!("{id_prefix}-{index}"),
        title: format!("Synthetic {id_prefix} {index}"),
        text,
        language: language.to_string(),
        region: region_for(index),
        source: "synthetic fixture".to_string(),
    }
}

/// Just the training matrix and planted truth, for clustering tests.
pub fn fixture_matrix(spec: &FixtureSpec, seed: u64) -> (MotifMatrix, Vec<usize>) {
    let set = builtin_set(SetName::Atu510a15);
    let codes: Vec<String> = set.codes().into_iter().take(spec.motif_count()).collect();
    let mut values = Vec::new();
    let mut row_ids = Vec::new();
    let mut truth = Vec::new();
    for i in 0..(spec.train_a + spec.train_b) {
        let profile = if i < spec.train_a {
            &spec.profile_a
        } else {
            &spec.profile_b
        };
        values.push(sample_row(spec, profile, seed, i as u64));
        row_ids.push(format!("train-{i}"));
        truth.push(usize::from(i >= spec.train_a));
    }
    (
        MotifMatrix {
            values,
            row_ids,
            col_codes: codes,
        },
        truth,
    )
}

/// Generates the full fixture. The gold annotations equal the sampled rows,
/// so a gold-oracle provider reproduces them exactly and detection accuracy
/// against them is 1.0 by construction.
pub fn generate_fixture(spec: &FixtureSpec, seed: u64) -> Fixture {
    let set = builtin_set(SetName::Atu510a15);
    assert_eq!(
        spec.motif_count(),
        set.len(),
        "fixture profiles must cover the 15-motif set"
    );
    let codes = set.codes();

    let build = |prefix: &str, language: &str, count_a: usize, count_b: usize, lane_base: u64| {
        let mut tales = Vec::new();
        let mut values = Vec::new();
        let mut row_ids = Vec::new();
        let mut truth = Vec::new();
        for i in 0..(count_a + count_b) {
            let profile = if i < count_a {
                &spec.profile_a
            } else {
                &spec.profile_b
            };
            let row = sample_row(spec, profile, seed, lane_base + i as u64);
            let tale = tale_for(prefix, i, language, &row, &codes);
            row_ids.push(tale.id.clone());
            tales.push(tale);
            values.push(row);
            truth.push(usize::from(i >= count_a));
        }
        let corpus = Corpus {
            name: prefix.to_string(),
            tales,
        };
        let matrix = MotifMatrix {
            values: values.clone(),
            row_ids: row_ids.clone(),
            col_codes: codes.clone(),
        };
        let gold = GoldAnnotations::from_rows(
            set.name.clone(),
            codes.clone(),
            row_ids,
            values
                .into_iter()
                .map(|row| row.into_iter().map(|v| v == 1).collect())
                .collect(),
        )
        .expect("fixture rows are rectangular");
        (corpus, matrix, gold, truth)
    };

    let (train_corpus, train_matrix, train_gold, train_truth) =
        build("train", "en", spec.train_a, spec.train_b, 0);
    let (new_corpus, new_matrix, new_gold, new_truth) =
        build("new", "sl", spec.new_a, spec.new_b, 1_000_000);

    Fixture {
        set,
        train_corpus,
        new_corpus,
        train_gold,
        new_gold,
        train_matrix,
        new_matrix,
        train_truth,
        new_truth,
    }
}
