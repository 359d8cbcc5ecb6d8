//! Tale corpora, gold motif annotations, and region bookkeeping.
//!
//! A corpus is an ordered sequence of tales loaded from JSONL (one record per
//! line). The ordering is stable and defines row indices for every matrix
//! built downstream, so nothing here ever reorders tales.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::catalog::MotifSet;

/// Continent-level origin of a tale.
///
/// Records missing the field deserialize to `Unknown` so partially annotated
/// corpora still cluster; geography reports list `Unknown` explicitly.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum Region {
    Europe,
    Asia,
    Americas,
    Africa,
    Antarctica,
    #[default]
    Unknown,
}

impl Region {
    /// All members, in the order reports list them.
    pub const ALL: [Region; 6] = [
        Region::Europe,
        Region::Asia,
        Region::Americas,
        Region::Africa,
        Region::Antarctica,
        Region::Unknown,
    ];
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Region::Europe => "Europe",
            Region::Asia => "Asia",
            Region::Americas => "Americas",
            Region::Africa => "Africa",
            Region::Antarctica => "Antarctica",
            Region::Unknown => "Unknown",
        };
        f.write_str(name)
    }
}

/// One narrative with its text and source metadata.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tale {
    pub id: String,
    #[serde(default)]
    pub title: String,
    pub text: String,
    pub language: String,
    #[serde(default)]
    pub region: Region,
    #[serde(default)]
    pub source: String,
}

/// An ordered tale collection. Order defines downstream row indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pub name: String,
    pub tales: Vec<Tale>,
}

/// Human-labelled motif presence used to score detection accuracy.
///
/// Rows follow the gold file's order; columns follow the motif set's order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldAnnotations {
    pub motif_set_name: String,
    pub codes: Vec<String>,
    pub tale_ids: Vec<String>,
    rows: Vec<Vec<bool>>,
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line} of {path}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("duplicate tale id {0:?}")]
    DuplicateId(String),
    #[error("corpus file {0} contains no tales")]
    EmptyCorpus(String),
    #[error("validation error: {0}")]
    Validation(String),
}

impl Corpus {
    /// Validates the corpus invariants: unique ids, non-empty text/language.
    pub fn validate(&self) -> Result<(), CorpusError> {
        let mut seen = BTreeSet::new();
        for tale in &self.tales {
            if !seen.insert(tale.id.as_str()) {
                return Err(CorpusError::DuplicateId(tale.id.clone()));
            }
            if tale.text.is_empty() {
                return Err(CorpusError::Validation(format!(
                    "tale {:?} has empty text",
                    tale.id
                )));
            }
            if tale.language.is_empty() {
                return Err(CorpusError::Validation(format!(
                    "tale {:?} has empty language",
                    tale.id
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.tales.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tales.is_empty()
    }

    pub fn tale_ids(&self) -> Vec<String> {
        self.tales.iter().map(|t| t.id.clone()).collect()
    }

    pub fn get(&self, id: &str) -> Option<&Tale> {
        self.tales.iter().find(|t| t.id == id)
    }
}

/// Loads a corpus from a JSONL file, one tale record per line.
///
/// Identical bytes always yield an identical corpus. Blank lines are not
/// permitted; an entirely empty file is an error.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus, CorpusError> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let file = std::fs::File::open(path).map_err(|source| CorpusError::Io {
        path: display.clone(),
        source,
    })?;
    let reader = BufReader::new(file);

    let mut tales = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| CorpusError::Io {
            path: display.clone(),
            source,
        })?;
        if line.trim().is_empty() {
            return Err(CorpusError::Parse {
                path: display.clone(),
                line: idx + 1,
                message: "blank line".into(),
            });
        }
        let tale: Tale = serde_json::from_str(&line).map_err(|e| CorpusError::Parse {
            path: display.clone(),
            line: idx + 1,
            message: e.to_string(),
        })?;
        tales.push(tale);
    }
    if tales.is_empty() {
        return Err(CorpusError::EmptyCorpus(display));
    }

    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "corpus".to_string());
    let corpus = Corpus { name, tales };
    corpus.validate()?;
    Ok(corpus)
}

/// Writes a corpus back to JSONL with LF line endings.
pub fn save_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<(), CorpusError> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let mut out = Vec::new();
    for tale in &corpus.tales {
        let line = serde_json::to_string(tale).map_err(|e| CorpusError::Validation(e.to_string()))?;
        out.extend_from_slice(line.as_bytes());
        out.push(b'\n');
    }
    let mut file = std::fs::File::create(path).map_err(|source| CorpusError::Io {
        path: display.clone(),
        source,
    })?;
    file.write_all(&out).map_err(|source| CorpusError::Io {
        path: display,
        source,
    })
}

/// Per-region tale counts. Every region appears, zero or not, and the counts
/// sum to the corpus size.
pub fn region_counts(corpus: &Corpus) -> BTreeMap<Region, usize> {
    let mut counts: BTreeMap<Region, usize> = Region::ALL.iter().map(|r| (*r, 0)).collect();
    for tale in &corpus.tales {
        *counts.get_mut(&tale.region).expect("all regions present") += 1;
    }
    counts
}

impl GoldAnnotations {
    /// Builds annotations directly from rows already in `set` column order.
    pub fn from_rows(
        motif_set_name: impl Into<String>,
        codes: Vec<String>,
        tale_ids: Vec<String>,
        rows: Vec<Vec<bool>>,
    ) -> Result<Self, CorpusError> {
        if tale_ids.len() != rows.len() {
            return Err(CorpusError::Validation(
                "gold row count does not match tale id count".into(),
            ));
        }
        for (id, row) in tale_ids.iter().zip(&rows) {
            if row.len() != codes.len() {
                return Err(CorpusError::Validation(format!(
                    "gold row for tale {id:?} has {} cells, expected {}",
                    row.len(),
                    codes.len()
                )));
            }
        }
        Ok(GoldAnnotations {
            motif_set_name: motif_set_name.into(),
            codes,
            tale_ids,
            rows,
        })
    }

    /// Presence for a (tale id, motif code) pair, if covered.
    pub fn get(&self, tale_id: &str, code: &str) -> Option<bool> {
        let r = self.tale_ids.iter().position(|t| t == tale_id)?;
        let c = self.codes.iter().position(|m| m == code)?;
        Some(self.rows[r][c])
    }

    /// Full row for a tale id, in motif set order.
    pub fn row(&self, tale_id: &str) -> Option<&[bool]> {
        let r = self.tale_ids.iter().position(|t| t == tale_id)?;
        Some(&self.rows[r])
    }

    /// Number of boolean entries in the table.
    pub fn entry_count(&self) -> usize {
        self.tale_ids.len() * self.codes.len()
    }
}

/// Loads gold annotations from CSV: header `tale_id,<code1>,...`, cells 0/1.
///
/// Header codes must all belong to `set` and cover it completely; the loaded
/// table is reordered into the set's column order.
pub fn load_gold(path: impl AsRef<Path>, set: &MotifSet) -> Result<GoldAnnotations, CorpusError> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| CorpusError::Parse {
            path: display.clone(),
            line: 1,
            message: e.to_string(),
        })?;

    let headers = reader
        .headers()
        .map_err(|e| CorpusError::Parse {
            path: display.clone(),
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    if headers.is_empty() || headers.get(0) != Some("tale_id") {
        return Err(CorpusError::Parse {
            path: display,
            line: 1,
            message: "header must start with tale_id".into(),
        });
    }

    let header_codes: Vec<String> = headers.iter().skip(1).map(|s| s.to_string()).collect();
    for code in &header_codes {
        if set.index_of(code).is_none() {
            return Err(CorpusError::Validation(format!(
                "gold header code {code:?} is not in motif set {:?}",
                set.name
            )));
        }
    }
    for motif in &set.motifs {
        if !header_codes.iter().any(|c| c == &motif.code) {
            return Err(CorpusError::Validation(format!(
                "gold header is missing motif code {:?} from set {:?}",
                motif.code, set.name
            )));
        }
    }
    // Map file column -> set column so rows come out in set order.
    let dest: Vec<usize> = header_codes
        .iter()
        .map(|c| set.index_of(c).expect("validated above"))
        .collect();

    let mut tale_ids = Vec::new();
    let mut rows = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let line = idx + 2;
        let record = record.map_err(|e| CorpusError::Parse {
            path: display.clone(),
            line,
            message: e.to_string(),
        })?;
        if record.len() != header_codes.len() + 1 {
            return Err(CorpusError::Parse {
                path: display.clone(),
                line,
                message: format!(
                    "expected {} cells, found {}",
                    header_codes.len() + 1,
                    record.len()
                ),
            });
        }
        let id = record.get(0).unwrap_or_default().to_string();
        if tale_ids.contains(&id) {
            return Err(CorpusError::DuplicateId(id));
        }
        let mut row = vec![false; set.motifs.len()];
        for (col, cell) in record.iter().skip(1).enumerate() {
            let value = match cell.trim() {
                "0" => false,
                "1" => true,
                other => {
                    return Err(CorpusError::Parse {
                        path: display.clone(),
                        line,
                        message: format!("cell {other:?} is not 0 or 1"),
                    })
                }
            };
            row[dest[col]] = value;
        }
        tale_ids.push(id);
        rows.push(row);
    }

    GoldAnnotations::from_rows(set.name.clone(), set.codes(), tale_ids, rows)
}
