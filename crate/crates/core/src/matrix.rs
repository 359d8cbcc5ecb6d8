//! Binary tale-by-motif matrices and their statistics.
//!
//! Rows follow corpus order, columns follow motif-set order, and cells are
//! strictly 0/1. The matrix is the interchange format between detection and
//! clustering, persisted as CSV with a `tale_id` first column.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::catalog::MotifSet;
use crate::detect::DetectionRun;

/// Presence matrix: `values[i][j]` is 1 iff motif `col_codes[j]` appears in
/// tale `row_ids[i]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MotifMatrix {
    pub values: Vec<Vec<u8>>,
    pub row_ids: Vec<String>,
    pub col_codes: Vec<String>,
}

/// Per-motif presence fractions over a matrix of `n` tales.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyReport {
    pub n: usize,
    /// (motif code, presence fraction) in column order.
    pub frequencies: Vec<(String, f64)>,
}

#[derive(Debug, thiserror::Error)]
pub enum MatrixError {
    #[error("matrix is empty")]
    Empty,
    #[error("row index {index} out of range for {rows} rows")]
    RowOutOfRange { index: usize, rows: usize },
    #[error("motif set {set:?} does not match run set {run:?}")]
    SetMismatch { set: String, run: String },
    #[error("run result for tale {tale_id:?} has {got} verdicts, set has {expected}")]
    WidthMismatch {
        tale_id: String,
        got: usize,
        expected: usize,
    },
    #[error("parse error at line {line} of {path}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl MotifMatrix {
    pub fn n_rows(&self) -> usize {
        self.row_ids.len()
    }

    pub fn n_cols(&self) -> usize {
        self.col_codes.len()
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.values[i]
    }

    /// Rows as f64 coordinates for reduction and clustering.
    pub fn to_f64(&self) -> Vec<Vec<f64>> {
        self.values
            .iter()
            .map(|row| row.iter().map(|&v| v as f64).collect())
            .collect()
    }

    /// Checks shape agreement and cell range.
    pub fn validate(&self) -> Result<(), MatrixError> {
        for (i, row) in self.values.iter().enumerate() {
            if row.len() != self.col_codes.len() {
                return Err(MatrixError::WidthMismatch {
                    tale_id: self.row_ids.get(i).cloned().unwrap_or_default(),
                    got: row.len(),
                    expected: self.col_codes.len(),
                });
            }
            if row.iter().any(|&v| v > 1) {
                return Err(MatrixError::Parse {
                    path: "<memory>".into(),
                    line: i + 2,
                    message: "cell is not 0 or 1".into(),
                });
            }
        }
        if self.values.len() != self.row_ids.len() {
            return Err(MatrixError::Empty);
        }
        Ok(())
    }
}

/// Assembles the binary matrix from a detection run. Comments are dropped;
/// only the yes/no verdicts survive.
pub fn build_matrix(run: &DetectionRun, set: &MotifSet) -> Result<MotifMatrix, MatrixError> {
    if run.motif_set != set.name {
        return Err(MatrixError::SetMismatch {
            set: set.name.clone(),
            run: run.motif_set.clone(),
        });
    }
    let mut values = Vec::with_capacity(run.results.len());
    let mut row_ids = Vec::with_capacity(run.results.len());
    for result in &run.results {
        if result.presence.len() != set.len() {
            return Err(MatrixError::WidthMismatch {
                tale_id: result.tale_id.clone(),
                got: result.presence.len(),
                expected: set.len(),
            });
        }
        values.push(result.presence.iter().map(|&p| u8::from(p)).collect());
        row_ids.push(result.tale_id.clone());
    }
    Ok(MotifMatrix {
        values,
        row_ids,
        col_codes: set.codes(),
    })
}

/// Per-column presence fractions. Errors on an empty matrix.
pub fn frequencies(matrix: &MotifMatrix) -> Result<FrequencyReport, MatrixError> {
    let n = matrix.n_rows();
    if n == 0 {
        return Err(MatrixError::Empty);
    }
    let mut sums = vec![0usize; matrix.n_cols()];
    for row in &matrix.values {
        for (j, &v) in row.iter().enumerate() {
            sums[j] += v as usize;
        }
    }
    let frequencies = matrix
        .col_codes
        .iter()
        .zip(&sums)
        .map(|(code, &s)| (code.clone(), s as f64 / n as f64))
        .collect();
    Ok(FrequencyReport { n, frequencies })
}

/// Number of differing cells between rows `i` and `j`.
pub fn hamming(matrix: &MotifMatrix, i: usize, j: usize) -> Result<u32, MatrixError> {
    let rows = matrix.n_rows();
    for index in [i, j] {
        if index >= rows {
            return Err(MatrixError::RowOutOfRange { index, rows });
        }
    }
    Ok(matrix.values[i]
        .iter()
        .zip(&matrix.values[j])
        .filter(|(a, b)| a != b)
        .count() as u32)
}

/// Hamming distance between two arbitrary binary rows.
pub fn hamming_rows(a: &[u8], b: &[u8]) -> u32 {
    a.iter().zip(b).filter(|(x, y)| x != y).count() as u32
}

/// Writes the matrix as CSV: header `tale_id,<code>,...`, cells 0/1, UTF-8.
pub fn save_matrix(matrix: &MotifMatrix, path: impl AsRef<Path>) -> Result<(), MatrixError> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let mut writer = csv::WriterBuilder::new()
        .from_path(path)
        .map_err(|e| MatrixError::Parse {
            path: display.clone(),
            line: 0,
            message: e.to_string(),
        })?;
    let mut header = vec!["tale_id".to_string()];
    header.extend(matrix.col_codes.iter().cloned());
    writer.write_record(&header).map_err(|e| MatrixError::Parse {
        path: display.clone(),
        line: 1,
        message: e.to_string(),
    })?;
    for (id, row) in matrix.row_ids.iter().zip(&matrix.values) {
        let mut record = vec![id.clone()];
        record.extend(row.iter().map(|v| v.to_string()));
        writer.write_record(&record).map_err(|e| MatrixError::Parse {
            path: display.clone(),
            line: 0,
            message: e.to_string(),
        })?;
    }
    writer.flush().map_err(|source| MatrixError::Io {
        path: display,
        source,
    })
}

/// Loads a matrix written by [`save_matrix`].
pub fn load_matrix(path: impl AsRef<Path>) -> Result<MotifMatrix, MatrixError> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| MatrixError::Parse {
            path: display.clone(),
            line: 1,
            message: e.to_string(),
        })?;
    let headers = reader
        .headers()
        .map_err(|e| MatrixError::Parse {
            path: display.clone(),
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    if headers.get(0) != Some("tale_id") {
        return Err(MatrixError::Parse {
            path: display,
            line: 1,
            message: "header must start with tale_id".into(),
        });
    }
    let col_codes: Vec<String> = headers.iter().skip(1).map(|s| s.to_string()).collect();
    let mut row_ids = Vec::new();
    let mut values = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let line = idx + 2;
        let record = record.map_err(|e| MatrixError::Parse {
            path: display.clone(),
            line,
            message: e.to_string(),
        })?;
        if record.len() != col_codes.len() + 1 {
            return Err(MatrixError::Parse {
                path: display.clone(),
                line,
                message: format!(
                    "expected {} cells, found {}",
                    col_codes.len() + 1,
                    record.len()
                ),
            });
        }
        row_ids.push(record.get(0).unwrap_or_default().to_string());
        let mut row = Vec::with_capacity(col_codes.len());
        for cell in record.iter().skip(1) {
            match cell.trim() {
                "0" => row.push(0),
                "1" => row.push(1),
                other => {
                    return Err(MatrixError::Parse {
                        path: display.clone(),
                        line,
                        message: format!("cell {other:?} is not 0 or 1"),
                    })
                }
            }
        }
        values.push(row);
    }
    let matrix = MotifMatrix {
        values,
        row_ids,
        col_codes,
    };
    matrix.validate()?;
    Ok(matrix)
}
