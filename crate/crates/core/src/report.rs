//! Report tables, file emission, and the replication scoreboard.
//!
//! Every number in a report is recomputable from persisted run artifacts;
//! emission is a pure function of the report, so identical inputs produce
//! byte-identical files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cluster::{Labels, NOISE};
use crate::corpus::{Corpus, Region};
use crate::matrix::{FrequencyReport, MotifMatrix};
use crate::pipeline::MappingReport;

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("labels cover {labels} rows but the matrix has {rows}")]
    LabelMismatch { labels: usize, rows: usize },
    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
    #[error("serialization error: {0}")]
    Serde(String),
    #[error("unknown report format {0:?} (expected json, csv, or svg)")]
    UnknownFormat(String),
}

/// One motif's frequency inside one cluster, with the two-thirds and
/// one-third threshold flags used to describe cluster character.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileCell {
    pub code: String,
    pub frequency: f64,
    pub high: bool,
    pub mid: bool,
}

/// Per-cluster motif frequency table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterProfile {
    pub cluster: i32,
    pub size: usize,
    pub cells: Vec<ProfileCell>,
}

/// Per-cluster motif frequencies with threshold flags. Noise rows (label -1)
/// get their own profile entry when present.
pub fn cluster_profile(
    matrix: &MotifMatrix,
    labels: &Labels,
) -> Result<Vec<ClusterProfile>, ReportError> {
    if labels.len() != matrix.n_rows() {
        return Err(ReportError::LabelMismatch {
            labels: labels.len(),
            rows: matrix.n_rows(),
        });
    }
    let mut ids: Vec<i32> = (0..labels.n_clusters() as i32).collect();
    if labels.n_noise() > 0 {
        ids.push(NOISE);
    }
    let mut profiles = Vec::new();
    for cluster in ids {
        let rows: Vec<usize> = labels
            .as_slice()
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == cluster)
            .map(|(i, _)| i)
            .collect();
        let size = rows.len();
        let cells = matrix
            .col_codes
            .iter()
            .enumerate()
            .map(|(j, code)| {
                let present: usize = rows.iter().map(|&i| matrix.values[i][j] as usize).sum();
                // Integer comparisons keep the 1/3 and 2/3 boundaries exact.
                ProfileCell {
                    code: code.clone(),
                    frequency: present as f64 / size as f64,
                    high: present * 3 >= size * 2,
                    mid: present * 3 >= size,
                }
            })
            .collect();
        profiles.push(ClusterProfile {
            cluster,
            size,
            cells,
        });
    }
    Ok(profiles)
}

/// Region counts per cluster id; noise appears as cluster -1.
pub type GeoTable = Vec<(i32, BTreeMap<Region, usize>)>;

/// Cluster-by-region cross-tabulation. Row sums equal cluster sizes and the
/// grand total equals the corpus size (noise appears as cluster -1).
pub fn geo_distribution(corpus: &Corpus, labels: &Labels) -> Result<GeoTable, ReportError> {
    if labels.len() != corpus.len() {
        return Err(ReportError::LabelMismatch {
            labels: labels.len(),
            rows: corpus.len(),
        });
    }
    let mut ids: Vec<i32> = (0..labels.n_clusters() as i32).collect();
    if labels.n_noise() > 0 {
        ids.push(NOISE);
    }
    let mut table = Vec::new();
    for cluster in ids {
        let mut counts: BTreeMap<Region, usize> = Region::ALL.iter().map(|r| (*r, 0)).collect();
        for (tale, &label) in corpus.tales.iter().zip(labels.as_slice()) {
            if label == cluster {
                *counts.get_mut(&tale.region).expect("all regions present") += 1;
            }
        }
        table.push((cluster, counts));
    }
    Ok(table)
}

/// A bundle of report sections, serializable as one JSON document.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Report {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequencies: Option<FrequencyReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profiles: Option<Vec<ClusterProfile>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geography: Option<GeoTable>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mapping: Option<MappingReport>,
}

impl Report {
    pub fn load_json(path: impl AsRef<Path>) -> Result<Report, ReportError> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| ReportError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        serde_json::from_slice(&bytes).map_err(|e| ReportError::Serde(e.to_string()))
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), ReportError> {
    std::fs::write(path, bytes).map_err(|e| ReportError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Simple data-faithful SVG bar chart of motif frequencies. One `<rect>` per
/// motif, heights proportional to frequency, frequency repeated in a
/// `data-frequency` attribute so charts stay machine-checkable.
pub fn frequency_svg(report: &FrequencyReport) -> String {
    const BAR_WIDTH: usize = 28;
    const GAP: usize = 12;
    const CHART_HEIGHT: usize = 200;
    const LABEL_SPACE: usize = 70;
    let width = (BAR_WIDTH + GAP) * report.frequencies.len() + GAP;
    let height = CHART_HEIGHT + LABEL_SPACE;
    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">\n"
    ));
    svg.push_str(&format!(
        "  <line x1=\"0\" y1=\"{CHART_HEIGHT}\" x2=\"{width}\" y2=\"{CHART_HEIGHT}\" stroke=\"black\"/>\n"
    ));
    for (i, (code, freq)) in report.frequencies.iter().enumerate() {
        let bar_h = (freq * CHART_HEIGHT as f64).round() as usize;
        let x = GAP + i * (BAR_WIDTH + GAP);
        let y = CHART_HEIGHT - bar_h;
        svg.push_str(&format!(
            "  <rect x=\"{x}\" y=\"{y}\" width=\"{BAR_WIDTH}\" height=\"{bar_h}\" fill=\"#4a6fa5\" data-code=\"{}\" data-frequency=\"{:.4}\"/>\n",
            xml_escape(code), freq
        ));
        svg.push_str(&format!(
            "  <text x=\"{}\" y=\"{}\" font-size=\"9\" transform=\"rotate(60 {} {})\">{}</text>\n",
            x,
            CHART_HEIGHT + 12,
            x,
            CHART_HEIGHT + 12,
            xml_escape(code)
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn profiles_csv(profiles: &[ClusterProfile]) -> String {
    let mut out = String::from("cluster,size,code,frequency,high,mid\n");
    for profile in profiles {
        for cell in &profile.cells {
            out.push_str(&format!(
                "{},{},{},{:.6},{},{}\n",
                profile.cluster,
                profile.size,
                cell.code,
                cell.frequency,
                u8::from(cell.high),
                u8::from(cell.mid)
            ));
        }
    }
    out
}

fn geography_csv(geo: &[(i32, BTreeMap<Region, usize>)]) -> String {
    let mut out = String::from("cluster");
    for region in Region::ALL {
        out.push_str(&format!(",{region}"));
    }
    out.push('\n');
    for (cluster, counts) in geo {
        out.push_str(&cluster.to_string());
        for region in Region::ALL {
            out.push_str(&format!(",{}", counts.get(&region).copied().unwrap_or(0)));
        }
        out.push('\n');
    }
    out
}

fn frequencies_csv(report: &FrequencyReport) -> String {
    let mut out = String::from("code,frequency\n");
    for (code, freq) in &report.frequencies {
        out.push_str(&format!("{code},{freq:.6}\n"));
    }
    out
}

fn mapping_csv(mapping: &MappingReport) -> String {
    let mut out = String::from("tale_id,cluster,distance,hamming_vote\n");
    for a in &mapping.assignments {
        out.push_str(&format!(
            "{},{},{:.6},{}\n",
            a.tale_id,
            a.cluster,
            a.distance,
            a.hamming_vote.map_or(String::from(""), |v| v.to_string())
        ));
    }
    out
}

/// Writes the report to `out_dir` in the requested formats (`json`, `csv`,
/// `svg`). Returns the paths written, in a fixed order.
pub fn emit(report: &Report, out_dir: impl AsRef<Path>, formats: &[String]) -> Result<Vec<PathBuf>, ReportError> {
    let out_dir = out_dir.as_ref();
    std::fs::create_dir_all(out_dir).map_err(|e| ReportError::Io {
        path: out_dir.display().to_string(),
        message: e.to_string(),
    })?;
    let mut written = Vec::new();
    for format in formats {
        match format.as_str() {
            "json" => {
                let path = out_dir.join("report.json");
                let bytes = serde_json::to_vec_pretty(report)
                    .map_err(|e| ReportError::Serde(e.to_string()))?;
                write_file(&path, &bytes)?;
                written.push(path);
            }
            "csv" => {
                if let Some(freq) = &report.frequencies {
                    let path = out_dir.join("frequencies.csv");
                    write_file(&path, frequencies_csv(freq).as_bytes())?;
                    written.push(path);
                }
                if let Some(profiles) = &report.profiles {
                    let path = out_dir.join("profiles.csv");
                    write_file(&path, profiles_csv(profiles).as_bytes())?;
                    written.push(path);
                }
                if let Some(geo) = &report.geography {
                    let path = out_dir.join("geography.csv");
                    write_file(&path, geography_csv(geo).as_bytes())?;
                    written.push(path);
                }
                if let Some(mapping) = &report.mapping {
                    let path = out_dir.join("mapping.csv");
                    write_file(&path, mapping_csv(mapping).as_bytes())?;
                    written.push(path);
                }
            }
            "svg" => {
                if let Some(freq) = &report.frequencies {
                    let path = out_dir.join("frequencies.svg");
                    write_file(&path, frequency_svg(freq).as_bytes())?;
                    written.push(path);
                }
            }
            other => return Err(ReportError::UnknownFormat(other.to_string())),
        }
    }
    Ok(written)
}

// ---------------------------------------------------------------------------
// Replication scoreboard
// ---------------------------------------------------------------------------

/// Verdict for one scoreboard item.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Pass,
    /// Outside tolerance but within twice the tolerance.
    Near,
    Fail,
    /// Expected or computed value unavailable.
    NotAvailable,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Verdict::Pass => "PASS",
            Verdict::Near => "NEAR",
            Verdict::Fail => "FAIL",
            Verdict::NotAvailable => "N/A",
        };
        f.write_str(s)
    }
}

/// One comparison between a computed value and its published expectation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreItem {
    pub name: String,
    pub expected: Option<f64>,
    pub computed: Option<f64>,
    pub tolerance: f64,
    pub verdict: Verdict,
}

/// Judgement with a numeric tolerance; NEAR covers up to twice the
/// tolerance. Exact items use tolerance 0 and NEAR means off by at most 1.
pub fn judge(name: &str, expected: Option<f64>, computed: Option<f64>, tolerance: f64) -> ScoreItem {
    let verdict = match (expected, computed) {
        (Some(e), Some(c)) => {
            let delta = (e - c).abs();
            if tolerance == 0.0 {
                if delta == 0.0 {
                    Verdict::Pass
                } else if delta <= 1.0 {
                    Verdict::Near
                } else {
                    Verdict::Fail
                }
            } else if delta <= tolerance {
                Verdict::Pass
            } else if delta <= 2.0 * tolerance {
                Verdict::Near
            } else {
                Verdict::Fail
            }
        }
        _ => Verdict::NotAvailable,
    };
    ScoreItem {
        name: name.to_string(),
        expected,
        computed,
        tolerance,
        verdict,
    }
}

/// The full replication scoreboard.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Scoreboard {
    pub items: Vec<ScoreItem>,
}

impl Scoreboard {
    pub fn push(&mut self, item: ScoreItem) {
        self.items.push(item);
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<44} {:>10} {:>10} {:>8}  verdict\n",
            "item", "expected", "computed", "tol"
        ));
        for item in &self.items {
            let fmt_opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4}"));
            out.push_str(&format!(
                "{:<44} {:>10} {:>10} {:>8}  {}\n",
                item.name,
                fmt_opt(item.expected),
                fmt_opt(item.computed),
                format!("{:.2}", item.tolerance),
                item.verdict
            ));
        }
        out
    }
}
