//! Motif inventories and their prompt rendering.
//!
//! Three inventories ship built in: the 15 narrow ATU 510A motifs, the
//! extended 18-motif variant, and the 14 generalized supermotifs. Each set's
//! ordering is fixed; it defines both the numbering used in prompts and the
//! column order of every motif matrix. Custom inventories load from JSON with
//! the same record shape.

use std::path::Path;

use serde::{Deserialize, Serialize};

/// One motif: a Thompson-style code, the short label used in prompts, and a
/// one-sentence gloss.
///
/// Codes are Thompson identifiers (`S31`, `D1050.1`), Thompson ranges
/// (`S0–S99`), or synthetic `X-` codes for motifs the inventories introduce
/// without a Thompson number (`X-STEPSON`, `X-HELP-DOM`, `X-HELP-WILD`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MotifDef {
    pub code: String,
    pub label: String,
    #[serde(default)]
    pub description: String,
}

/// Names of the built-in inventories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SetName {
    /// The 15 narrow ATU 510A motifs.
    Atu510a15,
    /// The 18-motif extension: drops B450, adds incest/stepson/animal splits.
    Extended18,
    /// The 14 generalized supermotifs.
    Super14,
}

impl SetName {
    /// Canonical string form, also used as CLI value and in run artifacts.
    pub fn as_str(self) -> &'static str {
        match self {
            SetName::Atu510a15 => "atu15",
            SetName::Extended18 => "ext18",
            SetName::Super14 => "super14",
        }
    }

    pub fn parse(s: &str) -> Option<SetName> {
        match s {
            "atu15" => Some(SetName::Atu510a15),
            "ext18" => Some(SetName::Extended18),
            "super14" => Some(SetName::Super14),
            _ => None,
        }
    }
}

/// An ordered motif inventory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MotifSet {
    pub name: String,
    pub motifs: Vec<MotifDef>,
}

#[derive(Debug, thiserror::Error)]
pub enum CatalogError {
    #[error("motif code {code:?} is not in set {set:?}")]
    UnknownCode { set: String, code: String },
    #[error("invalid motif set: {0}")]
    Invalid(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl MotifSet {
    pub fn len(&self) -> usize {
        self.motifs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.motifs.is_empty()
    }

    /// Motif codes in set order.
    pub fn codes(&self) -> Vec<String> {
        self.motifs.iter().map(|m| m.code.clone()).collect()
    }

    /// Zero-based column index of `code`, or `None` when absent.
    pub fn index_of(&self, code: &str) -> Option<usize> {
        self.motifs.iter().position(|m| m.code == code)
    }

    /// Checks code uniqueness and non-empty labels.
    pub fn validate(&self) -> Result<(), CatalogError> {
        for (i, motif) in self.motifs.iter().enumerate() {
            if motif.label.is_empty() {
                return Err(CatalogError::Invalid(format!(
                    "motif {:?} has an empty label",
                    motif.code
                )));
            }
            if self.motifs[..i].iter().any(|m| m.code == motif.code) {
                return Err(CatalogError::Invalid(format!(
                    "duplicate motif code {:?}",
                    motif.code
                )));
            }
        }
        Ok(())
    }
}

fn def(code: &str, label: &str, description: &str) -> MotifDef {
    MotifDef {
        code: code.to_string(),
        label: label.to_string(),
        description: description.to_string(),
    }
}

fn atu15_motifs() -> Vec<MotifDef> {
    vec![
        def("S31", "Cruel stepmother", "Cruel stepmother."),
        def("L55", "Stepdaughter heroine", "Stepdaughter heroine."),
        def("B450", "Helpful birds", "Helpful birds."),
        def("D1050.1", "Clothes produced by magic", "Clothes produced by magic."),
        def("N815", "Fairy as helper", "Fairy as helper."),
        def(
            "D815.1",
            "Magic object received from mother",
            "Magic object received from mother.",
        ),
        def(
            "D842.1",
            "Magic object found on mother's grave",
            "Magic object found on mother's grave.",
        ),
        def(
            "E323.2",
            "Dead mother returns to aid persecuted children",
            "Dead mother returns to aid persecuted children.",
        ),
        def(
            "N711.6",
            "Prince sees heroine at ball and is enamored",
            "Prince sees heroine at ball and is enamored.",
        ),
        def(
            "N711.4",
            "Prince sees maiden at church and is enamored",
            "Prince sees maiden at church and is enamored.",
        ),
        def(
            "C761.3",
            "Tabu: staying too long at ball. Must leave before certain hour",
            "Tabu: staying too long at ball; must leave before a certain hour.",
        ),
        def(
            "R221",
            "Heroine's three-fold flight from ball",
            "Heroine's three-fold flight from ball.",
        ),
        def("F823.2", "Glass shoes", "Glass shoes."),
        def(
            "H36.1",
            "Slipper test. Identification by fitting of slipper",
            "Slipper test: identification by fitting of slipper.",
        ),
        def(
            "K1911.3.3.1",
            "False bride's mutilated feet",
            "In order to wear the shoes with which the husband is testing the identity of his bride, the false bride cuts her feet; she is detected.",
        ),
    ]
}

fn extended18_motifs() -> Vec<MotifDef> {
    let narrow = atu15_motifs();
    let mut motifs = Vec::with_capacity(18);
    // Row order follows the extended inventory: each narrow motif followed by
    // its companions, with B450 replaced by the domestic/wild split.
    motifs.push(narrow[0].clone()); // S31
    motifs.push(def(
        "A1273.1",
        "Incestuous first parents",
        "Incestuous first parents.",
    ));
    motifs.push(narrow[1].clone()); // L55
    motifs.push(def(
        "X-STEPSON",
        "Stepson hero",
        "Stepson hero; adapted from the victorious youngest son.",
    ));
    motifs.push(def(
        "X-HELP-DOM",
        "Helpful domestic animals",
        "Helpful domestic animals, such as a cow or an ox.",
    ));
    motifs.push(def(
        "X-HELP-WILD",
        "Helpful wild animals",
        "Helpful wild animals, such as birds.",
    ));
    motifs.extend(narrow[3..].iter().cloned()); // D1050.1 .. K1911.3.3.1
    motifs
}

fn super14_motifs() -> Vec<MotifDef> {
    vec![
        def("S0–S99", "Cruel relatives", "Cruel relatives."),
        def("L0–L99", "Victorious youngest child", "Victorious youngest child."),
        def("B400–B499", "Kinds of helpful animals", "Kinds of helpful animals."),
        def("D1050", "Magic clothes", "Magic clothes."),
        def("N810", "Supernatural helper", "Supernatural helpers."),
        def("D810", "Magic object a gift", "Magic object a gift."),
        def("D840", "Magic object found", "Magic object found."),
        def(
            "E320",
            "Dead relative's friendly return",
            "Dead relative's friendly return.",
        ),
        def(
            "N710",
            "Accidental meeting of hero and heroine",
            "Accidental meeting of hero and heroine.",
        ),
        def("C750", "Time tabu", "Time tabus."),
        def("R220", "Hurried escape", "Flights, as hurried escapes."),
        def(
            "F820",
            "Extraordinary clothing and ornaments",
            "Extraordinary clothing and ornaments.",
        ),
        def(
            "H0–H199",
            "Identity test: Recognition",
            "Identity tests: recognition.",
        ),
        def("K1910", "Marital impostor", "Marital impostors."),
    ]
}

/// Returns the canonical built-in inventory for `name`.
pub fn builtin_set(name: SetName) -> MotifSet {
    let motifs = match name {
        SetName::Atu510a15 => atu15_motifs(),
        SetName::Extended18 => extended18_motifs(),
        SetName::Super14 => super14_motifs(),
    };
    MotifSet {
        name: name.as_str().to_string(),
        motifs,
    }
}

/// Loads a custom inventory from JSON:
/// `{"name":"...","motifs":[{"code":"...","label":"...","description":"..."}]}`.
pub fn load_custom_set(path: impl AsRef<Path>) -> Result<MotifSet, CatalogError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| CatalogError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let set: MotifSet =
        serde_json::from_slice(&bytes).map_err(|e| CatalogError::Invalid(e.to_string()))?;
    if set.motifs.is_empty() {
        return Err(CatalogError::Invalid("motif set has no motifs".into()));
    }
    set.validate()?;
    Ok(set)
}

/// Resolves a CLI set argument: a built-in name or a path to a JSON file.
pub fn resolve_set(arg: &str) -> Result<MotifSet, CatalogError> {
    match SetName::parse(arg) {
        Some(name) => Ok(builtin_set(name)),
        None => load_custom_set(arg),
    }
}

/// Which built-in inventory, if any, has exactly this column order.
pub fn identify_set(codes: &[String]) -> Option<SetName> {
    [SetName::Atu510a15, SetName::Extended18, SetName::Super14]
        .into_iter()
        .find(|&name| builtin_set(name).codes() == codes)
}

/// Renders the numbered prompt list: `1. <label>, 2. <label>, ...` in set
/// order. The numbering is dense, starts at 1, and matches `column_index + 1`.
pub fn prompt_list(set: &MotifSet) -> String {
    set.motifs
        .iter()
        .enumerate()
        .map(|(i, m)| format!("{}. {}", i + 1, m.label))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Zero-based column index of `code` in `set`; errors on unknown codes.
pub fn column_index(set: &MotifSet, code: &str) -> Result<usize, CatalogError> {
    set.index_of(code).ok_or_else(|| CatalogError::UnknownCode {
        set: set.name.clone(),
        code: code.to_string(),
    })
}
