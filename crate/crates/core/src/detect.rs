//! Zero-shot motif detection: prompt construction, response parsing, corpus
//! runs, and accuracy scoring against gold annotations.

use std::collections::BTreeMap;
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::catalog::{prompt_list, MotifSet};
use crate::corpus::{Corpus, GoldAnnotations, Tale};
use crate::providers::{ChatProvider, ChatRequest, MockChatProvider, ProviderError};

/// System message sent with every detection request.
pub const SYSTEM_MESSAGE: &str = "You are a helpful assistant, skilled in finding motifs in tales. Follow the instructions carefully.";

/// Instruction block preceding the motif list.
const USER_PREFIX: &str = "Find motifs in the following story. For each motif, return 'yes' if the motif is present in the story, return 'no' if the motif is absent. If the motif is modified, add a very short comment next to yes or no. Do not write the motif. Choose among the following motifs: ";

/// Example line closing the instruction block.
const USER_SUFFIX: &str = ". Example: 1. yes 2. no etc.";

/// The fixed prompt pair for a motif set; the tale text is appended per call.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prompt {
    pub system: String,
    pub user: String,
}

impl Prompt {
    /// Full user message for one tale: instructions, blank line, story.
    pub fn with_story(&self, tale_text: &str) -> String {
        format!("{}\n\nStory:\n{}", self.user, tale_text)
    }
}

/// Builds the zero-shot prompt for `set`. The prompt is always English,
/// whatever language the tales are in.
pub fn build_prompt(set: &MotifSet) -> Prompt {
    Prompt {
        system: SYSTEM_MESSAGE.to_string(),
        user: format!("{USER_PREFIX}{}{USER_SUFFIX}", prompt_list(set)),
    }
}

/// Per-motif verdicts parsed from one response, dense over the set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MotifResponse {
    pub presence: Vec<bool>,
    /// Comments by zero-based motif index; absent indices had none.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub comments: BTreeMap<usize, String>,
}

impl MotifResponse {
    pub fn all_absent(m: usize) -> Self {
        MotifResponse {
            presence: vec![false; m],
            comments: BTreeMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.presence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.presence.is_empty()
    }
}

/// One tale's detection output, raw text retained verbatim for audit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaleResult {
    pub tale_id: String,
    pub presence: Vec<bool>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub comments: BTreeMap<usize, String>,
    pub raw: String,
}

/// A completed detection pass over a corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectionRun {
    pub corpus: String,
    pub motif_set: String,
    pub model: String,
    pub results: Vec<TaleResult>,
    /// Unix seconds when the run finished.
    pub timestamp: u64,
}

impl DetectionRun {
    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<(), DetectError> {
        let bytes = serde_json::to_vec_pretty(self).map_err(|e| DetectError::Serde(e.to_string()))?;
        std::fs::write(path.as_ref(), bytes).map_err(|e| DetectError::Io(e.to_string()))
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self, DetectError> {
        let bytes = std::fs::read(path.as_ref()).map_err(|e| DetectError::Io(e.to_string()))?;
        serde_json::from_slice(&bytes).map_err(|e| DetectError::Serde(e.to_string()))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DetectError {
    #[error("cannot parse response: missing item {index}")]
    MissingItem { index: usize },
    #[error("cannot parse response: duplicate item {index}")]
    DuplicateItem { index: usize },
    #[error("cannot parse response at item {index}: token {token:?} is not yes/no")]
    BadToken { index: usize, token: String },
    #[error("motif count must be at least 1")]
    EmptySet,
    #[error("tale {tale_id}: {source}")]
    Tale {
        tale_id: String,
        #[source]
        source: Box<DetectError>,
    },
    #[error("provider error: {0}")]
    Provider(#[from] ProviderError),
    #[error("{}", aggregate_message(.0))]
    Aggregate(Vec<(String, DetectError)>),
    #[error("gold annotations do not cover {tale_id:?} / {code:?}")]
    CoverageGap { tale_id: String, code: String },
    #[error("run and gold disagree on motif set: run {run:?}, gold {gold:?}")]
    SetMismatch { run: String, gold: String },
    #[error("serialization error: {0}")]
    Serde(String),
    #[error("i/o error: {0}")]
    Io(String),
}

fn aggregate_message(failures: &[(String, DetectError)]) -> String {
    let shown: Vec<&str> = failures.iter().take(8).map(|(id, _)| id.as_str()).collect();
    let suffix = if failures.len() > shown.len() {
        format!(" and {} more", failures.len() - shown.len())
    } else {
        String::new()
    };
    let first_cause = failures
        .first()
        .map(|(_, e)| format!("; first error: {e}"))
        .unwrap_or_default();
    format!(
        "detection failed for {} tale(s): {}{suffix}{first_cause}",
        failures.len(),
        shown.join(", ")
    )
}

/// True when the byte at `pos` starts an item marker `"{index}."` for the
/// given index: digits preceded by start/whitespace and followed by `.`.
fn marker_at(text: &str, pos: usize, index: usize) -> bool {
    let bytes = text.as_bytes();
    let token = format!("{index}.");
    if !text[pos..].starts_with(&token) {
        return false;
    }
    if pos > 0 {
        let prev = bytes[pos - 1];
        if !prev.is_ascii_whitespace() {
            return false;
        }
    }
    true
}

/// Position of the next `"{index}."` marker at or after `from`.
fn find_marker(text: &str, from: usize, index: usize) -> Option<usize> {
    let needle = format!("{index}.");
    let mut search = from;
    while let Some(rel) = text[search..].find(&needle) {
        let pos = search + rel;
        if marker_at(text, pos, index) {
            return Some(pos);
        }
        search = pos + 1;
    }
    None
}

/// Splits one item body into its yes/no verdict and optional comment.
fn parse_item(body: &str, index: usize) -> Result<(bool, Option<String>), DetectError> {
    let body = body.trim();
    let token_end = body
        .find(|c: char| c.is_whitespace())
        .unwrap_or(body.len());
    let raw_token = &body[..token_end];
    // Sentence punctuation may trail the verdict; anything else ("yes?",
    // "partially") is treated as unparseable rather than guessed at.
    let stripped = raw_token.trim_end_matches(['.', ',', ';', ':']);
    let present = match stripped.to_ascii_lowercase().as_str() {
        "yes" => true,
        "no" => false,
        _ => {
            return Err(DetectError::BadToken {
                index: index + 1,
                token: raw_token.to_string(),
            })
        }
    };
    let mut rest = body[token_end..].trim();
    rest = rest.trim_start_matches([',', ';', ':', '-', '–', '—']).trim_start();
    if rest.starts_with('(') && rest.ends_with(')') && rest.len() >= 2 {
        rest = rest[1..rest.len() - 1].trim();
    }
    let comment = if rest.is_empty() {
        None
    } else {
        Some(rest.to_string())
    };
    Ok((present, comment))
}

/// Parses a numbered yes/no response with optional per-item comments.
///
/// Items must appear once each, in order, as `1. yes 2. no ...`; whitespace
/// between items may be spaces or newlines and verdict case is ignored. The
/// yes/no token alone decides presence; the rest of an item is kept verbatim
/// as its comment.
pub fn parse_response(text: &str, m: usize) -> Result<MotifResponse, DetectError> {
    if m == 0 {
        return Err(DetectError::EmptySet);
    }
    let mut presence = Vec::with_capacity(m);
    let mut comments = BTreeMap::new();

    let mut cursor = match find_marker(text, 0, 1) {
        Some(pos) => pos,
        None => return Err(DetectError::MissingItem { index: 1 }),
    };
    for index in 0..m {
        let number = index + 1;
        let marker_len = format!("{number}.").len();
        let body_start = cursor + marker_len;
        let (body_end, next_cursor) = if number < m {
            match find_marker(text, body_start, number + 1) {
                Some(next) => (next, next),
                None => return Err(DetectError::MissingItem { index: number + 1 }),
            }
        } else {
            (text.len(), text.len())
        };
        let body = &text[body_start..body_end];
        if find_marker(body, 0, number).is_some() {
            return Err(DetectError::DuplicateItem { index: number });
        }
        let (present, comment) = parse_item(body, index)?;
        presence.push(present);
        if let Some(c) = comment {
            comments.insert(index, c);
        }
        cursor = next_cursor;
    }
    Ok(MotifResponse { presence, comments })
}

/// Renders a response in the provider's format: `1. yes 2. no — comment ...`.
/// `parse_response` recovers the booleans (and these comments) exactly.
pub fn render_response(response: &MotifResponse) -> String {
    let mut parts = Vec::with_capacity(response.presence.len());
    for (i, present) in response.presence.iter().enumerate() {
        let verdict = if *present { "yes" } else { "no" };
        match response.comments.get(&i) {
            Some(comment) => parts.push(format!("{}. {verdict} — {comment}", i + 1)),
            None => parts.push(format!("{}. {verdict}", i + 1)),
        }
    }
    parts.join(" ")
}

/// The chat request detection sends for one tale.
pub fn detection_request(tale: &Tale, set: &MotifSet, model: &str) -> ChatRequest {
    let prompt = build_prompt(set);
    ChatRequest::new(model, prompt.system.clone(), prompt.with_story(&tale.text))
}

fn detect_tale_raw(
    tale: &Tale,
    set: &MotifSet,
    provider: &dyn ChatProvider,
    model: &str,
) -> Result<(MotifResponse, String), DetectError> {
    let request = detection_request(tale, set, model);
    let annotate = |source: DetectError| DetectError::Tale {
        tale_id: tale.id.clone(),
        source: Box::new(source),
    };
    let first = provider.chat(&request).map_err(|e| annotate(e.into()))?;
    match parse_response(&first.text, set.len()) {
        Ok(parsed) => Ok((parsed, first.text)),
        Err(_) => {
            // One fresh call, cache bypassed, before giving up.
            let second = provider
                .chat_uncached(&request)
                .map_err(|e| annotate(e.into()))?;
            match parse_response(&second.text, set.len()) {
                Ok(parsed) => Ok((parsed, second.text)),
                Err(e) => Err(annotate(e)),
            }
        }
    }
}

/// Detects the set's motifs in a single tale.
pub fn detect_tale(
    tale: &Tale,
    set: &MotifSet,
    provider: &dyn ChatProvider,
    model: &str,
) -> Result<MotifResponse, DetectError> {
    detect_tale_raw(tale, set, provider, model).map(|(response, _)| response)
}

/// Runs detection over a whole corpus with at most `concurrency` requests in
/// flight. Results follow corpus order whatever order calls complete in; if
/// any tale still fails after its retry, the whole run fails with the list of
/// failed tale ids.
pub fn run_detection(
    corpus: &Corpus,
    set: &MotifSet,
    provider: &dyn ChatProvider,
    model: &str,
    concurrency: usize,
) -> Result<DetectionRun, DetectError> {
    type Slot = Mutex<Option<Result<(MotifResponse, String), DetectError>>>;
    let workers = concurrency.max(1).min(corpus.len().max(1));
    let slots: Vec<Slot> = (0..corpus.len()).map(|_| Mutex::new(None)).collect();
    let next = std::sync::atomic::AtomicUsize::new(0);

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                if i >= corpus.len() {
                    break;
                }
                let outcome = detect_tale_raw(&corpus.tales[i], set, provider, model);
                *slots[i].lock().expect("result slot poisoned") = Some(outcome);
            });
        }
    });

    let mut results = Vec::with_capacity(corpus.len());
    let mut failures = Vec::new();
    for (tale, slot) in corpus.tales.iter().zip(slots) {
        match slot.into_inner().expect("result slot poisoned").expect("worker filled slot") {
            Ok((response, raw)) => results.push(TaleResult {
                tale_id: tale.id.clone(),
                presence: response.presence,
                comments: response.comments,
                raw,
            }),
            Err(e) => failures.push((tale.id.clone(), e)),
        }
    }
    if !failures.is_empty() {
        return Err(DetectError::Aggregate(failures));
    }
    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    Ok(DetectionRun {
        corpus: corpus.name.clone(),
        motif_set: set.name.clone(),
        model: model.to_string(),
        results,
        timestamp,
    })
}

/// Fraction of (tale, motif) cells where the run agrees with gold: true
/// positives plus true negatives over all cells.
pub fn evaluate_accuracy(run: &DetectionRun, gold: &GoldAnnotations) -> Result<f64, DetectError> {
    if run.motif_set != gold.motif_set_name {
        return Err(DetectError::SetMismatch {
            run: run.motif_set.clone(),
            gold: gold.motif_set_name.clone(),
        });
    }
    let mut total = 0usize;
    let mut correct = 0usize;
    for result in &run.results {
        for (j, predicted) in result.presence.iter().enumerate() {
            let code = gold.codes.get(j).ok_or_else(|| DetectError::CoverageGap {
                tale_id: result.tale_id.clone(),
                code: format!("column {j}"),
            })?;
            let truth = gold
                .get(&result.tale_id, code)
                .ok_or_else(|| DetectError::CoverageGap {
                    tale_id: result.tale_id.clone(),
                    code: code.clone(),
                })?;
            total += 1;
            if truth == *predicted {
                correct += 1;
            }
        }
    }
    if total == 0 {
        return Err(DetectError::CoverageGap {
            tale_id: "<empty run>".into(),
            code: "<none>".into(),
        });
    }
    Ok(correct as f64 / total as f64)
}

/// Builds gold annotations whose table equals a run's verdicts, for scoring
/// self-consistency and fixtures.
pub fn gold_from_run(run: &DetectionRun, codes: Vec<String>) -> GoldAnnotations {
    let tale_ids = run.results.iter().map(|r| r.tale_id.clone()).collect();
    let rows = run.results.iter().map(|r| r.presence.clone()).collect();
    GoldAnnotations::from_rows(run.motif_set.clone(), codes, tale_ids, rows)
        .expect("run rows are rectangular")
}

/// A scripted provider that answers each tale's detection request with a
/// rendering of its gold row, so parsing recovers gold exactly.
pub fn gold_oracle_provider(
    corpus: &Corpus,
    set: &MotifSet,
    gold: &GoldAnnotations,
    model: &str,
) -> Result<MockChatProvider, DetectError> {
    let mut provider = MockChatProvider::scripted(Default::default());
    for tale in &corpus.tales {
        let row = gold.row(&tale.id).ok_or_else(|| DetectError::CoverageGap {
            tale_id: tale.id.clone(),
            code: "<row>".into(),
        })?;
        let response = MotifResponse {
            presence: row.to_vec(),
            comments: BTreeMap::new(),
        };
        provider.insert(&detection_request(tale, set, model), render_response(&response));
    }
    Ok(provider)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{builtin_set, SetName};
    use crate::corpus::Region;

    fn tale(id: &str, text: &str) -> Tale {
        Tale {
            id: id.into(),
            title: id.into(),
            text: text.into(),
            language: "en".into(),
            region: Region::Unknown,
            source: String::new(),
        }
    }

    #[test]
    fn parses_plain_yes_no_sequence() {
        let parsed = parse_response("1. yes 2. no 3. yes", 3).unwrap();
        assert_eq!(parsed.presence, vec![true, false, true]);
        assert!(parsed.comments.is_empty());
    }

    #[test]
    fn parses_newline_separated_items_with_case_variation() {
        let parsed = parse_response("1. Yes\n2. NO.\n3. yes,", 3).unwrap();
        assert_eq!(parsed.presence, vec![true, false, true]);
    }

    #[test]
    fn keeps_comment_and_excludes_it_from_verdict() {
        let parsed = parse_response("1. yes 2. no 3. no — a cow helps instead of birds", 3).unwrap();
        assert_eq!(parsed.presence, vec![true, false, false]);
        assert_eq!(
            parsed.comments.get(&2).map(String::as_str),
            Some("a cow helps instead of birds")
        );
    }

    #[test]
    fn yes_with_contradicting_comment_stays_yes() {
        let parsed = parse_response("1. yes — but only a fur shoe 2. no", 2).unwrap();
        assert!(parsed.presence[0]);
        assert_eq!(
            parsed.comments.get(&0).map(String::as_str),
            Some("but only a fur shoe")
        );
    }

    #[test]
    fn missing_item_names_first_offender() {
        match parse_response("1. yes 2. yes", 3) {
            Err(DetectError::MissingItem { index }) => assert_eq!(index, 3),
            other => panic!("expected missing item, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_item_is_rejected() {
        match parse_response("1. yes 1. no 2. yes", 2) {
            Err(DetectError::DuplicateItem { index }) => assert_eq!(index, 1),
            other => panic!("expected duplicate item, got {other:?}"),
        }
    }

    #[test]
    fn ambiguous_tokens_are_parse_errors() {
        assert!(matches!(
            parse_response("1. partially 2. no", 2),
            Err(DetectError::BadToken { index: 1, .. })
        ));
        assert!(matches!(
            parse_response("1. yes? 2. no", 2),
            Err(DetectError::BadToken { index: 1, .. })
        ));
    }

    #[test]
    fn super14_prompt_matches_published_wording() {
        let prompt = build_prompt(&builtin_set(SetName::Super14));
        assert_eq!(prompt.system, SYSTEM_MESSAGE);
        assert!(prompt.system.ends_with("Follow the instructions carefully."));
        assert!(prompt.user.contains(
            "For each motif, return 'yes' if the motif is present in the story, return 'no' if the motif is absent."
        ));
        assert!(prompt.user.ends_with(". Example: 1. yes 2. no etc."));
    }

    #[test]
    fn one_motif_prompt_has_single_item_list() {
        let set = crate::catalog::MotifSet {
            name: "one".into(),
            motifs: vec![crate::catalog::MotifDef {
                code: "H36.1".into(),
                label: "Slipper test".into(),
                description: String::new(),
            }],
        };
        let prompt = build_prompt(&set);
        assert!(prompt
            .user
            .contains("Choose among the following motifs: 1. Slipper test. Example:"));
    }

    #[test]
    fn story_is_appended_after_a_blank_line() {
        let prompt = build_prompt(&builtin_set(SetName::Super14));
        let full = prompt.with_story("Once upon a time.");
        assert!(full.ends_with("\n\nStory:\nOnce upon a time."));
        assert!(full.starts_with(&prompt.user));
    }

    #[test]
    fn all_no_default_mock_detects_nothing() {
        let set = builtin_set(SetName::Super14);
        let default = render_response(&MotifResponse::all_absent(set.len()));
        let provider = MockChatProvider::constant(default);
        let t = tale("t1", "A story.");
        let response = detect_tale(&t, &set, &provider, "mock").unwrap();
        assert_eq!(response.presence, vec![false; 14]);
    }

    #[test]
    fn garbage_twice_fails_with_tale_id() {
        let set = builtin_set(SetName::Super14);
        let provider = MockChatProvider::constant("gibberish");
        let t = tale("t9", "A story.");
        let err = detect_tale(&t, &set, &provider, "mock").unwrap_err();
        assert!(err.to_string().contains("t9"), "{err}");
        assert_eq!(provider.calls(), 2); // first try plus one retry
    }

    #[test]
    fn parse_failure_retries_once_with_fresh_call() {
        let set = builtin_set(SetName::Super14);
        let good = render_response(&MotifResponse::all_absent(set.len()));
        // Scripted to fail: constant garbage. The retry also gets garbage, so
        // two calls total are observed.
        let provider = MockChatProvider::constant("nope");
        let t = tale("t1", "text");
        let _ = detect_tale(&t, &set, &provider, "mock");
        assert_eq!(provider.calls(), 2);
        // A provider that answers correctly needs exactly one call.
        let provider = MockChatProvider::constant(good);
        detect_tale(&t, &set, &provider, "mock").unwrap();
        assert_eq!(provider.calls(), 1);
    }

    #[test]
    fn empty_corpus_runs_to_empty() {
        let set = builtin_set(SetName::Super14);
        let corpus = Corpus {
            name: "empty".into(),
            tales: vec![],
        };
        let provider = MockChatProvider::constant("unused");
        let run = run_detection(&corpus, &set, &provider, "mock", 4).unwrap();
        assert!(run.results.is_empty());
    }

    #[test]
    fn aggregate_error_lists_failed_tales() {
        let set = builtin_set(SetName::Super14);
        let corpus = Corpus {
            name: "two".into(),
            tales: vec![tale("ok", "story one"), tale("bad", "story two")],
        };
        let good = render_response(&MotifResponse::all_absent(set.len()));
        let mut provider = MockChatProvider::scripted(Default::default());
        provider.insert(&detection_request(&corpus.tales[0], &set, "mock"), good);
        // "bad" has no script and no default, so its calls error out.
        match run_detection(&corpus, &set, &provider, "mock", 2) {
            Err(DetectError::Aggregate(failures)) => {
                assert_eq!(failures.len(), 1);
                assert_eq!(failures[0].0, "bad");
            }
            other => panic!("expected aggregate error, got {other:?}"),
        }
    }

    #[test]
    fn completion_order_does_not_change_run_output() {
        let set = builtin_set(SetName::Super14);
        let corpus = Corpus {
            name: "scrambled".into(),
            tales: (0..12).map(|i| tale(&format!("t{i}"), &format!("story {i}"))).collect(),
        };
        let responses: Vec<String> = (0..12)
            .map(|i| {
                let mut r = MotifResponse::all_absent(set.len());
                r.presence[i % set.len()] = true;
                render_response(&r)
            })
            .collect();
        let run_with_jitter = |seed: u64| {
            let mut provider = MockChatProvider::scripted(Default::default());
            for (tale, text) in corpus.tales.iter().zip(&responses) {
                provider.insert(&detection_request(tale, &set, "mock"), text.clone());
            }
            let provider = provider.with_latency_jitter(seed, 15);
            run_detection(&corpus, &set, &provider, "mock", 4).unwrap()
        };
        let a = run_with_jitter(1);
        let b = run_with_jitter(99);
        assert_eq!(a.results, b.results);
        let ids: Vec<&str> = a.results.iter().map(|r| r.tale_id.as_str()).collect();
        let expected: Vec<String> = (0..12).map(|i| format!("t{i}")).collect();
        assert_eq!(ids, expected.iter().map(String::as_str).collect::<Vec<_>>());
    }

    #[test]
    fn accuracy_counts_true_positives_and_negatives() {
        let run = DetectionRun {
            corpus: "c".into(),
            motif_set: "atu15".into(),
            model: "mock".into(),
            results: vec![
                TaleResult {
                    tale_id: "a".into(),
                    presence: vec![true, false, true],
                    comments: BTreeMap::new(),
                    raw: String::new(),
                },
                TaleResult {
                    tale_id: "b".into(),
                    presence: vec![false, false, true],
                    comments: BTreeMap::new(),
                    raw: String::new(),
                },
            ],
            timestamp: 0,
        };
        let gold = GoldAnnotations::from_rows(
            "atu15",
            vec!["m1".into(), "m2".into(), "m3".into()],
            vec!["a".into(), "b".into()],
            vec![vec![true, true, true], vec![false, true, false]],
        )
        .unwrap();
        // Disagreements: a/m2, b/m2, b/m3 -> 3 of 6 wrong.
        let accuracy = evaluate_accuracy(&run, &gold).unwrap();
        assert!((accuracy - 0.5).abs() < 1e-12);
    }

    #[test]
    fn detect_tale_recovers_gold_row_through_oracle_mock() {
        let set = builtin_set(SetName::Atu510a15);
        let corpus = Corpus {
            name: "g".into(),
            tales: vec![tale("t1", "a tale"), tale("t2", "another tale")],
        };
        let rows = vec![
            (0..15).map(|j| j % 2 == 0).collect::<Vec<bool>>(),
            (0..15).map(|j| j % 3 == 0).collect::<Vec<bool>>(),
        ];
        let gold = GoldAnnotations::from_rows(
            set.name.clone(),
            set.codes(),
            vec!["t1".into(), "t2".into()],
            rows.clone(),
        )
        .unwrap();
        let provider = gold_oracle_provider(&corpus, &set, &gold, "mock").unwrap();
        for (tale, row) in corpus.tales.iter().zip(&rows) {
            let response = detect_tale(tale, &set, &provider, "mock").unwrap();
            assert_eq!(&response.presence, row);
        }
    }

    #[test]
    fn two_tales_fifteen_motifs_three_disagreements() {
        let truth: Vec<Vec<bool>> = vec![vec![true; 15], vec![false; 15]];
        let mut predicted = truth.clone();
        predicted[0][0] = false;
        predicted[0][7] = false;
        predicted[1][14] = true;
        let run = DetectionRun {
            corpus: "c".into(),
            motif_set: "s".into(),
            model: "mock".into(),
            results: vec![
                TaleResult {
                    tale_id: "a".into(),
                    presence: predicted[0].clone(),
                    comments: BTreeMap::new(),
                    raw: String::new(),
                },
                TaleResult {
                    tale_id: "b".into(),
                    presence: predicted[1].clone(),
                    comments: BTreeMap::new(),
                    raw: String::new(),
                },
            ],
            timestamp: 0,
        };
        let gold = GoldAnnotations::from_rows(
            "s",
            (0..15).map(|j| format!("M{j}")).collect(),
            vec!["a".into(), "b".into()],
            truth,
        )
        .unwrap();
        let accuracy = evaluate_accuracy(&run, &gold).unwrap();
        assert!((accuracy - 27.0 / 30.0).abs() < 1e-12);
    }

    #[test]
    fn accuracy_against_own_gold_is_one() {
        let run = DetectionRun {
            corpus: "c".into(),
            motif_set: "s".into(),
            model: "mock".into(),
            results: vec![TaleResult {
                tale_id: "a".into(),
                presence: vec![true, false],
                comments: BTreeMap::new(),
                raw: String::new(),
            }],
            timestamp: 0,
        };
        let gold = gold_from_run(&run, vec!["m1".into(), "m2".into()]);
        assert_eq!(evaluate_accuracy(&run, &gold).unwrap(), 1.0);
    }

    #[test]
    fn run_json_round_trips_with_comments_and_raw_text() {
        let dir = tempfile::tempdir().unwrap();
        let mut comments = BTreeMap::new();
        comments.insert(2usize, "a cow helps instead of birds".to_string());
        let run = DetectionRun {
            corpus: "c".into(),
            motif_set: "atu15".into(),
            model: "mock".into(),
            results: vec![TaleResult {
                tale_id: "t1".into(),
                presence: vec![true, false, false],
                comments,
                raw: "1. yes 2. no 3. no — a cow helps instead of birds".into(),
            }],
            timestamp: 1_700_000_000,
        };
        let path = dir.path().join("run.json");
        run.save(&path).unwrap();
        assert_eq!(DetectionRun::load(&path).unwrap(), run);
    }

    #[test]
    fn coverage_gap_is_an_error() {
        let run = DetectionRun {
            corpus: "c".into(),
            motif_set: "s".into(),
            model: "mock".into(),
            results: vec![TaleResult {
                tale_id: "missing".into(),
                presence: vec![true],
                comments: BTreeMap::new(),
                raw: String::new(),
            }],
            timestamp: 0,
        };
        let gold =
            GoldAnnotations::from_rows("s", vec!["m1".into()], vec!["other".into()], vec![vec![true]])
                .unwrap();
        assert!(matches!(
            evaluate_accuracy(&run, &gold),
            Err(DetectError::CoverageGap { .. })
        ));
    }
}
