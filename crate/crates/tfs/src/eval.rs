//! Scoring: confusion matrices, bootstrap accuracy runs and detector audits.

use std::collections::HashMap;
use std::error::Error;
use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::landmark::HandLandmarks;
use crate::mlp::{train, Encoding, TrainConfig, TrainError};

/// Evaluation failures.
#[derive(Debug)]
pub enum EvalError {
    /// The declared label set was empty.
    EmptyLabelSet,
    /// A truth or predicted label fell outside the declared label set.
    UnknownLabel { label: String, side: &'static str },
    /// An audit record claimed usable keypoints without a detected hand.
    InconsistentAudit,
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::EmptyLabelSet => write!(f, "label set must not be empty"),
            EvalError::UnknownLabel { label, side } => {
                write!(f, "{side} label {label:?} is not in the declared label set")
            }
            EvalError::InconsistentAudit => {
                write!(f, "audit record marks keypoints usable but no hand detected")
            }
        }
    }
}

impl Error for EvalError {}

/// Truth-by-prediction counts over a fixed label set, with an extra
/// column for rejected (no-label) predictions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    labels: Vec<String>,
    /// `counts[truth][pred]`; the final column is "rejected".
    counts: Vec<Vec<u64>>,
}

/// Per-class recall entry from [`ConfusionMatrix::tp_rate_per_class`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassRate {
    pub label: String,
    /// Number of truth samples of this class.
    pub support: u64,
    /// Fraction of this class's samples predicted correctly; absent when
    /// the class has no truth samples.
    pub tp_rate: Option<f64>,
}

/// Builds a confusion matrix from `(truth, predicted)` pairs over a
/// declared label set. A `None` prediction counts as rejected; any label
/// outside the set is an error.
pub fn confusion(
    label_set: &[String],
    pairs: &[(String, Option<String>)],
) -> Result<ConfusionMatrix, EvalError> {
    if label_set.is_empty() {
        return Err(EvalError::EmptyLabelSet);
    }
    let index: HashMap<&str, usize> = label_set
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i))
        .collect();
    let n = label_set.len();
    let mut counts = vec![vec![0u64; n + 1]; n];
    for (truth, predicted) in pairs {
        let t = *index.get(truth.as_str()).ok_or_else(|| EvalError::UnknownLabel {
            label: truth.clone(),
            side: "truth",
        })?;
        let p = match predicted {
            None => n,
            Some(label) => *index.get(label.as_str()).ok_or_else(|| EvalError::UnknownLabel {
                label: label.clone(),
                side: "predicted",
            })?,
        };
        counts[t][p] += 1;
    }
    Ok(ConfusionMatrix {
        labels: label_set.to_vec(),
        counts,
    })
}

impl ConfusionMatrix {
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Count at `(truth row, predicted column)`; column index
    /// `labels().len()` is the rejected column.
    pub fn count(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth][predicted]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// Fraction of pairs predicted exactly right; rejected predictions
    /// count as wrong. `None` when the matrix is empty.
    pub fn accuracy(&self) -> Option<f64> {
        let total = self.total();
        if total == 0 {
            return None;
        }
        let correct: u64 = (0..self.labels.len()).map(|i| self.counts[i][i]).sum();
        Some(correct as f64 / total as f64)
    }

    /// Per-class recall, in label-set order.
    pub fn tp_rate_per_class(&self) -> Vec<ClassRate> {
        self.labels
            .iter()
            .enumerate()
            .map(|(i, label)| {
                let support: u64 = self.counts[i].iter().sum();
                ClassRate {
                    label: label.clone(),
                    support,
                    tp_rate: (support > 0).then(|| self.counts[i][i] as f64 / support as f64),
                }
            })
            .collect()
    }

    /// CSV rendering: header `truth,<labels...>,rejected`, one row per
    /// truth label.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("truth");
        for label in &self.labels {
            out.push(',');
            out.push_str(label);
        }
        out.push_str(",rejected\n");
        for (i, label) in self.labels.iter().enumerate() {
            out.push_str(label);
            for c in &self.counts[i] {
                out.push(',');
                out.push_str(&c.to_string());
            }
            out.push('\n');
        }
        out
    }
}

/// Bootstrap failures.
#[derive(Debug)]
pub enum BootstrapError {
    /// `repeats` must be at least 1 and the test set nonempty.
    InvalidRequest(String),
    /// Training failed during the given repeat.
    Train { repeat: u64, source: TrainError },
}

impl fmt::Display for BootstrapError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BootstrapError::InvalidRequest(msg) => write!(f, "invalid bootstrap request: {msg}"),
            BootstrapError::Train { repeat, source } => {
                write!(f, "training failed in bootstrap repeat {repeat}: {source}")
            }
        }
    }
}

impl Error for BootstrapError {
    fn source(&self) -> Option<&(dyn Error + 'static)> {
        match self {
            BootstrapError::Train { source, .. } => Some(source),
            _ => None,
        }
    }
}

/// Accuracy on a labelled set by plain prediction.
pub fn test_accuracy(model: &crate::mlp::MlpModel, test_set: &[(HandLandmarks, String)]) -> f64 {
    let correct = test_set
        .iter()
        .filter(|(hand, label)| model.predict(hand).label == *label)
        .count();
    correct as f64 / test_set.len() as f64
}

/// Repeated train/evaluate runs on bootstrap resamples of the training set.
///
/// Repeat `r` (0-based) resamples `train_set` with replacement to its
/// original size and trains with seed `config.seed + r`; the test set is
/// fixed. The resampling draw uses stream 1 of the per-repeat generator so
/// it never overlaps the training stream. Returns one held-out accuracy per
/// repeat; fully deterministic in `config.seed`.
pub fn bootstrap_eval(
    train_set: &[(HandLandmarks, String)],
    test_set: &[(HandLandmarks, String)],
    config: &TrainConfig,
    encoding: Encoding,
    repeats: u64,
) -> Result<Vec<f64>, BootstrapError> {
    if repeats == 0 {
        return Err(BootstrapError::InvalidRequest("repeats must be >= 1".into()));
    }
    if train_set.is_empty() || test_set.is_empty() {
        return Err(BootstrapError::InvalidRequest(
            "train and test sets must be nonempty".into(),
        ));
    }
    let n = train_set.len();
    let mut accuracies = Vec::with_capacity(repeats as usize);
    for r in 0..repeats {
        let repeat_seed = config.seed.wrapping_add(r);
        let mut rng = ChaCha8Rng::seed_from_u64(repeat_seed);
        rng.set_stream(1);
        let resampled: Vec<(HandLandmarks, String)> = (0..n)
            .map(|_| train_set[rng.random_range(0..n)].clone())
            .collect();
        let repeat_config = TrainConfig {
            seed: repeat_seed,
            ..config.clone()
        };
        let (model, _) = train(&resampled, &repeat_config, encoding)
            .map_err(|source| BootstrapError::Train { repeat: r, source })?;
        accuracies.push(test_accuracy(&model, test_set));
    }
    Ok(accuracies)
}

/// One detector-health observation, grouped by capture condition.
///
/// `keypoints_ok` can only hold when a hand was detected at all; the
/// constructor enforces that. `handedness_ok` is absent when handedness was
/// not assessed for the record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditRecord {
    group: String,
    hand_detect_ok: bool,
    keypoints_ok: bool,
    handedness_ok: Option<bool>,
}

impl AuditRecord {
    pub fn new(
        group: impl Into<String>,
        hand_detect_ok: bool,
        keypoints_ok: bool,
        handedness_ok: Option<bool>,
    ) -> Result<Self, EvalError> {
        if keypoints_ok && !hand_detect_ok {
            return Err(EvalError::InconsistentAudit);
        }
        Ok(AuditRecord {
            group: group.into(),
            hand_detect_ok,
            keypoints_ok,
            handedness_ok,
        })
    }

    pub fn group(&self) -> &str {
        &self.group
    }

    pub fn hand_detect_ok(&self) -> bool {
        self.hand_detect_ok
    }

    pub fn keypoints_ok(&self) -> bool {
        self.keypoints_ok
    }

    pub fn handedness_ok(&self) -> Option<bool> {
        self.handedness_ok
    }
}

/// Aggregate health of one capture-condition group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub group: String,
    pub total: u64,
    /// Records with a detected hand and usable keypoints.
    pub full_detect: u64,
    /// Records where no hand was detected.
    pub hand_failures: u64,
    /// Records with a hand but unusable keypoints.
    pub keypoint_failures: u64,
    /// Fraction of assessed records with correct handedness; absent when
    /// no record in the group was assessed.
    pub handedness_accuracy: Option<f64>,
}

/// Summarizes audit records by group, in order of first appearance.
///
/// Within each group `full_detect + hand_failures + keypoint_failures`
/// always equals `total`.
pub fn audit_summary(records: &[AuditRecord]) -> Vec<GroupSummary> {
    let mut order: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut summaries: Vec<GroupSummary> = Vec::new();
    let mut assessed: Vec<(u64, u64)> = Vec::new(); // (correct, total) handedness
    for rec in records {
        let i = *index.entry(rec.group.clone()).or_insert_with(|| {
            order.push(rec.group.clone());
            summaries.push(GroupSummary {
                group: rec.group.clone(),
                total: 0,
                full_detect: 0,
                hand_failures: 0,
                keypoint_failures: 0,
                handedness_accuracy: None,
            });
            assessed.push((0, 0));
            summaries.len() - 1
        });
        let s = &mut summaries[i];
        s.total += 1;
        if !rec.hand_detect_ok {
            s.hand_failures += 1;
        } else if rec.keypoints_ok {
            s.full_detect += 1;
        } else {
            s.keypoint_failures += 1;
        }
        if let Some(ok) = rec.handedness_ok {
            assessed[i].1 += 1;
            if ok {
                assessed[i].0 += 1;
            }
        }
    }
    for (s, (correct, total)) in summaries.iter_mut().zip(assessed) {
        if total > 0 {
            s.handedness_accuracy = Some(correct as f64 / total as f64);
        }
    }
    summaries
}

/// Failure while reading an audit CSV.
#[derive(Debug)]
pub enum AuditCsvError {
    Csv(csv::Error),
    /// Header was not `group,hand_detect_ok,keypoints_ok,handedness_ok`.
    BadHeader(String),
    /// A field on `line` (1-based) was not a recognized boolean.
    BadValue { line: usize, field: String },
    /// Record on `line` violated the keypoints-implies-detection rule.
    Inconsistent { line: usize },
}

impl fmt::Display for AuditCsvError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AuditCsvError::Csv(e) => write!(f, "audit file read failed: {e}"),
            AuditCsvError::BadHeader(h) => write!(
                f,
                "audit header must be \"group,hand_detect_ok,keypoints_ok,handedness_ok\", got {h:?}"
            ),
            AuditCsvError::BadValue { line, field } => {
                write!(f, "line {line}: {field:?} is not \"true\" or \"false\"")
            }
            AuditCsvError::Inconsistent { line } => {
                write!(f, "line {line}: keypoints_ok without hand_detect_ok")
            }
        }
    }
}

impl Error for AuditCsvError {}

impl From<csv::Error> for AuditCsvError {
    fn from(e: csv::Error) -> Self {
        AuditCsvError::Csv(e)
    }
}

const AUDIT_HEADER: [&str; 4] = ["group", "hand_detect_ok", "keypoints_ok", "handedness_ok"];

fn parse_bool(s: &str, line: usize) -> Result<bool, AuditCsvError> {
    match s {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(AuditCsvError::BadValue {
            line,
            field: other.to_owned(),
        }),
    }
}

/// Reads audit records; `handedness_ok` may be empty for "not assessed".
pub fn read_audit_csv<R: std::io::Read>(reader: R) -> Result<Vec<AuditRecord>, AuditCsvError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().ne(AUDIT_HEADER) {
        return Err(AuditCsvError::BadHeader(
            headers.iter().collect::<Vec<_>>().join(","),
        ));
    }
    let mut out = Vec::new();
    for (idx, row) in rdr.records().enumerate() {
        let line = idx + 2; // 1-based, after the header
        let row = row?;
        let group = row.get(0).unwrap_or("").to_owned();
        let hand = parse_bool(row.get(1).unwrap_or(""), line)?;
        let keypoints = parse_bool(row.get(2).unwrap_or(""), line)?;
        let handedness = match row.get(3).unwrap_or("") {
            "" => None,
            s => Some(parse_bool(s, line)?),
        };
        let rec = AuditRecord::new(group, hand, keypoints, handedness)
            .map_err(|_| AuditCsvError::Inconsistent { line })?;
        out.push(rec);
    }
    Ok(out)
}

/// Writes audit records in the standard four-column layout.
pub fn write_audit_csv<W: std::io::Write>(
    writer: W,
    records: &[AuditRecord],
) -> Result<(), csv::Error> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(AUDIT_HEADER)?;
    for rec in records {
        wtr.write_record([
            rec.group.as_str(),
            if rec.hand_detect_ok { "true" } else { "false" },
            if rec.keypoints_ok { "true" } else { "false" },
            match rec.handedness_ok {
                None => "",
                Some(true) => "true",
                Some(false) => "false",
            },
        ])?;
    }
    wtr.flush()?;
    Ok(())
}
