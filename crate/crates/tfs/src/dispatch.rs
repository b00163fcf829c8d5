//! Top-level recognition: route each frame by hand count.
//!
//! One detected hand means a static single-hand sign, handled by the
//! learned classifier; two hands mean a point-on-hand sign, handled by the
//! geometric rules. The two routes are kept fully separate — a frame is
//! never scored by both — so each prediction records which route produced
//! it.

use std::error::Error;
use std::fmt;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::landmark::Frame;
use crate::mlp::MlpModel;
use crate::rules::{classify_point_on_hand, KeypointMap, RbOutcome};

/// Which recognizer a frame was sent to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    /// One hand: learned single-hand classifier.
    SingleHand,
    /// Two hands: rule-based point-on-hand recognizer.
    PointOnHand,
    /// No hands: nothing to recognize.
    NoHands,
}

/// A routed prediction for one frame.
///
/// Exactly one payload is populated per route: `scores` for `SingleHand`,
/// `rb` for `PointOnHand`, neither for `NoHands`. `label` is present for
/// every single-hand frame and for two-hand frames whose rule outcome is an
/// accepted sign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignPrediction {
    pub route: Route,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    /// Per-class scores in the model's label order.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scores: Option<Vec<f64>>,
    /// Full rule-based outcome, including rejections.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rb: Option<RbOutcome>,
}

impl SignPrediction {
    /// Checks the route/payload pairing rules; used when reading
    /// predictions back from external files.
    pub fn validate(&self) -> Result<(), String> {
        match self.route {
            Route::SingleHand => {
                if self.scores.is_none() || self.rb.is_some() || self.label.is_none() {
                    return Err("single_hand predictions carry label and scores only".into());
                }
            }
            Route::PointOnHand => {
                if self.rb.is_none() || self.scores.is_some() {
                    return Err("point_on_hand predictions carry an rb outcome only".into());
                }
                let is_sign = matches!(self.rb, Some(RbOutcome::Sign { .. }));
                if is_sign != self.label.is_some() {
                    return Err("label must be present exactly for accepted rb signs".into());
                }
            }
            Route::NoHands => {
                if self.label.is_some() || self.scores.is_some() || self.rb.is_some() {
                    return Err("no_hands predictions carry no payload".into());
                }
            }
        }
        Ok(())
    }
}

/// Classifies one canonical (y-up) frame, choosing the route from the hand
/// count alone.
pub fn recognize(frame: &Frame, model: &MlpModel, map: &KeypointMap) -> SignPrediction {
    match frame.hand_count() {
        0 => SignPrediction {
            route: Route::NoHands,
            label: None,
            scores: None,
            rb: None,
        },
        1 => {
            let prediction = model.predict(&frame.hands()[0]);
            SignPrediction {
                route: Route::SingleHand,
                label: Some(prediction.label),
                scores: Some(prediction.scores),
                rb: None,
            }
        }
        _ => {
            let outcome = classify_point_on_hand(frame, map);
            SignPrediction {
                route: Route::PointOnHand,
                label: outcome.label().map(str::to_owned),
                scores: None,
                rb: Some(outcome),
            }
        }
    }
}

/// One serialized prediction line: the frame id plus the prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub frame_id: String,
    #[serde(flatten)]
    pub prediction: SignPrediction,
}

impl PredictionRecord {
    pub fn new(frame_id: impl Into<String>, prediction: SignPrediction) -> Self {
        PredictionRecord {
            frame_id: frame_id.into(),
            prediction,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("prediction serialization is total")
    }
}

/// Failure while reading a predictions file.
#[derive(Debug)]
pub enum PredictionStreamError {
    Io(std::io::Error),
    /// Line (1-based) that failed to parse or validate.
    Malformed { line: usize, cause: String },
}

impl fmt::Display for PredictionStreamError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PredictionStreamError::Io(e) => write!(f, "prediction stream read failed: {e}"),
            PredictionStreamError::Malformed { line, cause } => {
                write!(f, "malformed prediction on line {line}: {cause}")
            }
        }
    }
}

impl Error for PredictionStreamError {
    fn source(&self) -> Option<&(dyn Error + 'static)> {
        match self {
            PredictionStreamError::Io(e) => Some(e),
            _ => None,
        }
    }
}

/// Reads a JSONL prediction stream, validating every record.
pub fn parse_predictions<R: BufRead>(
    reader: R,
) -> Result<Vec<PredictionRecord>, PredictionStreamError> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(PredictionStreamError::Io)?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: PredictionRecord =
            serde_json::from_str(&line).map_err(|e| PredictionStreamError::Malformed {
                line: idx + 1,
                cause: e.to_string(),
            })?;
        rec.prediction
            .validate()
            .map_err(|cause| PredictionStreamError::Malformed { line: idx + 1, cause })?;
        out.push(rec);
    }
    Ok(out)
}
