//! Rule-based recognition of two-hand "point on hand" signs.
//!
//! One hand shows an open palm while the other points at one of its
//! landmarks; the landmark pointed at selects the sign. The pipeline is a
//! fixed cascade — hand count, role assignment, nearest landmark, distance
//! gate, map lookup — and every early exit is reported as its own outcome so
//! downstream consumers can distinguish *why* no sign was produced.

use std::collections::BTreeMap;
use std::error::Error;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::geometry::{
    is_open_palm, is_pointing, nearest_landmark, relative_threshold, NearestResult,
};
use crate::landmark::{index, Frame, HandLandmarks, LANDMARK_COUNT};

/// Mapping from open-palm landmark indices to sign labels.
///
/// Serialized as a JSON object keyed by the landmark index:
/// `{"4": "A", "8": "D", ...}`. Indices must be in `0..=20` and labels
/// nonempty; each index maps to at most one label (different indices may
/// share a label).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeypointMap {
    entries: BTreeMap<usize, String>,
}

/// Validation failures for keypoint maps.
#[derive(Debug)]
pub enum MapError {
    Json(serde_json::Error),
    /// A key did not parse as a landmark index.
    BadIndex(String),
    /// An index outside `0..=20`.
    IndexOutOfRange(usize),
    /// An empty label string.
    EmptyLabel(usize),
}

impl fmt::Display for MapError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MapError::Json(e) => write!(f, "invalid keypoint map JSON: {e}"),
            MapError::BadIndex(k) => write!(f, "keypoint map key {k:?} is not a landmark index"),
            MapError::IndexOutOfRange(i) => {
                write!(f, "landmark index {i} outside 0..={}", LANDMARK_COUNT - 1)
            }
            MapError::EmptyLabel(i) => write!(f, "empty label for landmark index {i}"),
        }
    }
}

impl Error for MapError {}

impl KeypointMap {
    /// Builds a map from `(index, label)` pairs. A repeated index keeps the
    /// last label given for it.
    pub fn new<I, S>(entries: I) -> Result<Self, MapError>
    where
        I: IntoIterator<Item = (usize, S)>,
        S: Into<String>,
    {
        let mut map = BTreeMap::new();
        for (idx, label) in entries {
            let label = label.into();
            if idx >= LANDMARK_COUNT {
                return Err(MapError::IndexOutOfRange(idx));
            }
            if label.is_empty() {
                return Err(MapError::EmptyLabel(idx));
            }
            map.insert(idx, label);
        }
        Ok(KeypointMap { entries: map })
    }

    /// Built-in eleven-target layout used when no map file is given.
    ///
    /// Targets run thumb-side to pinky-side across the palm: the four
    /// fingertips and thumb tip, the four knuckles, the thumb knuckle and
    /// the wrist.
    pub fn default_map() -> Self {
        KeypointMap::new([
            (index::THUMB_TIP, "A"),
            (index::THUMB_MCP, "B"),
            (index::INDEX_MCP, "C"),
            (index::INDEX_TIP, "D"),
            (index::MIDDLE_MCP, "E"),
            (index::MIDDLE_TIP, "F"),
            (index::RING_MCP, "G"),
            (index::RING_TIP, "H"),
            (index::PINKY_MCP, "I"),
            (index::PINKY_TIP, "J"),
            (index::WRIST, "K"),
        ])
        .expect("built-in map entries are valid")
    }

    /// Parses the JSON object form.
    pub fn from_json(json: &str) -> Result<Self, MapError> {
        let raw: BTreeMap<String, String> = serde_json::from_str(json).map_err(MapError::Json)?;
        let mut entries = Vec::with_capacity(raw.len());
        for (key, label) in raw {
            let idx: usize = key.parse().map_err(|_| MapError::BadIndex(key.clone()))?;
            entries.push((idx, label));
        }
        KeypointMap::new(entries)
    }

    /// Serializes to the JSON object form with numerically sorted keys.
    pub fn to_json(&self) -> String {
        let raw: BTreeMap<String, &String> = self
            .entries
            .iter()
            .map(|(idx, label)| (idx.to_string(), label))
            .collect();
        // Keys sort as strings here, which is cosmetic only; parsing is
        // order-independent.
        serde_json::to_string_pretty(&raw).expect("string map serialization is total")
    }

    /// Label assigned to landmark `idx`, if any.
    pub fn sign(&self, idx: usize) -> Option<&str> {
        self.entries.get(&idx).map(String::as_str)
    }

    /// Entries in ascending landmark-index order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, &str)> {
        self.entries.iter().map(|(i, l)| (*i, l.as_str()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Distinct labels in ascending order.
    pub fn labels(&self) -> Vec<String> {
        let mut labels: Vec<String> = self.entries.values().cloned().collect();
        labels.sort();
        labels.dedup();
        labels
    }
}

/// Which of the frame's two hands is the pointing one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointingHand {
    First,
    Second,
}

/// Roles resolved for a two-hand frame.
#[derive(Debug, Clone, Copy)]
pub struct RoleAssignment<'a> {
    pub pointing: &'a HandLandmarks,
    pub open_palm: &'a HandLandmarks,
    pub pointing_hand: PointingHand,
}

/// Decides which hand points and which shows the palm.
///
/// Returns `None` unless the frame has exactly two hands and they can be
/// split into one pointing hand and one open palm. A hand that happens to
/// satisfy both predicates takes whichever role completes a valid pair; if
/// both assignments would be valid, the first hand in frame order points.
pub fn assign_roles(frame: &Frame) -> Option<RoleAssignment<'_>> {
    let hands = frame.hands();
    if hands.len() != 2 {
        return None;
    }
    let first_points = is_pointing(&hands[0]) && is_open_palm(&hands[1]);
    let second_points = is_pointing(&hands[1]) && is_open_palm(&hands[0]);
    if first_points {
        Some(RoleAssignment {
            pointing: &hands[0],
            open_palm: &hands[1],
            pointing_hand: PointingHand::First,
        })
    } else if second_points {
        Some(RoleAssignment {
            pointing: &hands[1],
            open_palm: &hands[0],
            pointing_hand: PointingHand::Second,
        })
    } else {
        None
    }
}

/// Result of the rule-based cascade for one frame.
///
/// `Sign` is the only accepting outcome; the others name the stage that
/// rejected the frame. Outcomes that got past role assignment carry the
/// nearest-landmark measurement and the distance gate that was applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RbOutcome {
    /// A sign was recognized.
    Sign {
        label: String,
        nearest: NearestResult,
        threshold: f64,
        pointing_hand: PointingHand,
    },
    /// Frame did not contain exactly two hands.
    NotTwoHands,
    /// Two hands, but no valid pointing / open-palm split.
    NotPointOnHand,
    /// Fingertip too far from every palm landmark.
    OutOfThreshold {
        nearest: NearestResult,
        threshold: f64,
        pointing_hand: PointingHand,
    },
    /// Fingertip near a landmark that the map assigns no label.
    UnmappedLandmark {
        nearest: NearestResult,
        threshold: f64,
        pointing_hand: PointingHand,
    },
}

impl RbOutcome {
    /// The recognized label, when the outcome is `Sign`.
    pub fn label(&self) -> Option<&str> {
        match self {
            RbOutcome::Sign { label, .. } => Some(label),
            _ => None,
        }
    }
}

/// Runs the full rule-based cascade on one frame.
///
/// Stages, in order:
/// 1. hand count must be exactly 2, else `NotTwoHands`;
/// 2. roles must resolve via [`assign_roles`], else `NotPointOnHand`;
/// 3. the pointing index fingertip is located and the nearest open-palm
///    landmark found (xy distance, ties to the lowest index);
/// 4. a distance strictly greater than [`relative_threshold`] of the palm
///    hand yields `OutOfThreshold` (a distance exactly at the gate passes);
/// 5. an unmapped nearest landmark yields `UnmappedLandmark`, otherwise the
///    mapped label is returned as `Sign`.
pub fn classify_point_on_hand(frame: &Frame, map: &KeypointMap) -> RbOutcome {
    if frame.hand_count() != 2 {
        return RbOutcome::NotTwoHands;
    }
    let Some(roles) = assign_roles(frame) else {
        return RbOutcome::NotPointOnHand;
    };
    let tip = roles.pointing.landmark(index::INDEX_TIP);
    let nearest = nearest_landmark(tip.x, tip.y, roles.open_palm);
    let threshold = relative_threshold(roles.open_palm);
    if nearest.distance > threshold {
        return RbOutcome::OutOfThreshold {
            nearest,
            threshold,
            pointing_hand: roles.pointing_hand,
        };
    }
    match map.sign(nearest.landmark_index) {
        None => RbOutcome::UnmappedLandmark {
            nearest,
            threshold,
            pointing_hand: roles.pointing_hand,
        },
        Some(label) => RbOutcome::Sign {
            label: label.to_owned(),
            nearest,
            threshold,
            pointing_hand: roles.pointing_hand,
        },
    }
}
