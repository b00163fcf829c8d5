//! Canonical data model for 21-point hand landmarks.
//!
//! All downstream geometry assumes a right-handed frame with y increasing
//! upward ("up" = away from the wrist for an upright hand). Detectors that
//! emit image coordinates (y down) must be adapted via [`canonicalize`]
//! before any predicate or classifier runs.

use std::error::Error;
use std::fmt;

/// Number of landmarks per hand.
pub const LANDMARK_COUNT: usize = 21;

/// Landmark indices by anatomical name.
///
/// `0` is the wrist; each finger runs base-to-tip. For the four fingers the
/// chain is MCP (knuckle), PIP, DIP, TIP; the thumb runs CMC, MCP, IP, TIP.
pub mod index {
    pub const WRIST: usize = 0;
    pub const THUMB_CMC: usize = 1;
    pub const THUMB_MCP: usize = 2;
    pub const THUMB_IP: usize = 3;
    pub const THUMB_TIP: usize = 4;
    pub const INDEX_MCP: usize = 5;
    pub const INDEX_PIP: usize = 6;
    pub const INDEX_DIP: usize = 7;
    pub const INDEX_TIP: usize = 8;
    pub const MIDDLE_MCP: usize = 9;
    pub const MIDDLE_PIP: usize = 10;
    pub const MIDDLE_DIP: usize = 11;
    pub const MIDDLE_TIP: usize = 12;
    pub const RING_MCP: usize = 13;
    pub const RING_PIP: usize = 14;
    pub const RING_DIP: usize = 15;
    pub const RING_TIP: usize = 16;
    pub const PINKY_MCP: usize = 17;
    pub const PINKY_PIP: usize = 18;
    pub const PINKY_DIP: usize = 19;
    pub const PINKY_TIP: usize = 20;
}

/// A single 3-D landmark position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Landmark {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Landmark {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Landmark { x, y, z }
    }

    /// True when all three components are finite.
    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

/// Which hand the detector believes produced the landmarks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Handedness {
    Left,
    Right,
}

impl Handedness {
    /// Canonical wire spelling (`"Left"` / `"Right"`).
    pub fn as_str(self) -> &'static str {
        match self {
            Handedness::Left => "Left",
            Handedness::Right => "Right",
        }
    }

    pub fn from_str_exact(s: &str) -> Option<Self> {
        match s {
            "Left" => Some(Handedness::Left),
            "Right" => Some(Handedness::Right),
            _ => None,
        }
    }
}

/// Validation failures for landmark data.
#[derive(Debug, Clone, PartialEq)]
pub enum LandmarkError {
    /// A landmark component was NaN or infinite.
    NonFinite { landmark: usize },
    /// Detection score outside `[0, 1]`.
    ScoreOutOfRange(f64),
    /// More than two hands in one frame.
    TooManyHands(usize),
}

impl fmt::Display for LandmarkError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LandmarkError::NonFinite { landmark } => {
                write!(f, "landmark {landmark} has a non-finite component")
            }
            LandmarkError::ScoreOutOfRange(s) => {
                write!(f, "detection score {s} outside [0, 1]")
            }
            LandmarkError::TooManyHands(n) => {
                write!(f, "frame carries {n} hands; at most 2 are supported")
            }
        }
    }
}

impl Error for LandmarkError {}

/// One detected hand: 21 finite landmarks, a handedness tag and a
/// detection score in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HandLandmarks {
    landmarks: [Landmark; LANDMARK_COUNT],
    handedness: Handedness,
    score: f64,
}

impl HandLandmarks {
    /// Builds a hand after validating every landmark and the score.
    pub fn new(
        landmarks: [Landmark; LANDMARK_COUNT],
        handedness: Handedness,
        score: f64,
    ) -> Result<Self, LandmarkError> {
        for (i, l) in landmarks.iter().enumerate() {
            if !l.is_finite() {
                return Err(LandmarkError::NonFinite { landmark: i });
            }
        }
        if !(0.0..=1.0).contains(&score) || score.is_nan() {
            return Err(LandmarkError::ScoreOutOfRange(score));
        }
        Ok(HandLandmarks {
            landmarks,
            handedness,
            score,
        })
    }

    pub fn landmarks(&self) -> &[Landmark; LANDMARK_COUNT] {
        &self.landmarks
    }

    /// Position of landmark `i`. Panics if `i >= 21`.
    pub fn landmark(&self, i: usize) -> Landmark {
        self.landmarks[i]
    }

    pub fn handedness(&self) -> Handedness {
        self.handedness
    }

    pub fn score(&self) -> f64 {
        self.score
    }

    /// Applies `f` to every landmark position, revalidating the result.
    pub fn map_positions<F>(&self, f: F) -> Result<Self, LandmarkError>
    where
        F: Fn(Landmark) -> Landmark,
    {
        let mut landmarks = self.landmarks;
        for l in landmarks.iter_mut() {
            *l = f(*l);
        }
        HandLandmarks::new(landmarks, self.handedness, self.score)
    }

    /// The hand rigidly shifted by `(dx, dy, dz)`.
    ///
    /// Panics only if the shift pushes a coordinate out of `f64` range.
    pub fn translated(&self, dx: f64, dy: f64, dz: f64) -> Self {
        self.map_positions(|l| Landmark::new(l.x + dx, l.y + dy, l.z + dz))
            .expect("translation by finite offsets keeps landmarks finite")
    }
}

/// One timestamped detection result: zero, one or two hands.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    frame_id: String,
    hands: Vec<HandLandmarks>,
}

impl Frame {
    /// Builds a frame; rejects more than two hands.
    pub fn new(frame_id: impl Into<String>, hands: Vec<HandLandmarks>) -> Result<Self, LandmarkError> {
        if hands.len() > 2 {
            return Err(LandmarkError::TooManyHands(hands.len()));
        }
        Ok(Frame {
            frame_id: frame_id.into(),
            hands,
        })
    }

    pub fn frame_id(&self) -> &str {
        &self.frame_id
    }

    pub fn hands(&self) -> &[HandLandmarks] {
        &self.hands
    }

    /// Number of detected hands (0, 1 or 2). Drives route selection.
    pub fn hand_count(&self) -> usize {
        self.hands.len()
    }
}

/// Direction of increasing y in the source coordinate system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum YDirection {
    /// y grows upward; already canonical.
    #[default]
    Up,
    /// y grows downward (image/pixel convention); flipped on ingestion.
    Down,
}

/// Axis convention of an input source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AxisConvention {
    pub y_direction: YDirection,
}

impl AxisConvention {
    pub fn y_up() -> Self {
        AxisConvention {
            y_direction: YDirection::Up,
        }
    }

    pub fn y_down() -> Self {
        AxisConvention {
            y_direction: YDirection::Down,
        }
    }
}

/// Rewrites a frame into the canonical y-up frame.
///
/// For [`YDirection::Up`] this is the identity; for [`YDirection::Down`]
/// every y coordinate is negated, which preserves all distances and makes the
/// operation an involution. x, z, handedness and scores are untouched.
pub fn canonicalize(frame: &Frame, convention: AxisConvention) -> Frame {
    match convention.y_direction {
        YDirection::Up => frame.clone(),
        YDirection::Down => {
            let hands = frame
                .hands()
                .iter()
                .map(|h| {
                    h.map_positions(|l| Landmark::new(l.x, -l.y, l.z))
                        .expect("negating a finite y keeps landmarks finite")
                })
                .collect();
            Frame::new(frame.frame_id().to_owned(), hands)
                .expect("hand count unchanged by canonicalization")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_landmarks() -> [Landmark; LANDMARK_COUNT] {
        let mut out = [Landmark::new(0.0, 0.0, 0.0); LANDMARK_COUNT];
        for (i, l) in out.iter_mut().enumerate() {
            *l = Landmark::new(i as f64 * 0.01, 0.5 - i as f64 * 0.02, -0.001 * i as f64);
        }
        out
    }

    #[test]
    fn rejects_non_finite_landmark() {
        let mut lms = grid_landmarks();
        lms[7].y = f64::NAN;
        let err = HandLandmarks::new(lms, Handedness::Left, 0.9).unwrap_err();
        assert_eq!(err, LandmarkError::NonFinite { landmark: 7 });
    }

    #[test]
    fn rejects_score_outside_unit_interval() {
        let lms = grid_landmarks();
        assert!(matches!(
            HandLandmarks::new(lms, Handedness::Left, 1.2),
            Err(LandmarkError::ScoreOutOfRange(_))
        ));
        assert!(matches!(
            HandLandmarks::new(lms, Handedness::Left, -0.1),
            Err(LandmarkError::ScoreOutOfRange(_))
        ));
        assert!(HandLandmarks::new(lms, Handedness::Left, 0.0).is_ok());
        assert!(HandLandmarks::new(lms, Handedness::Left, 1.0).is_ok());
    }

    #[test]
    fn rejects_three_hands() {
        let hand = HandLandmarks::new(grid_landmarks(), Handedness::Right, 0.8).unwrap();
        let err = Frame::new("f0", vec![hand.clone(), hand.clone(), hand]).unwrap_err();
        assert_eq!(err, LandmarkError::TooManyHands(3));
    }

    #[test]
    fn canonicalize_y_up_is_identity() {
        let hand = HandLandmarks::new(grid_landmarks(), Handedness::Right, 0.8).unwrap();
        let frame = Frame::new("f0", vec![hand]).unwrap();
        assert_eq!(canonicalize(&frame, AxisConvention::y_up()), frame);
    }

    #[test]
    fn canonicalize_y_down_is_an_involution() {
        let hand = HandLandmarks::new(grid_landmarks(), Handedness::Right, 0.8).unwrap();
        let frame = Frame::new("f0", vec![hand]).unwrap();
        let once = canonicalize(&frame, AxisConvention::y_down());
        assert_ne!(once, frame);
        let twice = canonicalize(&once, AxisConvention::y_down());
        assert_eq!(twice, frame);
        // Only y flips.
        let a = frame.hands()[0].landmark(4);
        let b = once.hands()[0].landmark(4);
        assert_eq!((a.x, -a.y, a.z), (b.x, b.y, b.z));
    }

    #[test]
    fn translation_shifts_every_landmark() {
        let hand = HandLandmarks::new(grid_landmarks(), Handedness::Left, 0.7).unwrap();
        let moved = hand.translated(0.3, -0.2, 0.05);
        for i in 0..LANDMARK_COUNT {
            let a = hand.landmark(i);
            let b = moved.landmark(i);
            assert_eq!((b.x, b.y, b.z), (a.x + 0.3, a.y - 0.2, a.z + 0.05));
        }
        assert_eq!(moved.handedness(), hand.handedness());
        assert_eq!(moved.score(), hand.score());
    }
}
