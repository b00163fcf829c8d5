//! Geometric predicates and measurements on a single hand.
//!
//! Everything here works in the canonical y-up frame and, except where noted,
//! ignores the z component: the poses being tested are defined by their
//! image-plane silhouette, and depth from upstream detectors is too noisy to
//! gate on.

use serde::{Deserialize, Serialize};

use crate::landmark::{index, HandLandmarks, LANDMARK_COUNT};

/// The four non-thumb fingers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Finger {
    Index,
    Middle,
    Ring,
    Pinky,
}

impl Finger {
    pub const ALL: [Finger; 4] = [Finger::Index, Finger::Middle, Finger::Ring, Finger::Pinky];

    /// Landmark index of the finger's knuckle (MCP joint).
    pub fn mcp(self) -> usize {
        match self {
            Finger::Index => index::INDEX_MCP,
            Finger::Middle => index::MIDDLE_MCP,
            Finger::Ring => index::RING_MCP,
            Finger::Pinky => index::PINKY_MCP,
        }
    }

    /// Landmark index of the fingertip.
    pub fn tip(self) -> usize {
        match self {
            Finger::Index => index::INDEX_TIP,
            Finger::Middle => index::MIDDLE_TIP,
            Finger::Ring => index::RING_TIP,
            Finger::Pinky => index::PINKY_TIP,
        }
    }
}

/// In-plane direction of a finger: tip position minus knuckle position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FingerVector {
    pub dx: f64,
    pub dy: f64,
}

impl FingerVector {
    pub fn dot(self, other: FingerVector) -> f64 {
        self.dx * other.dx + self.dy * other.dy
    }

    /// Straight-line length from knuckle to tip.
    pub fn norm(self) -> f64 {
        self.dx.hypot(self.dy)
    }
}

/// The xy vector from a finger's knuckle to its tip.
pub fn finger_vector(hand: &HandLandmarks, finger: Finger) -> FingerVector {
    let mcp = hand.landmark(finger.mcp());
    let tip = hand.landmark(finger.tip());
    FingerVector {
        dx: tip.x - mcp.x,
        dy: tip.y - mcp.y,
    }
}

/// Open-palm test: four fingers extended upward, thumb spread to the side.
///
/// Requires, with strict inequalities (ties fail):
/// - each fingertip strictly above its own knuckle
///   (`y(tip) > y(mcp)` for index, middle, ring and pinky), and
/// - the thumb tip and the wrist on opposite sides of the thumb knuckle
///   along x: `(x(a4) - x(a2)) * (x(a0) - x(a2)) < 0`.
///
/// The thumb condition distinguishes a spread thumb from one folded across
/// the palm, and holds for either hand without special-casing handedness.
pub fn is_open_palm(hand: &HandLandmarks) -> bool {
    for finger in Finger::ALL {
        let tip = hand.landmark(finger.tip());
        let mcp = hand.landmark(finger.mcp());
        // Coordinates are finite by construction, so <= is the exact
        // negation of the strict "tip above knuckle" requirement.
        if tip.y <= mcp.y {
            return false;
        }
    }
    let wrist = hand.landmark(index::WRIST);
    let thumb_mcp = hand.landmark(index::THUMB_MCP);
    let thumb_tip = hand.landmark(index::THUMB_TIP);
    (thumb_tip.x - thumb_mcp.x) * (wrist.x - thumb_mcp.x) < 0.0
}

/// Pointing test: index finger extended, the other three folded back.
///
/// Requires the index finger vector to oppose each of the middle, ring and
/// pinky finger vectors: `v8 . v12 < 0`, `v8 . v16 < 0` and `v8 . v20 < 0`,
/// all strict. Built purely from knuckle-to-tip directions, so the test is
/// invariant under translation, rotation and uniform scaling of the hand.
pub fn is_pointing(hand: &HandLandmarks) -> bool {
    let v_index = finger_vector(hand, Finger::Index);
    [Finger::Middle, Finger::Ring, Finger::Pinky]
        .into_iter()
        .all(|f| v_index.dot(finger_vector(hand, f)) < 0.0)
}

/// Nearest landmark on a hand to a query point, with its distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NearestResult {
    /// Index (0..=20) of the closest landmark.
    pub landmark_index: usize,
    /// 2-D Euclidean distance from the query point to that landmark.
    pub distance: f64,
}

/// Scans all 21 landmarks of `hand` for the one closest to `(px, py)` in the
/// xy plane. Distance ties resolve to the lowest landmark index, so the
/// result is deterministic.
pub fn nearest_landmark(px: f64, py: f64, hand: &HandLandmarks) -> NearestResult {
    let mut best = NearestResult {
        landmark_index: 0,
        distance: f64::INFINITY,
    };
    for i in 0..LANDMARK_COUNT {
        let l = hand.landmark(i);
        let d = (l.x - px).hypot(l.y - py);
        if d < best.distance {
            best = NearestResult {
                landmark_index: i,
                distance: d,
            };
        }
    }
    best
}

/// Distance gate for accepting a touch: one third of the mean straight-line
/// finger length of the hand.
///
/// The mean is over the four knuckle-to-tip lengths |a8-a5|, |a12-a9|,
/// |a16-a13| and |a20-a17| (xy only). Because it is derived from the hand
/// itself, the gate scales with apparent hand size: translation leaves it
/// unchanged and uniform scaling by `s > 0` multiplies it by `s`.
pub fn relative_threshold(hand: &HandLandmarks) -> f64 {
    let total: f64 = Finger::ALL
        .into_iter()
        .map(|f| finger_vector(hand, f).norm())
        .sum();
    total / 4.0 / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landmark::{Handedness, Landmark};
    use proptest::prelude::*;

    /// Hand with all landmarks at explicitly chosen xy positions, z = 0.
    fn hand_from_xy(xy: [[f64; 2]; LANDMARK_COUNT]) -> HandLandmarks {
        let mut lms = [Landmark::new(0.0, 0.0, 0.0); LANDMARK_COUNT];
        for (l, p) in lms.iter_mut().zip(xy.iter()) {
            *l = Landmark::new(p[0], p[1], 0.0);
        }
        HandLandmarks::new(lms, Handedness::Right, 1.0).unwrap()
    }

    /// Minimal open-palm shape: fingers up, thumb tip on the far side of its
    /// knuckle from the wrist.
    fn open_palm_xy() -> [[f64; 2]; LANDMARK_COUNT] {
        [
            [0.50, 0.10], // wrist
            [0.40, 0.16],
            [0.33, 0.24],
            [0.28, 0.31],
            [0.24, 0.37], // thumb tip: x4 < x2 < x0
            [0.42, 0.42],
            [0.41, 0.55],
            [0.41, 0.64],
            [0.40, 0.72],
            [0.50, 0.44],
            [0.50, 0.58],
            [0.50, 0.68],
            [0.50, 0.76],
            [0.58, 0.43],
            [0.58, 0.56],
            [0.59, 0.65],
            [0.59, 0.72],
            [0.65, 0.40],
            [0.66, 0.50],
            [0.67, 0.57],
            [0.67, 0.63],
        ]
    }

    #[test]
    fn open_palm_accepts_canonical_shape() {
        assert!(is_open_palm(&hand_from_xy(open_palm_xy())));
    }

    #[test]
    fn open_palm_rejects_tip_at_knuckle_height() {
        // Exact tie on the index finger: strict inequality must fail.
        let mut xy = open_palm_xy();
        xy[index::INDEX_TIP][1] = xy[index::INDEX_MCP][1];
        assert!(!is_open_palm(&hand_from_xy(xy)));
    }

    #[test]
    fn open_palm_rejects_thumb_on_wrist_side() {
        // Fold the thumb across: tip now on the same side of a2 as the wrist.
        let mut xy = open_palm_xy();
        xy[index::THUMB_TIP][0] = 0.45;
        assert!(!is_open_palm(&hand_from_xy(xy)));
    }

    #[test]
    fn open_palm_rejects_thumb_tip_exactly_on_knuckle() {
        // x(a4) == x(a2) makes the product zero, which the strict test rejects.
        let mut xy = open_palm_xy();
        xy[index::THUMB_TIP][0] = xy[index::THUMB_MCP][0];
        assert!(!is_open_palm(&hand_from_xy(xy)));
    }

    /// Pointing shape: index up, middle/ring/pinky tips pulled below their
    /// knuckles.
    fn pointing_xy() -> [[f64; 2]; LANDMARK_COUNT] {
        [
            [0.15, 0.12],
            [0.22, 0.18],
            [0.26, 0.24],
            [0.24, 0.30],
            [0.21, 0.33],
            [0.17, 0.40],
            [0.17, 0.52],
            [0.17, 0.61],
            [0.17, 0.70], // index tip: v8 = (0.00, 0.30)
            [0.23, 0.40],
            [0.24, 0.46],
            [0.24, 0.37],
            [0.23, 0.30], // v12 = (0.00, -0.10)
            [0.29, 0.39],
            [0.29, 0.45],
            [0.29, 0.36],
            [0.29, 0.29], // v16 = (0.00, -0.10)
            [0.34, 0.37],
            [0.35, 0.42],
            [0.35, 0.35],
            [0.34, 0.29], // v20 = (0.00, -0.08)
        ]
    }

    #[test]
    fn pointing_accepts_canonical_shape() {
        assert!(is_pointing(&hand_from_xy(pointing_xy())));
    }

    #[test]
    fn pointing_rejects_parallel_middle_finger() {
        // Extend the middle finger alongside the index: dot turns positive.
        let mut xy = pointing_xy();
        xy[index::MIDDLE_TIP] = [0.23, 0.70];
        assert!(!is_pointing(&hand_from_xy(xy)));
    }

    #[test]
    fn pointing_rejects_orthogonal_middle_finger() {
        // Middle finger exactly sideways: dot product is exactly zero.
        let mut xy = pointing_xy();
        xy[index::MIDDLE_TIP] = [0.33, 0.40];
        assert_eq!(
            finger_vector(&hand_from_xy(xy), Finger::Index)
                .dot(finger_vector(&hand_from_xy(xy), Finger::Middle)),
            0.0
        );
        assert!(!is_pointing(&hand_from_xy(xy)));
    }

    #[test]
    fn open_palm_and_pointing_disagree_on_both_canonical_shapes() {
        assert!(!is_pointing(&hand_from_xy(open_palm_xy())));
        assert!(!is_open_palm(&hand_from_xy(pointing_xy())));
    }

    #[test]
    fn nearest_landmark_breaks_ties_toward_lowest_index() {
        // Landmarks 2 and 5 equidistant from the probe; 2 must win.
        let mut xy = [[0.0, 0.0]; LANDMARK_COUNT];
        for (i, p) in xy.iter_mut().enumerate() {
            *p = [10.0 + i as f64, 10.0];
        }
        xy[2] = [1.0, 0.0];
        xy[5] = [-1.0, 0.0];
        let res = nearest_landmark(0.0, 0.0, &hand_from_xy(xy));
        assert_eq!(res.landmark_index, 2);
        assert_eq!(res.distance, 1.0);
    }

    #[test]
    fn relative_threshold_matches_hand_computation() {
        let hand = hand_from_xy(open_palm_xy());
        let lengths = [
            (0.40f64 - 0.42, 0.72f64 - 0.42),
            (0.50f64 - 0.50, 0.76f64 - 0.44),
            (0.59f64 - 0.58, 0.72f64 - 0.43),
            (0.67f64 - 0.65, 0.63f64 - 0.40),
        ];
        let mean = lengths.iter().map(|(dx, dy)| dx.hypot(*dy)).sum::<f64>() / 4.0;
        assert!((relative_threshold(&hand) - mean / 3.0).abs() < 1e-15);
    }

    proptest! {
        /// Both predicates ignore translation: shifting the whole hand never
        /// changes the verdict.
        #[test]
        fn predicates_are_translation_invariant(
            dx in -5.0f64..5.0,
            dy in -5.0f64..5.0,
            open in proptest::bool::ANY,
        ) {
            let hand = if open {
                hand_from_xy(open_palm_xy())
            } else {
                hand_from_xy(pointing_xy())
            };
            let moved = hand.translated(dx, dy, 0.0);
            prop_assert_eq!(is_open_palm(&moved), is_open_palm(&hand));
            prop_assert_eq!(is_pointing(&moved), is_pointing(&hand));
        }

        /// The distance gate is translation invariant and scales linearly
        /// with uniform hand scaling.
        #[test]
        fn threshold_translates_and_scales(
            dx in -3.0f64..3.0,
            dy in -3.0f64..3.0,
            s in 0.1f64..8.0,
        ) {
            let hand = hand_from_xy(open_palm_xy());
            let base = relative_threshold(&hand);

            let moved = hand.translated(dx, dy, 0.0);
            prop_assert!((relative_threshold(&moved) - base).abs() < 1e-12);

            let scaled = hand
                .map_positions(|l| crate::landmark::Landmark::new(l.x * s, l.y * s, l.z * s))
                .unwrap();
            prop_assert!((relative_threshold(&scaled) - s * base).abs() < 1e-9 * base.max(1.0));
        }

        /// Nearest landmark reported with its true distance, and no other
        /// landmark is strictly closer.
        #[test]
        fn nearest_is_really_nearest(px in -2.0f64..2.0, py in -2.0f64..2.0) {
            let hand = hand_from_xy(open_palm_xy());
            let res = nearest_landmark(px, py, &hand);
            let l = hand.landmark(res.landmark_index);
            prop_assert!((res.distance - (l.x - px).hypot(l.y - py)).abs() < 1e-15);
            for i in 0..LANDMARK_COUNT {
                let other = hand.landmark(i);
                prop_assert!((other.x - px).hypot(other.y - py) >= res.distance);
            }
        }
    }
}
