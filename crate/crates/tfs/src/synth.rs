//! Synthetic pose and dataset generation.
//!
//! Real captures are expensive, so tests and benchmarks run on synthetic
//! hands: hand-authored canonical templates plus a seeded pose model
//! (Gaussian landmark jitter, then in-plane rotation and uniform scaling
//! about the wrist, then translation). Everything is deterministic in the
//! seed: the same parameters always produce bitwise-identical output.

use std::error::Error;
use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::landmark::{index, Frame, HandLandmarks, Handedness, Landmark, LANDMARK_COUNT};
use crate::rules::assign_roles;

/// Largest class count [`generate_class_dataset`] supports: every
/// combination of curled/extended fingers except all-extended and all-curled.
pub const MAX_CLASSES: usize = 30;

/// Class templates must be at least this many noise standard deviations
/// apart (flattened-coordinate Euclidean distance); otherwise the requested
/// dataset would mix classes together and is refused.
pub const SEPARATION_FACTOR: f64 = 10.0;

/// Pose variation applied to a template.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseParams {
    /// Standard deviation of i.i.d. Gaussian jitter on every coordinate.
    pub noise_sigma: f64,
    /// Uniform scale about the wrist, applied after jitter. Must be > 0.
    pub scale: f64,
    /// In-plane rotation about the wrist, degrees counterclockwise.
    pub rotation_deg: f64,
    /// Final xy shift.
    pub translation: [f64; 2],
    /// Seed for the jitter stream.
    pub seed: u64,
}

impl Default for PoseParams {
    fn default() -> Self {
        PoseParams {
            noise_sigma: 0.0,
            scale: 1.0,
            rotation_deg: 0.0,
            translation: [0.0, 0.0],
            seed: 0,
        }
    }
}

/// Invalid generation request.
#[derive(Debug)]
pub enum SynthError {
    InvalidParams(String),
}

impl fmt::Display for SynthError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SynthError::InvalidParams(msg) => write!(f, "invalid generation request: {msg}"),
        }
    }
}

impl Error for SynthError {}

/// Upright open palm, fingers up and thumb spread toward -x.
///
/// Margins are deliberately wide: every fingertip sits >= 0.23 above its
/// knuckle and the thumb-side x gaps are >= 0.09, so moderate jitter cannot
/// flip the open-palm test.
const OPEN_PALM: [[f64; 3]; LANDMARK_COUNT] = [
    [0.50, 0.10, 0.000],  // wrist
    [0.40, 0.16, -0.010], // thumb base to tip
    [0.33, 0.24, -0.020],
    [0.28, 0.31, -0.030],
    [0.24, 0.37, -0.040],
    [0.42, 0.42, -0.010], // index
    [0.41, 0.55, -0.020],
    [0.41, 0.64, -0.030],
    [0.40, 0.72, -0.040],
    [0.50, 0.44, -0.010], // middle
    [0.50, 0.58, -0.020],
    [0.50, 0.68, -0.030],
    [0.50, 0.76, -0.040],
    [0.58, 0.43, -0.010], // ring
    [0.58, 0.56, -0.020],
    [0.59, 0.65, -0.030],
    [0.59, 0.72, -0.040],
    [0.65, 0.40, -0.010], // pinky
    [0.66, 0.50, -0.020],
    [0.67, 0.57, -0.030],
    [0.67, 0.63, -0.040],
];

/// Index finger extended upward, middle/ring/pinky folded back down, thumb
/// tucked. The index vector opposes each folded finger with a dot-product
/// margin of at least 0.024.
const POINTING: [[f64; 3]; LANDMARK_COUNT] = [
    [0.15, 0.12, 0.000],
    [0.22, 0.18, -0.010],
    [0.26, 0.24, -0.020],
    [0.24, 0.30, -0.030],
    [0.21, 0.33, -0.040],
    [0.17, 0.40, -0.010], // index up: v = (0.00, 0.30)
    [0.17, 0.52, -0.020],
    [0.17, 0.61, -0.030],
    [0.17, 0.70, -0.040],
    [0.23, 0.40, -0.010], // middle folded: v = (0.00, -0.10)
    [0.24, 0.46, -0.030],
    [0.24, 0.37, -0.040],
    [0.23, 0.30, -0.050],
    [0.29, 0.39, -0.010], // ring folded: v = (0.00, -0.10)
    [0.29, 0.45, -0.030],
    [0.29, 0.36, -0.040],
    [0.29, 0.29, -0.050],
    [0.34, 0.37, -0.010], // pinky folded: v = (0.00, -0.08)
    [0.35, 0.42, -0.030],
    [0.35, 0.35, -0.040],
    [0.34, 0.29, -0.050],
];

/// Closed fist: all fingertips below their knuckles, thumb wrapped to the
/// wrist side. Satisfies neither pose test.
const FIST: [[f64; 3]; LANDMARK_COUNT] = [
    [0.50, 0.10, 0.000],
    [0.42, 0.15, -0.010],
    [0.37, 0.22, -0.020],
    [0.40, 0.27, -0.030],
    [0.44, 0.29, -0.040],
    [0.43, 0.40, -0.010],
    [0.43, 0.47, -0.030],
    [0.44, 0.40, -0.040],
    [0.44, 0.33, -0.050],
    [0.50, 0.41, -0.010],
    [0.50, 0.48, -0.030],
    [0.50, 0.41, -0.040],
    [0.50, 0.33, -0.050],
    [0.57, 0.40, -0.010],
    [0.57, 0.47, -0.030],
    [0.57, 0.40, -0.040],
    [0.56, 0.33, -0.050],
    [0.63, 0.38, -0.010],
    [0.64, 0.44, -0.030],
    [0.64, 0.38, -0.040],
    [0.63, 0.32, -0.050],
];

fn hand_from_coords(
    coords: &[[f64; 3]; LANDMARK_COUNT],
    handedness: Handedness,
) -> HandLandmarks {
    let mut lms = [Landmark::new(0.0, 0.0, 0.0); LANDMARK_COUNT];
    for (l, c) in lms.iter_mut().zip(coords.iter()) {
        *l = Landmark::new(c[0], c[1], c[2]);
    }
    HandLandmarks::new(lms, handedness, 0.99).expect("template coordinates are finite")
}

/// The canonical open-palm hand.
pub fn open_palm_template() -> HandLandmarks {
    hand_from_coords(&OPEN_PALM, Handedness::Right)
}

/// The canonical pointing hand.
pub fn pointing_template() -> HandLandmarks {
    hand_from_coords(&POINTING, Handedness::Left)
}

/// A closed fist; passes neither pose test. Useful as a negative case.
pub fn fist_template() -> HandLandmarks {
    hand_from_coords(&FIST, Handedness::Right)
}

/// Jitter, then rotate/scale about the (jittered) wrist, then translate.
fn apply_pose(template: &HandLandmarks, params: &PoseParams, rng: &mut ChaCha8Rng) -> HandLandmarks {
    debug_assert!(params.scale > 0.0, "scale must be positive");
    debug_assert!(params.noise_sigma >= 0.0, "noise_sigma must be nonnegative");
    let mut lms = *template.landmarks();
    // Draw jitter unconditionally so the stream advances identically for
    // sigma = 0 and sigma > 0.
    for l in lms.iter_mut() {
        l.x += params.noise_sigma * rng.sample::<f64, _>(StandardNormal);
        l.y += params.noise_sigma * rng.sample::<f64, _>(StandardNormal);
        l.z += params.noise_sigma * rng.sample::<f64, _>(StandardNormal);
    }
    let w = lms[index::WRIST];
    let (sin, cos) = params.rotation_deg.to_radians().sin_cos();
    let s = params.scale;
    for l in lms.iter_mut() {
        let dx = (l.x - w.x) * s;
        let dy = (l.y - w.y) * s;
        let dz = (l.z - w.z) * s;
        l.x = w.x + dx * cos - dy * sin + params.translation[0];
        l.y = w.y + dx * sin + dy * cos + params.translation[1];
        l.z = w.z + dz;
    }
    HandLandmarks::new(lms, template.handedness(), template.score())
        .expect("finite pose transform keeps landmarks finite")
}

/// One open-palm hand under the given pose variation.
pub fn generate_open_palm(params: &PoseParams) -> HandLandmarks {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    apply_pose(&open_palm_template(), params, &mut rng)
}

/// A two-hand frame in which the pointing hand touches a chosen open-palm
/// landmark.
///
/// Both hands get the pose variation (palm hand first in the jitter stream,
/// pointing hand second), after which the pointing hand is rigidly shifted
/// so its index fingertip lands exactly (in xy) on palm landmark
/// `target_index`. Hands appear in frame order [pointing, palm].
///
/// Panics if `target_index >= 21`.
pub fn generate_pointing_frame(target_index: usize, params: &PoseParams) -> Frame {
    assert!(
        target_index < LANDMARK_COUNT,
        "target_index {target_index} out of range"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let palm = apply_pose(&open_palm_template(), params, &mut rng);
    let point = apply_pose(&pointing_template(), params, &mut rng);
    let target = palm.landmark(target_index);
    let tip = point.landmark(index::INDEX_TIP);
    let point = point.translated(target.x - tip.x, target.y - tip.y, 0.0);
    Frame::new(format!("point-{target_index:02}"), vec![point, palm])
        .expect("two hands fit in a frame")
}

/// Synthetic class label for class index `c` (`"S00"`, `"S01"`, ...).
pub fn class_label(class: usize) -> String {
    format!("S{class:02}")
}

/// Curled-finger variants used to build class templates.
///
/// Curling replaces the finger's joints with positions folded toward the
/// palm, fingertip strictly below the knuckle. The thumb wraps across to the
/// wrist side instead.
fn curl_finger(coords: &mut [[f64; 3]; LANDMARK_COUNT], finger: usize) {
    match finger {
        0 => {
            // Thumb: landmarks 2..=4 wrap in front of the palm.
            coords[index::THUMB_MCP] = [0.38, 0.23, -0.030];
            coords[index::THUMB_IP] = [0.43, 0.26, -0.045];
            coords[index::THUMB_TIP] = [0.47, 0.28, -0.050];
        }
        f => {
            // finger 1..=4 -> index/middle/ring/pinky MCP at 5, 9, 13, 17.
            let mcp = 1 + 4 * f;
            let [mx, my, mz] = coords[mcp];
            coords[mcp + 1] = [mx + 0.005, my + 0.055, mz - 0.020];
            coords[mcp + 2] = [mx + 0.015, my + 0.005, mz - 0.045];
            coords[mcp + 3] = [mx + 0.020, my - 0.055, mz - 0.050];
        }
    }
}

/// Template for synthetic class `class` (0-based, `class < 30`).
///
/// Each class is a distinct combination of curled fingers: class `c` uses
/// bit pattern `c + 1` over (thumb, index, middle, ring, pinky), skipping
/// the all-extended and all-curled patterns. Any two class templates differ
/// in at least one whole finger, keeping them far apart in coordinate space.
pub fn class_template(class: usize) -> HandLandmarks {
    assert!(class < MAX_CLASSES, "class {class} out of range");
    let pattern = class + 1;
    let mut coords = OPEN_PALM;
    for finger in 0..5 {
        if pattern & (1 << finger) != 0 {
            curl_finger(&mut coords, finger);
        }
    }
    hand_from_coords(&coords, Handedness::Right)
}

fn flat_distance(a: &HandLandmarks, b: &HandLandmarks) -> f64 {
    let mut sum = 0.0;
    for i in 0..LANDMARK_COUNT {
        let (p, q) = (a.landmark(i), b.landmark(i));
        sum += (p.x - q.x).powi(2) + (p.y - q.y).powi(2) + (p.z - q.z).powi(2);
    }
    sum.sqrt()
}

/// Balanced labelled dataset of single-hand poses.
///
/// Produces `per_class` jittered samples of each of the first `n_classes`
/// class templates, labelled `"S00"` .. in template order, deterministically
/// in `params.seed`. Refuses requests whose noise would overlap classes:
/// the minimum template separation must be at least
/// [`SEPARATION_FACTOR`] * `noise_sigma`.
pub fn generate_class_dataset(
    n_classes: usize,
    per_class: usize,
    params: &PoseParams,
) -> Result<Vec<(HandLandmarks, String)>, SynthError> {
    if !(2..=MAX_CLASSES).contains(&n_classes) {
        return Err(SynthError::InvalidParams(format!(
            "n_classes must be in 2..={MAX_CLASSES}, got {n_classes}"
        )));
    }
    if per_class == 0 {
        return Err(SynthError::InvalidParams("per_class must be >= 1".into()));
    }
    if !params.noise_sigma.is_finite() || params.noise_sigma < 0.0 {
        return Err(SynthError::InvalidParams(format!(
            "noise_sigma must be finite and >= 0, got {}",
            params.noise_sigma
        )));
    }
    if !params.scale.is_finite() || params.scale <= 0.0 {
        return Err(SynthError::InvalidParams(format!(
            "scale must be finite and > 0, got {}",
            params.scale
        )));
    }
    let templates: Vec<HandLandmarks> = (0..n_classes).map(class_template).collect();
    let mut min_sep = f64::INFINITY;
    for i in 0..n_classes {
        for j in (i + 1)..n_classes {
            min_sep = min_sep.min(flat_distance(&templates[i], &templates[j]));
        }
    }
    if min_sep < SEPARATION_FACTOR * params.noise_sigma {
        return Err(SynthError::InvalidParams(format!(
            "noise_sigma {} too large: class templates are {:.4} apart but must be \
             at least {SEPARATION_FACTOR} sigma apart",
            params.noise_sigma, min_sep
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut out = Vec::with_capacity(n_classes * per_class);
    for (class, template) in templates.iter().enumerate() {
        let label = class_label(class);
        for _ in 0..per_class {
            out.push((apply_pose(template, params, &mut rng), label.clone()));
        }
    }
    Ok(out)
}

/// How much of the scene an occluder covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OcclusionFraction {
    Zero,
    Twenty,
    Fifty,
    Eighty,
}

impl OcclusionFraction {
    pub const ALL: [OcclusionFraction; 4] = [
        OcclusionFraction::Zero,
        OcclusionFraction::Twenty,
        OcclusionFraction::Fifty,
        OcclusionFraction::Eighty,
    ];

    /// The covered fraction as a number.
    pub fn value(self) -> f64 {
        match self {
            OcclusionFraction::Zero => 0.0,
            OcclusionFraction::Twenty => 0.2,
            OcclusionFraction::Fifty => 0.5,
            OcclusionFraction::Eighty => 0.8,
        }
    }
}

/// What kind of damage the occlusion causes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OcclusionMode {
    /// The detector loses the second hand entirely; the frame keeps only
    /// its first hand. Models upstream detection failure.
    DropHand,
    /// Landmarks near the contact point are displaced by noise that grows
    /// with the covered fraction. Models degraded landmark regression.
    PerturbRegion,
}

/// An occlusion scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OcclusionSpec {
    pub fraction: OcclusionFraction,
    pub mode: OcclusionMode,
}

/// Applies an occlusion scenario to a frame, deterministically in `seed`.
///
/// `Zero` always returns the frame unchanged. `DropHand` truncates the hand
/// list to one. `PerturbRegion` displaces `round(fraction * 21)` landmarks
/// of the palm hand — those nearest the pointing fingertip when roles
/// resolve, else nearest the hand's own centroid — with Gaussian noise of
/// standard deviation `fraction` times the hand's mean finger length.
pub fn occlude(frame: &Frame, spec: OcclusionSpec, seed: u64) -> Frame {
    let fraction = spec.fraction.value();
    if fraction == 0.0 || frame.hand_count() == 0 {
        return frame.clone();
    }
    match spec.mode {
        OcclusionMode::DropHand => {
            let hands = vec![frame.hands()[0].clone()];
            Frame::new(frame.frame_id().to_owned(), hands).expect("one hand fits in a frame")
        }
        OcclusionMode::PerturbRegion => {
            let (victim_idx, anchor) = match assign_roles(frame) {
                Some(roles) => {
                    let tip = roles.pointing.landmark(index::INDEX_TIP);
                    let victim = frame
                        .hands()
                        .iter()
                        .position(|h| std::ptr::eq(h, roles.open_palm))
                        .expect("open palm is one of the frame's hands");
                    (victim, (tip.x, tip.y))
                }
                None => {
                    let victim = frame.hand_count() - 1;
                    let hand = &frame.hands()[victim];
                    let (mut cx, mut cy) = (0.0, 0.0);
                    for l in hand.landmarks() {
                        cx += l.x;
                        cy += l.y;
                    }
                    let n = LANDMARK_COUNT as f64;
                    (victim, (cx / n, cy / n))
                }
            };
            let hand = &frame.hands()[victim_idx];
            let k = (fraction * LANDMARK_COUNT as f64).round() as usize;
            let mut by_distance: Vec<(f64, usize)> = (0..LANDMARK_COUNT)
                .map(|i| {
                    let l = hand.landmark(i);
                    ((l.x - anchor.0).hypot(l.y - anchor.1), i)
                })
                .collect();
            by_distance.sort_by(|a, b| a.partial_cmp(b).expect("finite distances compare"));

            let sigma = fraction * 3.0 * crate::geometry::relative_threshold(hand);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut lms = *hand.landmarks();
            for &(_, i) in by_distance.iter().take(k) {
                lms[i].x += sigma * rng.sample::<f64, _>(StandardNormal);
                lms[i].y += sigma * rng.sample::<f64, _>(StandardNormal);
                lms[i].z += sigma * rng.sample::<f64, _>(StandardNormal);
            }
            let perturbed = HandLandmarks::new(lms, hand.handedness(), hand.score())
                .expect("finite displacement keeps landmarks finite");
            let hands = frame
                .hands()
                .iter()
                .enumerate()
                .map(|(i, h)| if i == victim_idx { perturbed.clone() } else { h.clone() })
                .collect();
            Frame::new(frame.frame_id().to_owned(), hands).expect("hand count unchanged")
        }
    }
}
