//! Thai Finger Spelling (TFS) sign recognition from 21-point hand-landmark
//! streams.
//!
//! Input is the output of an upstream hand detector: per frame, up to two
//! hands of 21 `[x, y, z]` landmarks each. Recognition is routed by hand
//! count:
//!
//! - **one hand** — a learned feed-forward classifier over flattened
//!   (absolute) or wrist-relative landmark features ([`mlp`]);
//! - **two hands** — a geometric rule cascade for "point on hand" signs,
//!   where one hand points at a landmark of the other's open palm and the
//!   touched landmark selects the sign ([`rules`], [`geometry`]).
//!
//! [`dispatch::recognize`] ties the routes together. [`stream`] reads and
//! writes the JSONL/CSV wire formats, [`synth`] generates deterministic
//! synthetic datasets, [`eval`] scores predictions (confusion matrices,
//! bootstrap runs, detector audits) and [`stats`] compares accuracy samples
//! with a two-sample t test. The `tfs` binary exposes all of it on the
//! command line ([`cli`]).
//!
//! All geometry assumes y grows upward; see [`landmark::canonicalize`] for
//! adapting image-convention (y-down) sources.

pub mod cli;
pub mod dispatch;
pub mod eval;
pub mod geometry;
pub mod landmark;
pub mod mlp;
pub mod rules;
pub mod stats;
pub mod stream;
pub mod synth;

pub use dispatch::{recognize, PredictionRecord, Route, SignPrediction};
pub use landmark::{
    canonicalize, AxisConvention, Frame, HandLandmarks, Handedness, Landmark, YDirection,
    LANDMARK_COUNT,
};
pub use mlp::{train, Encoding, MlpModel, TrainConfig};
pub use rules::{classify_point_on_hand, KeypointMap, RbOutcome};
