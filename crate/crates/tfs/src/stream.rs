//! Wire formats: JSONL frame streams and CSV label files.
//!
//! A frame stream is one JSON object per line:
//!
//! ```json
//! {"frame_id": "f0", "hands": [{"handedness": "Right", "score": 0.98,
//!   "landmarks": [[0.5, 0.1, 0.0], ...]}]}
//! ```
//!
//! with exactly 21 `[x, y, z]` triples per hand. A label file is CSV with a
//! `frame_id,label` header. Parse failures carry the 1-based line number so
//! bad records in long captures can be found and fixed.

use std::error::Error;
use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::landmark::{Frame, HandLandmarks, Handedness, Landmark, LandmarkError, LANDMARK_COUNT};

/// Why a single frame record was rejected.
#[derive(Debug)]
pub enum RecordCause {
    /// The line is not valid JSON for a frame record.
    Json(serde_json::Error),
    /// A hand did not carry exactly 21 landmarks.
    LandmarkCount { got: usize },
    /// Handedness string other than `"Left"` / `"Right"`.
    UnknownHandedness(String),
    /// Landmark or score validation failed.
    Invalid(LandmarkError),
}

impl fmt::Display for RecordCause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RecordCause::Json(e) => write!(f, "invalid JSON: {e}"),
            RecordCause::LandmarkCount { got } => {
                write!(f, "expected {LANDMARK_COUNT} landmarks per hand, got {got}")
            }
            RecordCause::UnknownHandedness(s) => {
                write!(f, "unknown handedness {s:?} (expected \"Left\" or \"Right\")")
            }
            RecordCause::Invalid(e) => write!(f, "{e}"),
        }
    }
}

/// Failure while reading a frame stream.
#[derive(Debug)]
pub enum StreamError {
    Io(std::io::Error),
    /// Record on `line` (1-based) could not be turned into a frame.
    MalformedRecord { line: usize, cause: RecordCause },
}

impl fmt::Display for StreamError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StreamError::Io(e) => write!(f, "stream read failed: {e}"),
            StreamError::MalformedRecord { line, cause } => {
                write!(f, "malformed record on line {line}: {cause}")
            }
        }
    }
}

impl Error for StreamError {
    fn source(&self) -> Option<&(dyn Error + 'static)> {
        match self {
            StreamError::Io(e) => Some(e),
            StreamError::MalformedRecord { .. } => None,
        }
    }
}

impl From<std::io::Error> for StreamError {
    fn from(e: std::io::Error) -> Self {
        StreamError::Io(e)
    }
}

#[derive(Serialize, Deserialize)]
struct HandRecord {
    handedness: String,
    score: f64,
    landmarks: Vec<[f64; 3]>,
}

#[derive(Serialize, Deserialize)]
struct FrameRecord {
    frame_id: String,
    hands: Vec<HandRecord>,
}

fn frame_from_record(rec: FrameRecord) -> Result<Frame, RecordCause> {
    let mut hands = Vec::with_capacity(rec.hands.len());
    for hand in rec.hands {
        if hand.landmarks.len() != LANDMARK_COUNT {
            return Err(RecordCause::LandmarkCount {
                got: hand.landmarks.len(),
            });
        }
        let handedness = Handedness::from_str_exact(&hand.handedness)
            .ok_or_else(|| RecordCause::UnknownHandedness(hand.handedness.clone()))?;
        let mut landmarks = [Landmark::new(0.0, 0.0, 0.0); LANDMARK_COUNT];
        for (slot, [x, y, z]) in landmarks.iter_mut().zip(hand.landmarks) {
            *slot = Landmark::new(x, y, z);
        }
        hands.push(
            HandLandmarks::new(landmarks, handedness, hand.score).map_err(RecordCause::Invalid)?,
        );
    }
    Frame::new(rec.frame_id, hands).map_err(RecordCause::Invalid)
}

fn record_from_frame(frame: &Frame) -> FrameRecord {
    FrameRecord {
        frame_id: frame.frame_id().to_owned(),
        hands: frame
            .hands()
            .iter()
            .map(|h| HandRecord {
                handedness: h.handedness().as_str().to_owned(),
                score: h.score(),
                landmarks: h.landmarks().iter().map(|l| [l.x, l.y, l.z]).collect(),
            })
            .collect(),
    }
}

/// Parses one frame from a single JSON document (one JSONL line).
pub fn frame_from_json(json: &str) -> Result<Frame, RecordCause> {
    let rec: FrameRecord = serde_json::from_str(json).map_err(RecordCause::Json)?;
    frame_from_record(rec)
}

/// Serializes one frame as a single-line JSON document.
pub fn frame_to_json(frame: &Frame) -> String {
    serde_json::to_string(&record_from_frame(frame)).expect("frame record serialization is total")
}

/// Reads a whole JSONL stream of frames. Blank lines are skipped; the first
/// malformed record aborts the read with its line number.
pub fn parse_frames<R: BufRead>(reader: R) -> Result<Vec<Frame>, StreamError> {
    let mut frames = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let frame = frame_from_json(&line)
            .map_err(|cause| StreamError::MalformedRecord { line: idx + 1, cause })?;
        frames.push(frame);
    }
    Ok(frames)
}

/// Writes frames as JSONL, one frame per line.
pub fn write_frames<W: Write>(mut writer: W, frames: &[Frame]) -> std::io::Result<()> {
    for frame in frames {
        writeln!(writer, "{}", frame_to_json(frame))?;
    }
    Ok(())
}

/// Failure while reading a label file.
#[derive(Debug)]
pub enum LabelError {
    Csv(csv::Error),
    /// Header row was not `frame_id,label`.
    BadHeader(String),
    /// A data row had an empty frame id or label (1-based line number).
    EmptyField { line: usize },
}

impl fmt::Display for LabelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabelError::Csv(e) => write!(f, "label file read failed: {e}"),
            LabelError::BadHeader(h) => {
                write!(f, "label file header must be \"frame_id,label\", got {h:?}")
            }
            LabelError::EmptyField { line } => {
                write!(f, "empty frame_id or label on line {line}")
            }
        }
    }
}

impl Error for LabelError {
    fn source(&self) -> Option<&(dyn Error + 'static)> {
        match self {
            LabelError::Csv(e) => Some(e),
            _ => None,
        }
    }
}

impl From<csv::Error> for LabelError {
    fn from(e: csv::Error) -> Self {
        LabelError::Csv(e)
    }
}

/// Reads `(frame_id, label)` pairs from a `frame_id,label` CSV.
pub fn read_labels<R: std::io::Read>(reader: R) -> Result<Vec<(String, String)>, LabelError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.len() != 2 || &headers[0] != "frame_id" || &headers[1] != "label" {
        return Err(LabelError::BadHeader(headers.iter().collect::<Vec<_>>().join(",")));
    }
    let mut out = Vec::new();
    for (idx, row) in rdr.records().enumerate() {
        let row = row?;
        let frame_id = row.get(0).unwrap_or("").to_owned();
        let label = row.get(1).unwrap_or("").to_owned();
        if frame_id.is_empty() || label.is_empty() {
            return Err(LabelError::EmptyField { line: idx + 2 });
        }
        out.push((frame_id, label));
    }
    Ok(out)
}

/// Writes `(frame_id, label)` pairs with the standard header.
pub fn write_labels<W: Write>(writer: W, labels: &[(String, String)]) -> Result<(), csv::Error> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["frame_id", "label"])?;
    for (frame_id, label) in labels {
        wtr.write_record([frame_id, label])?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landmark::index;

    fn sample_frame(id: &str, n_hands: usize) -> Frame {
        let mut lms = [Landmark::new(0.0, 0.0, 0.0); LANDMARK_COUNT];
        for (i, l) in lms.iter_mut().enumerate() {
            *l = Landmark::new(0.1 + 0.01 * i as f64, 0.9 - 0.02 * i as f64, -0.001 * i as f64);
        }
        let hand = HandLandmarks::new(lms, Handedness::Left, 0.97).unwrap();
        Frame::new(id, vec![hand; n_hands]).unwrap()
    }

    #[test]
    fn frames_round_trip_bitwise() {
        let frames = vec![sample_frame("a", 0), sample_frame("b", 1), sample_frame("c", 2)];
        let mut buf = Vec::new();
        write_frames(&mut buf, &frames).unwrap();
        let back = parse_frames(buf.as_slice()).unwrap();
        assert_eq!(back, frames);
    }

    #[test]
    fn json_values_survive_exactly() {
        // Serialized f64s must parse back to the identical bits; spot-check
        // an awkward value through a full round trip.
        let mut frame = sample_frame("x", 1);
        let ugly = 0.1 + 0.2; // 0.30000000000000004
        let hand = frame.hands()[0]
            .map_positions(|l| Landmark::new(ugly, l.y, l.z))
            .unwrap();
        frame = Frame::new("x", vec![hand]).unwrap();
        let back = frame_from_json(&frame_to_json(&frame)).unwrap();
        assert_eq!(back.hands()[0].landmark(index::WRIST).x.to_bits(), ugly.to_bits());
    }

    #[test]
    fn malformed_line_is_reported_with_its_number() {
        let mut buf = Vec::new();
        write_frames(&mut buf, &[sample_frame("a", 1)]).unwrap();
        buf.extend_from_slice(b"{\"frame_id\": \"b\", \"hands\": [\n");
        let err = parse_frames(buf.as_slice()).unwrap_err();
        match err {
            StreamError::MalformedRecord { line, cause: RecordCause::Json(_) } => {
                assert_eq!(line, 2)
            }
            other => panic!("unexpected error: {other:?}"),
        }
    }

    #[test]
    fn short_hand_is_rejected() {
        let json = r#"{"frame_id":"f","hands":[{"handedness":"Left","score":0.5,"landmarks":[[0,0,0]]}]}"#;
        match frame_from_json(json) {
            Err(RecordCause::LandmarkCount { got: 1 }) => {}
            other => panic!("unexpected result: {other:?}"),
        }
    }

    #[test]
    fn unknown_handedness_is_rejected() {
        let lms: Vec<[f64; 3]> = (0..21).map(|i| [i as f64, 0.0, 0.0]).collect();
        let json = serde_json::json!({
            "frame_id": "f",
            "hands": [{"handedness": "left", "score": 0.5, "landmarks": lms}],
        })
        .to_string();
        match frame_from_json(&json) {
            Err(RecordCause::UnknownHandedness(s)) => assert_eq!(s, "left"),
            other => panic!("unexpected result: {other:?}"),
        }
    }

    #[test]
    fn labels_round_trip_and_validate_header() {
        let labels = vec![
            ("f0".to_owned(), "A".to_owned()),
            ("f1".to_owned(), "B".to_owned()),
        ];
        let mut buf = Vec::new();
        write_labels(&mut buf, &labels).unwrap();
        assert_eq!(read_labels(buf.as_slice()).unwrap(), labels);

        let bad = b"id,label\nf0,A\n";
        assert!(matches!(read_labels(&bad[..]), Err(LabelError::BadHeader(_))));
    }

    #[test]
    fn blank_lines_are_skipped() {
        let mut buf = Vec::new();
        write_frames(&mut buf, &[sample_frame("a", 1)]).unwrap();
        buf.extend_from_slice(b"\n  \n");
        write_frames(&mut buf, &[sample_frame("b", 2)]).unwrap();
        let frames = parse_frames(buf.as_slice()).unwrap();
        assert_eq!(frames.len(), 2);
        assert_eq!(frames[1].frame_id(), "b");
    }
}
