//! C ABI for the tfs recognizer.
//!
//! Handles (`TfsModel`, `TfsKeypointMap`) are opaque: C code only ever
//! holds pointers and returns them to the matching `_free` function.
//! Fallible calls return a [`TfsStatus`] and write their result through an
//! out-pointer, which is touched only on `TFS_STATUS_OK`. Strings returned
//! through out-pointers are NUL-terminated, owned by the caller, and must
//! be released with [`tfs_string_free`].
//!
//! The generated header lands in `include/tfs.h` at build time.

use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use tfs::landmark::{AxisConvention, Handedness, HandLandmarks, Landmark};
use tfs::mlp::Encoding;
use tfs::{canonicalize, recognize, KeypointMap, MlpModel, PredictionRecord, LANDMARK_COUNT};

/// Result of a fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TfsStatus {
    /// Success; out-parameters are populated.
    Ok = 0,
    /// A required pointer argument was NULL.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// Input text could not be parsed as a frame record.
    ParseError = 3,
    /// A file could not be read.
    IoError = 4,
    /// Model JSON was rejected.
    InvalidModel = 5,
    /// Keypoint-map JSON was rejected.
    InvalidMap = 6,
    /// An internal invariant failed; the call had no effect.
    InternalError = 7,
}

/// Opaque trained classifier handle.
pub struct TfsModel {
    inner: MlpModel,
}

/// Opaque landmark-to-sign map handle.
pub struct TfsKeypointMap {
    inner: KeypointMap,
}

/// Library version as a static NUL-terminated string; never freed.
#[no_mangle]
pub extern "C" fn tfs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Borrows a C string as UTF-8.
unsafe fn utf8<'a>(ptr: *const c_char) -> Result<&'a str, TfsStatus> {
    if ptr.is_null() {
        return Err(TfsStatus::NullArgument);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| TfsStatus::InvalidUtf8)
}

/// Runs a fallible body, converting panics into `InternalError`.
fn guarded(body: impl FnOnce() -> TfsStatus) -> TfsStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => TfsStatus::InternalError,
    }
}

fn model_from_text(text: &str, out: *mut *mut TfsModel) -> TfsStatus {
    match MlpModel::from_bytes(text.as_bytes()) {
        Ok(inner) => {
            let handle = Box::into_raw(Box::new(TfsModel { inner }));
            unsafe { *out = handle };
            TfsStatus::Ok
        }
        Err(_) => TfsStatus::InvalidModel,
    }
}

/// Loads a trained model from a JSON file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer; on
/// `TFS_STATUS_OK` the caller owns the handle and must pass it to
/// [`tfs_model_free`].
#[no_mangle]
pub unsafe extern "C" fn tfs_model_load_path(
    path: *const c_char,
    out: *mut *mut TfsModel,
) -> TfsStatus {
    if out.is_null() {
        return TfsStatus::NullArgument;
    }
    let path = match utf8(path) {
        Ok(p) => p,
        Err(status) => return status,
    };
    guarded(|| match std::fs::read_to_string(path) {
        Ok(text) => model_from_text(&text, out),
        Err(_) => TfsStatus::IoError,
    })
}

/// Parses a trained model from in-memory JSON.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer; on
/// `TFS_STATUS_OK` the caller owns the handle and must pass it to
/// [`tfs_model_free`].
#[no_mangle]
pub unsafe extern "C" fn tfs_model_from_json(
    json: *const c_char,
    out: *mut *mut TfsModel,
) -> TfsStatus {
    if out.is_null() {
        return TfsStatus::NullArgument;
    }
    let json = match utf8(json) {
        Ok(j) => j,
        Err(status) => return status,
    };
    guarded(|| model_from_text(json, out))
}

/// Number of classes the model distinguishes, or -1 for NULL.
///
/// # Safety
/// `model` must be NULL or a live handle from a `tfs_model_*` constructor.
#[no_mangle]
pub unsafe extern "C" fn tfs_model_num_classes(model: *const TfsModel) -> c_int {
    match model.as_ref() {
        Some(m) => m.inner.num_classes() as c_int,
        None => -1,
    }
}

/// Length of the model's input feature vector, or -1 for NULL.
///
/// # Safety
/// `model` must be NULL or a live handle from a `tfs_model_*` constructor.
#[no_mangle]
pub unsafe extern "C" fn tfs_model_input_dim(model: *const TfsModel) -> c_int {
    match model.as_ref() {
        Some(m) => m.inner.input_dim() as c_int,
        None => -1,
    }
}

/// Feature encoding of the model: 0 absolute, 1 wrist-relative, -1 NULL.
///
/// # Safety
/// `model` must be NULL or a live handle from a `tfs_model_*` constructor.
#[no_mangle]
pub unsafe extern "C" fn tfs_model_encoding(model: *const TfsModel) -> c_int {
    match model.as_ref() {
        Some(m) => match m.inner.encoding() {
            Encoding::Absolute => 0,
            Encoding::Relative => 1,
        },
        None => -1,
    }
}

/// Releases a model handle; NULL is a no-op.
///
/// # Safety
/// `model` must be NULL or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn tfs_model_free(model: *mut TfsModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Creates the built-in landmark-to-sign map.
///
/// # Safety
/// `out` must be a valid pointer; the caller owns the handle and must pass
/// it to [`tfs_map_free`].
#[no_mangle]
pub unsafe extern "C" fn tfs_map_default(out: *mut *mut TfsKeypointMap) -> TfsStatus {
    if out.is_null() {
        return TfsStatus::NullArgument;
    }
    let handle = Box::into_raw(Box::new(TfsKeypointMap {
        inner: KeypointMap::default_map(),
    }));
    *out = handle;
    TfsStatus::Ok
}

fn map_from_text(text: &str, out: *mut *mut TfsKeypointMap) -> TfsStatus {
    match KeypointMap::from_json(text) {
        Ok(inner) => {
            let handle = Box::into_raw(Box::new(TfsKeypointMap { inner }));
            unsafe { *out = handle };
            TfsStatus::Ok
        }
        Err(_) => TfsStatus::InvalidMap,
    }
}

/// Loads a landmark-to-sign map from a JSON file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer; on
/// `TFS_STATUS_OK` the caller owns the handle and must pass it to
/// [`tfs_map_free`].
#[no_mangle]
pub unsafe extern "C" fn tfs_map_load_path(
    path: *const c_char,
    out: *mut *mut TfsKeypointMap,
) -> TfsStatus {
    if out.is_null() {
        return TfsStatus::NullArgument;
    }
    let path = match utf8(path) {
        Ok(p) => p,
        Err(status) => return status,
    };
    guarded(|| match std::fs::read_to_string(path) {
        Ok(text) => map_from_text(&text, out),
        Err(_) => TfsStatus::IoError,
    })
}

/// Parses a landmark-to-sign map from in-memory JSON.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer; on
/// `TFS_STATUS_OK` the caller owns the handle and must pass it to
/// [`tfs_map_free`].
#[no_mangle]
pub unsafe extern "C" fn tfs_map_from_json(
    json: *const c_char,
    out: *mut *mut TfsKeypointMap,
) -> TfsStatus {
    if out.is_null() {
        return TfsStatus::NullArgument;
    }
    let json = match utf8(json) {
        Ok(j) => j,
        Err(status) => return status,
    };
    guarded(|| map_from_text(json, out))
}

/// Releases a map handle; NULL is a no-op.
///
/// # Safety
/// `map` must be NULL or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn tfs_map_free(map: *mut TfsKeypointMap) {
    if !map.is_null() {
        drop(Box::from_raw(map));
    }
}

/// Classifies one frame given as a JSON frame record and returns the
/// prediction as JSON through `out_json`.
///
/// Set `y_down` to nonzero when the frame uses image coordinates (y grows
/// downward); the frame is flipped into the canonical y-up system before
/// classification. The returned string must be freed with
/// [`tfs_string_free`].
///
/// # Safety
/// `model` and `map` must be live handles, `frame_json` a NUL-terminated
/// string and `out_json` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tfs_recognize_frame_json(
    model: *const TfsModel,
    map: *const TfsKeypointMap,
    frame_json: *const c_char,
    y_down: c_int,
    out_json: *mut *mut c_char,
) -> TfsStatus {
    if out_json.is_null() || model.is_null() || map.is_null() {
        return TfsStatus::NullArgument;
    }
    let (model, map) = (&*model, &*map);
    let text = match utf8(frame_json) {
        Ok(t) => t,
        Err(status) => return status,
    };
    guarded(|| {
        let frame = match tfs::stream::frame_from_json(text) {
            Ok(f) => f,
            Err(_) => return TfsStatus::ParseError,
        };
        let convention = if y_down != 0 {
            AxisConvention::y_down()
        } else {
            AxisConvention::y_up()
        };
        let canonical = canonicalize(&frame, convention);
        let record = PredictionRecord::new(
            canonical.frame_id(),
            recognize(&canonical, &model.inner, &map.inner),
        );
        match CString::new(record.to_json()) {
            Ok(s) => {
                unsafe { *out_json = s.into_raw() };
                TfsStatus::Ok
            }
            Err(_) => TfsStatus::InternalError,
        }
    })
}

/// Frees a string returned by this library; NULL is a no-op.
///
/// # Safety
/// `s` must be NULL or a string produced by this library and not freed
/// before.
#[no_mangle]
pub unsafe extern "C" fn tfs_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds a hand from 63 doubles laid out x0,y0,z0,...,x20,y20,z20 in the
/// canonical y-up system.
unsafe fn hand_from_raw(landmarks: *const f64) -> Option<HandLandmarks> {
    if landmarks.is_null() {
        return None;
    }
    let raw = std::slice::from_raw_parts(landmarks, LANDMARK_COUNT * 3);
    let mut lms = [Landmark::new(0.0, 0.0, 0.0); LANDMARK_COUNT];
    for (i, l) in lms.iter_mut().enumerate() {
        *l = Landmark::new(raw[3 * i], raw[3 * i + 1], raw[3 * i + 2]);
    }
    HandLandmarks::new(lms, Handedness::Right, 1.0).ok()
}

/// Open-palm test on 63 doubles (21 landmarks, y up): 1 open, 0 not,
/// -1 for NULL or non-finite input.
///
/// # Safety
/// `landmarks` must be NULL or point at 63 readable doubles.
#[no_mangle]
pub unsafe extern "C" fn tfs_is_open_palm(landmarks: *const f64) -> c_int {
    match hand_from_raw(landmarks) {
        Some(hand) => tfs::geometry::is_open_palm(&hand) as c_int,
        None => -1,
    }
}

/// Pointing-hand test on 63 doubles (21 landmarks, y up): 1 pointing,
/// 0 not, -1 for NULL or non-finite input.
///
/// # Safety
/// `landmarks` must be NULL or point at 63 readable doubles.
#[no_mangle]
pub unsafe extern "C" fn tfs_is_pointing(landmarks: *const f64) -> c_int {
    match hand_from_raw(landmarks) {
        Some(hand) => tfs::geometry::is_pointing(&hand) as c_int,
        None => -1,
    }
}
