//! C ABI over the votseg library.
//!
//! Models are opaque handles created by `votseg_model_load` and released
//! with `votseg_model_free`. Every fallible call returns a `VotsegStatus`;
//! on failure `votseg_last_error_message` describes the problem for the
//! calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use votseg::error::Category;
use votseg::nn::Model;
use votseg::seg::{self, FeatureSequence, ScoreMatrix, Segmentation, TaskLossConfig, VotType};
use votseg::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VotsegStatus {
    Ok = 0,
    DataError = 1,
    ConfigError = 2,
    IoError = 3,
    NullPointer = 4,
    Panic = 5,
}

/// Result of one measurement. `vot_type` is 0 for positive, 1 for
/// negative; boundaries are 1-based frames.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VotsegMeasurement {
    pub vot_ms: f64,
    pub vot_type: i32,
    pub y1: usize,
    pub y2: usize,
    pub type_prob: f64,
}

/// Opaque trained model.
pub struct VotsegModel {
    model: Model,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(e: Error) -> VotsegStatus {
    set_error(&e.to_string());
    match e.category() {
        Category::Data => VotsegStatus::DataError,
        Category::Config => VotsegStatus::ConfigError,
        Category::Io => VotsegStatus::IoError,
    }
}

fn null(what: &str) -> VotsegStatus {
    set_error(&format!("{what} is NULL"));
    VotsegStatus::NullPointer
}

fn guard(f: impl FnOnce() -> VotsegStatus) -> VotsegStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| {
        set_error("internal panic");
        VotsegStatus::Panic
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn votseg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failure on this thread. Valid until the next
/// failing call on the same thread; never NULL.
#[no_mangle]
pub extern "C" fn votseg_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Loads a model file and stores a new handle in `*out`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn votseg_model_load(
    path: *const c_char,
    out: *mut *mut VotsegModel,
) -> VotsegStatus {
    guard(|| {
        if path.is_null() {
            return null("path");
        }
        if out.is_null() {
            return null("out");
        }
        let Ok(p) = CStr::from_ptr(path).to_str() else {
            set_error("path is not valid UTF-8");
            return VotsegStatus::ConfigError;
        };
        match Model::load(Path::new(p)) {
            Ok(model) => {
                *out = Box::into_raw(Box::new(VotsegModel { model }));
                VotsegStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Releases a handle. NULL is ignored.
///
/// # Safety
/// `model` must come from `votseg_model_load` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn votseg_model_free(model: *mut VotsegModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Feature dimension the model expects, or 0 for NULL.
///
/// # Safety
/// `model` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn votseg_model_input_dim(model: *const VotsegModel) -> usize {
    model.as_ref().map_or(0, |m| m.model.norm.input_dim)
}

/// Measures VOT on raw features stored row-major, `n_frames x dim`.
///
/// # Safety
/// `model` must be a live handle, `frames` must point to
/// `n_frames * dim` doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn votseg_model_predict(
    model: *const VotsegModel,
    frames: *const f64,
    n_frames: usize,
    dim: usize,
    frame_period_ms: f64,
    out: *mut VotsegMeasurement,
) -> VotsegStatus {
    guard(|| {
        let Some(m) = model.as_ref() else { return null("model") };
        if frames.is_null() {
            return null("frames");
        }
        if out.is_null() {
            return null("out");
        }
        let Some(len) = n_frames.checked_mul(dim) else {
            return fail(Error::Contract("n_frames * dim overflows".into()));
        };
        let data = std::slice::from_raw_parts(frames, len).to_vec();
        let result = ndarray::Array2::from_shape_vec((n_frames, dim), data)
            .map_err(|e| Error::Contract(e.to_string()))
            .and_then(|a| FeatureSequence::new(a, frame_period_ms))
            .and_then(|x| m.model.predict(&x));
        match result {
            Ok(p) => {
                let v = p.measurement;
                *out = VotsegMeasurement {
                    vot_ms: v.vot_ms,
                    vot_type: match v.vot_type {
                        VotType::Positive => 0,
                        VotType::Negative => 1,
                    },
                    y1: v.boundaries.y1,
                    y2: v.boundaries.y2,
                    type_prob: v.type_prob,
                };
                VotsegStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Best segmentation of a `n_frames x 2` row-major score matrix (column 0
/// scores the first boundary, column 1 the second).
///
/// # Safety
/// `scores` must point to `2 * n_frames` doubles; `y1`, `y2` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn votseg_decode(
    scores: *const f64,
    n_frames: usize,
    y1: *mut usize,
    y2: *mut usize,
) -> VotsegStatus {
    guard(|| {
        if scores.is_null() {
            return null("scores");
        }
        if y1.is_null() || y2.is_null() {
            return null("output");
        }
        let Some(len) = n_frames.checked_mul(2) else {
            return fail(Error::Contract("n_frames overflows".into()));
        };
        let data = std::slice::from_raw_parts(scores, len).to_vec();
        let result = ndarray::Array2::from_shape_vec((n_frames, 2), data)
            .map_err(|e| Error::Contract(e.to_string()))
            .and_then(ScoreMatrix::new)
            .and_then(|s| seg::decode(&s));
        match result {
            Ok(s) => {
                *y1 = s.y1;
                *y2 = s.y2;
                VotsegStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Tolerance-hinged boundary loss between two segmentations.
#[no_mangle]
pub extern "C" fn votseg_task_loss(
    gold_y1: usize,
    gold_y2: usize,
    pred_y1: usize,
    pred_y2: usize,
    tau_frames: usize,
) -> f64 {
    seg::task_loss(
        Segmentation { y1: gold_y1, y2: gold_y2 },
        Segmentation { y1: pred_y1, y2: pred_y2 },
        TaskLossConfig { tau_frames },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn last_error() -> String {
        unsafe { CStr::from_ptr(votseg_last_error_message()) }
            .to_string_lossy()
            .into_owned()
    }

    #[test]
    fn version_matches_package() {
        let v = unsafe { CStr::from_ptr(votseg_version()) };
        assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    }

    #[test]
    fn decode_small_matrix() {
        let scores = [0.0, 0.0, 5.0, 0.0, 0.0, 0.0, 0.0, 7.0];
        let (mut a, mut b) = (0, 0);
        let st = unsafe { votseg_decode(scores.as_ptr(), 4, &mut a, &mut b) };
        assert_eq!(st, VotsegStatus::Ok);
        assert_eq!((a, b), (2, 4));
    }

    #[test]
    fn decode_too_short_is_data_error() {
        let scores = [1.0, 2.0];
        let (mut a, mut b) = (0, 0);
        let st = unsafe { votseg_decode(scores.as_ptr(), 1, &mut a, &mut b) };
        assert_eq!(st, VotsegStatus::DataError);
        assert!(!last_error().is_empty());
    }

    #[test]
    fn null_pointers_rejected() {
        let mut a = 0;
        let st = unsafe { votseg_decode(std::ptr::null(), 3, &mut a, &mut a) };
        assert_eq!(st, VotsegStatus::NullPointer);
        assert!(last_error().contains("scores"));
        let mut m = std::ptr::null_mut();
        let st = unsafe { votseg_model_load(std::ptr::null(), &mut m) };
        assert_eq!(st, VotsegStatus::NullPointer);
        unsafe { votseg_model_free(std::ptr::null_mut()) };
        assert_eq!(unsafe { votseg_model_input_dim(std::ptr::null()) }, 0);
    }

    #[test]
    fn task_loss_hinges() {
        assert_eq!(votseg_task_loss(10, 20, 13, 20, 2), 1.0);
        assert_eq!(votseg_task_loss(10, 20, 12, 18, 2), 0.0);
    }
}
