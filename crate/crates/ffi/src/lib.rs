//! C ABI over flowsentry run artifacts.
//!
//! Every call returns an [`FsStatus`]; on failure the message is available
//! from [`fs_last_error_message`] on the same thread until the next call.
//! Runs are opaque handles created by [`fs_run_load`] and released with
//! [`fs_run_free`]. Matrices are row-major `double` buffers.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use flowsentry::ensemble::{weighted_vote, VotingMode};
use flowsentry::pipeline::RunArtifact;
use flowsentry::{Error, Matrix};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FsStatus {
    FsOk = 0,
    FsErrNullPointer = 1,
    FsErrIo = 2,
    FsErrArtifact = 3,
    FsErrDimension = 4,
    FsErrInvalidArgument = 5,
    /// The run does not contain the requested stage.
    FsErrMissingStage = 6,
    FsErrPanic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FsVoting {
    FsVotingMajority = 0,
    FsVotingWeighted = 1,
}

/// Opaque handle to a loaded run.
pub struct FsRun {
    run: RunArtifact,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> FsStatus {
    match e {
        Error::Io { .. } => FsStatus::FsErrIo,
        Error::Dimension { .. } => FsStatus::FsErrDimension,
        Error::InvalidParameter(_) | Error::Empty(_) => FsStatus::FsErrInvalidArgument,
        Error::NotFound(_) | Error::Unweighted => FsStatus::FsErrMissingStage,
        _ => FsStatus::FsErrArtifact,
    }
}

struct Fail(FsStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(FsStatus::FsErrNullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> FsStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FsStatus::FsOk,
        Ok(Err(Fail(code, msg))) => {
            set_error(msg);
            code
        }
        Err(_) => {
            set_error("internal panic".into());
            FsStatus::FsErrPanic
        }
    }
}

/// Message for the last failed call on this thread, or NULL. Valid until the
/// next call on the same thread.
#[no_mangle]
pub extern "C" fn fs_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Load a run artifact (`run.json`). On success `*out` owns a handle.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fs_run_load(path: *const c_char, out: *mut *mut FsRun) -> FsStatus {
    guard(|| {
        if path.is_null() {
            return Err(null("path"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let p = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| Fail(FsStatus::FsErrInvalidArgument, "path is not UTF-8".into()))?;
        let run = RunArtifact::load(Path::new(p))?;
        *out = Box::into_raw(Box::new(FsRun { run }));
        Ok(())
    })
}

/// Release a handle. NULL is ignored.
///
/// # Safety
/// `run` must come from [`fs_run_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fs_run_free(run: *mut FsRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Number of input features expected per row.
///
/// # Safety
/// `run` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fs_run_input_dim(run: *const FsRun, out: *mut usize) -> FsStatus {
    guard(|| {
        let run = run.as_ref().ok_or_else(|| null("run"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = run.run.ensemble()?.input_dim();
        Ok(())
    })
}

unsafe fn rows(data: *const f64, n_rows: usize, n_cols: usize) -> Result<Matrix, Fail> {
    if data.is_null() {
        return Err(null("rows"));
    }
    let len = n_rows
        .checked_mul(n_cols)
        .ok_or_else(|| Fail(FsStatus::FsErrInvalidArgument, "n_rows * n_cols overflows".into()))?;
    let slice = std::slice::from_raw_parts(data, len);
    Ok(Matrix::from_vec(n_rows, n_cols, slice.to_vec())?)
}

unsafe fn write_out(labels: &[u8], scores: &[f64], out_labels: *mut u8, out_scores: *mut f64) -> Result<(), Fail> {
    if out_labels.is_null() {
        return Err(null("out_labels"));
    }
    std::ptr::copy_nonoverlapping(labels.as_ptr(), out_labels, labels.len());
    if !out_scores.is_null() {
        std::ptr::copy_nonoverlapping(scores.as_ptr(), out_scores, scores.len());
    }
    Ok(())
}

/// Ensemble labels (0 benign, 1 attack) and attack vote shares for `n_rows`
/// rows. `mode` is an [`FsVoting`] value; `out_scores` may be NULL.
///
/// # Safety
/// `rows_ptr` holds `n_rows * n_cols` doubles; `out_labels` and `out_scores`
/// (when not NULL) hold `n_rows` elements.
#[no_mangle]
pub unsafe extern "C" fn fs_run_predict_ensemble(
    run: *const FsRun,
    rows_ptr: *const f64,
    n_rows: usize,
    n_cols: usize,
    mode: u32,
    out_labels: *mut u8,
    out_scores: *mut f64,
) -> FsStatus {
    guard(|| {
        let run = run.as_ref().ok_or_else(|| null("run"))?;
        let m = rows(rows_ptr, n_rows, n_cols)?;
        let mode = match mode {
            m if m == FsVoting::FsVotingMajority as u32 => VotingMode::Majority,
            m if m == FsVoting::FsVotingWeighted as u32 => VotingMode::Weighted,
            other => return Err(Fail(FsStatus::FsErrInvalidArgument, format!("unknown voting mode {other}"))),
        };
        let (labels, scores) = run.run.predict_ensemble(&m, mode)?;
        write_out(&labels, &scores, out_labels, out_scores)
    })
}

/// Final labels from the refinement forest and its attack probabilities.
///
/// # Safety
/// Same buffer contract as [`fs_run_predict_ensemble`].
#[no_mangle]
pub unsafe extern "C" fn fs_run_predict_final(
    run: *const FsRun,
    rows_ptr: *const f64,
    n_rows: usize,
    n_cols: usize,
    out_labels: *mut u8,
    out_scores: *mut f64,
) -> FsStatus {
    guard(|| {
        let run = run.as_ref().ok_or_else(|| null("run"))?;
        let m = rows(rows_ptr, n_rows, n_cols)?;
        let (labels, scores) = run.run.predict_final(&m)?;
        write_out(&labels, &scores, out_labels, out_scores)
    })
}

/// Weighted vote over `n` learner votes (0 or 1). Attack wins only on a
/// strictly larger weight sum.
///
/// # Safety
/// `weights` and `votes` hold `n` elements; the outputs are valid pointers
/// (the score pointers may be NULL).
#[no_mangle]
pub unsafe extern "C" fn fs_weighted_vote(
    weights: *const f64,
    votes: *const u8,
    n: usize,
    out_label: *mut u8,
    out_score_benign: *mut f64,
    out_score_attack: *mut f64,
) -> FsStatus {
    guard(|| {
        if weights.is_null() || votes.is_null() || out_label.is_null() {
            return Err(null("weights, votes or out_label"));
        }
        let w = std::slice::from_raw_parts(weights, n);
        let v = std::slice::from_raw_parts(votes, n);
        if let Some(bad) = v.iter().find(|&&x| x > 1) {
            return Err(Fail(FsStatus::FsErrInvalidArgument, format!("vote {bad} is not 0 or 1")));
        }
        if let Some(bad) = w.iter().find(|x| !x.is_finite()) {
            return Err(Fail(FsStatus::FsErrInvalidArgument, format!("weight {bad} is not finite")));
        }
        let p = weighted_vote(w, v);
        *out_label = p.label;
        if !out_score_benign.is_null() {
            *out_score_benign = p.score_benign;
        }
        if !out_score_attack.is_null() {
            *out_score_attack = p.score_attack;
        }
        Ok(())
    })
}
