//! C ABI over `sever-core`.
//!
//! Handles are opaque and owned by the caller once returned; free them with
//! the matching `*_free`. Every function returns a [`SeverStatus`]; on failure
//! [`sever_last_error_message`] describes the error for the calling thread.
//! Matrices are row-major `n × d` arrays of doubles.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use sever_core::filter::{compute_scores_indexed, robust_mean, FilterConfig, DEFAULT_THRESHOLD_MULT};
use sever_core::harness::csvio::load_csv;
use sever_core::learners::Learner;
use sever_core::linalg::Matrix;
use sever_core::{
    run_sever, Dataset, Error, LearnerConfig, LossKind, LossModel, RidgeLearner, SeverConfig, SubgradientLearner,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeverStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    Singular = 4,
    Diverged = 5,
    FilteredEverything = 6,
    Io = 7,
    Parse = 8,
    Internal = 99,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeverLoss {
    Squared = 0,
    Hinge = 1,
    Logistic = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeverMode {
    /// Remove the top `p_fraction` for `num_rounds` rounds.
    Practical = 0,
    /// Randomized filter until the mean score drops below `threshold_mult·σ²`.
    Theoretical = 1,
}

/// Run settings. Start from [`sever_config_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeverRunConfig {
    pub loss: SeverLoss,
    pub lambda: f64,
    pub mode: SeverMode,
    pub p_fraction: f64,
    pub num_rounds: usize,
    pub sigma: f64,
    pub threshold_mult: f64,
    pub per_class: bool,
    pub seed: u64,
    /// Subgradient learner only (hinge, logistic).
    pub max_epochs: usize,
    pub step_size: f64,
}

pub struct SeverDataset {
    inner: Dataset,
}

pub struct SeverOutcome {
    inner: sever_core::SeverOutcome,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SeverStatus {
    match e {
        Error::DimensionMismatch { .. } => SeverStatus::DimensionMismatch,
        Error::Singular => SeverStatus::Singular,
        Error::Diverged => SeverStatus::Diverged,
        Error::FilteredEverything => SeverStatus::FilteredEverything,
        Error::Io(_) => SeverStatus::Io,
        Error::Parse { .. } | Error::Csv(_) => SeverStatus::Parse,
        _ => SeverStatus::InvalidArgument,
    }
}

struct Fail(SeverStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(SeverStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> SeverStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SeverStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            SeverStatus::Internal
        }
    }
}

unsafe fn matrix<'a>(data: *const f64, n: usize, d: usize) -> Result<&'a [f64], Fail> {
    if data.is_null() {
        return Err(null("matrix"));
    }
    let len = n
        .checked_mul(d)
        .ok_or_else(|| Fail(SeverStatus::InvalidArgument, "n·d overflows".into()))?;
    Ok(std::slice::from_raw_parts(data, len))
}

unsafe fn out_slice<'a, T>(buf: *mut T, len: usize, need: usize) -> Result<&'a mut [T], Fail> {
    if buf.is_null() {
        return Err(null("output buffer"));
    }
    if len < need {
        return Err(Fail(
            SeverStatus::DimensionMismatch,
            format!("output buffer holds {len}, need {need}"),
        ));
    }
    Ok(std::slice::from_raw_parts_mut(buf, need))
}

/// Message for the last failed call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sever_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Copies `n × d` features and `n` labels into a new dataset.
#[no_mangle]
pub unsafe extern "C" fn sever_dataset_new(
    x: *const f64,
    y: *const f64,
    n: usize,
    d: usize,
    out: *mut *mut SeverDataset,
) -> SeverStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if y.is_null() {
            return Err(null("y"));
        }
        let xs = matrix(x, n, d)?;
        let ys = std::slice::from_raw_parts(y, n);
        let inner = Dataset::new(Matrix::from_vec(n, d, xs.to_vec())?, ys.to_vec())?;
        *out = Box::into_raw(Box::new(SeverDataset { inner }));
        Ok(())
    })
}

/// Loads a headerless numeric CSV whose last column is the label.
#[no_mangle]
pub unsafe extern "C" fn sever_dataset_load_csv(path: *const c_char, out: *mut *mut SeverDataset) -> SeverStatus {
    guard(|| {
        if path.is_null() {
            return Err(null("path"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| Fail(SeverStatus::InvalidArgument, "path is not UTF-8".into()))?;
        let inner = load_csv(path)?;
        *out = Box::into_raw(Box::new(SeverDataset { inner }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn sever_dataset_len(data: *const SeverDataset, out: *mut usize) -> SeverStatus {
    guard(|| {
        let data = data.as_ref().ok_or_else(|| null("dataset"))?;
        *out.as_mut().ok_or_else(|| null("out"))? = data.inner.len();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn sever_dataset_dim(data: *const SeverDataset, out: *mut usize) -> SeverStatus {
    guard(|| {
        let data = data.as_ref().ok_or_else(|| null("dataset"))?;
        *out.as_mut().ok_or_else(|| null("out"))? = data.inner.dim();
        Ok(())
    })
}

/// Null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn sever_dataset_free(data: *mut SeverDataset) {
    if !data.is_null() {
        drop(Box::from_raw(data));
    }
}

/// Practical mode, squared loss, λ = 0.01, p = 0.05, 4 rounds.
#[no_mangle]
pub extern "C" fn sever_config_default() -> SeverRunConfig {
    let learner = LearnerConfig::default();
    SeverRunConfig {
        loss: SeverLoss::Squared,
        lambda: 0.01,
        mode: SeverMode::Practical,
        p_fraction: 0.05,
        num_rounds: 4,
        sigma: 1.0,
        threshold_mult: DEFAULT_THRESHOLD_MULT,
        per_class: false,
        seed: 0,
        max_epochs: learner.max_epochs,
        step_size: learner.step_size,
    }
}

fn core_config(cfg: &SeverRunConfig) -> SeverConfig {
    let base = match cfg.mode {
        SeverMode::Practical => SeverConfig::practical(cfg.p_fraction, cfg.num_rounds),
        SeverMode::Theoretical => SeverConfig::theoretical(cfg.sigma),
    };
    SeverConfig {
        threshold_mult: cfg.threshold_mult,
        ..base
    }
    .with_seed(cfg.seed)
    .with_per_class(cfg.per_class)
}

/// Runs the filter loop. Squared loss uses the closed-form ridge solver,
/// hinge and logistic use projected subgradient descent.
#[no_mangle]
pub unsafe extern "C" fn sever_run(
    data: *const SeverDataset,
    cfg: *const SeverRunConfig,
    out: *mut *mut SeverOutcome,
) -> SeverStatus {
    guard(|| {
        let data = data.as_ref().ok_or_else(|| null("dataset"))?;
        let cfg = cfg.as_ref().ok_or_else(|| null("config"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let kind = match cfg.loss {
            SeverLoss::Squared => LossKind::Squared,
            SeverLoss::Hinge => LossKind::Hinge,
            SeverLoss::Logistic => LossKind::Logistic,
        };
        let model = LossModel::new(kind, cfg.lambda)?;
        let learner: Box<dyn Learner> = match kind {
            LossKind::Squared => Box::new(RidgeLearner),
            _ => {
                let lc = LearnerConfig {
                    max_epochs: cfg.max_epochs,
                    step_size: cfg.step_size,
                    ..LearnerConfig::default()
                };
                lc.validate()?;
                Box::new(SubgradientLearner::new(lc))
            }
        };
        let inner = run_sever(&model, &data.inner, learner.as_ref(), &core_config(cfg))?;
        *out = Box::into_raw(Box::new(SeverOutcome { inner }));
        Ok(())
    })
}

/// Copies the fitted parameters into `buf` (length ≥ dimension).
#[no_mangle]
pub unsafe extern "C" fn sever_outcome_weights(o: *const SeverOutcome, buf: *mut f64, len: usize) -> SeverStatus {
    guard(|| {
        let o = o.as_ref().ok_or_else(|| null("outcome"))?;
        out_slice(buf, len, o.inner.w.len())?.copy_from_slice(&o.inner.w);
        Ok(())
    })
}

/// Writes 1 for every retained sample and 0 for every removed one.
#[no_mangle]
pub unsafe extern "C" fn sever_outcome_retained(o: *const SeverOutcome, buf: *mut u8, len: usize) -> SeverStatus {
    guard(|| {
        let o = o.as_ref().ok_or_else(|| null("outcome"))?;
        let dst = out_slice(buf, len, o.inner.retained.len())?;
        for (d, &r) in dst.iter_mut().zip(&o.inner.retained) {
            *d = r as u8;
        }
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn sever_outcome_rounds(o: *const SeverOutcome, out: *mut usize) -> SeverStatus {
    guard(|| {
        let o = o.as_ref().ok_or_else(|| null("outcome"))?;
        *out.as_mut().ok_or_else(|| null("out"))? = o.inner.rounds_run;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn sever_outcome_removed_count(o: *const SeverOutcome, out: *mut usize) -> SeverStatus {
    guard(|| {
        let o = o.as_ref().ok_or_else(|| null("outcome"))?;
        *out.as_mut().ok_or_else(|| null("out"))? = o.inner.removed_count();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn sever_outcome_achieved_gamma(o: *const SeverOutcome, out: *mut f64) -> SeverStatus {
    guard(|| {
        let o = o.as_ref().ok_or_else(|| null("outcome"))?;
        *out.as_mut().ok_or_else(|| null("out"))? = o.inner.achieved_gamma;
        Ok(())
    })
}

/// Null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn sever_outcome_free(o: *mut SeverOutcome) {
    if !o.is_null() {
        drop(Box::from_raw(o));
    }
}

/// Filtered mean of the `n × d` rows of `points`, written to `out_mean`
/// (length `d`). `budget_exceeded` may be null.
#[no_mangle]
pub unsafe extern "C" fn sever_robust_mean(
    points: *const f64,
    n: usize,
    d: usize,
    sigma: f64,
    eps_budget: f64,
    seed: u64,
    out_mean: *mut f64,
    budget_exceeded: *mut bool,
) -> SeverStatus {
    guard(|| {
        let m = Matrix::from_vec(n, d, matrix(points, n, d)?.to_vec())?;
        let dst = out_slice(out_mean, d, d)?;
        let cfg = FilterConfig {
            seed,
            ..FilterConfig::default()
        };
        let rm = robust_mean(&m, sigma, eps_budget, &cfg)?;
        dst.copy_from_slice(&rm.mean);
        if let Some(b) = budget_exceeded.as_mut() {
            *b = rm.budget_exceeded;
        }
        Ok(())
    })
}

/// Outlier scores of the `n × d` rows: squared projection of each centered
/// row onto the top singular direction. Writes `n` values.
#[no_mangle]
pub unsafe extern "C" fn sever_compute_scores(
    rows: *const f64,
    n: usize,
    d: usize,
    seed: u64,
    out_scores: *mut f64,
) -> SeverStatus {
    guard(|| {
        let m = Matrix::from_vec(n, d, matrix(rows, n, d)?.to_vec())?;
        let dst = out_slice(out_scores, n, n)?;
        dst.copy_from_slice(&compute_scores_indexed(&m, seed)?.scores);
        Ok(())
    })
}
