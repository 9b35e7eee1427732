//! C ABI over the `gpac` crate.
//!
//! Datasets and results are opaque handles created and freed by this library.
//! Every fallible function returns a [`GpacStatus`]; on failure the message is
//! available from [`gpac_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use gpac::{Dataset, FitResult, GpacConfig, GpacError, InitMode};

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GpacStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// A size or buffer length argument does not match.
    InvalidArgument = 2,
    InvalidDataset = 3,
    InvalidConfig = 4,
    /// Graph construction or the optimizer produced a non-finite value.
    Numerical = 5,
    /// A Rust panic was caught at the boundary.
    Internal = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GpacInit {
    Kmeanspp = 0,
    Random = 1,
    Zero = 2,
}

/// Hyperparameters. Start from `gpac_params_default`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpacParams {
    pub clusters: usize,
    pub m: f64,
    pub alpha: f64,
    pub beta_max: f64,
    pub beta_ramp_epochs: usize,
    pub k: usize,
    /// 0 selects the default depth.
    pub theta: usize,
    /// Values <= 0 select the default bandwidth.
    pub sigma: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub convergence_tol: f64,
    pub seed: u64,
    pub init: GpacInit,
}

/// Opaque dataset handle.
pub struct GpacDataset(Dataset);

/// Opaque fit result handle.
pub struct GpacResult(FitResult);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).expect("nul bytes removed"));
}

fn fail(status: GpacStatus, msg: impl Into<String>) -> GpacStatus {
    set_error(msg);
    status
}

fn status_of(err: &GpacError) -> GpacStatus {
    match err {
        GpacError::InvalidConfig(_) => GpacStatus::InvalidConfig,
        GpacError::NonFiniteDistance(..) | GpacError::ZeroSigma | GpacError::NonFiniteMembership(_) => {
            GpacStatus::Numerical
        }
        GpacError::LengthMismatch(..) => GpacStatus::InvalidArgument,
        _ => GpacStatus::InvalidDataset,
    }
}

fn guard<F: FnOnce() -> GpacStatus>(f: F) -> GpacStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(GpacStatus::Internal, format!("internal error: {msg}"))
        }
    }
}

fn to_config(p: &GpacParams) -> GpacConfig {
    GpacConfig {
        m: p.m,
        alpha: p.alpha,
        beta_max: p.beta_max,
        beta_ramp_epochs: p.beta_ramp_epochs,
        k: p.k,
        theta: (p.theta > 0).then_some(p.theta),
        sigma: (p.sigma > 0.0).then_some(p.sigma),
        batch_size: p.batch_size,
        max_epochs: p.max_epochs,
        convergence_tol: p.convergence_tol,
        seed: p.seed,
        init: match p.init {
            GpacInit::Kmeanspp => InitMode::Kmeanspp,
            GpacInit::Random => InitMode::Random,
            GpacInit::Zero => InitMode::Zero,
        },
        ..GpacConfig::new(p.clusters)
    }
}

/// Default hyperparameters for `clusters` clusters.
#[no_mangle]
pub extern "C" fn gpac_params_default(clusters: usize) -> GpacParams {
    let c = GpacConfig::new(clusters);
    GpacParams {
        clusters,
        m: c.m,
        alpha: c.alpha,
        beta_max: c.beta_max,
        beta_ramp_epochs: c.beta_ramp_epochs,
        k: c.k,
        theta: 0,
        sigma: 0.0,
        batch_size: c.batch_size,
        max_epochs: c.max_epochs,
        convergence_tol: c.convergence_tol,
        seed: c.seed,
        init: GpacInit::Kmeanspp,
    }
}

/// Copies `n * d` row-major features (and `n` labels, which may be null)
/// into a new dataset stored in `*out`.
///
/// # Safety
/// `features` must point to `n * d` doubles, `labels` to `n` integers or be
/// null, and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gpac_dataset_new(
    features: *const f64,
    n: usize,
    d: usize,
    labels: *const i64,
    out: *mut *mut GpacDataset,
) -> GpacStatus {
    guard(|| {
        if features.is_null() || out.is_null() {
            return fail(GpacStatus::NullPointer, "features and out must not be null");
        }
        let Some(len) = n.checked_mul(d) else {
            return fail(GpacStatus::InvalidArgument, "n * d overflows");
        };
        // SAFETY: the caller guarantees the buffer lengths.
        let feats = unsafe { slice::from_raw_parts(features, len) }.to_vec();
        let labs = (!labels.is_null()).then(|| unsafe { slice::from_raw_parts(labels, n) }.to_vec());
        match Dataset::new(feats, n, d, labs) {
            Ok(ds) => {
                unsafe { *out = Box::into_raw(Box::new(GpacDataset(ds))) };
                GpacStatus::Ok
            }
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

/// # Safety
/// `ds` must come from `gpac_dataset_new` and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn gpac_dataset_free(ds: *mut GpacDataset) {
    if !ds.is_null() {
        drop(unsafe { Box::from_raw(ds) });
    }
}

/// Clusters `ds` and stores a new result handle in `*out`.
///
/// # Safety
/// `ds` must be a live dataset handle, `params` a valid pointer and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gpac_fit(
    ds: *const GpacDataset,
    params: *const GpacParams,
    out: *mut *mut GpacResult,
) -> GpacStatus {
    guard(|| {
        if ds.is_null() || params.is_null() || out.is_null() {
            return fail(GpacStatus::NullPointer, "dataset, params and out must not be null");
        }
        let (data, params) = unsafe { (&(*ds).0, &*params) };
        match gpac::fit(data, &to_config(params)) {
            Ok(r) => {
                unsafe { *out = Box::into_raw(Box::new(GpacResult(r))) };
                GpacStatus::Ok
            }
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

/// Number of samples, or 0 for a null handle.
///
/// # Safety
/// `res` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn gpac_result_n(res: *const GpacResult) -> usize {
    unsafe { res.as_ref() }.map_or(0, |r| r.0.fuzzy.n())
}

/// Number of clusters, or 0 for a null handle.
///
/// # Safety
/// `res` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn gpac_result_clusters(res: *const GpacResult) -> usize {
    unsafe { res.as_ref() }.map_or(0, |r| r.0.fuzzy.c())
}

/// Number of epochs run, or 0 for a null handle.
///
/// # Safety
/// `res` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn gpac_result_epochs(res: *const GpacResult) -> usize {
    unsafe { res.as_ref() }.map_or(0, |r| r.0.trace.len())
}

/// Copies the predicted cluster of each sample into `out[0..len]`; `len`
/// must equal the sample count.
///
/// # Safety
/// `res` must be a live result handle and `out` must hold `len` entries.
#[no_mangle]
pub unsafe extern "C" fn gpac_result_labels(res: *const GpacResult, out: *mut usize, len: usize) -> GpacStatus {
    guard(|| {
        let Some(r) = (unsafe { res.as_ref() }) else {
            return fail(GpacStatus::NullPointer, "result must not be null");
        };
        if out.is_null() {
            return fail(GpacStatus::NullPointer, "out must not be null");
        }
        let src = &r.0.predictions;
        if len != src.len() {
            return fail(
                GpacStatus::InvalidArgument,
                format!("buffer holds {len} labels, result has {}", src.len()),
            );
        }
        unsafe { ptr::copy_nonoverlapping(src.as_ptr(), out, len) };
        GpacStatus::Ok
    })
}

/// Copies the row-major `n * c` membership matrix into `out[0..len]`.
///
/// # Safety
/// `res` must be a live result handle and `out` must hold `len` entries.
#[no_mangle]
pub unsafe extern "C" fn gpac_result_probs(res: *const GpacResult, out: *mut f64, len: usize) -> GpacStatus {
    guard(|| {
        let Some(r) = (unsafe { res.as_ref() }) else {
            return fail(GpacStatus::NullPointer, "result must not be null");
        };
        if out.is_null() {
            return fail(GpacStatus::NullPointer, "out must not be null");
        }
        let src = r.0.fuzzy.as_slice();
        if len != src.len() {
            return fail(
                GpacStatus::InvalidArgument,
                format!("buffer holds {len} values, result has {}", src.len()),
            );
        }
        unsafe { ptr::copy_nonoverlapping(src.as_ptr(), out, len) };
        GpacStatus::Ok
    })
}

/// # Safety
/// `res` must come from `gpac_fit` and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn gpac_result_free(res: *mut GpacResult) {
    if !res.is_null() {
        drop(unsafe { Box::from_raw(res) });
    }
}

unsafe fn metric(
    pred: *const i64,
    truth: *const i64,
    n: usize,
    out: *mut f64,
    f: fn(&[i64], &[i64]) -> gpac::Result<f64>,
) -> GpacStatus {
    guard(|| {
        if pred.is_null() || truth.is_null() || out.is_null() {
            return fail(GpacStatus::NullPointer, "pred, truth and out must not be null");
        }
        let (p, t) = unsafe { (slice::from_raw_parts(pred, n), slice::from_raw_parts(truth, n)) };
        match f(p, t) {
            Ok(v) => {
                unsafe { *out = v };
                GpacStatus::Ok
            }
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

/// Normalized mutual information (arithmetic normalization).
///
/// # Safety
/// `pred` and `truth` must hold `n` entries and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gpac_nmi(pred: *const i64, truth: *const i64, n: usize, out: *mut f64) -> GpacStatus {
    unsafe { metric(pred, truth, n, out, gpac::metrics::nmi) }
}

/// Clustering accuracy under the best one-to-one label matching.
///
/// # Safety
/// `pred` and `truth` must hold `n` entries and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gpac_acc(pred: *const i64, truth: *const i64, n: usize, out: *mut f64) -> GpacStatus {
    unsafe { metric(pred, truth, n, out, gpac::metrics::acc) }
}

/// Adjusted Rand index.
///
/// # Safety
/// `pred` and `truth` must hold `n` entries and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gpac_ari(pred: *const i64, truth: *const i64, n: usize, out: *mut f64) -> GpacStatus {
    unsafe { metric(pred, truth, n, out, gpac::metrics::ari) }
}

/// Message for the last failure on this thread, or an empty string. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn gpac_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gpac_version() -> *const c_char {
    const VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => panic!("version string"),
    };
    VERSION.as_ptr()
}
