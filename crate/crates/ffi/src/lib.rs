//! C interface to the `squashing` library.
//!
//! States and maps are opaque handles created by `sq_*_new`-style functions
//! and released with the matching `_free`. Every fallible call returns an
//! [`SqStatus`]; on failure a message is kept per thread and can be read with
//! [`sq_last_error_message`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nalgebra::DMatrix;
use squashing::linalg::C64;
use squashing::maps::ProcessMap;
use squashing::metrics::{self, BoundOptions};
use squashing::scenario::{self, Scenario};
use squashing::{models, sdp, DensityMatrix, Error, HermitianOperator};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SqStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numerical = 3,
    Panic = 4,
}

/// Opaque density matrix.
pub struct SqState(DensityMatrix);

/// Opaque linear map, stored by its Choi matrix.
pub struct SqMap(ProcessMap);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(SqStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.is_numerical() { SqStatus::Numerical } else { SqStatus::InvalidArgument };
        Failure(code, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(SqStatus::NullPointer, format!("`{what}` is null"))
}

fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> SqStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SqStatus::Ok,
        Ok(Err(Failure(code, msg))) => {
            set_last_error(msg);
            code
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            SqStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write_out<T>(out: *mut T, v: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(v);
    Ok(())
}

/// Reads an `n x n` row-major complex matrix; `im` may be null.
unsafe fn read_matrix(n: usize, re: *const f64, im: *const f64) -> Result<DMatrix<C64>, Failure> {
    if re.is_null() {
        return Err(null("re"));
    }
    let re = std::slice::from_raw_parts(re, n * n);
    let im = (!im.is_null()).then(|| std::slice::from_raw_parts(im, n * n));
    Ok(DMatrix::from_fn(n, n, |r, c| {
        let k = r * n + c;
        C64::new(re[k], im.map_or(0.0, |v| v[k]))
    }))
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sq_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sq_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Density matrix from a row-major matrix on subsystems `dims[0..n_dims]`.
///
/// # Safety
/// `dims` must point to `n_dims` values; `re` (and `im`, unless null) to
/// `D*D` values where `D` is the product of `dims`.
#[no_mangle]
pub unsafe extern "C" fn sq_state_new(
    dims: *const usize,
    n_dims: usize,
    re: *const f64,
    im: *const f64,
    out: *mut *mut SqState,
) -> SqStatus {
    guard(|| {
        if dims.is_null() {
            return Err(null("dims"));
        }
        let dims = std::slice::from_raw_parts(dims, n_dims).to_vec();
        let d = dims.iter().try_fold(1usize, |a, &b| a.checked_mul(b));
        let d = d.ok_or_else(|| Failure(SqStatus::InvalidArgument, "dimension overflow".into()))?;
        let m = read_matrix(d, re, im)?;
        let rho = DensityMatrix::new(HermitianOperator::new(dims, m)?)?;
        write_out(out, boxed(SqState(rho)), "out")
    })
}

/// Two-qubit Werner state `(1-p)|ψ+><ψ+| + p I/4`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sq_state_werner(p: f64, out: *mut *mut SqState) -> SqStatus {
    guard(|| write_out(out, boxed(SqState(models::werner_state(p)?)), "out"))
}

/// Total dimension, or 0 for a null handle.
///
/// # Safety
/// `state` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sq_state_dim(state: *const SqState) -> usize {
    state.as_ref().map_or(0, |s| s.0.dim())
}

/// # Safety
/// `state` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sq_state_free(state: *mut SqState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sq_map_identity(d: usize, out: *mut *mut SqMap) -> SqStatus {
    guard(|| write_out(out, boxed(SqMap(ProcessMap::identity(d))), "out"))
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sq_map_transpose(d: usize, out: *mut *mut SqMap) -> SqStatus {
    guard(|| write_out(out, boxed(SqMap(ProcessMap::transpose(d))), "out"))
}

/// `ρ ↦ (1-p)ρ + p tr(ρ) I/d`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sq_map_depolarizing(d: usize, p: f64, out: *mut *mut SqMap) -> SqStatus {
    guard(|| write_out(out, boxed(SqMap(ProcessMap::depolarizing(d, p)?)), "out"))
}

/// Map from its Choi matrix `Σ|i><j| ⊗ Λ(|i><j|)`, row-major, input first.
///
/// # Safety
/// `re` (and `im`, unless null) must point to `(din*dout)^2` values.
#[no_mangle]
pub unsafe extern "C" fn sq_map_from_choi(
    din: usize,
    dout: usize,
    re: *const f64,
    im: *const f64,
    out: *mut *mut SqMap,
) -> SqStatus {
    guard(|| {
        let n = din
            .checked_mul(dout)
            .ok_or_else(|| Failure(SqStatus::InvalidArgument, "dimension overflow".into()))?;
        let choi = read_matrix(n, re, im)?;
        let m = ProcessMap::from_choi(vec![din], vec![dout], choi)?;
        write_out(out, boxed(SqMap(m)), "out")
    })
}

/// # Safety
/// `map` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sq_map_free(map: *mut SqMap) {
    if !map.is_null() {
        drop(Box::from_raw(map));
    }
}

/// Certified upper bound on the diamond norm.
///
/// # Safety
/// `map` must be a live handle and `out_value` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sq_map_diamond_norm(
    map: *const SqMap,
    restarts: usize,
    seed: u64,
    out_value: *mut f64,
) -> SqStatus {
    guard(|| {
        let m = deref(map, "map")?;
        let d = sdp::diamond_norm(&m.0, restarts.max(1), seed, &Default::default())?;
        write_out(out_value, d.value, "out_value")
    })
}

/// Negativity across the cut after subsystem `cut`.
///
/// # Safety
/// `state` must be a live handle and `out_value` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sq_negativity(state: *const SqState, cut: usize, out_value: *mut f64) -> SqStatus {
    guard(|| {
        let s = deref(state, "state")?;
        let n = metrics::negativity(s.0.op(), cut)?;
        write_out(out_value, n.value, "out_value")
    })
}

/// Smallest eigenvalue of the partial transpose on subsystem `cut`.
///
/// # Safety
/// `state` must be a live handle and `out_value` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sq_ppt_min_eigenvalue(state: *const SqState, cut: usize, out_value: *mut f64) -> SqStatus {
    guard(|| {
        let s = deref(state, "state")?;
        write_out(out_value, metrics::ppt_test(s.0.op(), cut)?.min_eigenvalue(), "out_value")
    })
}

/// Largest certified lower bound on the negativity of `state` obtainable
/// from the output of `map_a ⊗ map_b`. `*out_available` is false when no
/// certified norm could be computed.
///
/// # Safety
/// Handles must be live; output pointers valid.
#[no_mangle]
pub unsafe extern "C" fn sq_negativity_bound(
    state: *const SqState,
    map_a: *const SqMap,
    map_b: *const SqMap,
    restarts: usize,
    seed: u64,
    out_value: *mut f64,
    out_available: *mut bool,
) -> SqStatus {
    guard(|| {
        let (s, a, b) = (deref(state, "state")?, deref(map_a, "map_a")?, deref(map_b, "map_b")?);
        let opts = BoundOptions {
            restarts: restarts.max(1),
            seed,
            ..Default::default()
        };
        let suite = metrics::negativity_bounds(&s.0, &a.0, &b.0, &opts)?;
        write_out(out_available, suite.best.is_some(), "out_available")?;
        write_out(out_value, suite.best.unwrap_or(f64::NAN), "out_value")
    })
}

/// Runs a TOML scenario and returns the JSON report in `*out_json`, to be
/// released with [`sq_string_free`]. `command` labels the report; null means
/// `"run"`.
///
/// # Safety
/// `config` and `command` (unless null) must be NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn sq_run_scenario(
    config: *const c_char,
    command: *const c_char,
    out_json: *mut *mut c_char,
) -> SqStatus {
    guard(|| {
        let utf8 = |p: *const c_char| {
            CStr::from_ptr(p)
                .to_str()
                .map_err(|e| Failure(SqStatus::InvalidArgument, e.to_string()))
        };
        if config.is_null() {
            return Err(null("config"));
        }
        let scenario = Scenario::from_toml(utf8(config)?)?;
        let command = if command.is_null() { "run" } else { utf8(command)? };
        let json = scenario::run_scenario(&scenario, command)?.to_json()?;
        let c = CString::new(json).map_err(|e| Failure(SqStatus::InvalidArgument, e.to_string()))?;
        write_out(out_json, c.into_raw(), "out_json")
    })
}

/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sq_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
