//! C ABI for the catsize library.
//!
//! Every fallible call returns a `CatsizeStatus` and writes its result
//! through an out-pointer. Objects are opaque handles released with the
//! matching `_free` function. The message of the last failure on the
//! calling thread is available from `catsize_last_error`.

use catsize::closed::{CatStateSpec, GeneratorKind, StateFamily};
use catsize::measures::{self, GeneratorFamily, MarquardtCheck, MeasureResult, RqfiOptions};
use catsize::phase_space::{self, AxisSpec, SliceSpec, WignerGrid};
use catsize::simulate;
use catsize::Error;
use num_complex::Complex64;
use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CatsizeStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Domain = 3,
    Sizing = 4,
    Io = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CatsizeFamily {
    Omega = 0,
    OmegaPrime = 1,
    Hcs = 2,
    EvenCat = 3,
    OddCat = 4,
    ProductCoherent = 5,
}

/// Bit flags for rqfi generator families.
pub const CATSIZE_GEN_BOUNDED_LOCAL: u32 = 1;
pub const CATSIZE_GEN_QUADRATURE: u32 = 2;
pub const CATSIZE_GEN_NUMBER: u32 = 4;
pub const CATSIZE_GEN_SPIN_SANDWICH: u32 = 8;

/// Opaque state description.
pub struct CatsizeState(CatStateSpec);

/// Opaque measure result.
pub struct CatsizeResult {
    inner: MeasureResult,
    json: CString,
}

/// Opaque Wigner grid.
pub struct CatsizeGrid(WignerGrid);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> CatsizeStatus {
    match e {
        Error::Sizing { .. } | Error::Headroom { .. } | Error::Truncation { .. } => CatsizeStatus::Sizing,
        Error::Io(_) => CatsizeStatus::Io,
        Error::Invalid(_) | Error::InvalidMode { .. } | Error::Dimension(_) => CatsizeStatus::InvalidArgument,
        _ => CatsizeStatus::Domain,
    }
}

/// Runs `f`, records any error message, and converts panics.
fn guard(f: impl FnOnce() -> Result<(), (CatsizeStatus, String)>) -> CatsizeStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            CatsizeStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            CatsizeStatus::Panic
        }
    }
}

fn lib<T>(r: catsize::Result<T>) -> Result<T, (CatsizeStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null() -> (CatsizeStatus, String) {
    (CatsizeStatus::NullPointer, "null pointer argument".into())
}

fn invalid(msg: &str) -> (CatsizeStatus, String) {
    (CatsizeStatus::InvalidArgument, msg.into())
}

unsafe fn state_ref<'a>(s: *const CatsizeState) -> Result<&'a CatStateSpec, (CatsizeStatus, String)> {
    s.as_ref().map(|s| &s.0).ok_or_else(null)
}

unsafe fn write_out<T>(out: *mut T, v: T) -> Result<(), (CatsizeStatus, String)> {
    if out.is_null() {
        return Err(null());
    }
    out.write(v);
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn catsize_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length excluding the NUL.
///
/// # Safety
/// `buf` must be valid for `len` bytes or null.
#[no_mangle]
pub unsafe extern "C" fn catsize_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let bytes = e.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn catsize_state_new(
    family: CatsizeFamily,
    modes: usize,
    alpha_re: f64,
    alpha_im: f64,
    out: *mut *mut CatsizeState,
) -> CatsizeStatus {
    guard(|| {
        let fam = match family {
            CatsizeFamily::Omega => StateFamily::Omega,
            CatsizeFamily::OmegaPrime => StateFamily::OmegaPrime,
            CatsizeFamily::Hcs => StateFamily::Hcs,
            CatsizeFamily::EvenCat => StateFamily::EvenCat,
            CatsizeFamily::OddCat => StateFamily::OddCat,
            CatsizeFamily::ProductCoherent => StateFamily::ProductCoherent,
        };
        let spec = lib(CatStateSpec::new(fam, modes, Complex64::new(alpha_re, alpha_im)))?;
        write_out(out, Box::into_raw(Box::new(CatsizeState(spec))))
    })
}

/// # Safety
/// `state` must come from `catsize_state_new` or be null.
#[no_mangle]
pub unsafe extern "C" fn catsize_state_free(state: *mut CatsizeState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

unsafe fn emit(out: *mut *mut CatsizeResult, r: MeasureResult) -> Result<(), (CatsizeStatus, String)> {
    let json = serde_json::to_string(&r).map_err(|e| (CatsizeStatus::Panic, e.to_string()))?;
    let json = CString::new(json).map_err(|e| (CatsizeStatus::Panic, e.to_string()))?;
    write_out(out, Box::into_raw(Box::new(CatsizeResult { inner: r, json })))
}

/// # Safety
/// `state` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn catsize_branch_dist_size(
    state: *const CatsizeState,
    delta: f64,
    out: *mut *mut CatsizeResult,
) -> CatsizeStatus {
    guard(|| emit(out, lib(measures::branch_dist_size(state_ref(state)?, delta))?))
}

/// # Safety
/// `state` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn catsize_branch_dist_size_real(
    state: *const CatsizeState,
    delta: f64,
    out: *mut *mut CatsizeResult,
) -> CatsizeStatus {
    guard(|| emit(out, lib(measures::branch_dist_size_real(state_ref(state)?, delta))?))
}

/// `generators` is a mask of `CATSIZE_GEN_*` flags.
///
/// # Safety
/// `state` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn catsize_rqfi_size(
    state: *const CatsizeState,
    generators: u32,
    out: *mut *mut CatsizeResult,
) -> CatsizeStatus {
    guard(|| {
        let kinds: Vec<GeneratorKind> = [
            (CATSIZE_GEN_BOUNDED_LOCAL, GeneratorKind::BoundedLocal),
            (CATSIZE_GEN_QUADRATURE, GeneratorKind::Quadrature),
            (CATSIZE_GEN_NUMBER, GeneratorKind::Number),
            (CATSIZE_GEN_SPIN_SANDWICH, GeneratorKind::SpinSandwich),
        ]
        .into_iter()
        .filter(|(bit, _)| generators & bit != 0)
        .map(|(_, k)| k)
        .collect();
        if kinds.is_empty() || generators >> 4 != 0 {
            return Err(invalid("generator mask must be a non-empty set of CATSIZE_GEN_* flags"));
        }
        let fam = GeneratorFamily::new(&kinds);
        emit(out, lib(measures::rqfi_size(state_ref(state)?, &fam, &RqfiOptions::default()))?)
    })
}

/// # Safety
/// `state` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn catsize_marquardt_size(
    state: *const CatsizeState,
    numeric_check: bool,
    out: *mut *mut CatsizeResult,
) -> CatsizeStatus {
    guard(|| {
        let chk = numeric_check.then(MarquardtCheck::default);
        emit(out, lib(measures::marquardt_size(state_ref(state)?, chk))?)
    })
}

/// # Safety
/// `state` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn catsize_distillation_size(
    state: *const CatsizeState,
    out: *mut *mut CatsizeResult,
) -> CatsizeStatus {
    guard(|| emit(out, lib(measures::distillation_size(state_ref(state)?))?))
}

/// # Safety
/// `state` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn catsize_mode_loss_size(
    state: *const CatsizeState,
    lambda: f64,
    out: *mut *mut CatsizeResult,
) -> CatsizeStatus {
    guard(|| emit(out, lib(measures::mode_loss_size(state_ref(state)?, lambda))?))
}

/// # Safety
/// `state` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn catsize_wigner_empirical_size(
    state: *const CatsizeState,
    out: *mut *mut CatsizeResult,
) -> CatsizeStatus {
    guard(|| emit(out, lib(measures::wigner_empirical_size(state_ref(state)?))?))
}

/// # Safety
/// `result` must be a live handle and `value` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn catsize_result_value(result: *const CatsizeResult, value: *mut f64) -> CatsizeStatus {
    guard(|| {
        let r = result.as_ref().ok_or_else(null)?;
        write_out(value, r.inner.value)
    })
}

/// Looks up a numeric diagnostic by name.
///
/// # Safety
/// `result` must be a live handle, `key` a NUL-terminated string and
/// `value` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn catsize_result_diagnostic(
    result: *const CatsizeResult,
    key: *const c_char,
    value: *mut f64,
) -> CatsizeStatus {
    guard(|| {
        let r = result.as_ref().ok_or_else(null)?;
        if key.is_null() {
            return Err(null());
        }
        let key = std::ffi::CStr::from_ptr(key)
            .to_str()
            .map_err(|_| invalid("key is not UTF-8"))?;
        let v = r
            .inner
            .diagnostic_f64(key)
            .ok_or_else(|| invalid(&format!("no numeric diagnostic '{key}'")))?;
        write_out(value, v)
    })
}

/// JSON text of the full result, valid until the handle is freed.
///
/// # Safety
/// `result` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn catsize_result_json(result: *const CatsizeResult) -> *const c_char {
    match result.as_ref() {
        Some(r) => r.json.as_ptr(),
        None => ptr::null(),
    }
}

/// # Safety
/// `result` must come from a measure call or be null.
#[no_mangle]
pub unsafe extern "C" fn catsize_result_free(result: *mut CatsizeResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Closed-form Wigner value at one phase-space point per mode.
///
/// # Safety
/// `gamma_re` and `gamma_im` must hold `modes` values of the state.
#[no_mangle]
pub unsafe extern "C" fn catsize_wigner_point(
    state: *const CatsizeState,
    gamma_re: *const f64,
    gamma_im: *const f64,
    value: *mut f64,
) -> CatsizeStatus {
    guard(|| {
        let spec = state_ref(state)?;
        if gamma_re.is_null() || gamma_im.is_null() {
            return Err(null());
        }
        let re = std::slice::from_raw_parts(gamma_re, spec.modes);
        let im = std::slice::from_raw_parts(gamma_im, spec.modes);
        let g: Vec<Complex64> = re.iter().zip(im).map(|(&a, &b)| Complex64::new(a, b)).collect();
        write_out(value, lib(phase_space::wigner_cat_closed(spec, &g))?)
    })
}

/// Grid over the complex plane of `mode`; the other modes sit at
/// `fixed_re[k] + i fixed_im[k]` (the entry for `mode` is ignored).
///
/// # Safety
/// `fixed_re`/`fixed_im` must hold `modes` values, or be null for a
/// single-mode state.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn catsize_wigner_plane(
    state: *const CatsizeState,
    mode: usize,
    min: f64,
    max: f64,
    steps: usize,
    fixed_re: *const f64,
    fixed_im: *const f64,
    out: *mut *mut CatsizeGrid,
) -> CatsizeStatus {
    guard(|| {
        let spec = state_ref(state)?;
        let n = spec.modes;
        let others: Vec<Complex64> = if n == 1 {
            vec![]
        } else {
            if fixed_re.is_null() || fixed_im.is_null() {
                return Err(null());
            }
            let re = std::slice::from_raw_parts(fixed_re, n);
            let im = std::slice::from_raw_parts(fixed_im, n);
            (0..n)
                .filter(|&k| k != mode)
                .map(|k| Complex64::new(re[k], im[k]))
                .collect()
        };
        let ax = lib(AxisSpec::new(min, max, steps))?;
        let slice = lib(SliceSpec::plane(n, mode, ax, ax, &others))?;
        let grid = lib(phase_space::wigner_grid(spec, slice))?;
        write_out(out, Box::into_raw(Box::new(CatsizeGrid(grid))))
    })
}

/// # Safety
/// `grid` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn catsize_grid_len(grid: *const CatsizeGrid) -> usize {
    grid.as_ref().map_or(0, |g| g.0.values.len())
}

/// Copies the row-major values (last axis fastest) into `buf`.
///
/// # Safety
/// `buf` must be valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn catsize_grid_values(grid: *const CatsizeGrid, buf: *mut f64, len: usize) -> CatsizeStatus {
    guard(|| {
        let g = grid.as_ref().ok_or_else(null)?;
        if buf.is_null() {
            return Err(null());
        }
        if len < g.0.values.len() {
            return Err((
                CatsizeStatus::BufferTooSmall,
                format!("need {} values, buffer holds {len}", g.0.values.len()),
            ));
        }
        ptr::copy_nonoverlapping(g.0.values.as_ptr(), buf, g.0.values.len());
        Ok(())
    })
}

/// # Safety
/// `grid` must come from `catsize_wigner_plane` or be null.
#[no_mangle]
pub unsafe extern "C" fn catsize_grid_free(grid: *mut CatsizeGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// Mean and standard error of the number of E1 outcomes in the
/// sequential distillation protocol.
///
/// # Safety
/// `mean` and `std_error` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn catsize_simulate_distillation(
    modes: usize,
    alpha_re: f64,
    alpha_im: f64,
    trials: u64,
    seed: u64,
    mean: *mut f64,
    std_error: *mut f64,
) -> CatsizeStatus {
    guard(|| {
        if mean.is_null() || std_error.is_null() {
            return Err(null());
        }
        let run = lib(simulate::simulate_distillation(
            modes,
            Complex64::new(alpha_re, alpha_im),
            trials,
            seed,
        ))?;
        write_out(mean, run.n.mean)?;
        write_out(std_error, run.n.std_error)
    })
}
