//! C ABI over the asymptotica library.
//!
//! Every function returns an [`AsyStatus`]; results come back through out-pointers. Objects are
//! opaque handles released with their `_free` function. The message of the last failure on the
//! calling thread is available from [`asy_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use asymptotica::channel::{Channel, Picture};
use asymptotica::cli::{self, AnalysisReport, AnalyzeOptions};
use asymptotica::matcore::{ComplexMatrix, C64};
use asymptotica::spectral;
use asymptotica::unfolder::{Synthesis, UnfoldSpec};
use asymptotica::{Error, Tolerances};

/// Status codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AsyStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Structural = 3,
    Numerical = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

/// Picture of a superoperator passed across the boundary.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AsyPicture {
    Schrodinger = 0,
    Heisenberg = 1,
}

/// Opaque channel handle.
pub struct AsyChannel {
    inner: Channel,
}

/// Opaque analysis report handle.
pub struct AsyReport {
    inner: AnalysisReport,
    json: String,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(e: &Error) -> AsyStatus {
    match e {
        Error::Io(_) | Error::Json(_) | Error::Validation(_) | Error::Dimension(_) => AsyStatus::InvalidInput,
        Error::Numerical { .. } | Error::NotAnEigenvalue { .. } | Error::Defective { .. } => AsyStatus::Numerical,
        _ => AsyStatus::Structural,
    }
}

fn guard(f: impl FnOnce() -> Result<(), AsyStatus>) -> AsyStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AsyStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            AsyStatus::Panic
        }
    }
}

fn fail(e: Error) -> AsyStatus {
    let s = status_of(&e);
    set_error(e.to_string());
    s
}

unsafe fn read_str<'a>(p: *const c_char) -> Result<&'a str, AsyStatus> {
    if p.is_null() {
        set_error("null string");
        return Err(AsyStatus::NullPointer);
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error("string is not UTF-8");
        AsyStatus::InvalidInput
    })
}

unsafe fn deref<'a, T>(p: *const T) -> Result<&'a T, AsyStatus> {
    p.as_ref().ok_or_else(|| {
        set_error("null handle");
        AsyStatus::NullPointer
    })
}

/// Copy `s` plus a terminating NUL into `buf`; `needed` always receives the full size.
unsafe fn copy_out(s: &str, buf: *mut c_char, cap: usize, needed: *mut usize) -> Result<(), AsyStatus> {
    if !needed.is_null() {
        *needed = s.len() + 1;
    }
    if buf.is_null() || cap < s.len() + 1 {
        set_error("buffer too small");
        return Err(AsyStatus::BufferTooSmall);
    }
    ptr::copy_nonoverlapping(s.as_ptr() as *const c_char, buf, s.len());
    *buf.add(s.len()) = 0;
    Ok(())
}

fn boxed<T>(v: T, out: *mut *mut T) -> Result<(), AsyStatus> {
    if out.is_null() {
        set_error("null out-pointer");
        return Err(AsyStatus::NullPointer);
    }
    unsafe { *out = Box::into_raw(Box::new(v)) };
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn asy_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message of the last failure on this thread.
///
/// # Safety
/// `buf` must be writable for `cap` bytes; `needed` may be null.
#[no_mangle]
pub unsafe extern "C" fn asy_last_error(buf: *mut c_char, cap: usize, needed: *mut usize) -> AsyStatus {
    let msg = LAST_ERROR.with(|e| e.borrow().clone());
    guard(|| copy_out(&msg, buf, cap, needed))
}

/// Parse a channel JSON document.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be a valid out-pointer.
#[no_mangle]
pub unsafe extern "C" fn asy_channel_from_json(json: *const c_char, out: *mut *mut AsyChannel) -> AsyStatus {
    guard(|| {
        let text = read_str(json)?;
        let c = Channel::from_json_str(text, &Tolerances::default()).map_err(fail)?;
        boxed(AsyChannel { inner: c }, out)
    })
}

/// Build a channel from a `d² x d²` superoperator given row-major as interleaved `re, im`
/// pairs (`2·d⁴` doubles).
///
/// # Safety
/// `data` must point to `2·d⁴` readable doubles; `out` must be a valid out-pointer.
#[no_mangle]
pub unsafe extern "C" fn asy_channel_from_superop(
    dim: usize,
    data: *const f64,
    picture: AsyPicture,
    out: *mut *mut AsyChannel,
) -> AsyStatus {
    guard(|| {
        if data.is_null() {
            set_error("null data");
            return Err(AsyStatus::NullPointer);
        }
        let n = dim.checked_mul(dim).filter(|&n| n > 0 && n <= 4096).ok_or_else(|| {
            set_error("dimension out of range");
            AsyStatus::InvalidInput
        })?;
        let raw = std::slice::from_raw_parts(data, 2 * n * n);
        let m = ComplexMatrix::from_fn(n, n, |i, j| C64::new(raw[2 * (i * n + j)], raw[2 * (i * n + j) + 1]));
        let p = match picture {
            AsyPicture::Schrodinger => Picture::Schrodinger,
            AsyPicture::Heisenberg => Picture::Heisenberg,
        };
        let c = Channel::from_superop(m, p).map_err(fail)?;
        boxed(AsyChannel { inner: c }, out)
    })
}

/// Synthesize a channel from an unfolding spec (JSON).
///
/// # Safety
/// `spec_json` must be a NUL-terminated string; `out` must be a valid out-pointer.
#[no_mangle]
pub unsafe extern "C" fn asy_synthesize(spec_json: *const c_char, out: *mut *mut AsyChannel) -> AsyStatus {
    guard(|| {
        let tol = Tolerances::default();
        let spec = UnfoldSpec::from_json_str(read_str(spec_json)?).map_err(fail)?;
        spec.validate(&tol).map_err(fail)?;
        let syn = Synthesis::new(spec, &tol).map_err(fail)?;
        boxed(AsyChannel { inner: syn.channel }, out)
    })
}

/// # Safety
/// `c` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn asy_channel_free(c: *mut AsyChannel) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// # Safety
/// `c` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn asy_channel_dim(c: *const AsyChannel, out: *mut usize) -> AsyStatus {
    guard(|| {
        let c = deref(c)?;
        if out.is_null() {
            return Err(AsyStatus::NullPointer);
        }
        *out = c.inner.dim();
        Ok(())
    })
}

/// Peripheral eigenvalues (with multiplicity) of the Heisenberg map as interleaved `re, im`
/// pairs. `len` receives the number of eigenvalues; `cap` counts eigenvalues, not doubles.
///
/// # Safety
/// `c` must be a live handle; `out` must hold `2·cap` doubles; `len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn asy_peripheral_eigenvalues(
    c: *const AsyChannel,
    out: *mut f64,
    cap: usize,
    len: *mut usize,
) -> AsyStatus {
    guard(|| {
        let c = deref(c)?;
        if len.is_null() {
            return Err(AsyStatus::NullPointer);
        }
        let h = heisenberg(&c.inner);
        let values = spectral::spectrum(&h, &Tolerances::default()).map_err(fail)?.peripheral_values();
        *len = values.len();
        if out.is_null() || cap < values.len() {
            set_error("buffer too small");
            return Err(AsyStatus::BufferTooSmall);
        }
        for (k, z) in values.iter().enumerate() {
            *out.add(2 * k) = z.re;
            *out.add(2 * k + 1) = z.im;
        }
        Ok(())
    })
}

fn heisenberg(c: &Channel) -> Channel {
    match c.picture() {
        Picture::Heisenberg => c.clone(),
        Picture::Schrodinger => c.adjoint(),
    }
}

/// Full analysis with default tolerances and no timings.
///
/// # Safety
/// `c` must be a live handle; `out` must be a valid out-pointer.
#[no_mangle]
pub unsafe extern "C" fn asy_analyze(c: *const AsyChannel, seed: u64, out: *mut *mut AsyReport) -> AsyStatus {
    guard(|| {
        let c = deref(c)?;
        let opts = AnalyzeOptions { seed, timings: false, ..Default::default() };
        let report = cli::analyze_channel(&c.inner, String::new(), &opts);
        let json = cli::json::to_string_17(&report).map_err(fail)?;
        boxed(AsyReport { inner: report, json }, out)
    })
}

/// Whether every structural check passed.
///
/// # Safety
/// `r` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn asy_report_passed(r: *const AsyReport, out: *mut bool) -> AsyStatus {
    guard(|| {
        let r = deref(r)?;
        if out.is_null() {
            return Err(AsyStatus::NullPointer);
        }
        *out = r.inner.verdict.passed;
        Ok(())
    })
}

/// Report attractor dimension (0 if the structure stage did not complete).
///
/// # Safety
/// `r` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn asy_report_attractor_dim(r: *const AsyReport, out: *mut usize) -> AsyStatus {
    guard(|| {
        let r = deref(r)?;
        if out.is_null() {
            return Err(AsyStatus::NullPointer);
        }
        *out = r.inner.structure.as_ref().map_or(0, |s| s.attractor_dim);
        Ok(())
    })
}

/// Report as JSON. Call with a null `buf` to learn the size through `needed`.
///
/// # Safety
/// `r` must be a live handle; `buf` writable for `cap` bytes or null; `needed` may be null.
#[no_mangle]
pub unsafe extern "C" fn asy_report_json(r: *const AsyReport, buf: *mut c_char, cap: usize, needed: *mut usize) -> AsyStatus {
    guard(|| {
        let r = deref(r)?;
        copy_out(&r.json, buf, cap, needed)
    })
}

/// # Safety
/// `r` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn asy_report_free(r: *mut AsyReport) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}
