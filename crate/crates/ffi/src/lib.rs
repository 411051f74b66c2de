//! C ABI over `nlreg-core`.
//!
//! Objects are opaque heap handles released with the matching `*_free`.
//! Every call returns an [`NlregStatus`]; on failure the message is kept in
//! thread-local storage and can be copied out with [`nlreg_last_error`].
//! Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nlreg_core::cli::KernelSection;
use nlreg_core::conditions::{run_suite, Condition, SuiteOptions, Verdict};
use nlreg_core::kernel::{eval_density, TwoPointKernel};
use nlreg_core::quadrature::{annulus_integral, first_moment, l_total, BoundedFunction, QuadConfig};
use nlreg_core::solver::{assemble, build_mesh, solve, DiscreteFunction};
use nlreg_core::Error;

/// Result code of every call. Values 2–4 match the `nlreg` exit codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NlregStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Unsupported = 3,
    Numerical = 4,
    Panic = 5,
}

/// Opaque kernel handle.
pub struct NlregKernel {
    kernel: TwoPointKernel,
    quad: QuadConfig,
}

/// Opaque discrete solution handle.
pub struct NlregSolution {
    u: DiscreteFunction,
}

/// Condition verdicts in the order A1, A2, A3_1, A3_2, Kas, B:
/// 1 pass, 0 fail, -1 inconclusive.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NlregConditions {
    pub verdicts: [i32; 6],
    /// Decay exponent α estimated for condition (B); NaN if unavailable.
    pub alpha: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> NlregStatus {
    match e {
        Error::Config(_) | Error::Validation { .. } | Error::Argument(_) => NlregStatus::InvalidInput,
        Error::Unsupported(_) => NlregStatus::Unsupported,
        _ => NlregStatus::Numerical,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (NlregStatus, String)>) -> NlregStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            NlregStatus::Ok
        }
        Ok(Err((s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("internal panic".into());
            NlregStatus::Panic
        }
    }
}

fn core<T>(r: nlreg_core::Result<T>) -> Result<T, (NlregStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (NlregStatus, String) {
    (NlregStatus::NullPointer, format!("{what} is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (NlregStatus, String)> {
    unsafe { p.as_ref() }.ok_or_else(|| null(what))
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `cap`). Returns the full message length excluding the NUL.
///
/// # Safety
/// `buf` must be null or point to `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn nlreg_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && cap > 0 {
            let n = msg.len().min(cap - 1);
            unsafe {
                ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
                *buf.add(n) = 0;
            }
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn nlreg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a kernel from a TOML table such as
/// `family = { kind = "fractional", s = 0.25 }`. `rel_tol ≤ 0` keeps the default tolerance.
///
/// # Safety
/// `toml` must be a NUL-terminated UTF-8 string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nlreg_kernel_from_toml(toml: *const c_char, rel_tol: f64, out: *mut *mut NlregKernel) -> NlregStatus {
    guard(|| {
        if toml.is_null() {
            return Err(null("toml"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let text = unsafe { CStr::from_ptr(toml) }.to_str().map_err(|e| (NlregStatus::InvalidInput, e.to_string()))?;
        let kernel = core(KernelSection::from_toml(text).and_then(|k| k.build()))?;
        let mut quad = QuadConfig::default();
        if rel_tol > 0.0 {
            quad.rel_tol = rel_tol;
        }
        core(quad.validate())?;
        unsafe { *out = Box::into_raw(Box::new(NlregKernel { kernel, quad })) };
        Ok(())
    })
}

/// Releases a kernel; null is ignored.
///
/// # Safety
/// `k` must come from [`nlreg_kernel_from_toml`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn nlreg_kernel_free(k: *mut NlregKernel) {
    if !k.is_null() {
        drop(unsafe { Box::from_raw(k) });
    }
}

/// Evaluates j(z) at one point of dimension `dim` (which must match the kernel).
///
/// # Safety
/// `z` must point to `dim` doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nlreg_kernel_density(k: *const NlregKernel, z: *const f64, dim: usize, out: *mut f64) -> NlregStatus {
    guard(|| {
        let k = unsafe { deref(k, "kernel") }?;
        if z.is_null() || out.is_null() {
            return Err(null("z/out"));
        }
        let z = unsafe { std::slice::from_raw_parts(z, dim) };
        if dim != k.kernel.base.dimension() {
            return Err((NlregStatus::InvalidInput, format!("point has dimension {dim}, kernel has {}", k.kernel.base.dimension())));
        }
        unsafe { *out = core(eval_density(&k.kernel.base, z))? };
        Ok(())
    })
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NlregQuantity {
    /// ∫_{r<|z|<R} j.
    Annulus = 0,
    /// ∫_{|z|<r} |z| j.
    FirstMoment = 1,
    /// L(r) = m(r)/r + ∫_{|z|>r} j.
    Total = 2,
}

/// Integral quantity of the density; `big_r` is used only for `Annulus` and may be +∞.
///
/// # Safety
/// `k` must be a live kernel handle and `value` writable.
#[no_mangle]
pub unsafe extern "C" fn nlreg_quantity(k: *const NlregKernel, q: NlregQuantity, r: f64, big_r: f64, value: *mut f64) -> NlregStatus {
    guard(|| {
        let k = unsafe { deref(k, "kernel") }?;
        if value.is_null() {
            return Err(null("value"));
        }
        let spec = &k.kernel.base;
        let res = match q {
            NlregQuantity::Annulus => annulus_integral(spec, r, big_r, &k.quad),
            NlregQuantity::FirstMoment => first_moment(spec, r, &k.quad),
            NlregQuantity::Total => l_total(spec, r, &k.quad),
        };
        unsafe { *value = core(res)?.value };
        Ok(())
    })
}

/// Runs the condition checks with scale `r0` and sampling `seed`.
///
/// # Safety
/// `k` must be a live kernel handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nlreg_check_conditions(k: *const NlregKernel, r0: f64, seed: u64, out: *mut NlregConditions) -> NlregStatus {
    guard(|| {
        let k = unsafe { deref(k, "kernel") }?;
        if out.is_null() {
            return Err(null("out"));
        }
        let reports = core(run_suite(&k.kernel, SuiteOptions { r0, seed }, &k.quad))?;
        let mut res = NlregConditions { verdicts: [-1; 6], alpha: f64::NAN };
        for r in &reports {
            let slot = match r.condition {
                Condition::A1 { .. } => 0,
                Condition::A2 => 1,
                Condition::A31 => 2,
                Condition::A32 => 3,
                Condition::Kas => 4,
                Condition::B => 5,
            };
            res.verdicts[slot] = match r.verdict {
                Verdict::Pass => 1,
                Verdict::Fail => 0,
                Verdict::Inconclusive => -1,
            };
            if slot == 5 {
                res.alpha = r.constants.get("alpha").copied().unwrap_or(f64::NAN);
            }
        }
        unsafe { *out = res };
        Ok(())
    })
}

/// Solves ℒu − W u = f in (a, b) with u = g outside, for constant f, g and W,
/// on a uniform mesh of width `h` extended by `collar`.
///
/// # Safety
/// `k` must be a live kernel handle and `out` writable.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn nlreg_solve_constant(
    k: *const NlregKernel,
    a: f64,
    b: f64,
    collar: f64,
    h: f64,
    f: f64,
    g: f64,
    w: f64,
    out: *mut *mut NlregSolution,
) -> NlregStatus {
    guard(|| {
        let k = unsafe { deref(k, "kernel") }?;
        if out.is_null() {
            return Err(null("out"));
        }
        let c = |v: f64| if v == 0.0 { BoundedFunction::Zero } else { BoundedFunction::Constant { value: v } };
        let mesh = core(build_mesh(a, b, collar, h))?;
        let system = core(assemble(&k.kernel, &mesh, &c(w), &k.quad))?;
        let u = core(solve(&system, &c(f), &c(g)))?;
        unsafe { *out = Box::into_raw(Box::new(NlregSolution { u })) };
        Ok(())
    })
}

/// Number of mesh nodes in the solution (0 for null).
///
/// # Safety
/// `s` must be null or a live solution handle.
#[no_mangle]
pub unsafe extern "C" fn nlreg_solution_len(s: *const NlregSolution) -> usize {
    unsafe { s.as_ref() }.map_or(0, |s| s.u.values.len())
}

/// Copies node coordinates and values into `x` and `u` (either may be null).
///
/// # Safety
/// Non-null `x`/`u` must point to `cap` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn nlreg_solution_values(s: *const NlregSolution, x: *mut f64, u: *mut f64, cap: usize) -> NlregStatus {
    guard(|| {
        let s = unsafe { deref(s, "solution") }?;
        let n = s.u.values.len();
        if cap < n {
            return Err((NlregStatus::InvalidInput, format!("buffer holds {cap} values, {n} needed")));
        }
        for i in 0..n {
            unsafe {
                if !x.is_null() {
                    *x.add(i) = s.u.mesh.x(i);
                }
                if !u.is_null() {
                    *u.add(i) = s.u.values[i];
                }
            }
        }
        Ok(())
    })
}

/// Evaluates the piecewise-linear solution (with its exterior data) at `x`.
///
/// # Safety
/// `s` must be a live solution handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nlreg_solution_eval(s: *const NlregSolution, x: f64, out: *mut f64) -> NlregStatus {
    guard(|| {
        let s = unsafe { deref(s, "solution") }?;
        if out.is_null() {
            return Err(null("out"));
        }
        unsafe { *out = s.u.eval(x) };
        Ok(())
    })
}

/// Releases a solution; null is ignored.
///
/// # Safety
/// `s` must come from [`nlreg_solve_constant`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn nlreg_solution_free(s: *mut NlregSolution) {
    if !s.is_null() {
        drop(unsafe { Box::from_raw(s) });
    }
}
