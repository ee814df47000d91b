//! C ABI over the core library. Laws, risk measures and programs are opaque
//! handles owned by the caller and released with the matching `_free`.
//! Every call returns a [`DomaggStatus`]; on failure the message is
//! available from [`domagg_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use domagg::dist::{io as dio, Atoms, Distribution};
use domagg::lattice::{sup_fsd, sup_ssd, GridConfig, Order};
use domagg::risk::{ma_value, wr_value, RiskMeasure};
use domagg::robustopt::{Approach, RobustProgram};
use domagg::uncertainty::WassersteinBall;
use domagg::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomaggStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Infeasible = 3,
    Numeric = 4,
    Unbounded = 5,
    Unsupported = 6,
    Io = 7,
    Parse = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomaggOrder {
    Fsd = 1,
    Ssd = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomaggApproach {
    Wr = 0,
    Ma1 = 1,
    Ma2 = 2,
    Saa = 3,
}

/// A univariate loss law.
pub struct DomaggDistribution {
    inner: Distribution,
}

/// A law-invariant risk measure.
pub struct DomaggMeasure {
    inner: RiskMeasure,
}

/// A robust optimization instance.
pub struct DomaggProgram {
    inner: RobustProgram,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> DomaggStatus {
    match e {
        Error::Infeasible(_) => DomaggStatus::Infeasible,
        Error::Numeric(_) | Error::SolverNotConverged { .. } => DomaggStatus::Numeric,
        Error::Unbounded(_) => DomaggStatus::Unbounded,
        Error::Unsupported(_) => DomaggStatus::Unsupported,
        Error::Io(_) => DomaggStatus::Io,
        Error::Parse(_) | Error::Json(_) | Error::Csv(_) => DomaggStatus::Parse,
        _ => DomaggStatus::InvalidArgument,
    }
}

enum Fail {
    Null(&'static str),
    Lib(Error),
    Small,
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard<F: FnOnce() -> Result<(), Fail>>(f: F) -> DomaggStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DomaggStatus::Ok,
        Ok(Err(Fail::Null(what))) => {
            set_error(&format!("null pointer: {what}"));
            DomaggStatus::NullPointer
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Ok(Err(Fail::Small)) => {
            set_error("output buffer too small");
            DomaggStatus::BufferTooSmall
        }
        Err(_) => {
            set_error("internal panic");
            DomaggStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(what))
}

unsafe fn text<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail::Lib(Error::Parse(format!("{what} is not UTF-8"))))
}

unsafe fn slice<'a, T>(p: *const T, n: usize, what: &'static str) -> Result<&'a [T], Fail> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn laws(set: *const *const DomaggDistribution, n: usize) -> Result<Vec<Distribution>, Fail> {
    slice(set, n, "distribution array")?.iter().map(|&d| Ok(deref(d, "distribution")?.inner.clone())).collect()
}

fn boxed(d: Distribution) -> *mut DomaggDistribution {
    Box::into_raw(Box::new(DomaggDistribution { inner: d }))
}

/// Message of the last failed call on this thread. Valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn domagg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn domagg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Atomic law from `n` locations and probabilities.
///
/// # Safety
/// `locations` and `probabilities` must point to `n` doubles; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn domagg_distribution_atoms(
    locations: *const f64,
    probabilities: *const f64,
    n: usize,
    out: *mut *mut DomaggDistribution,
) -> DomaggStatus {
    guard(|| {
        let x = slice(locations, n, "locations")?;
        let p = slice(probabilities, n, "probabilities")?;
        let a = Atoms::new(x.iter().copied().zip(p.iter().copied()).collect())?;
        *self::out(out, "out")? = boxed(Distribution::Atoms(a));
        Ok(())
    })
}

/// Law from a spec string (`normal:mu:sigma`, `t:nu:loc:scale`,
/// `logistic:loc:s`, `point:x`) or the path of a JSON/CSV file.
///
/// # Safety
/// `spec` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn domagg_distribution_parse(spec: *const c_char, out: *mut *mut DomaggDistribution) -> DomaggStatus {
    guard(|| {
        let d = dio::parse_spec(text(spec, "spec")?)?;
        *self::out(out, "out")? = boxed(d);
        Ok(())
    })
}

/// Law from its JSON form.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn domagg_distribution_from_json(json: *const c_char, out: *mut *mut DomaggDistribution) -> DomaggStatus {
    guard(|| {
        let d = dio::from_json_str(text(json, "json")?)?;
        *self::out(out, "out")? = boxed(d);
        Ok(())
    })
}

/// JSON form of a law; release with [`domagg_string_free`].
///
/// # Safety
/// `d` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn domagg_distribution_to_json(d: *const DomaggDistribution, out: *mut *mut c_char) -> DomaggStatus {
    guard(|| {
        let s = serde_json::to_string(&deref(d, "distribution")?.inner).map_err(Error::from)?;
        *self::out(out, "out")? = CString::new(s).unwrap_or_default().into_raw();
        Ok(())
    })
}

/// # Safety
/// `d` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn domagg_distribution_free(d: *mut DomaggDistribution) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn domagg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// `F(x)`.
///
/// # Safety
/// `d` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn domagg_distribution_cdf(d: *const DomaggDistribution, x: f64, out: *mut f64) -> DomaggStatus {
    guard(|| {
        *self::out(out, "out")? = deref(d, "distribution")?.inner.cdf(x);
        Ok(())
    })
}

/// Left quantile at level `alpha`.
///
/// # Safety
/// `d` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn domagg_distribution_quantile(d: *const DomaggDistribution, alpha: f64, out: *mut f64) -> DomaggStatus {
    guard(|| {
        *self::out(out, "out")? = deref(d, "distribution")?.inner.quantile(alpha)?;
        Ok(())
    })
}

/// `π(x) = E[(X - x)₊]`.
///
/// # Safety
/// `d` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn domagg_distribution_pi(d: *const DomaggDistribution, x: f64, out: *mut f64) -> DomaggStatus {
    guard(|| {
        *self::out(out, "out")? = deref(d, "distribution")?.inner.pi(x)?;
        Ok(())
    })
}

/// # Safety
/// `d` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn domagg_distribution_mean(d: *const DomaggDistribution, out: *mut f64) -> DomaggStatus {
    guard(|| {
        *self::out(out, "out")? = deref(d, "distribution")?.inner.mean()?;
        Ok(())
    })
}

/// Supremum of `n` laws under the given order. `grid` sets the
/// discretization of non-atomic laws (0 for the default).
///
/// # Safety
/// `set` must point to `n` live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn domagg_supremum(
    order: DomaggOrder,
    set: *const *const DomaggDistribution,
    n: usize,
    grid: usize,
    out: *mut *mut DomaggDistribution,
) -> DomaggStatus {
    guard(|| {
        let laws = laws(set, n)?;
        let sup = match order {
            DomaggOrder::Fsd => sup_fsd(&laws)?,
            DomaggOrder::Ssd => sup_ssd(&laws, &grid_config(grid))?,
        };
        *self::out(out, "out")? = boxed(sup.sup);
        Ok(())
    })
}

fn grid_config(grid: usize) -> GridConfig {
    if grid == 0 {
        GridConfig::default()
    } else {
        GridConfig { size: grid, ..GridConfig::default() }
    }
}

/// SSD supremum of the order-`p` Wasserstein ball of radius `eps`.
///
/// # Safety
/// `benchmark` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn domagg_wasserstein_sup_ssd(
    benchmark: *const DomaggDistribution,
    p: f64,
    eps: f64,
    out: *mut *mut DomaggDistribution,
) -> DomaggStatus {
    guard(|| {
        let ball = WassersteinBall::new(p, eps, deref(benchmark, "benchmark")?.inner.clone())?;
        *self::out(out, "out")? = boxed(ball.sup_ssd()?);
        Ok(())
    })
}

/// Risk measure from a spec (`var:a`, `es:a`, `rvar:a:b`, `pd:k`,
/// `expectile:a`, `mean`, `kusuoka:@file.json`).
///
/// # Safety
/// `spec` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn domagg_measure_parse(spec: *const c_char, out: *mut *mut DomaggMeasure) -> DomaggStatus {
    guard(|| {
        let m = RiskMeasure::parse(text(spec, "spec")?)?;
        *self::out(out, "out")? = Box::into_raw(Box::new(DomaggMeasure { inner: m }));
        Ok(())
    })
}

/// # Safety
/// `m` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn domagg_measure_free(m: *mut DomaggMeasure) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// `ρ(F)`.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn domagg_measure_evaluate(
    m: *const DomaggMeasure,
    d: *const DomaggDistribution,
    out: *mut f64,
) -> DomaggStatus {
    guard(|| {
        *self::out(out, "out")? = deref(m, "measure")?.inner.evaluate(&deref(d, "distribution")?.inner)?;
        Ok(())
    })
}

/// Worst-case value `max_F ρ(F)` over `n` laws.
///
/// # Safety
/// `set` must point to `n` live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn domagg_wr_value(
    m: *const DomaggMeasure,
    set: *const *const DomaggDistribution,
    n: usize,
    out: *mut f64,
) -> DomaggStatus {
    guard(|| {
        *self::out(out, "out")? = wr_value(&deref(m, "measure")?.inner, &laws(set, n)?)?;
        Ok(())
    })
}

/// Aggregated value `ρ(⋁ F)` under the given order.
///
/// # Safety
/// `set` must point to `n` live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn domagg_ma_value(
    m: *const DomaggMeasure,
    order: DomaggOrder,
    set: *const *const DomaggDistribution,
    n: usize,
    out: *mut f64,
) -> DomaggStatus {
    guard(|| {
        let o = match order {
            DomaggOrder::Fsd => Order::Fsd,
            DomaggOrder::Ssd => Order::Ssd,
        };
        *self::out(out, "out")? = ma_value(&deref(m, "measure")?.inner, o, &laws(set, n)?, &GridConfig::default())?;
        Ok(())
    })
}

/// Program from its JSON description.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn domagg_program_from_json(json: *const c_char, out: *mut *mut DomaggProgram) -> DomaggStatus {
    guard(|| {
        let p: RobustProgram = serde_json::from_str(text(json, "json")?).map_err(Error::from)?;
        *self::out(out, "out")? = Box::into_raw(Box::new(DomaggProgram { inner: p }));
        Ok(())
    })
}

/// # Safety
/// `p` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn domagg_program_free(p: *mut DomaggProgram) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Solves the program. The optimal action is written to `action` (capacity
/// `capacity`), its length to `action_len`. With too small a buffer the
/// call fails with `BUFFER_TOO_SMALL` and `action_len` holds the size
/// needed.
///
/// # Safety
/// `p` must be a live handle; `action` must have room for `capacity`
/// doubles; `objective` and `action_len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn domagg_program_solve(
    p: *const DomaggProgram,
    approach: DomaggApproach,
    objective: *mut f64,
    action: *mut f64,
    capacity: usize,
    action_len: *mut usize,
) -> DomaggStatus {
    guard(|| {
        let a = match approach {
            DomaggApproach::Wr => Approach::Wr,
            DomaggApproach::Ma1 => Approach::Ma1,
            DomaggApproach::Ma2 => Approach::Ma2,
            DomaggApproach::Saa => Approach::Saa,
        };
        let s = deref(p, "program")?.inner.solve(a)?;
        *out(action_len, "action_len")? = s.action.len();
        if capacity < s.action.len() {
            return Err(Fail::Small);
        }
        if !s.action.is_empty() {
            if action.is_null() {
                return Err(Fail::Null("action"));
            }
            ptr::copy_nonoverlapping(s.action.as_ptr(), action, s.action.len());
        }
        *out(objective, "objective")? = s.objective;
        Ok(())
    })
}
