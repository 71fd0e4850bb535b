//! C ABI over the anisym library.
//!
//! Every function returns an [`AnisymStatus`]; on failure the message is
//! available from [`anisym_last_error`] on the same thread. Objects are
//! opaque handles released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use anisym::elliptic::{solve_elliptic, EllipticProblem};
use anisym::harness::run_scenario_file;
use anisym::radial::smallest_dirichlet_eigenvalue;
use anisym::rearrange::decreasing_rearrangement;
use anisym::{AnisotropicCoefficients, DecreasingProfile, Error, GridFunction};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnisymStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    SolverFailure = 3,
    ConfigError = 4,
    IoError = 5,
    Panic = 6,
}

/// Grid function on a rectangle; values row-major, `j * nx + i`.
pub struct AnisymGrid {
    inner: GridFunction,
}

/// Nonincreasing step profile of the mass coordinate.
pub struct AnisymProfile {
    inner: DecreasingProfile,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> AnisymStatus {
    match err {
        e if e.is_solver_failure() => AnisymStatus::SolverFailure,
        Error::Config { .. } => AnisymStatus::ConfigError,
        Error::Io(_) | Error::Parse { .. } | Error::Csv(_) | Error::Json(_) => AnisymStatus::IoError,
        _ => AnisymStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (AnisymStatus, String)>) -> AnisymStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AnisymStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside anisym".into());
            AnisymStatus::Panic
        }
    }
}

fn lib<T>(r: anisym::Result<T>) -> Result<T, (AnisymStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(name: &str) -> (AnisymStatus, String) {
    (AnisymStatus::NullPointer, format!("`{name}` is null"))
}

unsafe fn slice<'a>(p: *const f64, n: usize, name: &str) -> Result<&'a [f64], (AnisymStatus, String)> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn path<'a>(p: *const c_char, name: &str) -> Result<&'a Path, (AnisymStatus, String)> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(Path::new)
        .map_err(|_| (AnisymStatus::InvalidArgument, format!("`{name}` is not UTF-8")))
}

unsafe fn write<T>(out: *mut T, value: T, name: &str) -> Result<(), (AnisymStatus, String)> {
    if out.is_null() {
        return Err(null(name));
    }
    out.write(value);
    Ok(())
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn anisym_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn anisym_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `alphas` and `exponents` point to `n` doubles; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn anisym_lambda_constant(
    alphas: *const f64,
    exponents: *const f64,
    n: usize,
    out: *mut f64,
) -> AnisymStatus {
    guard(|| {
        let a = slice(alphas, n, "alphas")?;
        let p = slice(exponents, n, "exponents")?;
        let v = lib(anisym::lambda_constant(a, p, n))?;
        write(out, v, "out")
    })
}

/// Smallest Dirichlet eigenvalue of the ball of radius `radius` in `dim`
/// dimensions.
///
/// # Safety
/// `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn anisym_eigenvalue(radius: f64, dim: usize, out: *mut f64) -> AnisymStatus {
    guard(|| {
        let v = lib(smallest_dirichlet_eigenvalue(radius, dim, 1e-12))?;
        write(out, v, "out")
    })
}

/// Copies `nx * ny` values into a new grid.
///
/// # Safety
/// `values` points to `nx * ny` doubles; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn anisym_grid_new(
    nx: usize,
    ny: usize,
    hx: f64,
    hy: f64,
    values: *const f64,
    out: *mut *mut AnisymGrid,
) -> AnisymStatus {
    guard(|| {
        let n = nx
            .checked_mul(ny)
            .ok_or((AnisymStatus::InvalidArgument, "grid size overflows".to_string()))?;
        let v = slice(values, n, "values")?.to_vec();
        let g = lib(GridFunction::new(nx, ny, hx, hy, v))?;
        write(out, Box::into_raw(Box::new(AnisymGrid { inner: g })), "out")
    })
}

/// # Safety
/// `csv_path` is a NUL-terminated path; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn anisym_grid_load_csv(csv_path: *const c_char, out: *mut *mut AnisymGrid) -> AnisymStatus {
    guard(|| {
        let g = lib(GridFunction::load_csv(path(csv_path, "csv_path")?))?;
        write(out, Box::into_raw(Box::new(AnisymGrid { inner: g })), "out")
    })
}

/// # Safety
/// `grid` is null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn anisym_grid_free(grid: *mut AnisymGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// # Safety
/// `grid` is a live handle; `nx`, `ny` are writable.
#[no_mangle]
pub unsafe extern "C" fn anisym_grid_shape(grid: *const AnisymGrid, nx: *mut usize, ny: *mut usize) -> AnisymStatus {
    guard(|| {
        let g = grid.as_ref().ok_or_else(|| null("grid"))?;
        write(nx, g.inner.nx(), "nx")?;
        write(ny, g.inner.ny(), "ny")
    })
}

/// Copies the values into `out`, which holds `len` doubles.
///
/// # Safety
/// `grid` is a live handle; `out` points to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn anisym_grid_values(grid: *const AnisymGrid, out: *mut f64, len: usize) -> AnisymStatus {
    guard(|| {
        let g = grid.as_ref().ok_or_else(|| null("grid"))?;
        let v = g.inner.values();
        if len != v.len() {
            return Err((
                AnisymStatus::InvalidArgument,
                format!("buffer holds {len} values, grid has {}", v.len()),
            ));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        ptr::copy_nonoverlapping(v.as_ptr(), out, len);
        Ok(())
    })
}

/// Decreasing rearrangement of `|grid|`.
///
/// # Safety
/// `grid` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn anisym_rearrange(grid: *const AnisymGrid, out: *mut *mut AnisymProfile) -> AnisymStatus {
    guard(|| {
        let g = grid.as_ref().ok_or_else(|| null("grid"))?;
        let p = decreasing_rearrangement(&g.inner);
        write(out, Box::into_raw(Box::new(AnisymProfile { inner: p })), "out")
    })
}

/// # Safety
/// `profile` is null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn anisym_profile_free(profile: *mut AnisymProfile) {
    if !profile.is_null() {
        drop(Box::from_raw(profile));
    }
}

/// Number of steps of the profile.
///
/// # Safety
/// `profile` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn anisym_profile_steps(profile: *const AnisymProfile, out: *mut usize) -> AnisymStatus {
    guard(|| {
        let p = profile.as_ref().ok_or_else(|| null("profile"))?;
        write(out, p.inner.num_steps(), "out")
    })
}

/// Copies `steps + 1` breakpoints and `steps` levels.
///
/// # Safety
/// `profile` is a live handle; `breakpoints` holds `steps + 1` and `levels`
/// holds `steps` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn anisym_profile_data(
    profile: *const AnisymProfile,
    breakpoints: *mut f64,
    levels: *mut f64,
    steps: usize,
) -> AnisymStatus {
    guard(|| {
        let p = profile.as_ref().ok_or_else(|| null("profile"))?;
        if steps != p.inner.num_steps() {
            return Err((
                AnisymStatus::InvalidArgument,
                format!("profile has {} steps, caller passed {steps}", p.inner.num_steps()),
            ));
        }
        if breakpoints.is_null() {
            return Err(null("breakpoints"));
        }
        if levels.is_null() {
            return Err(null("levels"));
        }
        ptr::copy_nonoverlapping(p.inner.breakpoints().as_ptr(), breakpoints, steps + 1);
        ptr::copy_nonoverlapping(p.inner.levels().as_ptr(), levels, steps);
        Ok(())
    })
}

/// `∫₀^s` of the profile.
///
/// # Safety
/// `profile` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn anisym_profile_concentration(
    profile: *const AnisymProfile,
    s: f64,
    out: *mut f64,
) -> AnisymStatus {
    guard(|| {
        let p = profile.as_ref().ok_or_else(|| null("profile"))?;
        let v = lib(p.inner.concentration(s))?;
        write(out, v, "out")
    })
}

/// Lorentz norm `‖·‖_{p,q}`; pass `INFINITY` for `q = ∞`.
///
/// # Safety
/// `profile` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn anisym_profile_lorentz_norm(
    profile: *const AnisymProfile,
    p: f64,
    q: f64,
    out: *mut f64,
) -> AnisymStatus {
    guard(|| {
        let prof = profile.as_ref().ok_or_else(|| null("profile"))?;
        let v = lib(prof.inner.lorentz_norm(p, q))?;
        write(out, v, "out")
    })
}

/// Solves the two-dimensional anisotropic problem with zero-order
/// coefficient `lambda0` and right-hand side `rhs`.
///
/// # Safety
/// `alphas` and `exponents` point to 2 doubles; `rhs` is a live handle;
/// `out` is writable; `iterations` may be null.
#[no_mangle]
pub unsafe extern "C" fn anisym_elliptic_solve(
    alphas: *const f64,
    exponents: *const f64,
    lambda0: f64,
    rhs: *const AnisymGrid,
    tol: f64,
    max_iter: usize,
    out: *mut *mut AnisymGrid,
    iterations: *mut usize,
) -> AnisymStatus {
    guard(|| {
        let a = slice(alphas, 2, "alphas")?.to_vec();
        let p = slice(exponents, 2, "exponents")?.to_vec();
        let g = rhs.as_ref().ok_or_else(|| null("rhs"))?;
        let coeffs = lib(AnisotropicCoefficients::new(a, p))?;
        let prob = lib(EllipticProblem::new(coeffs, lambda0, g.inner.clone()))?;
        let (w, report) = lib(solve_elliptic(&prob, tol, max_iter))?;
        if !iterations.is_null() {
            iterations.write(report.iterations);
        }
        write(out, Box::into_raw(Box::new(AnisymGrid { inner: w })), "out")
    })
}

/// Runs a JSON scenario and writes its artifacts to `out_dir`. `passed`
/// receives 1 when every enabled check passes, else 0.
///
/// # Safety
/// `config_path` and `out_dir` are NUL-terminated paths; `passed` is writable.
#[no_mangle]
pub unsafe extern "C" fn anisym_run_scenario(
    config_path: *const c_char,
    out_dir: *const c_char,
    passed: *mut c_int,
) -> AnisymStatus {
    guard(|| {
        let cfg = path(config_path, "config_path")?;
        let out = path(out_dir, "out_dir")?;
        let outcome = lib(run_scenario_file(cfg, Some(out)))?;
        write(passed, c_int::from(outcome.passed()), "passed")
    })
}
