//! C interface to `wnmcmc`.
//!
//! Every fallible function returns a [`WnStatus`]; on failure the message is
//! kept per thread and can be copied out with [`wn_last_error_message`].
//! Objects are opaque handles created by `*_new` and released by `*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use wnmcmc::error::Error;
use wnmcmc::experiments::{run_experiment, Config, ExperimentConfig};
use wnmcmc::forward::{DarcyProblem, DarcySolver};
use wnmcmc::prior_transforms::{
    lambda_besov, lambda_uniform, CoefficientLaw, CosineBasis, EvaluationGrid, MeanField, Rectangle, SeriesPrior,
    SeriesTransform,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WnStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    Numeric = 3,
    Unsupported = 4,
    Io = 5,
    Format = 6,
    Config = 7,
    Panic = 8,
}

/// Coefficient law of a series prior.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WnLaw {
    Gaussian = 0,
    Uniform = 1,
    /// Uses the `q` argument.
    Besov = 2,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> WnStatus {
    match e {
        Error::Domain(_) => WnStatus::Domain,
        Error::Numeric(_) => WnStatus::Numeric,
        Error::Unsupported(_) => WnStatus::Unsupported,
        Error::Io(_) => WnStatus::Io,
        Error::Format(_) => WnStatus::Format,
        Error::Config(_) => WnStatus::Config,
    }
}

/// Runs `f`, recording any error or panic.
fn guard(f: impl FnOnce() -> Result<(), Error>) -> WnStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            WnStatus::Ok
        }
        Ok(Err(e)) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("panic inside wnmcmc".into());
            WnStatus::Panic
        }
    }
}

fn null(what: &str) -> WnStatus {
    set_error(format!("null pointer: {what}"));
    WnStatus::NullPointer
}

unsafe fn slice<'a>(p: *const f64, len: usize) -> &'a [f64] {
    if len == 0 {
        &[]
    } else {
        std::slice::from_raw_parts(p, len)
    }
}

unsafe fn slice_mut<'a>(p: *mut f64, len: usize) -> &'a mut [f64] {
    if len == 0 {
        &mut []
    } else {
        std::slice::from_raw_parts_mut(p, len)
    }
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len - 1` bytes) and returns the full message length.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn wn_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn wn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// `Lambda(xi)` for the uniform law on `(-1, 1)`.
///
/// # Safety
/// `out` must be null or point to a writable `double`.
#[no_mangle]
pub unsafe extern "C" fn wn_lambda_uniform(xi: f64, out: *mut f64) -> WnStatus {
    if out.is_null() {
        return null("out");
    }
    guard(|| {
        *out = lambda_uniform(xi)?;
        Ok(())
    })
}

/// `Lambda(xi)` for the law with density proportional to `exp(-|x|^q / 2)`.
///
/// # Safety
/// `out` must be null or point to a writable `double`.
#[no_mangle]
pub unsafe extern "C" fn wn_lambda_besov(xi: f64, q: f64, out: *mut f64) -> WnStatus {
    if out.is_null() {
        return null("out");
    }
    guard(|| {
        *out = lambda_besov(xi, q)?.value;
        Ok(())
    })
}

/// Series prior `m + sum_j rho_j Lambda(xi_j) phi_j` on the unit cube with a
/// cosine basis, evaluated at fixed points.
pub struct WnSeriesTransform {
    inner: SeriesTransform,
}

/// Builds a series transform. `weights` holds `n_modes` values;
/// `points` holds `n_points * dim` coordinates, point by point.
///
/// # Safety
/// Pointers must reference arrays of the stated lengths; `out` must point to a
/// writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn wn_series_transform_new(
    law: WnLaw,
    q: f64,
    dim: usize,
    weights: *const f64,
    n_modes: usize,
    mean: f64,
    points: *const f64,
    n_points: usize,
    out: *mut *mut WnSeriesTransform,
) -> WnStatus {
    if out.is_null() || weights.is_null() || points.is_null() {
        return null("weights, points or out");
    }
    *out = ptr::null_mut();
    guard(|| {
        let law = match law {
            WnLaw::Gaussian => CoefficientLaw::Gaussian,
            WnLaw::Uniform => CoefficientLaw::Uniform,
            WnLaw::Besov => CoefficientLaw::Besov { q },
        };
        let coords = slice(points, n_points * dim);
        let pts: Vec<Vec<f64>> = coords.chunks(dim.max(1)).map(<[f64]>::to_vec).collect();
        let basis = CosineBasis::enumerate(Rectangle::unit(dim), n_modes, 1)?;
        let prior = SeriesPrior::new(MeanField::Constant(mean), slice(weights, n_modes).to_vec(), basis, law)?;
        let grid = EvaluationGrid::from_points(dim, &pts)?;
        let inner = SeriesTransform::new(prior, &grid)?;
        *out = Box::into_raw(Box::new(WnSeriesTransform { inner }));
        Ok(())
    })
}

/// Number of latent entries the transform expects.
///
/// # Safety
/// `t` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn wn_series_transform_latent_len(t: *const WnSeriesTransform) -> usize {
    t.as_ref().map_or(0, |t| t.inner.prior().latent_len())
}

/// Number of evaluation points.
///
/// # Safety
/// `t` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn wn_series_transform_n_points(t: *const WnSeriesTransform) -> usize {
    t.as_ref().map_or(0, |t| t.inner.n_points())
}

/// Evaluates `T(xi)` at the points.
///
/// # Safety
/// `t` must be a live handle; `xi` and `out` must reference arrays of the
/// stated lengths.
#[no_mangle]
pub unsafe extern "C" fn wn_series_transform_apply(
    t: *const WnSeriesTransform,
    xi: *const f64,
    xi_len: usize,
    out: *mut f64,
    out_len: usize,
) -> WnStatus {
    let Some(t) = t.as_ref() else { return null("transform") };
    if xi.is_null() || out.is_null() {
        return null("xi or out");
    }
    guard(|| {
        if xi_len != t.inner.prior().latent_len() || out_len != t.inner.n_points() {
            return Err(Error::Domain("latent or output length does not match the transform".into()));
        }
        t.inner.apply(slice(xi, xi_len), slice_mut(out, out_len))
    })
}

/// # Safety
/// `t` must be null or a handle from [`wn_series_transform_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wn_series_transform_free(t: *mut WnSeriesTransform) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Finite-volume Darcy solver on the unit square or interval with zero
/// pressure on the boundary and a constant source.
pub struct WnDarcy {
    inner: DarcySolver,
}

/// # Safety
/// `out` must point to a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn wn_darcy_new(dim: usize, nodes_per_axis: usize, source: f64, out: *mut *mut WnDarcy) -> WnStatus {
    if out.is_null() {
        return null("out");
    }
    *out = ptr::null_mut();
    guard(|| {
        let problem = DarcyProblem::constant_source(dim, nodes_per_axis, source)?;
        *out = Box::into_raw(Box::new(WnDarcy { inner: DarcySolver::new(problem) }));
        Ok(())
    })
}

/// Total number of grid nodes, boundary included.
///
/// # Safety
/// `d` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn wn_darcy_n_nodes(d: *const WnDarcy) -> usize {
    d.as_ref().map_or(0, |d| d.inner.problem().n_nodes())
}

/// Solves for the pressure given a positive nodal permeability.
///
/// # Safety
/// `d` must be a live handle; `perm` and `pressure` must reference `len`
/// doubles each.
#[no_mangle]
pub unsafe extern "C" fn wn_darcy_solve(d: *const WnDarcy, perm: *const f64, pressure: *mut f64, len: usize) -> WnStatus {
    let Some(d) = d.as_ref() else { return null("solver") };
    if perm.is_null() || pressure.is_null() {
        return null("perm or pressure");
    }
    guard(|| {
        if len != d.inner.problem().n_nodes() {
            return Err(Error::Domain(format!("expected {} nodes, got {len}", d.inner.problem().n_nodes())));
        }
        let p = d.inner.solve(slice(perm, len))?;
        slice_mut(pressure, len).copy_from_slice(&p);
        Ok(())
    })
}

/// # Safety
/// `d` must be null or a handle from [`wn_darcy_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wn_darcy_free(d: *mut WnDarcy) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// Runs an experiment from configuration text (`key = value` lines) and
/// writes its CSV files into the configured output directory.
///
/// # Safety
/// `config` must be a NUL-terminated UTF-8 string.
#[no_mangle]
pub unsafe extern "C" fn wn_run_experiment(config: *const c_char) -> WnStatus {
    if config.is_null() {
        return null("config");
    }
    guard(|| {
        let text = CStr::from_ptr(config)
            .to_str()
            .map_err(|_| Error::Config("configuration is not UTF-8".into()))?;
        let cfg = ExperimentConfig::from_config(Config::parse(text)?)?;
        run_experiment(&cfg).map(|_| ())
    })
}
