//! C interface to `cpns-core`.
//!
//! Objects are opaque handles created by `*_new`/`*_load` functions and
//! released with the matching `*_free`. Every fallible call returns a
//! [`CpnsStatus`]; on failure `cpns_last_error` holds a message for the
//! calling thread. Matrices cross the boundary row-major with interleaved
//! real and imaginary parts.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use cpns_core::bath::{BathSpectrum, SpectrumFamily};
use cpns_core::config::{build_problem, RunConfig};
use cpns_core::mollow::{mollow_spectrum_analytic, mollow_spectrum_numeric, TlsParams};
use cpns_core::operator::{DensityMatrix, GkslGenerator, MemoryKernel};
use cpns_core::propagator::{propagate, PropagatorConfig, StateHistory};
use cpns_core::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CpnsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Numerical = 4,
    Io = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CpnsBathFamily {
    Flat = 0,
    Lorentzian = 1,
    OhmicExpCutoff = 2,
}

/// Two-level model parameters. Bath fields unused by `bath_family` are ignored;
/// `reference` is taken equal to `omega0`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CpnsTlsParams {
    pub omega0: f64,
    pub rabi: f64,
    pub drive: f64,
    pub gamma_m: f64,
    pub gamma_m_bar: f64,
    pub bath_family: CpnsBathFamily,
    pub coupling: f64,
    pub c_white: f64,
    pub amplitude: f64,
    pub width: f64,
    pub cutoff: f64,
}

/// Generator, kernel and initial state.
pub struct CpnsModel {
    gen: GkslGenerator,
    kernel: MemoryKernel,
    rho0: DensityMatrix,
    window: Option<f64>,
}

pub struct CpnsHistory {
    inner: StateHistory,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> CpnsStatus {
    match e {
        Error::Io(_) => CpnsStatus::Io,
        Error::Parse(_) => CpnsStatus::Config,
        Error::DimensionMismatch { .. }
        | Error::NotSquare { .. }
        | Error::NotHermitian { .. }
        | Error::InvalidSpectrum(_)
        | Error::Precondition(_)
        | Error::OffGrid { .. }
        | Error::FlatSpectrum
        | Error::KernelNormalization { .. } => CpnsStatus::InvalidArgument,
        _ => CpnsStatus::Numerical,
    }
}

fn guard<F: FnOnce() -> Result<(), (CpnsStatus, String)>>(f: F) -> CpnsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CpnsStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            CpnsStatus::Panic
        }
    }
}

fn core<T>(r: cpns_core::Result<T>) -> Result<T, (CpnsStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (CpnsStatus, String) {
    (CpnsStatus::NullPointer, format!("{what} is null"))
}

fn tls_params(p: &CpnsTlsParams) -> cpns_core::Result<TlsParams> {
    let family = match p.bath_family {
        CpnsBathFamily::Flat => SpectrumFamily::Flat { c_white: p.c_white },
        CpnsBathFamily::Lorentzian => SpectrumFamily::Lorentzian {
            amplitude: p.amplitude,
            center: p.omega0,
            width: p.width,
        },
        CpnsBathFamily::OhmicExpCutoff => SpectrumFamily::OhmicExpCutoff {
            amplitude: p.amplitude,
            cutoff: p.cutoff,
        },
    };
    Ok(TlsParams {
        omega0: p.omega0,
        rabi: p.rabi,
        drive: p.drive,
        gamma_m: p.gamma_m,
        gamma_m_bar: p.gamma_m_bar,
        bath: BathSpectrum::new(family, p.coupling, p.omega0)?,
    })
}

unsafe fn slice<'a>(
    ptr: *const f64,
    len: usize,
    what: &str,
) -> Result<&'a [f64], (CpnsStatus, String)> {
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

/// Message of the last failed call on this thread, or null. Valid until the next call.
#[no_mangle]
pub extern "C" fn cpns_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn cpns_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Two-level model in the rotating frame, starting in the ground state.
///
/// # Safety
/// `params` must point to a valid struct and `out` to writable storage.
#[no_mangle]
pub unsafe extern "C" fn cpns_model_new_tls(
    params: *const CpnsTlsParams,
    out: *mut *mut CpnsModel,
) -> CpnsStatus {
    guard(|| {
        let p = params.as_ref().ok_or_else(|| null("params"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let tls = core(tls_params(p))?;
        let (gen, kernel) = core(cpns_core::mollow::build_tls_model(&tls))?;
        let window = if kernel.is_zero() {
            None
        } else {
            core(tls.bath.decay_lag()).ok()
        };
        let model = CpnsModel {
            gen,
            kernel,
            rho0: DensityMatrix::basis(2, 0),
            window,
        };
        *out = Box::into_raw(Box::new(model));
        Ok(())
    })
}

/// Model described by a TOML run configuration file.
///
/// # Safety
/// `path` must be a nul-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cpns_model_load(
    path: *const c_char,
    out: *mut *mut CpnsModel,
) -> CpnsStatus {
    guard(|| {
        if path.is_null() {
            return Err(null("path"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| (CpnsStatus::InvalidArgument, "path is not UTF-8".to_string()))?;
        let path = Path::new(path);
        let text = std::fs::read_to_string(path).map_err(|e| (CpnsStatus::Io, e.to_string()))?;
        let cfg = RunConfig::parse(&text)
            .and_then(|c| c.normalized())
            .map_err(|e| (CpnsStatus::Config, e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.validate(base)
            .map_err(|e| (CpnsStatus::Config, e.to_string()))?;
        let p = core(build_problem(&cfg, base))?;
        *out = Box::into_raw(Box::new(CpnsModel {
            gen: p.gen,
            kernel: p.kernel,
            rho0: p.rho0,
            window: p.solver.memory_window,
        }));
        Ok(())
    })
}

/// Hilbert-space dimension of the model, 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cpns_model_dim(model: *const CpnsModel) -> usize {
    model.as_ref().map_or(0, |m| m.gen.dim())
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cpns_model_free(model: *mut CpnsModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Integrate from `t = 0` to `t_final`. `memory_window < 0` keeps the model's default
/// window; `memory_window == 0` disables truncation only for memoryless models.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cpns_propagate(
    model: *const CpnsModel,
    dt: f64,
    t_final: f64,
    memory_window: f64,
    out: *mut *mut CpnsHistory,
) -> CpnsStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let mut cfg = PropagatorConfig::new(dt, t_final);
        cfg.memory_window = if memory_window < 0.0 {
            m.window
        } else {
            Some(memory_window)
        };
        let h = core(propagate(&m.rho0, &m.gen, &m.kernel, &cfg))?;
        *out = Box::into_raw(Box::new(CpnsHistory { inner: h }));
        Ok(())
    })
}

/// Number of stored grid points, 0 for a null handle.
///
/// # Safety
/// `history` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cpns_history_len(history: *const CpnsHistory) -> usize {
    history.as_ref().map_or(0, |h| h.inner.len())
}

/// # Safety
/// `history` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cpns_history_dim(history: *const CpnsHistory) -> usize {
    history.as_ref().map_or(0, |h| h.inner.dim())
}

/// Copy state `k` into `out` (`2 dim^2` doubles, row-major, re/im interleaved).
///
/// # Safety
/// `history` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn cpns_history_state(
    history: *const CpnsHistory,
    k: usize,
    out: *mut f64,
    len: usize,
) -> CpnsStatus {
    guard(|| {
        let h = history.as_ref().ok_or_else(|| null("history"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let d = h.inner.dim();
        if k >= h.inner.len() {
            return Err((
                CpnsStatus::InvalidArgument,
                format!("index {k} out of range"),
            ));
        }
        if len < 2 * d * d {
            return Err((
                CpnsStatus::InvalidArgument,
                format!("buffer holds {len} doubles, need {}", 2 * d * d),
            ));
        }
        let m = h.inner.state(k);
        let buf = std::slice::from_raw_parts_mut(out, 2 * d * d);
        for i in 0..d {
            for j in 0..d {
                buf[2 * (i * d + j)] = m[(i, j)].re;
                buf[2 * (i * d + j) + 1] = m[(i, j)].im;
            }
        }
        Ok(())
    })
}

/// # Safety
/// `history` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cpns_history_free(history: *mut CpnsHistory) {
    if !history.is_null() {
        drop(Box::from_raw(history));
    }
}

/// `gamma_NM(omega)` of the bath in `params`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cpns_gamma_nm(
    params: *const CpnsTlsParams,
    omega: f64,
    re: *mut f64,
    im: *mut f64,
) -> CpnsStatus {
    guard(|| {
        let p = params.as_ref().ok_or_else(|| null("params"))?;
        if re.is_null() || im.is_null() {
            return Err(null("re/im"));
        }
        let tls = core(tls_params(p))?;
        let g = core(cpns_core::mollow::bath_rate(&tls.bath, omega))?;
        *re = g.re;
        *im = g.im;
        Ok(())
    })
}

/// Closed-form triplet spectrum at `n` offsets from the transition frequency.
///
/// # Safety
/// `omega` and `out` must each hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn cpns_mollow_analytic(
    params: *const CpnsTlsParams,
    omega: *const f64,
    n: usize,
    out: *mut f64,
) -> CpnsStatus {
    guard(|| {
        let p = params.as_ref().ok_or_else(|| null("params"))?;
        let w = slice(omega, n, "omega")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let s = core(mollow_spectrum_analytic(&core(tls_params(p))?, w))?;
        std::slice::from_raw_parts_mut(out, n).copy_from_slice(&s.values);
        Ok(())
    })
}

/// Numeric emission spectrum: propagate to `t_star`, correlate up to `tau_max`.
///
/// # Safety
/// `omega` and `out` must each hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn cpns_mollow_numeric(
    params: *const CpnsTlsParams,
    dt: f64,
    t_star: f64,
    tau_max: f64,
    omega: *const f64,
    n: usize,
    out: *mut f64,
) -> CpnsStatus {
    guard(|| {
        let p = params.as_ref().ok_or_else(|| null("params"))?;
        let w = slice(omega, n, "omega")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let tls = core(tls_params(p))?;
        let mut solver = PropagatorConfig::new(dt, t_star);
        if !tls.bath.is_flat() {
            solver.memory_window = Some(core(tls.bath.decay_lag())?);
        }
        let r = core(mollow_spectrum_numeric(&tls, &solver, t_star, tau_max, w))?;
        std::slice::from_raw_parts_mut(out, n).copy_from_slice(&r.spectrum.values);
        Ok(())
    })
}
