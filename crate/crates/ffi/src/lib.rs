//! C interface to `kvwave-core`.
//!
//! Objects cross the boundary as opaque handles created by `*_new`/`*_parse`
//! functions and released by the matching `*_free`. Every fallible call
//! returns a [`KvStatus`]; on failure a human-readable message is kept per
//! thread and can be copied out with [`kv_last_error_message`]. Panics never
//! unwind into the caller, they are reported as `KV_STATUS_PANIC`.
//!
//! State vectors are flat `double` arrays of length `4 n` in block order
//! `u | v | y | z`.
//!
//! # Safety
//!
//! Every `unsafe` entry point accepts null for any pointer and reports
//! `KV_STATUS_NULL_POINTER`. Non-null pointers must be valid for the stated
//! lengths, handles must come from this library and not be freed yet, and a
//! handle must not be used from two threads at once while one of them frees
//! it.
#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use kvwave_core::config::{parse_config, ExperimentConfig};
use kvwave_core::evolve::{fit_decay_exponent, make_initial_data, simulate};
use kvwave_core::spectra::{eigenvalues, resolvent_norm};
use kvwave_core::{check_ssc, DiscreteGenerator, EnergyTrace, Error, StateVector};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KvStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Validation = 4,
    DimensionMismatch = 5,
    BufferTooSmall = 6,
    Singular = 7,
    Numerical = 8,
    TooLarge = 9,
    Io = 10,
    Panic = 11,
}

/// Parsed experiment: system, numerics, initial data.
pub struct KvConfig(ExperimentConfig);

/// Assembled generator for one config and resolution.
pub struct KvGenerator(DiscreteGenerator);

/// Sampled energy history of a simulation.
pub struct KvTrace(EnergyTrace);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(err: &Error) -> KvStatus {
    match err {
        Error::Parse { .. } => KvStatus::Parse,
        Error::Validation(_)
        | Error::IntervalOrderViolation(_)
        | Error::NegativeDamping { .. }
        | Error::ZeroDamping { .. }
        | Error::ZeroCoupling
        | Error::OutOfDomain { .. }
        | Error::SscInapplicable(_)
        | Error::ResolutionTooCoarse { .. } => KvStatus::Validation,
        Error::DimensionMismatch { .. } => KvStatus::DimensionMismatch,
        Error::NumericallySingular { .. } | Error::SingularSystem { .. } => KvStatus::Singular,
        Error::TooLargeForDense { .. } => KvStatus::TooLarge,
        Error::Io(_) => KvStatus::Io,
        Error::BadParameters(_) | Error::EmptyGrid | Error::WindowTooShort(_) | Error::InsufficientSpan(_) => {
            KvStatus::InvalidArgument
        }
        Error::NonFiniteState { .. } | Error::NonPositiveEnergy { .. } | Error::EigenFailure => KvStatus::Numerical,
    }
}

struct Failure(KvStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(KvStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, records any failure or panic, and maps it to a status.
fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> KvStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            KvStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            KvStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn state_from(gen: &DiscreteGenerator, data: *const f64, len: usize) -> Result<StateVector, Failure> {
    if data.is_null() {
        return Err(null("state"));
    }
    if len != gen.dim() {
        return Err(Error::DimensionMismatch { expected: gen.dim(), found: len }.into());
    }
    Ok(StateVector::from_flat(std::slice::from_raw_parts(data, len).to_vec())?)
}

unsafe fn write_slice(dst: *mut f64, cap: usize, src: &[f64]) -> Result<(), Failure> {
    if dst.is_null() {
        return Err(null("output buffer"));
    }
    if cap < src.len() {
        return Err(Failure(KvStatus::BufferTooSmall, format!("buffer holds {cap}, need {}", src.len())));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), dst, src.len());
    Ok(())
}

/// Copies the calling thread's last error message into `buf` as a
/// NUL-terminated string, truncating to `cap - 1` bytes. Returns the full
/// message length excluding the terminator; `buf` may be null to query it.
#[no_mangle]
pub unsafe extern "C" fn kv_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && cap > 0 {
            let k = msg.len().min(cap - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, k);
            *buf.add(k) = 0;
        }
        msg.len()
    })
}

/// Parses an INI experiment description.
#[no_mangle]
pub unsafe extern "C" fn kv_config_parse(text: *const c_char, out_cfg: *mut *mut KvConfig) -> KvStatus {
    guard(|| {
        let slot = out(out_cfg, "out_cfg")?;
        *slot = ptr::null_mut();
        if text.is_null() {
            return Err(null("text"));
        }
        let text = CStr::from_ptr(text)
            .to_str()
            .map_err(|e| Failure(KvStatus::Parse, format!("config is not UTF-8: {e}")))?;
        *slot = Box::into_raw(Box::new(KvConfig(parse_config(text)?)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn kv_config_free(cfg: *mut KvConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Smallness condition on the coupling amplitude. `threshold` is `+inf` when
/// the case imposes none.
#[no_mangle]
pub unsafe extern "C" fn kv_config_ssc(
    cfg: *const KvConfig,
    threshold: *mut f64,
    actual: *mut f64,
    satisfied: *mut bool,
) -> KvStatus {
    guard(|| {
        let cfg = borrow(cfg, "cfg")?;
        let (threshold, actual, satisfied) =
            (out(threshold, "threshold")?, out(actual, "actual")?, out(satisfied, "satisfied")?);
        let r = check_ssc(&cfg.0.system)?;
        *threshold = r.threshold;
        *actual = r.actual;
        *satisfied = r.satisfied;
        Ok(())
    })
}

/// Assembles the generator with `n` interior nodes; `n = 0` takes the value
/// from the config.
#[no_mangle]
pub unsafe extern "C" fn kv_generator_new(cfg: *const KvConfig, n: usize, out_gen: *mut *mut KvGenerator) -> KvStatus {
    guard(|| {
        let slot = out(out_gen, "out_gen")?;
        *slot = ptr::null_mut();
        let cfg = borrow(cfg, "cfg")?;
        let n = if n == 0 { cfg.0.numerics.n } else { n };
        *slot = Box::into_raw(Box::new(KvGenerator(DiscreteGenerator::new(&cfg.0.system, n)?)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn kv_generator_free(gen: *mut KvGenerator) {
    if !gen.is_null() {
        drop(Box::from_raw(gen));
    }
}

/// State dimension `4 n`; zero for a null handle.
#[no_mangle]
pub unsafe extern "C" fn kv_generator_dim(gen: *const KvGenerator) -> usize {
    gen.as_ref().map_or(0, |g| g.0.dim())
}

/// Largest frequency the grid represents faithfully.
#[no_mangle]
pub unsafe extern "C" fn kv_generator_resolution_limit(gen: *const KvGenerator) -> f64 {
    gen.as_ref().map_or(f64::NAN, |g| g.0.resolution_limit())
}

/// Writes the config's initial data, normalized to unit energy norm.
#[no_mangle]
pub unsafe extern "C" fn kv_initial_state(
    gen: *const KvGenerator,
    cfg: *const KvConfig,
    state: *mut f64,
    len: usize,
) -> KvStatus {
    guard(|| {
        let (gen, cfg) = (&borrow(gen, "gen")?.0, borrow(cfg, "cfg")?);
        let s = make_initial_data(gen, &cfg.0.initial)?;
        write_slice(state, len, s.as_slice())
    })
}

/// `out = A state`.
#[no_mangle]
pub unsafe extern "C" fn kv_apply(
    gen: *const KvGenerator,
    state: *const f64,
    len: usize,
    result: *mut f64,
    result_len: usize,
) -> KvStatus {
    guard(|| {
        let gen = &borrow(gen, "gen")?.0;
        let s = state_from(gen, state, len)?;
        write_slice(result, result_len, gen.apply(&s)?.as_slice())
    })
}

/// Discrete energy of a state.
#[no_mangle]
pub unsafe extern "C" fn kv_energy(gen: *const KvGenerator, state: *const f64, len: usize, energy: *mut f64) -> KvStatus {
    guard(|| {
        let gen = &borrow(gen, "gen")?.0;
        let energy = out(energy, "energy")?;
        *energy = gen.energy(&state_from(gen, state, len)?)?;
        Ok(())
    })
}

/// Energy dissipation rate `dE/dt` of a state; never positive.
#[no_mangle]
pub unsafe extern "C" fn kv_dissipation_rate(
    gen: *const KvGenerator,
    state: *const f64,
    len: usize,
    rate: *mut f64,
) -> KvStatus {
    guard(|| {
        let gen = &borrow(gen, "gen")?.0;
        let rate = out(rate, "rate")?;
        *rate = gen.dissipation_rate(&state_from(gen, state, len)?)?;
        Ok(())
    })
}

/// All `4 n` eigenvalues of the generator. `re` and `im` must each hold
/// `kv_generator_dim(gen)` values. `strongly_stable` applies the roundoff-aware
/// verdict; it may be null.
#[no_mangle]
pub unsafe extern "C" fn kv_eigenvalues(
    gen: *const KvGenerator,
    re: *mut f64,
    im: *mut f64,
    cap: usize,
    max_real_part: *mut f64,
    strongly_stable: *mut bool,
) -> KvStatus {
    guard(|| {
        let gen = &borrow(gen, "gen")?.0;
        let max_re = out(max_real_part, "max_real_part")?;
        if re.is_null() || im.is_null() {
            return Err(null("eigenvalue buffer"));
        }
        if cap < gen.dim() {
            return Err(Failure(KvStatus::BufferTooSmall, format!("buffer holds {cap}, need {}", gen.dim())));
        }
        let report = eigenvalues(gen)?;
        let (r, i): (Vec<f64>, Vec<f64>) = report.eigenvalues.iter().map(|l| (l.re, l.im)).unzip();
        write_slice(re, cap, &r)?;
        write_slice(im, cap, &i)?;
        *max_re = report.max_real_part;
        if let Some(flag) = strongly_stable.as_mut() {
            *flag = report.strongly_stable();
        }
        Ok(())
    })
}

/// `‖(iλ - A)⁻¹‖` in the energy norm. Returns `KV_STATUS_SINGULAR` when `iλ`
/// is numerically an eigenvalue.
#[no_mangle]
pub unsafe extern "C" fn kv_resolvent_norm(gen: *const KvGenerator, lambda: f64, norm: *mut f64) -> KvStatus {
    guard(|| {
        let gen = &borrow(gen, "gen")?.0;
        let norm = out(norm, "norm")?;
        *norm = resolvent_norm(gen, lambda)?;
        Ok(())
    })
}

/// Crank-Nicolson run from `state` to `t_final`. The final state overwrites
/// `state`; the sampled energy history is returned as a trace handle.
#[no_mangle]
pub unsafe extern "C" fn kv_simulate(
    gen: *const KvGenerator,
    state: *mut f64,
    len: usize,
    dt: f64,
    t_final: f64,
    sample_every: usize,
    out_trace: *mut *mut KvTrace,
) -> KvStatus {
    guard(|| {
        let slot = out(out_trace, "out_trace")?;
        *slot = ptr::null_mut();
        let gen = &borrow(gen, "gen")?.0;
        let s0 = state_from(gen, state, len)?;
        let sim = simulate(gen, &s0, dt, t_final, sample_every)?;
        write_slice(state, len, sim.final_state.as_slice())?;
        *slot = Box::into_raw(Box::new(KvTrace(sim.trace)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn kv_trace_free(trace: *mut KvTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Number of samples; zero for a null handle.
#[no_mangle]
pub unsafe extern "C" fn kv_trace_len(trace: *const KvTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.0.samples.len())
}

/// Copies sample times, energies and dissipation rates. Any of the three
/// buffers may be null to skip it; each non-null one must hold
/// `kv_trace_len(trace)` values.
#[no_mangle]
pub unsafe extern "C" fn kv_trace_samples(
    trace: *const KvTrace,
    t: *mut f64,
    energy: *mut f64,
    dissipation: *mut f64,
    cap: usize,
) -> KvStatus {
    guard(|| {
        let samples = &borrow(trace, "trace")?.0.samples;
        type Column = fn(&kvwave_core::EnergySample) -> f64;
        let columns: [(*mut f64, Column); 3] =
            [(t, |s| s.t), (energy, |s| s.energy), (dissipation, |s| s.dissipation)];
        for (dst, get) in columns {
            if !dst.is_null() {
                write_slice(dst, cap, &samples.iter().map(get).collect::<Vec<_>>())?;
            }
        }
        Ok(())
    })
}

/// Fits `E(t) ≈ C t^(-alpha)` on `[window_fraction T, T]`. `residual` may be
/// null.
#[no_mangle]
pub unsafe extern "C" fn kv_decay_fit(
    trace: *const KvTrace,
    window_fraction: f64,
    alpha: *mut f64,
    residual: *mut f64,
) -> KvStatus {
    guard(|| {
        let trace = &borrow(trace, "trace")?.0;
        let alpha = out(alpha, "alpha")?;
        let fit = fit_decay_exponent(trace, window_fraction)?;
        *alpha = fit.alpha;
        if let Some(r) = residual.as_mut() {
            *r = fit.residual;
        }
        Ok(())
    })
}
