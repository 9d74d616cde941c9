//! Implicit-midpoint (Crank-Nicolson) time stepping, energy traces and
//! polynomial decay fits.
//!
//! For a quadratic energy the implicit midpoint rule satisfies
//! `E(s_{k+1}) - E(s_k) = dt * Re⟨A m, m⟩_M` with `m = (s_k + s_{k+1}) / 2`,
//! so the recorded dissipation closes the energy balance step by step.

use std::f64::consts::PI;
use std::io::{BufRead, Write};
use std::path::PathBuf;

use crate::discretize::{interleaved_index, DiscreteGenerator, StateVector};
use crate::error::{Error, Result};
use crate::fit;
use crate::linalg::BandedLu;
use crate::model::CaseLabel;

/// Factorized Crank-Nicolson propagator for a fixed `(generator, dt)` pair.
pub struct CrankNicolson<'g> {
    gen: &'g DiscreteGenerator,
    dt: f64,
    lu: BandedLu<f64>,
}

impl<'g> CrankNicolson<'g> {
    /// Factorizes `I - (dt/2) A`. A negative `dt` gives the backward map,
    /// which inverts the forward step of the same magnitude.
    pub fn new(gen: &'g DiscreteGenerator, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt != 0.0) {
            return Err(Error::BadParameters(format!("time step must be finite and nonzero, got {dt}")));
        }
        let lu = gen.banded_shifted(1.0, -0.5 * dt).factor()?;
        Ok(Self { gen, dt, lu })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Solves `(I - dt/2 A) s' = (I + dt/2 A) s`.
    pub fn step(&self, s: &StateVector) -> Result<StateVector> {
        let n = self.gen.n();
        if s.n() != n {
            return Err(Error::DimensionMismatch { expected: n, found: s.n() });
        }
        let dim = 4 * n;
        let mut as_ = vec![0.0; dim];
        self.gen.matrix().mul_vec(s.as_slice(), &mut as_);
        let half = 0.5 * self.dt;
        let mut work = vec![0.0; dim];
        for (k, (&x, &ax)) in s.as_slice().iter().zip(&as_).enumerate() {
            work[interleaved_index(n, k)] = x + half * ax;
        }
        self.lu.solve_in_place(&mut work);
        let out = (0..dim).map(|k| work[interleaved_index(n, k)]).collect();
        StateVector::from_flat(out)
    }
}

/// One Crank-Nicolson step (factorizes on every call; use [`CrankNicolson`]
/// to reuse the factorization).
pub fn cn_step(gen: &DiscreteGenerator, s: &StateVector, dt: f64) -> Result<StateVector> {
    if !(dt > 0.0) {
        return Err(Error::BadParameters(format!("dt must be positive, got {dt}")));
    }
    CrankNicolson::new(gen, dt)?.step(s)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergySample {
    pub t: f64,
    pub energy: f64,
    /// Dissipation rate at the midpoint of the step that ended at `t`
    /// (at `t = 0`, the rate of the initial state).
    pub dissipation: f64,
}

/// Sampled energy history of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyTrace {
    pub samples: Vec<EnergySample>,
    pub n: usize,
    pub dt: f64,
    pub t_final: f64,
    pub case_label: CaseLabel,
    /// `‖U₀‖²_M + ‖A U₀‖²_M`.
    pub domain_norm_sq: f64,
}

impl EnergyTrace {
    pub fn digest(&self) -> String {
        format!(
            "n={} dt={} T={} case={} samples={}",
            self.n,
            self.dt,
            self.t_final,
            self.case_label,
            self.samples.len()
        )
    }

    /// CSV with header `t,E,dE`, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,E,dE")?;
        for s in &self.samples {
            writeln!(w, "{:.16e},{:.16e},{:.16e}", s.t, s.energy, s.dissipation)?;
        }
        Ok(())
    }
}

pub struct Simulation {
    pub trace: EnergyTrace,
    pub final_state: StateVector,
}

/// Graph-norm surrogate `‖s‖²_M + ‖A s‖²_M` of the generator's domain.
pub fn domain_norm_sq(gen: &DiscreteGenerator, s: &StateVector) -> Result<f64> {
    let as_ = gen.apply(s)?;
    Ok(gen.mass_norm_sq(s)? + gen.mass_norm_sq(&as_)?)
}

/// Integrates to `t_final` with `round(t_final / dt)` steps, sampling every
/// `sample_every` steps and always at the last step.
pub fn simulate(
    gen: &DiscreteGenerator,
    s0: &StateVector,
    dt: f64,
    t_final: f64,
    sample_every: usize,
) -> Result<Simulation> {
    simulate_with(gen, s0, dt, t_final, sample_every, |_, _, _| {})
}

/// [`simulate`] with a callback receiving `(step, before, after)` for every
/// step.
pub fn simulate_with<F>(
    gen: &DiscreteGenerator,
    s0: &StateVector,
    dt: f64,
    t_final: f64,
    sample_every: usize,
    mut on_step: F,
) -> Result<Simulation>
where
    F: FnMut(usize, &StateVector, &StateVector),
{
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::BadParameters(format!("dt must be positive, got {dt}")));
    }
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(Error::BadParameters(format!("T must be positive, got {t_final}")));
    }
    if sample_every == 0 {
        return Err(Error::BadParameters("sample_every must be at least 1".into()));
    }
    let steps = ((t_final / dt).round() as usize).max(1);
    let cn = CrankNicolson::new(gen, dt)?;

    let mut samples = Vec::with_capacity(steps / sample_every + 2);
    samples.push(EnergySample {
        t: 0.0,
        energy: gen.energy(s0)?,
        dissipation: gen.dissipation_rate(s0)?,
    });
    let mut state = s0.clone();
    for k in 1..=steps {
        let next = cn.step(&state)?;
        if !next.is_finite() {
            return Err(Error::NonFiniteState { step: k });
        }
        on_step(k, &state, &next);
        if k % sample_every == 0 || k == steps {
            let mid = state.axpy(1.0, &next).scaled(0.5);
            samples.push(EnergySample {
                t: k as f64 * dt,
                energy: gen.energy(&next)?,
                dissipation: gen.dissipation_rate(&mid)?,
            });
        }
        state = next;
    }

    let trace = EnergyTrace {
        samples,
        n: gen.n(),
        dt,
        t_final: steps as f64 * dt,
        case_label: gen.cfg.case_label,
        domain_norm_sq: domain_norm_sq(gen, s0)?,
    };
    Ok(Simulation { trace, final_state: state })
}

/// Result of fitting `E(t) ≈ C t^(-alpha)` on a tail window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub alpha: f64,
    /// `ln C`.
    pub intercept: f64,
    pub window: (f64, f64),
    pub residual: f64,
    pub domain_norm_sq: f64,
}

/// Least-squares slope of `ln E` against `ln t` over `[fraction * T, T]`.
pub fn fit_decay_exponent(trace: &EnergyTrace, window_fraction: f64) -> Result<DecayFit> {
    if !(window_fraction > 0.0 && window_fraction < 1.0) {
        return Err(Error::BadParameters(format!(
            "window_fraction must lie in (0, 1), got {window_fraction}"
        )));
    }
    let t_end = trace.samples.last().map_or(0.0, |s| s.t);
    let t_start = window_fraction * t_end;
    let window: Vec<&EnergySample> =
        trace.samples.iter().filter(|s| s.t >= t_start && s.t > 0.0).collect();
    if window.len() < 3 {
        return Err(Error::WindowTooShort(format!(
            "{} samples in [{t_start}, {t_end}]",
            window.len()
        )));
    }
    if let Some(bad) = window.iter().find(|s| !(s.energy > 0.0)) {
        return Err(Error::NonPositiveEnergy { t: bad.t, energy: bad.energy });
    }
    let ts: Vec<f64> = window.iter().map(|s| s.t).collect();
    let es: Vec<f64> = window.iter().map(|s| s.energy).collect();
    let line = fit::log_log_fit(&ts, &es)
        .ok_or_else(|| Error::WindowTooShort("degenerate time window".into()))?;
    Ok(DecayFit {
        alpha: -line.slope,
        intercept: line.intercept,
        window: (ts[0], ts[ts.len() - 1]),
        residual: line.residual,
        domain_norm_sq: trace.domain_norm_sq,
    })
}

/// `max E(t) t^alpha / ‖U₀‖²_D` over the samples in `window`; stays bounded
/// under refinement when the decay bound with exponent `alpha` holds.
pub fn bound_ratio(trace: &EnergyTrace, window: (f64, f64), alpha: f64) -> f64 {
    trace
        .samples
        .iter()
        .filter(|s| s.t >= window.0 && s.t <= window.1 && s.t > 0.0)
        .map(|s| s.energy * s.t.powf(alpha) / trace.domain_norm_sq)
        .fold(0.0, f64::max)
}

/// Kinds of initial data. Every kind is normalized to `‖U₀‖_M = 1`.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    /// `u = sin(k_u π x / L)`, `y = sin(k_y π x / L)`, zero velocities;
    /// a zero wavenumber switches the component off.
    SineMode { k_u: usize, k_y: usize },
    /// `u = exp(-((x - center) / width)²)`, all other components zero.
    Gaussian { center: f64, width: f64 },
    /// CSV with header `u,v,y,z` and one row per interior node.
    File(PathBuf),
}

pub fn make_initial_data(gen: &DiscreteGenerator, kind: &InitialData) -> Result<StateVector> {
    let n = gen.n();
    let len = gen.cfg.length;
    let nodes = gen.grid.nodes();
    let zeros = vec![0.0; n];
    let raw = match kind {
        InitialData::SineMode { k_u, k_y } => {
            if *k_u == 0 && *k_y == 0 {
                return Err(Error::BadParameters("at least one sine wavenumber must be nonzero".into()));
            }
            if *k_u > n || *k_y > n {
                return Err(Error::BadParameters(format!("sine wavenumbers must not exceed n = {n}")));
            }
            let mode = |k: usize| -> Vec<f64> {
                if k == 0 {
                    vec![0.0; n]
                } else {
                    nodes.iter().map(|x| (k as f64 * PI * x / len).sin()).collect()
                }
            };
            StateVector::from_blocks(&mode(*k_u), &zeros, &mode(*k_y), &zeros)?
        }
        InitialData::Gaussian { center, width } => {
            if !(*width > 0.0 && width.is_finite()) || !(0.0..=len).contains(center) {
                return Err(Error::BadParameters(format!(
                    "gaussian needs width > 0 and center in [0, {len}]"
                )));
            }
            let u: Vec<f64> = nodes.iter().map(|x| gaussian(*x, *center, *width)).collect();
            StateVector::from_blocks(&u, &zeros, &zeros, &zeros)?
        }
        InitialData::File(path) => read_state_csv(std::fs::File::open(path)?, n)?,
    };
    let norm = gen.mass_norm_sq(&raw)?.sqrt();
    if !(norm > 0.0) {
        return Err(Error::BadParameters("initial data has zero energy".into()));
    }
    Ok(raw.scaled(1.0 / norm))
}

pub fn gaussian(x: f64, center: f64, width: f64) -> f64 {
    (-((x - center) / width).powi(2)).exp()
}

fn read_state_csv<R: std::io::Read>(reader: R, n: usize) -> Result<StateVector> {
    let mut blocks = [Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n)];
    let mut header_seen = false;
    for (lineno, line) in std::io::BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !header_seen {
            if line.replace(' ', "") != "u,v,y,z" {
                return Err(Error::Parse { line: lineno + 1, message: "expected header `u,v,y,z`".into() });
            }
            header_seen = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(Error::Parse { line: lineno + 1, message: format!("expected 4 fields, got {}", fields.len()) });
        }
        for (b, f) in blocks.iter_mut().zip(fields) {
            b.push(f.parse::<f64>().map_err(|e| Error::Parse { line: lineno + 1, message: e.to_string() })?);
        }
    }
    if blocks[0].len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: blocks[0].len() });
    }
    StateVector::from_blocks(&blocks[0], &blocks[1], &blocks[2], &blocks[3])
}
