//! Frequency-domain checks on the discrete generator: eigenvalues, resolvent
//! norms along the imaginary axis in the energy norm, and the growth exponent
//! of those norms.
//!
//! All norms are taken with respect to `M = L Lᵀ`. The weighted operator
//! `B = Lᵀ A L⁻ᵀ` is similar to `A` and satisfies `B + Bᵀ ≤ 0`, and
//! `‖(iλ - A)⁻¹‖_M = ‖(iλ - B)⁻¹‖₂ = 1 / σ_min(iλ - B)`.

use std::io::Write;

use faer::{Mat, Side};
use num_complex::Complex64;

use crate::discretize::{interleaved_index, DiscreteGenerator};
use crate::error::{Error, Result};
use crate::fit;
use crate::linalg::{self, BandedLu};
use crate::model::CaseLabel;

/// Largest `n` for which the dense eigenproblem is attempted.
pub const DENSE_EIGEN_LIMIT: usize = 400;
/// Above this `n`, [`ResolventMethod::Auto`] switches from dense SVD to
/// shift-invert Lanczos.
pub const DENSE_RESOLVENT_LIMIT: usize = 100;
/// Relative tolerance of the "on the imaginary axis" test.
pub const AXIS_TOLERANCE: f64 = 1e-8;
/// Multiple of `eps ‖B‖₁` below which a real part is indistinguishable from 0.
const ROUNDOFF_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport {
    pub eigenvalues: Vec<Complex64>,
    pub max_real_part: f64,
    pub min_abs_real_part: f64,
    /// Size of real parts that the eigensolver cannot resolve from zero.
    pub roundoff_floor: f64,
    pub n: usize,
    pub case_label: CaseLabel,
}

impl SpectrumReport {
    /// Flags an eigenvalue sitting visibly right of the imaginary axis,
    /// `Re λ > 1e-8 max(1, |Im λ|)`. Weakly damped modes with tiny negative
    /// real parts are expected and are not flagged.
    pub fn on_axis(lambda: Complex64) -> bool {
        lambda.re > AXIS_TOLERANCE * lambda.im.abs().max(1.0)
    }

    pub fn flagged(&self) -> Vec<Complex64> {
        self.eigenvalues.iter().copied().filter(|&l| Self::on_axis(l)).collect()
    }

    /// Nothing flagged, and every real part is negative by more than the
    /// roundoff floor. Purely imaginary spectra fail the second test.
    pub fn strongly_stable(&self) -> bool {
        self.flagged().is_empty() && self.max_real_part < -self.roundoff_floor
    }

    /// The `count` eigenvalues with the smallest `|Re λ|`.
    pub fn closest_to_axis(&self, count: usize) -> Vec<Complex64> {
        let mut ev = self.eigenvalues.clone();
        ev.sort_by(|a, b| a.re.abs().total_cmp(&b.re.abs()));
        ev.truncate(count);
        ev
    }

    /// CSV with header `re,im`, sorted by imaginary then real part.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let mut ev = self.eigenvalues.clone();
        ev.sort_by(|a, b| a.im.total_cmp(&b.im).then(a.re.total_cmp(&b.re)));
        writeln!(w, "re,im")?;
        for l in ev {
            writeln!(w, "{:.16e},{:.16e}", l.re, l.im)?;
        }
        Ok(())
    }
}

/// Dense `B = Lᵀ A L⁻ᵀ` in block ordering.
pub fn weighted_generator_dense(gen: &DiscreteGenerator) -> Mat<f64> {
    let dim = gen.dim();
    let factor = gen.mass_factor();
    // X = A L⁻ᵀ, one row at a time: (row L⁻ᵀ)ᵀ = L⁻¹ rowᵀ
    let mut x = Mat::<f64>::zeros(dim, dim);
    let mut row = vec![0.0; dim];
    for r in 0..dim {
        row.iter_mut().for_each(|v| *v = 0.0);
        for (c, v) in gen.matrix().row(r) {
            row[c] = v;
        }
        factor.solve_l(&mut row);
        for (c, v) in row.iter().enumerate() {
            x[(r, c)] = *v;
        }
    }
    let mut col = vec![0.0; dim];
    for c in 0..dim {
        for (r, v) in col.iter_mut().enumerate() {
            *v = x[(r, c)];
        }
        factor.apply_lt(&mut col);
        for (r, v) in col.iter().enumerate() {
            x[(r, c)] = *v;
        }
    }
    x
}

/// All `4n` eigenvalues of the generator.
pub fn eigenvalues(gen: &DiscreteGenerator) -> Result<SpectrumReport> {
    let n = gen.n();
    if n > DENSE_EIGEN_LIMIT {
        return Err(Error::TooLargeForDense { n, limit: DENSE_EIGEN_LIMIT });
    }
    let b = weighted_generator_dense(gen);
    let norm_one = (0..b.ncols())
        .map(|j| (0..b.nrows()).map(|i| b[(i, j)].abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let eigenvalues = b.eigenvalues().map_err(|_| Error::EigenFailure)?;
    let max_real_part = eigenvalues.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
    let min_abs_real_part = eigenvalues.iter().map(|l| l.re.abs()).fold(f64::INFINITY, f64::min);
    Ok(SpectrumReport {
        eigenvalues,
        max_real_part,
        min_abs_real_part,
        roundoff_floor: ROUNDOFF_FACTOR * f64::EPSILON * norm_one,
        n,
        case_label: gen.cfg.case_label,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResolventMethod {
    /// Dense below [`DENSE_RESOLVENT_LIMIT`], shift-invert above.
    Auto,
    /// Smallest singular value of the dense `iλ - B`.
    DenseSvd,
    /// Lanczos on `(iλ - B)⁻ᴴ (iλ - B)⁻¹` with banded LU solves.
    ShiftInvert,
}

/// `σ_min(iλ - B)` is treated as zero below this multiple of `‖B‖`.
const SINGULAR_RTOL: f64 = 1e-14;

fn smallest_singular_value(b: &Mat<f64>, lambda: f64) -> Result<(f64, f64)> {
    let dim = b.nrows();
    let shifted = Mat::<Complex64>::from_fn(dim, dim, |i, j| {
        let diag = if i == j { Complex64::new(0.0, lambda) } else { Complex64::new(0.0, 0.0) };
        diag - Complex64::new(b[(i, j)], 0.0)
    });
    let sv = shifted.singular_values().map_err(|_| Error::EigenFailure)?;
    Ok((sv[sv.len() - 1], sv[0]))
}

/// Dense route for an arbitrary SPD weight: `‖(iλ - A)⁻¹‖_M` with `A` and
/// `M` given row-major.
pub fn weighted_resolvent_norm_dense(a: &[Vec<f64>], m: &[Vec<f64>], lambda: f64) -> Result<f64> {
    let dim = a.len();
    if m.len() != dim || a.iter().chain(m).any(|r| r.len() != dim) {
        return Err(Error::DimensionMismatch { expected: dim, found: m.len() });
    }
    let mm = Mat::<f64>::from_fn(dim, dim, |i, j| m[i][j]);
    let llt = mm.llt(Side::Lower).map_err(|_| Error::BadParameters("weight is not SPD".into()))?;
    let l = llt.L();
    // B = Lᵀ A L⁻ᵀ; X = A L⁻ᵀ solves L Xᵀ = Aᵀ
    let mut xt = Mat::<f64>::from_fn(dim, dim, |i, j| a[j][i]);
    for c in 0..dim {
        for i in 0..dim {
            let mut acc = xt[(i, c)];
            for k in 0..i {
                acc -= l[(i, k)] * xt[(k, c)];
            }
            xt[(i, c)] = acc / l[(i, i)];
        }
    }
    let b = Mat::<f64>::from_fn(dim, dim, |i, j| (i..dim).map(|k| l[(k, i)] * xt[(j, k)]).sum());
    let (smin, smax) = smallest_singular_value(&b, lambda)?;
    if smin <= SINGULAR_RTOL * smax.max(lambda.abs()) {
        return Err(Error::NumericallySingular { lambda });
    }
    Ok(1.0 / smin)
}

/// Shift-invert machinery for one frequency. One LU of `iλ - A` serves both
/// the forward and the adjoint solves.
struct ShiftedSolver<'g> {
    gen: &'g DiscreteGenerator,
    lu: BandedLu<Complex64>,
}

impl<'g> ShiftedSolver<'g> {
    fn new(gen: &'g DiscreteGenerator, lambda: f64) -> Result<Self> {
        let lu = gen
            .banded_shifted(Complex64::new(0.0, lambda), Complex64::new(-1.0, 0.0))
            .factor()
            .map_err(|e| match e {
                Error::SingularSystem { .. } => Error::NumericallySingular { lambda },
                other => other,
            })?;
        Ok(Self { gen, lu })
    }

    fn solve(&self, x: &mut [Complex64], work: &mut [Complex64], adjoint: bool) {
        let n = self.gen.n();
        for (k, v) in x.iter().enumerate() {
            work[interleaved_index(n, k)] = *v;
        }
        if adjoint {
            self.lu.solve_adjoint_in_place(work);
        } else {
            self.lu.solve_in_place(work);
        }
        for (k, v) in x.iter_mut().enumerate() {
            *v = work[interleaved_index(n, k)];
        }
    }

    /// `x <- K⁻ᴴ K⁻¹ x` with `K = Lᵀ (iλ - A) L⁻ᵀ`.
    fn normal_inverse(&self, x: &mut [Complex64], work: &mut [Complex64]) {
        let f = self.gen.mass_factor();
        f.solve_lt(x);
        self.solve(x, work, false);
        f.apply_lt(x);
        f.apply_l(x);
        self.solve(x, work, true);
        f.solve_l(x);
    }
}

/// Deterministic, structure-free start vector.
fn start_vector(dim: usize) -> Vec<Complex64> {
    let mut state = 0x9E37_79B9_7F4A_7C15u64;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    (0..dim).map(|_| Complex64::new(next(), next())).collect()
}

/// Largest eigenvalue of `K⁻ᴴ K⁻¹` by Lanczos with full reorthogonalization.
fn lanczos_top(solver: &ShiftedSolver<'_>, dim: usize) -> Result<f64> {
    let max_steps = dim.min(300);
    let mut work = vec![Complex64::new(0.0, 0.0); dim];
    let mut q = start_vector(dim);
    let nq = linalg::norm2(&q);
    q.iter_mut().for_each(|v| *v /= nq);
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(max_steps);
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut theta_prev = 0.0;

    for step in 0..max_steps {
        let mut w = q.clone();
        solver.normal_inverse(&mut w, &mut work);
        let alpha = linalg::dot(&q, &w).re;
        basis.push(q);
        alphas.push(alpha);
        for _ in 0..2 {
            for b in &basis {
                let proj = linalg::dot(b, &w);
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi -= proj * bi;
                }
            }
        }
        let beta = linalg::norm2(&w);
        let theta = tridiagonal_max_eigenvalue(&alphas, &betas)?;
        if !theta.is_finite() {
            return Err(Error::EigenFailure);
        }
        let converged = step >= 2 && (theta - theta_prev).abs() <= 1e-13 * theta;
        if converged || beta <= 1e-14 * theta || step + 1 == max_steps {
            return Ok(theta);
        }
        theta_prev = theta;
        betas.push(beta);
        q = w.into_iter().map(|v| v / beta).collect();
    }
    unreachable!("loop always returns on its last step")
}

fn tridiagonal_max_eigenvalue(alphas: &[f64], betas: &[f64]) -> Result<f64> {
    let k = alphas.len();
    let t = Mat::<f64>::from_fn(k, k, |i, j| {
        if i == j {
            alphas[i]
        } else if i == j + 1 {
            betas[j]
        } else if j == i + 1 {
            betas[i]
        } else {
            0.0
        }
    });
    let ev = t.self_adjoint_eigenvalues(Side::Lower).map_err(|_| Error::EigenFailure)?;
    Ok(ev[k - 1])
}

/// Order of magnitude of `‖B‖`: the stiffest diffusion coefficient over `h²`.
fn stiffness_scale(gen: &DiscreteGenerator) -> f64 {
    let kappa = gen.b_mid.iter().chain(&gen.d_mid).fold(gen.cfg.wave_speed_sq.max(1.0), |m, v| m.max(*v));
    4.0 * kappa / (gen.h() * gen.h())
}

/// `‖(iλ - A)⁻¹‖_M` with the method chosen by size.
pub fn resolvent_norm(gen: &DiscreteGenerator, lambda: f64) -> Result<f64> {
    resolvent_norm_with(gen, lambda, ResolventMethod::Auto)
}

pub fn resolvent_norm_with(gen: &DiscreteGenerator, lambda: f64, method: ResolventMethod) -> Result<f64> {
    if !lambda.is_finite() {
        return Err(Error::BadParameters(format!("frequency must be finite, got {lambda}")));
    }
    let method = match method {
        ResolventMethod::Auto if gen.n() <= DENSE_RESOLVENT_LIMIT => ResolventMethod::DenseSvd,
        ResolventMethod::Auto => ResolventMethod::ShiftInvert,
        m => m,
    };
    match method {
        ResolventMethod::DenseSvd => {
            if gen.n() > DENSE_EIGEN_LIMIT {
                return Err(Error::TooLargeForDense { n: gen.n(), limit: DENSE_EIGEN_LIMIT });
            }
            let b = weighted_generator_dense(gen);
            let (smin, smax) = smallest_singular_value(&b, lambda)?;
            if smin <= SINGULAR_RTOL * smax.max(lambda.abs()) {
                return Err(Error::NumericallySingular { lambda });
            }
            Ok(1.0 / smin)
        }
        ResolventMethod::ShiftInvert => {
            let solver = ShiftedSolver::new(gen, lambda)?;
            let top = lanczos_top(&solver, gen.dim())?;
            let norm = top.sqrt();
            if !norm.is_finite() || norm * SINGULAR_RTOL * stiffness_scale(gen).max(lambda.abs()) >= 1.0 {
                return Err(Error::NumericallySingular { lambda });
            }
            Ok(norm)
        }
        ResolventMethod::Auto => unreachable!(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolventPoint {
    pub lambda: f64,
    /// `+inf` for numerically singular points.
    pub norm: f64,
    pub singular: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolventProfile {
    pub points: Vec<ResolventPoint>,
    /// Envelope-fitted growth exponent, when the trusted range allows a fit.
    pub fitted_ell: Option<f64>,
    pub fit_window: (f64, f64),
    pub resolution_limit: f64,
}

impl ResolventProfile {
    /// CSV `lambda,norm,flag` with flag `ok`, `singular` or `unresolved`
    /// (beyond the resolution limit).
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "lambda,norm,flag")?;
        for p in &self.points {
            let flag = if p.singular {
                "singular"
            } else if p.lambda > self.resolution_limit {
                "unresolved"
            } else {
                "ok"
            };
            writeln!(w, "{:.16e},{:.16e},{}", p.lambda, p.norm, flag)?;
        }
        Ok(())
    }

    pub fn all_finite(&self) -> bool {
        self.points.iter().all(|p| p.norm.is_finite())
    }

    pub fn norm_at(&self, lambda: f64) -> Option<f64> {
        self.points.iter().find(|p| p.lambda == lambda).map(|p| p.norm)
    }
}

/// Resolvent norms on an increasing grid of positive frequencies.
pub fn resolvent_sweep(gen: &DiscreteGenerator, lambdas: &[f64]) -> Result<ResolventProfile> {
    resolvent_sweep_with(gen, lambdas, ResolventMethod::Auto)
}

pub fn resolvent_sweep_with(
    gen: &DiscreteGenerator,
    lambdas: &[f64],
    method: ResolventMethod,
) -> Result<ResolventProfile> {
    if lambdas.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if lambdas.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
        return Err(Error::BadParameters("frequencies must be positive and finite".into()));
    }
    if lambdas.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::BadParameters("frequencies must be strictly increasing".into()));
    }
    let mut points = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let point = match resolvent_norm_with(gen, lambda, method) {
            Ok(norm) => ResolventPoint { lambda, norm, singular: false },
            Err(Error::NumericallySingular { .. }) => {
                ResolventPoint { lambda, norm: f64::INFINITY, singular: true }
            }
            Err(e) => return Err(e),
        };
        points.push(point);
    }
    let resolution_limit = gen.resolution_limit();
    let trusted: Vec<f64> =
        lambdas.iter().copied().filter(|&l| l <= resolution_limit).collect();
    let fit_window = match (trusted.first(), trusted.last()) {
        (Some(&lo), Some(&hi)) => (lo, hi),
        _ => (lambdas[0], lambdas[0]),
    };
    let mut profile = ResolventProfile { points, fitted_ell: None, fit_window, resolution_limit };
    profile.fitted_ell = fit_resolvent_exponent(&profile).ok();
    Ok(profile)
}

/// Minimum number of finite points inside the fit window.
pub const MIN_FIT_POINTS: usize = 10;

/// Slope of `ln(running max of the norm)` against `ln λ` over the fit window.
pub fn fit_resolvent_exponent(profile: &ResolventProfile) -> Result<f64> {
    let (lo, hi) = profile.fit_window;
    let pts: Vec<&ResolventPoint> = profile
        .points
        .iter()
        .filter(|p| p.lambda >= lo && p.lambda <= hi && p.norm.is_finite() && p.norm > 0.0)
        .collect();
    if pts.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientSpan(format!(
            "{} finite points in window, need {MIN_FIT_POINTS}",
            pts.len()
        )));
    }
    let (first, last) = (pts[0].lambda, pts[pts.len() - 1].lambda);
    if last < 10.0 * first {
        return Err(Error::InsufficientSpan(format!("window [{first}, {last}] spans less than a decade")));
    }
    let xs: Vec<f64> = pts.iter().map(|p| p.lambda).collect();
    let env = fit::running_max(&pts.iter().map(|p| p.norm).collect::<Vec<_>>());
    fit::log_log_fit(&xs, &env)
        .map(|l| l.slope)
        .ok_or_else(|| Error::InsufficientSpan("degenerate frequency window".into()))
}
