//! Command implementations behind the `kvwave` binary.
//!
//! Each command writes its CSV artifacts into the output directory and
//! returns a [`Report`] of human-readable lines. Lines starting with
//! `verdict:` are the machine-checkable part.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::config::{ExperimentConfig, SweepMetric, SweepParameter};
use crate::discretize::DiscreteGenerator;
use crate::error::{Error, Result};
use crate::evolve::{bound_ratio, fit_decay_exponent, make_initial_data, simulate};
use crate::fit::log_space;
use crate::model::{check_ssc, validate_config, CaseLabel, SystemConfig};
use crate::spectra::{eigenvalues, resolvent_norm, resolvent_sweep, ResolventProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Spectrum,
    Resolvent,
    Sweep,
}

impl Command {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Simulate => "simulate",
            Self::Spectrum => "spectrum",
            Self::Resolvent => "resolvent",
            Self::Sweep => "sweep",
        }
    }
}

/// Outcome of one command.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub lines: Vec<String>,
    /// `Some(false)` when a theorem check failed.
    pub passed: Option<bool>,
    pub files: Vec<PathBuf>,
}

impl Report {
    fn info(&mut self, line: impl Into<String>) {
        self.lines.push(line.into());
    }

    fn verdict(&mut self, what: &str, ok: bool, detail: &str) {
        let word = if ok { "PASS" } else { "FAIL" };
        self.lines.push(format!("verdict: {what}: {word} ({detail})"));
        self.passed = Some(self.passed.unwrap_or(true) && ok);
    }

    pub fn verdict_lines(&self) -> impl Iterator<Item = &str> {
        self.lines.iter().map(String::as_str).filter(|l| l.starts_with("verdict:"))
    }

    /// 0 on success, 1 when a verdict failed.
    pub fn exit_code(&self) -> i32 {
        match self.passed {
            Some(false) => 1,
            _ => 0,
        }
    }
}

/// Exit code for a command that could not run.
pub const EXIT_ERROR: i32 = 2;

pub fn run(command: Command, cfg: &ExperimentConfig, out_dir: &Path) -> Result<Report> {
    std::fs::create_dir_all(out_dir)?;
    match command {
        Command::Simulate => cmd_simulate(cfg, out_dir),
        Command::Spectrum => cmd_spectrum(cfg, out_dir),
        Command::Resolvent => cmd_resolvent(cfg, out_dir),
        Command::Sweep => cmd_sweep(cfg, out_dir),
    }
}

fn generator(system: &SystemConfig, n: usize, report: &mut Report) -> Result<DiscreteGenerator> {
    let gen = DiscreteGenerator::new(system, n)?;
    for name in &gen.grid.under_resolved {
        report.info(format!("warning: support of {name} holds fewer than 4 midpoints at n = {n}"));
    }
    Ok(gen)
}

fn write_file(path: PathBuf, report: &mut Report, body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
    let mut w = BufWriter::new(File::create(&path)?);
    body(&mut w)?;
    w.flush()?;
    report.files.push(path);
    Ok(())
}

fn theory_alpha(case: CaseLabel) -> Option<f64> {
    match case {
        CaseLabel::C1 => Some(4.0),
        CaseLabel::C3 => Some(1.0),
        _ => None,
    }
}

/// Energy history, tail decay fit, and a monotonicity check.
pub fn cmd_simulate(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Report> {
    let mut report = Report::default();
    let gen = generator(&cfg.system, cfg.numerics.n, &mut report)?;
    let dt = cfg.numerics.time_step(gen.h());
    let s0 = make_initial_data(&gen, &cfg.initial)?;
    let sim = simulate(&gen, &s0, dt, cfg.numerics.t_final, cfg.numerics.sample_every)?;
    let trace = &sim.trace;
    report.info(trace.digest());
    write_file(out_dir.join("energy.csv"), &mut report, |w| trace.write_csv(w))?;

    let fit = fit_decay_exponent(trace, cfg.numerics.window_fraction)?;
    let theory = theory_alpha(cfg.system.case_label);
    let ratio = theory.map(|a| bound_ratio(trace, fit.window, a));
    write_file(out_dir.join("decay_fit.txt"), &mut report, |w| {
        writeln!(w, "alpha = {:.16e}", fit.alpha)?;
        writeln!(w, "intercept = {:.16e}", fit.intercept)?;
        writeln!(w, "residual = {:.16e}", fit.residual)?;
        writeln!(w, "window = {:.16e},{:.16e}", fit.window.0, fit.window.1)?;
        writeln!(w, "domain_norm_sq = {:.16e}", fit.domain_norm_sq)?;
        if let (Some(a), Some(r)) = (theory, ratio) {
            writeln!(w, "bound_ratio_alpha_{a} = {r:.16e}")?;
        }
        Ok(())
    })?;
    report.info(format!(
        "alpha = {:.6} on [{}, {}] (residual {:.3e})",
        fit.alpha, fit.window.0, fit.window.1, fit.residual
    ));
    if let (Some(a), Some(r)) = (theory, ratio) {
        report.info(format!("max E t^{a} / |U0|_D^2 on window = {r:.6e}"));
    }

    let worst = trace
        .samples
        .windows(2)
        .map(|p| (p[1].energy - p[0].energy) / p[0].energy.max(f64::MIN_POSITIVE))
        .fold(f64::NEG_INFINITY, f64::max);
    report.verdict("energy non-increasing", worst <= 1e-10, &format!("largest relative increase {worst:.3e}"));
    Ok(report)
}

/// Full spectrum plus the strong-stability check.
pub fn cmd_spectrum(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Report> {
    let mut report = Report::default();
    let gen = generator(&cfg.system, cfg.numerics.n, &mut report)?;
    let spec = eigenvalues(&gen)?;
    write_file(out_dir.join("spectrum.csv"), &mut report, |w| spec.write_csv(w))?;
    if let Ok(ssc) = check_ssc(&cfg.system) {
        report.info(format!(
            "smallness condition {}: threshold {:.6e}, actual {:.6e}, satisfied {}",
            ssc.case_label, ssc.threshold, ssc.actual, ssc.satisfied
        ));
    }
    report.info(format!(
        "{} eigenvalues, {} flagged on the axis, roundoff floor {:.3e}",
        spec.eigenvalues.len(),
        spec.flagged().len(),
        spec.roundoff_floor
    ));

    let limit = gen.resolution_limit();
    let trusted_max = spec
        .eigenvalues
        .iter()
        .filter(|l| l.im.abs() <= limit)
        .map(|l| l.re)
        .fold(f64::NEG_INFINITY, f64::max);
    report.info(format!("max Re λ over |Im λ| <= {limit:.4} (resolved range): {trusted_max:.6e}"));

    // cross-check: the resolvent must be finite at the nearest axis frequencies
    let mut singular_at = Vec::new();
    let nearest = spec.closest_to_axis(spec.eigenvalues.len());
    for l in nearest.iter().filter(|l| l.im >= 0.0).take(10) {
        match resolvent_norm(&gen, l.im) {
            Ok(_) => {}
            Err(Error::NumericallySingular { lambda }) => singular_at.push(lambda),
            Err(e) => return Err(e),
        }
    }
    if !singular_at.is_empty() {
        report.info(format!("resolvent numerically singular at {singular_at:?}"));
    }
    let ok = spec.strongly_stable() && singular_at.is_empty();
    report.verdict("strong stability", ok, &format!("max Re λ = {:.6e}", spec.max_real_part));
    Ok(report)
}

fn profile_for(gen: &DiscreteGenerator, cfg: &ExperimentConfig, report: &mut Report) -> Result<ResolventProfile> {
    let limit = gen.resolution_limit();
    let lo = cfg.resolvent.lambda_lo;
    let hi = cfg.resolvent.lambda_hi.unwrap_or(limit);
    if !(lo < hi) {
        return Err(Error::BadParameters(format!("empty frequency range [{lo}, {hi}]")));
    }
    if hi > limit {
        report.info(format!("warning: frequencies above the resolution limit {limit:.4} are not trusted"));
    }
    resolvent_sweep(gen, &log_space(lo, hi, cfg.resolvent.points))
}

fn ell_text(ell: Option<f64>) -> String {
    ell.map_or_else(|| "n/a".to_string(), |e| format!("{e:.6}"))
}

/// Resolvent norms along the imaginary axis and the fitted growth exponent.
pub fn cmd_resolvent(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Report> {
    let mut report = Report::default();
    let gen = generator(&cfg.system, cfg.numerics.n, &mut report)?;
    let profile = profile_for(&gen, cfg, &mut report)?;
    write_file(out_dir.join("resolvent.csv"), &mut report, |w| profile.write_csv(w))?;
    report.info(format!(
        "ell_est = {} (theory: 0.5 for C1, 2 for C3) on [{:.4}, {:.4}]",
        ell_text(profile.fitted_ell),
        profile.fit_window.0,
        profile.fit_window.1
    ));
    let singular = profile.points.iter().filter(|p| p.singular).count();
    report.verdict("resolvent finite on grid", singular == 0, &format!("{singular} singular points"));
    Ok(report)
}

fn swept_system(base: &SystemConfig, parameter: SweepParameter, value: f64) -> Result<SystemConfig> {
    let mut sys = *base;
    match parameter {
        SweepParameter::C0 => sys.profile_c = sys.profile_c.with_value(value),
        SweepParameter::B0 => sys.profile_b = sys.profile_b.with_value(value),
        SweepParameter::D0 => sys.profile_d = sys.profile_d.with_value(value),
        SweepParameter::N => {}
    }
    validate_config(sys)
}

fn swept_n(parameter: SweepParameter, value: f64, default: usize) -> Result<usize> {
    if parameter != SweepParameter::N {
        return Ok(default);
    }
    if !(value >= 2.0 && value.fract() == 0.0 && value <= u32::MAX as f64) {
        return Err(Error::BadParameters(format!("grid size must be an integer >= 2, got {value}")));
    }
    Ok(value as usize)
}

/// One row per value of the swept parameter: the optional metric and the
/// smallness condition.
pub fn cmd_sweep(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Report> {
    let mut report = Report::default();
    let spec = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| Error::BadParameters("config has no [sweep] section".into()))?;
    let mut rows = Vec::with_capacity(spec.values.len());
    for &value in &spec.values {
        let sys = swept_system(&cfg.system, spec.parameter, value)?;
        let n = swept_n(spec.parameter, value, cfg.numerics.n)?;
        let ssc = match check_ssc(&sys) {
            Ok(r) => if r.satisfied { "true" } else { "false" },
            Err(Error::SscInapplicable(_)) => "na",
            Err(e) => return Err(e),
        };
        let metric = match spec.metric {
            SweepMetric::None => None,
            SweepMetric::Ell => {
                let gen = generator(&sys, n, &mut report)?;
                Some(profile_for(&gen, cfg, &mut report)?.fitted_ell.unwrap_or(f64::NAN))
            }
            SweepMetric::Alpha => {
                let gen = generator(&sys, n, &mut report)?;
                let s0 = make_initial_data(&gen, &cfg.initial)?;
                let dt = cfg.numerics.time_step(gen.h());
                let sim = simulate(&gen, &s0, dt, cfg.numerics.t_final, cfg.numerics.sample_every)?;
                Some(fit_decay_exponent(&sim.trace, cfg.numerics.window_fraction)?.alpha)
            }
        };
        report.info(format!(
            "{} = {value}: {}ssc_satisfied = {ssc}",
            spec.parameter.as_str(),
            metric.map_or(String::new(), |m| format!("{} = {m:.6}, ", spec.metric.as_str()))
        ));
        rows.push((value, metric, ssc));
    }
    write_file(out_dir.join("sweep.csv"), &mut report, |w| {
        match spec.metric {
            SweepMetric::None => writeln!(w, "value,ssc_satisfied")?,
            m => writeln!(w, "value,{},ssc_satisfied", m.as_str())?,
        }
        for (value, metric, ssc) in &rows {
            match metric {
                Some(m) => writeln!(w, "{value:.16e},{m:.16e},{ssc}")?,
                None => writeln!(w, "{value:.16e},{ssc}")?,
            }
        }
        Ok(())
    })?;
    Ok(report)
}
