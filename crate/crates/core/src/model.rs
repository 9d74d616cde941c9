//! Problem instances: domain, wave speed and the piecewise-constant damping
//! and coupling coefficients, together with the case geometries and the
//! smallness conditions on the coupling amplitude.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// A coefficient of the form `value * indicator((left, right))`.
///
/// The zero profile has `value == 0` and an empty support.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientProfile {
    pub value: f64,
    pub left: f64,
    pub right: f64,
}

impl CoefficientProfile {
    pub fn new(value: f64, left: f64, right: f64) -> Self {
        Self { value, left, right }
    }

    pub fn zero() -> Self {
        Self { value: 0.0, left: 0.0, right: 0.0 }
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0.0
    }

    pub fn width(&self) -> f64 {
        if self.is_zero() {
            0.0
        } else {
            self.right - self.left
        }
    }

    /// Indicator of the open interval; endpoints evaluate to 0.
    pub fn at(&self, x: f64) -> f64 {
        if !self.is_zero() && self.left < x && x < self.right {
            self.value
        } else {
            0.0
        }
    }

    /// Like [`at`](Self::at) but rejects points outside `[0, length]`.
    pub fn eval(&self, x: f64, length: f64) -> Result<f64> {
        if !(0.0..=length).contains(&x) {
            return Err(Error::OutOfDomain { x, length });
        }
        Ok(self.at(x))
    }

    /// Same profile with the amplitude replaced.
    pub fn with_value(self, value: f64) -> Self {
        Self { value, ..self }
    }
}

/// Case geometries. `Free` carries no ordering constraint and is used for
/// reference runs outside the three cases (undamped or uncoupled systems).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CaseLabel {
    /// Damping b, then coupling c, then damping d.
    C1,
    /// Damping b, then damping d, then coupling c.
    C2,
    /// Damping b, then coupling c; no second damping.
    C3,
    Free,
}

impl CaseLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            CaseLabel::C1 => "C1",
            CaseLabel::C2 => "C2",
            CaseLabel::C3 => "C3",
            CaseLabel::Free => "free",
        }
    }
}

impl fmt::Display for CaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CaseLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "c1" => Ok(CaseLabel::C1),
            "c2" => Ok(CaseLabel::C2),
            "c3" => Ok(CaseLabel::C3),
            "free" | "none" => Ok(CaseLabel::Free),
            other => Err(Error::BadParameters(format!("unknown case label `{other}`"))),
        }
    }
}

/// A full problem instance on `(0, length)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemConfig {
    pub length: f64,
    /// Coefficient `a` of `u_xx`.
    pub wave_speed_sq: f64,
    pub profile_b: CoefficientProfile,
    pub profile_c: CoefficientProfile,
    pub profile_d: CoefficientProfile,
    pub case_label: CaseLabel,
}

impl SystemConfig {
    pub fn validate(self) -> Result<Self> {
        validate_config(self)
    }

    /// The three coefficient profiles tagged with their names.
    pub fn profiles(&self) -> [(&'static str, &CoefficientProfile); 3] {
        [("b", &self.profile_b), ("c", &self.profile_c), ("d", &self.profile_d)]
    }
}

fn check_chain(points: &[(&str, f64)]) -> Result<()> {
    for pair in points.windows(2) {
        let (ln, lv) = pair[0];
        let (rn, rv) = pair[1];
        if !(lv < rv) {
            return Err(Error::IntervalOrderViolation(format!("{ln} < {rn} ({lv} vs {rv})")));
        }
    }
    Ok(())
}

/// Checks positivity and the interval ordering required by the config's case
/// label. Returns the config unchanged on success.
pub fn validate_config(cfg: SystemConfig) -> Result<SystemConfig> {
    let length = cfg.length;
    if !(length.is_finite() && length > 0.0) {
        return Err(Error::BadParameters(format!("length must be positive, got {length}")));
    }
    if !(cfg.wave_speed_sq.is_finite() && cfg.wave_speed_sq > 0.0) {
        return Err(Error::BadParameters(format!(
            "wave_speed_sq must be positive, got {}",
            cfg.wave_speed_sq
        )));
    }

    for (name, p) in cfg.profiles() {
        if !p.value.is_finite() {
            return Err(Error::BadParameters(format!("profile {name} amplitude is not finite")));
        }
        if name != "c" && p.value < 0.0 {
            return Err(Error::NegativeDamping { profile: name, value: p.value });
        }
        if p.is_zero() {
            continue;
        }
        for x in [p.left, p.right] {
            if !(x.is_finite() && (0.0..=length).contains(&x)) {
                return Err(Error::OutOfDomain { x, length });
            }
        }
        if !(p.left < p.right) {
            return Err(Error::IntervalOrderViolation(format!(
                "{name}1 < {name}2 ({} vs {})",
                p.left, p.right
            )));
        }
    }

    let (b, c, d) = (&cfg.profile_b, &cfg.profile_c, &cfg.profile_d);
    let case = cfg.case_label;
    if case == CaseLabel::Free {
        return Ok(cfg);
    }

    if c.is_zero() {
        return Err(Error::ZeroCoupling);
    }
    if b.is_zero() {
        return Err(Error::ZeroDamping { profile: "b", case: case.as_str() });
    }
    match case {
        CaseLabel::C1 | CaseLabel::C2 if d.is_zero() => {
            return Err(Error::ZeroDamping { profile: "d", case: case.as_str() });
        }
        CaseLabel::C3 if !d.is_zero() => {
            return Err(Error::BadParameters(format!(
                "case C3 requires d = 0, got d0 = {}",
                d.value
            )));
        }
        _ => {}
    }

    let chain: Vec<(&str, f64)> = match case {
        CaseLabel::C1 => vec![
            ("0", 0.0),
            ("b1", b.left),
            ("b2", b.right),
            ("c1", c.left),
            ("c2", c.right),
            ("d1", d.left),
            ("d2", d.right),
            ("L", length),
        ],
        CaseLabel::C2 => vec![
            ("0", 0.0),
            ("b1", b.left),
            ("b2", b.right),
            ("d1", d.left),
            ("d2", d.right),
            ("c1", c.left),
            ("c2", c.right),
            ("L", length),
        ],
        CaseLabel::C3 => vec![
            ("0", 0.0),
            ("b1", b.left),
            ("b2", b.right),
            ("c1", c.left),
            ("c2", c.right),
            ("L", length),
        ],
        CaseLabel::Free => unreachable!(),
    };
    check_chain(&chain)?;
    Ok(cfg)
}

/// Outcome of the smallness condition on the coupling amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SscReport {
    pub case_label: CaseLabel,
    /// Admissible bound on |c0|; `+inf` when no smallness is required.
    pub threshold: f64,
    pub actual: f64,
    pub satisfied: bool,
    pub margin: f64,
}

/// Evaluates the strong-stability smallness condition for the config's case.
///
/// C1 needs `|c0| < min(sqrt(a), 1) / (c2 - c1)`; C3 needs `a = 1` and
/// `|c0| < 1 / (c2 - c1)`; C2 needs nothing beyond its geometry.
pub fn check_ssc(cfg: &SystemConfig) -> Result<SscReport> {
    let c = &cfg.profile_c;
    let actual = c.value.abs();
    let threshold = match cfg.case_label {
        CaseLabel::C1 => cfg.wave_speed_sq.sqrt().min(1.0) / c.width(),
        CaseLabel::C2 => f64::INFINITY,
        CaseLabel::C3 => {
            if cfg.wave_speed_sq != 1.0 {
                return Err(Error::SscInapplicable(format!(
                    "case C3 requires a = 1, got a = {}",
                    cfg.wave_speed_sq
                )));
            }
            1.0 / c.width()
        }
        CaseLabel::Free => {
            return Err(Error::SscInapplicable("no case label".into()));
        }
    };
    Ok(SscReport {
        case_label: cfg.case_label,
        threshold,
        actual,
        satisfied: actual < threshold,
        margin: threshold - actual,
    })
}
