//! INI-style experiment configuration.
//!
//! ```ini
//! [system]
//! length = 1.0
//! wave_speed_sq = 1.0
//! case = C1
//!
//! [damping_b]
//! value = 1.0
//! left = 0.1
//! right = 0.2
//! ```
//!
//! Sections: `system`, `damping_b`, `coupling_c`, `damping_d`, `numerics`,
//! `resolvent`, `initial`, `output`, `sweep`. Missing coefficient sections
//! mean the zero profile. Unknown sections or keys and duplicate keys are
//! errors; `#` and `;` start comment lines.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::evolve::InitialData;
use crate::model::{validate_config, CaseLabel, CoefficientProfile, SystemConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct Numerics {
    pub n: usize,
    /// `None` means `min(h, 0.02)`.
    pub dt: Option<f64>,
    pub t_final: f64,
    pub sample_every: usize,
    pub window_fraction: f64,
}

impl Default for Numerics {
    fn default() -> Self {
        Self { n: 100, dt: None, t_final: 100.0, sample_every: 10, window_fraction: 0.5 }
    }
}

impl Numerics {
    pub fn time_step(&self, h: f64) -> f64 {
        self.dt.unwrap_or_else(|| h.min(0.02))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolventSettings {
    pub lambda_lo: f64,
    /// `None` means the resolution limit of the grid.
    pub lambda_hi: Option<f64>,
    pub points: usize,
}

impl Default for ResolventSettings {
    fn default() -> Self {
        Self { lambda_lo: 2.0, lambda_hi: None, points: 40 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    C0,
    B0,
    D0,
    N,
}

impl FromStr for SweepParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "c0" => Ok(Self::C0),
            "b0" => Ok(Self::B0),
            "d0" => Ok(Self::D0),
            "n" => Ok(Self::N),
            other => Err(Error::BadParameters(format!("unknown sweep parameter `{other}`"))),
        }
    }
}

impl SweepParameter {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::C0 => "c0",
            Self::B0 => "b0",
            Self::D0 => "d0",
            Self::N => "n",
        }
    }
}

/// What each sweep row measures besides the smallness condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMetric {
    /// Envelope-fitted resolvent exponent.
    Ell,
    /// Fitted energy decay exponent.
    Alpha,
    None,
}

impl FromStr for SweepMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ell" => Ok(Self::Ell),
            "alpha" => Ok(Self::Alpha),
            "none" => Ok(Self::None),
            other => Err(Error::BadParameters(format!("unknown sweep metric `{other}`"))),
        }
    }
}

impl SweepMetric {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Ell => "ell",
            Self::Alpha => "alpha",
            Self::None => "none",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
    pub metric: SweepMetric,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub system: SystemConfig,
    pub numerics: Numerics,
    pub resolvent: ResolventSettings,
    pub initial: InitialData,
    pub output: PathBuf,
    pub sweep: Option<SweepSpec>,
}

const SECTIONS: &[(&str, &[&str])] = &[
    ("system", &["length", "wave_speed_sq", "case"]),
    ("damping_b", &["value", "left", "right"]),
    ("coupling_c", &["value", "left", "right"]),
    ("damping_d", &["value", "left", "right"]),
    ("numerics", &["n", "dt", "t_final", "sample_every", "window_fraction"]),
    ("resolvent", &["lambda_lo", "lambda_hi", "points"]),
    ("initial", &["kind", "k_u", "k_y", "center", "width", "path"]),
    ("output", &["dir"]),
    ("sweep", &["parameter", "values", "metric"]),
];

/// `(value, line)` per key, per section.
type Sections = BTreeMap<String, BTreeMap<String, (String, usize)>>;

fn tokenize(text: &str) -> Result<Sections> {
    let mut out = Sections::new();
    let mut current: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        let err = |message: String| Error::Parse { line: line_no, message };
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| err(format!("unterminated section header `{line}`")))?
                .trim()
                .to_string();
            if !SECTIONS.iter().any(|(s, _)| *s == name) {
                return Err(err(format!("unknown section `[{name}]`")));
            }
            if out.contains_key(&name) {
                return Err(err(format!("duplicate section `[{name}]`")));
            }
            out.insert(name.clone(), BTreeMap::new());
            current = Some(name);
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
        // trailing `# ...` comments; values never contain `#`
        let value = value.split_once('#').map_or(value, |(v, _)| v);
        let (key, value) = (key.trim().to_string(), value.trim().to_string());
        let section = current.as_ref().ok_or_else(|| err(format!("key `{key}` outside any section")))?;
        let allowed = SECTIONS.iter().find(|(s, _)| s == section).map(|(_, k)| *k).unwrap_or(&[]);
        if !allowed.contains(&key.as_str()) {
            return Err(err(format!("unknown key `{key}` in section [{section}]")));
        }
        let entries = out.get_mut(section).expect("section inserted on header");
        if entries.contains_key(&key) {
            return Err(err(format!("duplicate key `{key}` in section [{section}]")));
        }
        entries.insert(key, (value, line_no));
    }
    Ok(out)
}

struct Reader<'a> {
    sections: &'a Sections,
}

impl Reader<'_> {
    fn raw(&self, section: &str, key: &str) -> Option<&(String, usize)> {
        self.sections.get(section).and_then(|s| s.get(key))
    }

    fn get<T: FromStr>(&self, section: &str, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(section, key) {
            None => Ok(None),
            Some((v, line)) => v.parse::<T>().map(Some).map_err(|e| Error::Parse {
                line: *line,
                message: format!("[{section}] {key} = `{v}`: {e}"),
            }),
        }
    }

    fn require<T: FromStr>(&self, section: &str, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        self.get(section, key)?.ok_or_else(|| Error::Parse {
            line: 0,
            message: format!("missing required key `{key}` in section [{section}]"),
        })
    }

    fn positive(&self, section: &str, key: &str, default: f64) -> Result<f64> {
        let v = self.get::<f64>(section, key)?.unwrap_or(default);
        if !(v > 0.0 && v.is_finite()) {
            let line = self.raw(section, key).map_or(0, |r| r.1);
            return Err(Error::Parse { line, message: format!("[{section}] {key} must be positive") });
        }
        Ok(v)
    }

    fn profile(&self, section: &str) -> Result<CoefficientProfile> {
        if !self.sections.contains_key(section) {
            return Ok(CoefficientProfile::zero());
        }
        Ok(CoefficientProfile::new(
            self.require(section, "value")?,
            self.require(section, "left")?,
            self.require(section, "right")?,
        ))
    }
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let sections = tokenize(text)?;
    let r = Reader { sections: &sections };

    if !sections.contains_key("system") {
        return Err(Error::Parse { line: 0, message: "missing section [system]".into() });
    }
    let system = SystemConfig {
        length: r.require("system", "length")?,
        wave_speed_sq: r.require("system", "wave_speed_sq")?,
        case_label: r.require::<CaseLabel>("system", "case")?,
        profile_b: r.profile("damping_b")?,
        profile_c: r.profile("coupling_c")?,
        profile_d: r.profile("damping_d")?,
    };
    let system = validate_config(system).map_err(|e| Error::Validation(Box::new(e)))?;

    let defaults = Numerics::default();
    let n = r.get::<usize>("numerics", "n")?.unwrap_or(defaults.n);
    let dt = match r.get::<f64>("numerics", "dt")? {
        Some(_) => Some(r.positive("numerics", "dt", 1.0)?),
        None => None,
    };
    let sample_every = r.get::<usize>("numerics", "sample_every")?.unwrap_or(defaults.sample_every);
    let window_fraction = r.get::<f64>("numerics", "window_fraction")?.unwrap_or(defaults.window_fraction);
    if n < 2 || sample_every == 0 || !(window_fraction > 0.0 && window_fraction < 1.0) {
        return Err(Error::Parse {
            line: 0,
            message: "[numerics] needs n >= 2, sample_every >= 1, 0 < window_fraction < 1".into(),
        });
    }
    let numerics = Numerics {
        n,
        dt,
        t_final: r.positive("numerics", "t_final", defaults.t_final)?,
        sample_every,
        window_fraction,
    };

    let rdef = ResolventSettings::default();
    let lambda_lo = r.positive("resolvent", "lambda_lo", rdef.lambda_lo)?;
    let lambda_hi = match r.get::<f64>("resolvent", "lambda_hi")? {
        Some(_) => Some(r.positive("resolvent", "lambda_hi", 1.0)?),
        None => None,
    };
    if let Some(hi) = lambda_hi {
        if !(lambda_lo < hi) {
            return Err(Error::Parse { line: 0, message: "[resolvent] needs lambda_lo < lambda_hi".into() });
        }
    }
    let points = r.get::<usize>("resolvent", "points")?.unwrap_or(rdef.points);
    if points == 0 {
        return Err(Error::Parse { line: 0, message: "[resolvent] points must be positive".into() });
    }
    let resolvent = ResolventSettings { lambda_lo, lambda_hi, points };

    let len = system.length;
    let kind = r.get::<String>("initial", "kind")?.unwrap_or_else(|| "gaussian".into());
    let initial = match kind.to_ascii_lowercase().as_str() {
        "gaussian" => InitialData::Gaussian {
            center: r.get("initial", "center")?.unwrap_or(0.5 * len),
            width: r.positive("initial", "width", 0.1 * len)?,
        },
        "sine" | "sine_mode" => InitialData::SineMode {
            k_u: r.get("initial", "k_u")?.unwrap_or(1),
            k_y: r.get("initial", "k_y")?.unwrap_or(0),
        },
        "file" => InitialData::File(PathBuf::from(r.require::<String>("initial", "path")?)),
        other => {
            let line = r.raw("initial", "kind").map_or(0, |x| x.1);
            return Err(Error::Parse { line, message: format!("unknown initial kind `{other}`") });
        }
    };

    let output = PathBuf::from(r.get::<String>("output", "dir")?.unwrap_or_else(|| ".".into()));

    let sweep = if sections.contains_key("sweep") {
        let list = r.require::<String>("sweep", "values")?;
        let line = r.raw("sweep", "values").map_or(0, |x| x.1);
        let values = list
            .split(',')
            .map(|v| {
                v.trim().parse::<f64>().map_err(|e| Error::Parse { line, message: format!("sweep value `{v}`: {e}") })
            })
            .collect::<Result<Vec<f64>>>()?;
        let parameter = r.require::<String>("sweep", "parameter")?;
        let pline = r.raw("sweep", "parameter").map_or(0, |x| x.1);
        let metric = r.get::<String>("sweep", "metric")?.unwrap_or_else(|| "ell".into());
        let mline = r.raw("sweep", "metric").map_or(0, |x| x.1);
        Some(SweepSpec {
            parameter: parameter.parse().map_err(|e: Error| Error::Parse { line: pline, message: e.to_string() })?,
            values,
            metric: metric.parse().map_err(|e: Error| Error::Parse { line: mline, message: e.to_string() })?,
        })
    } else {
        None
    };

    Ok(ExperimentConfig { system, numerics, resolvent, initial, output, sweep })
}
