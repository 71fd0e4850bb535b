use std::fmt;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::aniso::{AnisotropicCoefficients, CoefficientSpec};
use crate::elliptic::{DEFAULT_EPSILON, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::parabolic::{ConstantSource, FieldStack, SourceField, StepOptions, TimeGrid};
use crate::radial::{MassGridSpec, RadialSettings};

/// A Lorentz exponent that may be infinite; serialized as a number or `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponent(pub f64);

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Exponent(v)),
            Raw::Text(t) if t == "inf" || t == "infinity" => Ok(Exponent(f64::INFINITY)),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("expected a number or \"inf\", got {t:?}"))),
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_infinite() {
            write!(f, "inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorentzPair {
    pub p: Exponent,
    pub q: Exponent,
}

impl LorentzPair {
    pub fn new(p: f64, q: f64) -> Self {
        Self {
            p: Exponent(p),
            q: Exponent(q),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub lx: f64,
    pub ly: f64,
    pub nx: usize,
    pub ny: usize,
}

impl DomainSpec {
    pub fn hx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    pub fn measure(&self) -> f64 {
        (self.nx * self.ny) as f64 * self.hx() * self.hy()
    }
}

/// Named field generators and file inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    Zero,
    Constant {
        value: f64,
    },
    /// `amplitude · exp(1 − 1/(1 − |x − c|²/r²))` inside the disc, zero outside.
    Bump {
        center: [f64; 2],
        radius: f64,
        amplitude: f64,
    },
    /// `amplitude · sin(kx π x/lx) sin(ky π y/ly)`.
    Sine {
        amplitude: f64,
        #[serde(default = "one")]
        kx: u32,
        #[serde(default = "one")]
        ky: u32,
    },
    /// Independent uniform samples in `[−amplitude, amplitude]`; seeded by
    /// `seed`, or the scenario seed when absent.
    Random {
        amplitude: f64,
        #[serde(default)]
        seed: Option<u64>,
    },
    Csv {
        path: PathBuf,
    },
    /// Source only: fields switched on at the given times.
    CsvStack {
        times: Vec<f64>,
        paths: Vec<PathBuf>,
    },
}

fn one() -> u32 {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSpec {
    pub t_final: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub elliptic: f64,
    pub radial: f64,
    /// Comparison margin η; defaults to `10 (h + δ + ε^{1/2})`.
    pub margin: Option<f64>,
    pub epsilon: f64,
    pub max_iter: usize,
    pub quad_points: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            elliptic: DEFAULT_TOL,
            radial: 1e-10,
            margin: None,
            epsilon: DEFAULT_EPSILON,
            max_iter: DEFAULT_MAX_ITER,
            quad_points: 4,
        }
    }
}

/// Profiles `(s, value)` replacing the rearranged data on the symmetrized
/// side; each must concentration-dominate the data it replaces.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DominatingSpec {
    pub source_profile: Option<PathBuf>,
    pub initial_profile: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportOptions {
    pub lorentz: Vec<LorentzPair>,
    pub decay: bool,
    pub decay_slack: f64,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            lorentz: Vec::new(),
            decay: false,
            decay_slack: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub coefficients: CoefficientSpec,
    pub domain: DomainSpec,
    pub u0: FieldSpec,
    pub source: FieldSpec,
    pub time: TimeSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub radial_grid: MassGridSpec,
    #[serde(default)]
    pub dominating: DominatingSpec,
    #[serde(default)]
    pub report: ReportOptions,
    #[serde(default)]
    pub seed: u64,
}

fn default_name() -> String {
    "scenario".into()
}

pub const PRESETS: &[&str] = &["zero", "model-p2", "decay", "isotropic-p2"];

impl ScenarioConfig {
    /// Built-in scenarios.
    pub fn preset(name: &str) -> Result<Self> {
        let base = |coeffs: [f64; 2], u0: FieldSpec, source: FieldSpec, steps: usize| ScenarioConfig {
            name: name.to_string(),
            coefficients: CoefficientSpec {
                alphas: vec![1.0, 1.0],
                exponents: coeffs.to_vec(),
            },
            domain: DomainSpec {
                lx: 1.0,
                ly: 1.0,
                nx: 64,
                ny: 64,
            },
            u0,
            source,
            time: TimeSpec { t_final: 1.0, steps },
            tolerances: Tolerances::default(),
            radial_grid: MassGridSpec::default(),
            dominating: DominatingSpec::default(),
            report: ReportOptions::default(),
            seed: 0,
        };
        let bump = FieldSpec::Bump {
            center: [0.5, 0.5],
            radius: 0.35,
            amplitude: 1.0,
        };
        let lorentz = vec![
            LorentzPair::new(1.0, 1.0),
            LorentzPair::new(2.0, 2.0),
            LorentzPair::new(2.0, f64::INFINITY),
        ];
        match name {
            "zero" => {
                let mut c = base([2.0, 2.0], FieldSpec::Zero, FieldSpec::Zero, 10);
                c.domain.nx = 16;
                c.domain.ny = 16;
                c.report.lorentz = lorentz;
                c.report.decay = true;
                Ok(c)
            }
            "model-p2" => {
                let mut c = base([1.5, 3.0], bump, FieldSpec::Constant { value: 1.0 }, 50);
                c.report.lorentz = lorentz;
                Ok(c)
            }
            "isotropic-p2" => {
                let mut c = base([2.0, 2.0], bump, FieldSpec::Constant { value: 1.0 }, 50);
                c.report.lorentz = lorentz;
                Ok(c)
            }
            "decay" => {
                let mut c = base(
                    [2.0, 2.0],
                    FieldSpec::Random {
                        amplitude: 1.0,
                        seed: None,
                    },
                    FieldSpec::Zero,
                    100,
                );
                c.report.decay = true;
                c.seed = 20_240_917;
                Ok(c)
            }
            other => Err(Error::config(
                "preset",
                format!("unknown preset `{other}`; known: {}", PRESETS.join(", ")),
            )),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::config(json_path_hint(&e), e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    /// Checks every field that can be checked without touching the file system.
    pub fn validate(&self) -> Result<AnisotropicCoefficients> {
        let coeffs = AnisotropicCoefficients::try_from(self.coefficients.clone())
            .map_err(|e| Error::config("coefficients.exponents", e.to_string()))?;
        if coeffs.dim() != 2 {
            return Err(Error::config("coefficients", "only two-dimensional problems are supported"));
        }
        let d = &self.domain;
        if !(d.lx > 0.0 && d.lx.is_finite()) {
            return Err(Error::config("domain.lx", "must be positive"));
        }
        if !(d.ly > 0.0 && d.ly.is_finite()) {
            return Err(Error::config("domain.ly", "must be positive"));
        }
        if d.nx == 0 {
            return Err(Error::config("domain.nx", "must be at least 1"));
        }
        if d.ny == 0 {
            return Err(Error::config("domain.ny", "must be at least 1"));
        }
        if !(self.time.t_final > 0.0 && self.time.t_final.is_finite()) {
            return Err(Error::config("time.t_final", "must be positive"));
        }
        if self.time.steps == 0 {
            return Err(Error::config("time.steps", "must be at least 1"));
        }
        let t = &self.tolerances;
        if !(t.elliptic > 0.0) {
            return Err(Error::config("tolerances.elliptic", "must be positive"));
        }
        if !(t.radial > 0.0) {
            return Err(Error::config("tolerances.radial", "must be positive"));
        }
        if let Some(m) = t.margin {
            if !(m >= 0.0) {
                return Err(Error::config("tolerances.margin", "must be nonnegative"));
            }
        }
        if !(t.epsilon >= 0.0) {
            return Err(Error::config("tolerances.epsilon", "must be nonnegative"));
        }
        if t.quad_points == 0 {
            return Err(Error::config("tolerances.quad_points", "must be at least 1"));
        }
        if self.radial_grid.uniform == 0 {
            return Err(Error::config("radial_grid.uniform", "must be at least 1"));
        }
        for (k, pair) in self.report.lorentz.iter().enumerate() {
            if !(pair.p.0 >= 1.0 && pair.p.0.is_finite()) {
                return Err(Error::config(format!("report.lorentz[{k}].p"), "must lie in [1, inf)"));
            }
            if !(pair.q.0 >= 1.0) {
                return Err(Error::config(format!("report.lorentz[{k}].q"), "must lie in [1, inf]"));
            }
        }
        if self.report.decay {
            if (coeffs.pbar() - 2.0).abs() > 1e-12 {
                return Err(Error::config(
                    "report.decay",
                    format!("decay check needs harmonic mean 2, got {}", coeffs.pbar()),
                ));
            }
            if self.source != FieldSpec::Zero {
                return Err(Error::config("report.decay", "decay check needs a zero source"));
            }
        }
        if !(self.report.decay_slack >= 0.0) {
            return Err(Error::config("report.decay_slack", "must be nonnegative"));
        }
        if matches!(self.u0, FieldSpec::CsvStack { .. }) {
            return Err(Error::config("u0", "a field stack is only valid as a source"));
        }
        Ok(coeffs)
    }

    pub fn margin(&self) -> f64 {
        self.tolerances.margin.unwrap_or_else(|| {
            let h = self.domain.hx().max(self.domain.hy());
            let delta = self.time.t_final / self.time.steps as f64;
            10.0 * (h + delta + self.tolerances.epsilon.sqrt())
        })
    }

    pub fn time_grid(&self) -> Result<TimeGrid> {
        TimeGrid::uniform(self.time.t_final, self.time.steps)
    }

    pub fn step_options(&self) -> StepOptions {
        StepOptions {
            tol: self.tolerances.elliptic,
            max_iter: self.tolerances.max_iter,
            epsilon: self.tolerances.epsilon,
            quad_points: self.tolerances.quad_points,
        }
    }

    pub fn radial_settings(&self, coeffs: &AnisotropicCoefficients) -> RadialSettings {
        let mut s = RadialSettings::new(coeffs.lambda_const(), coeffs.pbar(), 2, self.domain.measure());
        s.grid = self.radial_grid;
        s.tol = self.tolerances.radial;
        s
    }

    /// Builds a field from `spec`; relative paths resolve against `base`.
    pub fn build_field(&self, spec: &FieldSpec, field: &str, base: &Path) -> Result<GridFunction> {
        let d = &self.domain;
        let (lx, ly) = (d.lx, d.ly);
        let g = match spec {
            FieldSpec::Zero => GridFunction::zeros(d.nx, d.ny, d.hx(), d.hy()),
            FieldSpec::Constant { value } => GridFunction::constant(d.nx, d.ny, d.hx(), d.hy(), *value),
            FieldSpec::Bump {
                center,
                radius,
                amplitude,
            } => {
                if !(*radius > 0.0) {
                    return Err(Error::config(format!("{field}.radius"), "must be positive"));
                }
                GridFunction::from_fn(d.nx, d.ny, lx, ly, |x, y| {
                    let r2 = ((x - center[0]).powi(2) + (y - center[1]).powi(2)) / (radius * radius);
                    if r2 < 1.0 {
                        amplitude * (1.0 - 1.0 / (1.0 - r2)).exp()
                    } else {
                        0.0
                    }
                })
            }
            FieldSpec::Sine { amplitude, kx, ky } => GridFunction::from_fn(d.nx, d.ny, lx, ly, |x, y| {
                let pi = std::f64::consts::PI;
                amplitude * (*kx as f64 * pi * x / lx).sin() * (*ky as f64 * pi * y / ly).sin()
            }),
            FieldSpec::Random { amplitude, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.unwrap_or(self.seed));
                let values = (0..d.nx * d.ny)
                    .map(|_| amplitude * rng.gen_range(-1.0..=1.0))
                    .collect();
                GridFunction::new(d.nx, d.ny, d.hx(), d.hy(), values)
            }
            FieldSpec::Csv { path } => {
                let g = GridFunction::load_csv(&base.join(path))
                    .map_err(|e| Error::config(format!("{field}.path"), e.to_string()))?;
                if g.nx() != d.nx || g.ny() != d.ny {
                    return Err(Error::config(
                        format!("{field}.path"),
                        format!("field is {}x{}, domain is {}x{}", g.nx(), g.ny(), d.nx, d.ny),
                    ));
                }
                Ok(g)
            }
            FieldSpec::CsvStack { .. } => {
                return Err(Error::config(field, "a field stack cannot be used as a single field"))
            }
        };
        g.map_err(|e| Error::config(field, e.to_string()))
    }

    pub fn build_source(&self, base: &Path) -> Result<Box<dyn SourceField>> {
        match &self.source {
            FieldSpec::CsvStack { times, paths } => {
                if times.len() != paths.len() {
                    return Err(Error::config("source.times", "needs one time per path"));
                }
                let fields = paths
                    .iter()
                    .enumerate()
                    .map(|(k, p)| self.build_field(&FieldSpec::Csv { path: p.clone() }, &format!("source.paths[{k}]"), base))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Box::new(
                    FieldStack::new(times.clone(), fields).map_err(|e| Error::config("source", e.to_string()))?,
                ))
            }
            spec => Ok(Box::new(ConstantSource(self.build_field(spec, "source", base)?))),
        }
    }
}

/// Best-effort top-level field name for a serde error.
fn json_path_hint(e: &serde_json::Error) -> String {
    let msg = e.to_string();
    for key in [
        "coefficients",
        "domain",
        "u0",
        "source",
        "time",
        "tolerances",
        "radial_grid",
        "dominating",
        "report",
    ] {
        if msg.contains(&format!("`{key}`")) {
            return key.to_string();
        }
    }
    "<document>".into()
}
