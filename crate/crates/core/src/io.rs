//! Run configuration files, field dumps and report serialization.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::bounds::{alpha_exponent, alpha_window, ExponentVariant};
use crate::domain::{DiscretizedDomain, DomainSpec};
use crate::error::{Error, Result};
use crate::operators::{Field, Time};
use crate::problem::{InitialData, Problem, Profile, Source, Weight};
use crate::scenarios::{AuditSpec, GridSpec, Scenario};

/// Keys accepted in a run configuration.
pub const CONFIG_REFERENCE: &str = r#"[domain]     kind = unit_square | rectangle | disk | ellipse | convex_polygon
             width, height (rectangle); radius (disk); a, b (ellipse); vertices = [[x, y], ...] (convex_polygon)
[weight]     gamma = 0.0, theta = <θ ≥ 1> (omit for θ = ∞)
[weight.profile]
             kind = constant (value) | distance_power (scale, omega) | ramp_bump (epsilon, center, width)
                  | smoothed_bang_bang (a1, a2, center, radius, eta) | paraboloid (peak, curvature, center)
[source]     kind = one | power_q (q) | identity | log_s | log1p_q (q) | saturable_q (q) | saturable
                  | logistic | one_minus_s_p (p) | power_sum (p, q)
[initial]    kind = zero | subsolution_seed | eigenfunction (scale) | samples (values)
[grid]       h, dt (defaults to h), horizon = 2.0, substeps = 4, beta = 1.0, truncate = false
[audit]      transform = power | log, alpha = <number> (omit for the automatic exponent),
             stationary_slice = true, check_monotone = true, check_hopf = true
seed         integer, default 0
"#;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub h: f64,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_substeps")]
    pub substeps: usize,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default)]
    pub truncate: bool,
}

fn default_horizon() -> f64 {
    2.0
}
fn default_substeps() -> usize {
    4
}
fn default_beta() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    #[default]
    Power,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditConfig {
    #[serde(default)]
    pub transform: Transform,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default = "yes")]
    pub stationary_slice: bool,
    #[serde(default = "yes")]
    pub check_monotone: bool,
    #[serde(default = "yes")]
    pub check_hopf: bool,
}

impl Default for AuditConfig {
    fn default() -> Self {
        AuditConfig { transform: Transform::Power, alpha: None, stationary_slice: true, check_monotone: true, check_hopf: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub seed: u64,
    pub domain: DomainSpec,
    pub weight: Weight,
    pub source: Source,
    #[serde(default)]
    pub initial: InitialData,
    pub grid: GridConfig,
    #[serde(default)]
    pub audit: AuditConfig,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let c: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Config::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.grid_spec().validate()?;
        self.problem().validate()?;
        if let Some(a) = self.audit.alpha {
            if !(a > 0.0 && a <= 1.0) {
                return Err(Error::RangeViolation(format!("alpha must lie in (0, 1], got {a}")));
            }
        }
        Ok(())
    }

    pub fn problem(&self) -> Problem {
        let mut p = Problem::new(self.domain.clone(), self.weight.clone(), self.source.clone(), self.grid.horizon);
        p.u0 = self.initial.clone();
        p.beta = self.grid.beta;
        p.truncate = self.grid.truncate;
        p
    }

    pub fn grid_spec(&self) -> GridSpec {
        GridSpec { h: self.grid.h, dt: self.grid.dt, horizon: self.grid.horizon, substeps: self.grid.substeps }
    }

    /// A catalog-style scenario assembled from the file.
    pub fn scenario(&self, id: &str) -> Result<Scenario> {
        let problem = self.problem();
        let audit = match self.audit.transform {
            Transform::Log => AuditSpec::PerTimeLog,
            Transform::Power => AuditSpec::Spacetime {
                alpha: match self.audit.alpha {
                    Some(a) => a,
                    None => auto_alpha(&problem)?,
                },
                beta: self.grid.beta,
            },
        };
        let spacetime = matches!(audit, AuditSpec::Spacetime { .. });
        Ok(Scenario {
            id: id.into(),
            problem: problem.clone(),
            audit,
            grid: self.grid_spec(),
            alpha_cap: if spacetime { power_params(&problem).ok().map(|(q, g, _)| alpha_window(q, g, problem.beta)) } else { None },
            quantitative: None,
            rho: None,
            check_monotone: self.audit.check_monotone && spacetime,
            check_comparison: false,
            check_barrier: false,
            check_hopf: self.audit.check_hopf,
        })
    }
}

fn power_params(p: &Problem) -> Result<(f64, f64, f64)> {
    let q = match p.source {
        Source::One => 0.0,
        Source::PowerQ { q } => q,
        _ => return Err(Error::ValidityViolation("an automatic exponent needs the source 1 or u^q".into())),
    };
    Ok((q, p.weight.gamma, p.weight.theta.unwrap_or(f64::INFINITY)))
}

/// Power-concavity exponent implied by the weight and source.
pub fn auto_alpha(p: &Problem) -> Result<f64> {
    let (q, gamma, theta) = power_params(p)?;
    let variant = match (&p.weight.profile, q == 0.0) {
        (Profile::Constant { .. }, _) => ExponentVariant::ConstantWeight,
        (_, true) => ExponentVariant::Torsion,
        _ => ExponentVariant::LaneEmden,
    };
    let theta = if matches!(variant, ExponentVariant::ConstantWeight) { f64::INFINITY } else { theta };
    alpha_exponent(q, gamma, p.beta, theta, variant)
}

/// `x,y,value` per interior node.
pub fn write_field_csv<W: Write>(dom: &DiscretizedDomain, field: &Field, mut w: W) -> Result<()> {
    writeln!(w, "x,y,value")?;
    for (k, v) in field.values.iter().enumerate() {
        let p = dom.node(k);
        writeln!(w, "{},{},{}", p[0], p[1], v)?;
    }
    Ok(())
}

/// Full-grid dump: header `h, nx, ny, time` then `nx·ny` values, row-major with `x`
/// fastest; everything little-endian `f64`, `time = +∞` for a stationary field.
pub fn write_field_binary<W: Write>(dom: &DiscretizedDomain, field: &Field, mut w: W) -> Result<()> {
    let header = [dom.h, dom.nx as f64, dom.ny as f64, field.time.as_f64()];
    for v in header.iter().chain(dom.to_grid(&field.values).iter()) {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridDump {
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
    pub time: Time,
    pub values: Vec<f64>,
}

pub fn read_field_binary<R: Read>(mut r: R) -> Result<GridDump> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() < 32 || bytes.len() % 8 != 0 {
        return Err(Error::Io("truncated field dump".into()));
    }
    let all: Vec<f64> = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect();
    let (h, nx, ny, t) = (all[0], all[1] as usize, all[2] as usize, all[3]);
    if all.len() != 4 + nx * ny {
        return Err(Error::Io(format!("expected {} values for a {nx}×{ny} grid, found {}", nx * ny, all.len() - 4)));
    }
    let time = if t.is_infinite() { Time::Infinity } else { Time::Finite(t) };
    Ok(GridDump { h, nx, ny, time, values: all[4..].to_vec() })
}

impl GridDump {
    /// Interior-node field on `dom`, which must match the dumped grid.
    pub fn to_field(&self, dom: &DiscretizedDomain) -> Result<Field> {
        if dom.nx != self.nx || dom.ny != self.ny || (dom.h - self.h).abs() > 1e-12 * self.h {
            return Err(Error::Config(format!(
                "dump grid {}×{} at h = {} does not match the configured domain {}×{} at h = {}",
                self.nx, self.ny, self.h, dom.nx, dom.ny, dom.h
            )));
        }
        Ok(Field::new(dom.interior.iter().map(|&g| self.values[g]).collect(), self.time))
    }
}

/// Pretty JSON with a trailing newline; field order follows the type definitions.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}
