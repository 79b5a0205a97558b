//! Scenario files: a base model, sweep axes, the analyses to run and where
//! to write the result.

use std::path::{Path, PathBuf};

use nrsense_core::trajectory::SimConfig;
use nrsense_core::{ModelSpec, Topology};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Fields a sweep axis may set. `n` switches the model to a star network.
pub const SWEEP_FIELDS: &[&str] = &[
    "kappa",
    "lambda_eff",
    "xi",
    "detuning_a",
    "detuning_b",
    "n_a",
    "n_b",
    "n",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FieldList {
    One(String),
    /// Every listed field takes the same value at each point.
    Tied(Vec<String>),
}

impl FieldList {
    pub fn names(&self) -> Vec<&str> {
        match self {
            FieldList::One(s) => vec![s.as_str()],
            FieldList::Tied(v) => v.iter().map(String::as_str).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub n: usize,
    #[serde(default)]
    pub log: bool,
}

impl Range {
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        if self.n == 0 || !self.start.is_finite() || !self.stop.is_finite() {
            return Err(CliError::Invalid(format!("bad range {self:?}")));
        }
        if self.log && (self.start <= 0.0 || self.stop <= 0.0) {
            return Err(CliError::Invalid("log range needs positive endpoints".into()));
        }
        if self.n == 1 {
            return Ok(vec![self.start]);
        }
        let frac = |i: usize| i as f64 / (self.n - 1) as f64;
        Ok((0..self.n)
            .map(|i| {
                if self.log {
                    (self.start.ln() + (self.stop.ln() - self.start.ln()) * frac(i)).exp()
                } else {
                    self.start + (self.stop - self.start) * frac(i)
                }
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub param: FieldList,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<Range>,
}

impl Axis {
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        match (&self.values, &self.range) {
            (Some(v), None) if !v.is_empty() => Ok(v.clone()),
            (None, Some(r)) => r.values(),
            _ => Err(CliError::Invalid(format!(
                "sweep axis {:?} needs exactly one of a non-empty `values` or a `range`",
                self.param.names()
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    #[serde(flatten)]
    pub range: Range,
    /// Measure times in units of `1/(κ + λ′)` of each sweep point.
    #[serde(default)]
    pub relaxation_units: bool,
}

impl TimeGrid {
    pub fn times(&self, spec: &ModelSpec) -> Result<Vec<f64>, CliError> {
        let scale = if self.relaxation_units {
            1.0 / (spec.kappa + spec.lambda_eff)
        } else {
            1.0
        };
        Ok(self.range.values()?.into_iter().map(|t| t * scale).collect())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Analyses {
    pub steady: bool,
    pub qfi: bool,
    pub closed_form: bool,
    pub transient: Option<TimeGrid>,
    pub monte_carlo: Option<SimConfig>,
}

impl Analyses {
    pub fn any(&self) -> bool {
        self.steady || self.qfi || self.closed_form || self.transient.is_some() || self.monte_carlo.is_some()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Output {
    pub path: Option<PathBuf>,
    pub format: Format,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub model: ModelSpec,
    pub sweep: Vec<Axis>,
    pub analyses: Analyses,
    pub output: Output,
    /// Relative tolerance for `verify`.
    pub tolerance: Option<f64>,
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let s: Scenario = toml::from_str(text).map_err(|e| CliError::Invalid(e.to_string()))?;
        s.validate_axes()?;
        s.model.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Invalid(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    fn validate_axes(&self) -> Result<(), CliError> {
        for axis in &self.sweep {
            for name in axis.param.names() {
                if !SWEEP_FIELDS.contains(&name) {
                    return Err(CliError::Invalid(format!(
                        "unknown sweep field `{name}`; expected one of {SWEEP_FIELDS:?}"
                    )));
                }
            }
            axis.values()?;
        }
        Ok(())
    }

    /// Fails unless at least one analysis is selected.
    pub fn require_analysis(&self) -> Result<(), CliError> {
        if self.analyses.any() {
            Ok(())
        } else {
            Err(CliError::Invalid("scenario selects no analysis".into()))
        }
    }

    /// Every sweep point in row-major order (first axis outermost). Points
    /// that fail validation are kept and carry the reason.
    pub fn points(&self) -> Result<Vec<Point>, CliError> {
        let mut points = vec![Point {
            spec: self.model,
            error: None,
        }];
        for axis in &self.sweep {
            let values = axis.values()?;
            let names = axis.param.names();
            points = points
                .iter()
                .flat_map(|base| {
                    values.iter().map(|&v| {
                        let mut p = base.clone();
                        for name in &names {
                            if let Err(e) = set_field(&mut p.spec, name, v) {
                                p.error.get_or_insert(e);
                            }
                        }
                        p
                    })
                })
                .collect();
        }
        for p in &mut points {
            if p.error.is_none() {
                p.error = p.spec.validate().err().map(|e| e.to_string());
            }
        }
        Ok(points)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub spec: ModelSpec,
    pub error: Option<String>,
}

/// Assign `value` to the model field `name`.
pub fn set_field(spec: &mut ModelSpec, name: &str, value: f64) -> Result<(), String> {
    match name {
        "kappa" => spec.kappa = value,
        "lambda_eff" => spec.lambda_eff = value,
        "xi" => spec.xi = value,
        "detuning_a" => spec.detuning_a = value,
        "detuning_b" => spec.detuning_b = value,
        "n_a" => spec.n_a = value,
        "n_b" => spec.n_b = value,
        "n" => {
            if value < 1.0 || value.fract() != 0.0 {
                return Err(format!("n must be a positive integer, got {value}"));
            }
            spec.topology = Topology::Star(value as usize);
        }
        other => return Err(format!("unknown field `{other}`")),
    }
    Ok(())
}

/// Read the model field `name`, as [`set_field`] would write it.
pub fn get_field(spec: &ModelSpec, name: &str) -> Option<f64> {
    Some(match name {
        "kappa" => spec.kappa,
        "lambda_eff" => spec.lambda_eff,
        "xi" => spec.xi,
        "detuning_a" => spec.detuning_a,
        "detuning_b" => spec.detuning_b,
        "n_a" => spec.n_a,
        "n_b" => spec.n_b,
        "n" => spec.topology.readout_modes() as f64,
        _ => return None,
    })
}

/// Apply `key=value` overrides to the base model.
pub fn apply_overrides(spec: &mut ModelSpec, overrides: &[String]) -> Result<(), CliError> {
    for item in overrides {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| CliError::Invalid(format!("override `{item}` is not key=value")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| CliError::Invalid(format!("override `{item}` has a non-numeric value")))?;
        set_field(spec, key.trim(), value).map_err(CliError::Invalid)?;
    }
    spec.validate()?;
    Ok(())
}

/// The transient figure: `λ′ = 10/√2`, `κ ∈ {0.1, 1, 1000}`, `η(t)` over
/// `(κ+λ′) t ∈ [10⁻², 50]`.
pub fn fig2() -> Scenario {
    Scenario {
        model: ModelSpec::pair(
            1.0,
            10.0 / std::f64::consts::SQRT_2,
            nrsense_core::Coupling::Nonreciprocal,
        ),
        sweep: vec![Axis {
            param: FieldList::One("kappa".into()),
            values: Some(vec![0.1, 1.0, 1000.0]),
            range: None,
        }],
        analyses: Analyses {
            closed_form: true,
            transient: Some(TimeGrid {
                range: Range {
                    start: 1e-2,
                    stop: 50.0,
                    n: 200,
                    log: true,
                },
                relaxation_units: true,
            }),
            ..Analyses::default()
        },
        output: Output::default(),
        tolerance: None,
    }
}
