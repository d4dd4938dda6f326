//! JSON run configuration.

use std::path::PathBuf;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curves::CurveOptions;
use crate::error::Error;
use crate::oracle::{OracleOptions, ProblemInstance};
use crate::poly::{BivariatePotential, BoundaryPoint, Disc, ParameterDomain};
use crate::quantize::QuantizeOptions;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid configuration: {0}")]
    Validation(String),
}

impl From<Error> for ConfigError {
    fn from(e: Error) -> Self {
        ConfigError::Validation(e.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub lower_left: Complex64,
    pub upper_right: Complex64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub excluded: Vec<Disc>,
    /// Radius of discs removed around the parameters where turning points collide.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exclude_singular: Option<f64>,
}

/// Overrides of numerical tolerances; absent entries keep the defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_tp: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_line: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_curve: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_quant: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_orc: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cell_n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_esc: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_trunc: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Row `j` holds the λ-coefficients of the coefficient of `z^j`.
    pub potential: Vec<Vec<Complex64>>,
    pub a: BoundaryPoint,
    pub b: BoundaryPoint,
    pub domain: DomainSpec,
    #[serde(default)]
    pub k: Vec<f64>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    /// Parameter value for the `graph` command.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Complex64>,
    /// Search rectangle for the eigenvalue oracle; defaults to the domain.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_region: Option<DomainSpec>,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

pub const DEFAULT_CELLS: usize = 41;

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let cfg: RunConfig = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn emit_config(cfg: &RunConfig) -> String {
    serde_json::to_string_pretty(cfg).expect("configuration is serializable")
}

fn positive(name: &str, v: Option<f64>) -> Result<(), ConfigError> {
    match v {
        Some(x) if !(x > 0.0 && x.is_finite()) => Err(ConfigError::Validation(format!("{name} must be positive"))),
        _ => Ok(()),
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.potential_checked()?;
        if self.a == self.b {
            return Err(ConfigError::Validation("boundary points a and b coincide".into()));
        }
        self.parameter_domain()?;
        if let Some(r) = &self.oracle_region {
            ParameterDomain::new(r.lower_left, r.upper_right)?;
        }
        if let Some(k) = self.k.iter().find(|k| !(**k > 0.0 && k.is_finite())) {
            return Err(ConfigError::Validation(format!("k = {k} is not positive")));
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("eps_tp", t.eps_tp),
            ("eps_line", t.eps_line),
            ("eps_curve", t.eps_curve),
            ("eps_quant", t.eps_quant),
            ("eps_orc", t.eps_orc),
            ("r_esc", t.r_esc),
            ("r_trunc", t.r_trunc),
        ] {
            positive(name, v)?;
        }
        if t.grid_n == Some(0) || t.cell_n == Some(0) {
            return Err(ConfigError::Validation("grid_n and cell_n must be positive".into()));
        }
        Ok(())
    }

    pub fn potential_checked(&self) -> Result<BivariatePotential, ConfigError> {
        if self.potential.is_empty() {
            return Err(ConfigError::Validation("empty coefficient matrix".into()));
        }
        Ok(BivariatePotential::new(self.potential.clone())?)
    }

    pub fn potential(&self) -> BivariatePotential {
        self.potential_checked().expect("validated configuration")
    }

    pub fn parameter_domain(&self) -> Result<ParameterDomain, ConfigError> {
        let d = &self.domain;
        let mut domain = ParameterDomain::new(d.lower_left, d.upper_right)?;
        domain.excluded = d.excluded.clone();
        if let Some(r) = d.exclude_singular {
            positive("exclude_singular", Some(r))?;
            domain.exclude_singular_points(&self.potential_checked()?, r)?;
        }
        domain.validate()?;
        Ok(domain)
    }

    pub fn oracle_domain(&self) -> Result<ParameterDomain, ConfigError> {
        match &self.oracle_region {
            Some(r) => Ok(ParameterDomain::new(r.lower_left, r.upper_right)?),
            None => Ok(ParameterDomain::new(self.domain.lower_left, self.domain.upper_right)?),
        }
    }

    pub fn curve_options(&self) -> CurveOptions {
        let mut o = CurveOptions::default();
        let t = &self.tolerances;
        if let Some(v) = t.eps_curve {
            o.zero_set.eps_curve = v;
        }
        if let Some(v) = t.grid_n {
            o.zero_set.grid_n = v;
        }
        if let Some(v) = t.eps_line {
            o.trace.on_line_rel = v;
        }
        if t.r_esc.is_some() {
            o.trace.r_esc = t.r_esc;
        }
        o
    }

    pub fn quantize_options(&self) -> QuantizeOptions {
        let mut o = QuantizeOptions::default();
        if let Some(v) = self.tolerances.eps_quant {
            o.eps_quant = v;
        }
        o
    }

    pub fn oracle_options(&self) -> OracleOptions {
        let mut o = OracleOptions::default();
        if let Some(v) = self.tolerances.eps_orc {
            o.eps_orc = v;
        }
        o
    }

    pub fn cells(&self) -> usize {
        self.tolerances.cell_n.unwrap_or(DEFAULT_CELLS)
    }

    pub fn problem(&self, k: f64) -> Result<ProblemInstance, Error> {
        let prob = ProblemInstance::new(self.potential(), self.a, self.b, k)?;
        // Defaults to twice the escape radius when only that is given.
        let r_trunc = self.tolerances.r_trunc.or(self.tolerances.r_esc.map(|r| 2.0 * r));
        Ok(match r_trunc {
            Some(r) => prob.with_truncation(r),
            None => prob,
        })
    }
}
