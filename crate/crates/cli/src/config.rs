use std::path::PathBuf;

use fmin_core::shooting::{TorusSettings, DEFAULT_ON_AXIS_TOL};
use fmin_core::{IntegratorOptions, ProblemParams, WeightFunction};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DEFAULT_OUT: &str = "fmin-out";
pub const OUT_ENV: &str = "FMIN_SHOOT_OUT";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_time: f64,
    pub max_steps: usize,
    pub event_tol: f64,
    pub initial_step: f64,
    pub axis_radius: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        let o = IntegratorOptions::default();
        Self {
            rel_tol: o.rel_tol,
            abs_tol: o.abs_tol,
            max_time: o.max_time,
            max_steps: o.max_steps,
            event_tol: o.event_tol,
            initial_step: o.initial_step,
            axis_radius: o.axis_radius,
        }
    }
}

impl From<&IntegratorConfig> for IntegratorOptions {
    fn from(c: &IntegratorConfig) -> Self {
        IntegratorOptions {
            rel_tol: c.rel_tol,
            abs_tol: c.abs_tol,
            max_time: c.max_time,
            max_steps: c.max_steps,
            event_tol: c.event_tol,
            initial_step: c.initial_step,
            axis_radius: c.axis_radius,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShootingConfig {
    pub bracket: [f64; 2],
    pub on_axis_tol: f64,
    pub r_tol: f64,
    pub max_probes: usize,
    pub max_bisections: usize,
}

impl Default for ShootingConfig {
    fn default() -> Self {
        let s = TorusSettings::default();
        Self {
            bracket: [s.low_hint, s.high_hint],
            on_axis_tol: DEFAULT_ON_AXIS_TOL,
            r_tol: s.r_tol,
            max_probes: s.max_probes,
            max_bisections: s.max_bisections,
        }
    }
}

impl From<&ShootingConfig> for TorusSettings {
    fn from(c: &ShootingConfig) -> Self {
        TorusSettings {
            low_hint: c.bracket[0],
            high_hint: c.bracket[1],
            max_probes: c.max_probes,
            on_axis_tol: c.on_axis_tol,
            r_tol: c.r_tol,
            max_bisections: c.max_bisections,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExportConfig {
    /// Samples on the half-profile before mirroring.
    pub samples: usize,
    /// Azimuthal segments of the mesh.
    pub segments: usize,
}

impl Default for ExportConfig {
    fn default() -> Self {
        Self {
            samples: 4096,
            segments: 64,
        }
    }
}

/// Everything a run depends on. Written back into every report so a run can
/// be repeated from its own output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub n: u32,
    pub weight: String,
    pub integrator: IntegratorConfig,
    pub shooting: ShootingConfig,
    pub export: ExportConfig,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n: 2,
            weight: "constant 1".into(),
            integrator: IntegratorConfig::default(),
            shooting: ShootingConfig::default(),
            export: ExportConfig::default(),
            out: PathBuf::from(DEFAULT_OUT),
        }
    }
}

/// Validated form of a [`RunConfig`].
#[derive(Debug, Clone)]
pub struct Resolved {
    pub params: ProblemParams,
    pub options: IntegratorOptions,
    pub settings: TorusSettings,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::usage(format!("config: {e}")))
    }

    pub fn resolve(&self) -> Result<Resolved, CliError> {
        let weight = WeightFunction::parse(&self.weight)
            .map_err(|e| CliError::usage(format!("weight {:?}: {e}", self.weight)))?;
        let params =
            ProblemParams::new(self.n, weight).map_err(|e| CliError::usage(e.to_string()))?;
        let i = &self.integrator;
        let positive = [
            ("rel_tol", i.rel_tol),
            ("abs_tol", i.abs_tol),
            ("max_time", i.max_time),
            ("event_tol", i.event_tol),
            ("initial_step", i.initial_step),
            ("on_axis_tol", self.shooting.on_axis_tol),
            ("r_tol", self.shooting.r_tol),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(CliError::usage(format!("{name} must be positive, got {v}")));
            }
        }
        if !(i.axis_radius >= 0.0 && i.axis_radius.is_finite()) {
            return Err(CliError::usage(format!(
                "axis_radius must be non-negative, got {}",
                i.axis_radius
            )));
        }
        if i.max_steps == 0 {
            return Err(CliError::usage("max_steps must be at least 1"));
        }
        if self.export.samples < 3 || self.export.segments < 8 {
            return Err(CliError::usage(
                "export needs at least 3 samples and 8 segments",
            ));
        }
        let [lo, hi] = self.shooting.bracket;
        if !(lo > 0.0 && hi.is_finite() && lo <= hi) {
            return Err(CliError::usage(format!(
                "bracket must satisfy 0 < lo <= hi, got {lo},{hi}"
            )));
        }
        Ok(Resolved {
            params,
            options: IntegratorOptions::from(i),
            settings: TorusSettings::from(&self.shooting),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_json() {
        let c = RunConfig::default();
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(RunConfig::from_json(&text).unwrap(), c);
        c.resolve().unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = RunConfig::from_json(r#"{"n": 2, "colour": "red"}"#).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let err = RunConfig::from_json(r#"{"integrator": {"tol": 1}}"#).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn partial_config_fills_defaults() {
        let c = RunConfig::from_json(r#"{"n": 3, "shooting": {"r_tol": 1e-9}}"#).unwrap();
        assert_eq!(c.n, 3);
        assert_eq!(c.shooting.r_tol, 1e-9);
        assert_eq!(c.integrator, IntegratorConfig::default());
    }

    #[test]
    fn invalid_values_are_usage_errors() {
        let mut c = RunConfig::default();
        c.integrator.rel_tol = 0.0;
        assert_eq!(c.resolve().unwrap_err().exit_code(), 2);
        let c = RunConfig {
            weight: "quadratic".into(),
            ..RunConfig::default()
        };
        assert_eq!(c.resolve().unwrap_err().exit_code(), 2);
        let c = RunConfig {
            n: 1,
            ..RunConfig::default()
        };
        assert_eq!(c.resolve().unwrap_err().exit_code(), 2);
    }
}
