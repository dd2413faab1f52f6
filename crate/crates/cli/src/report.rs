//! Run reports. Field order here is the key order in the JSON output.

use std::time::{Instant, SystemTime, UNIX_EPOCH};

use fmin_core::{IntegratorOptions, ProfileState};
use serde::Serialize;

use crate::config::RunConfig;

pub const TOOL: &str = "fmin-shoot";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config: RunConfig,
    pub summary: Summary,
    pub tolerances: Tolerances,
    /// Only present in the results log.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}

impl RunReport {
    pub fn new(command: &'static str, config: &RunConfig, summary: Summary) -> Self {
        let o = IntegratorOptions::from(&config.integrator);
        Self {
            tool: TOOL,
            version: VERSION,
            command,
            config: config.clone(),
            summary,
            tolerances: Tolerances {
                rel_tol: o.rel_tol,
                abs_tol: o.abs_tol,
                event_tol: o.event_tol,
                axis_radius: o.axis_radius,
                on_axis_tol: config.shooting.on_axis_tol,
                r_tol: config.shooting.r_tol,
            },
            timing: None,
        }
    }

    pub fn to_json_pretty(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// One line for the results log, with timing attached.
    pub fn to_log_line(&self, timing: Timing) -> String {
        let mut r = self.clone();
        r.timing = Some(timing);
        serde_json::to_string(&r).expect("report serializes")
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Tolerances {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub event_tol: f64,
    pub axis_radius: f64,
    pub on_axis_tol: f64,
    pub r_tol: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Timing {
    pub timestamp_unix_ms: u64,
    pub elapsed_ms: f64,
}

pub struct Stopwatch {
    started: SystemTime,
    clock: Instant,
}

impl Stopwatch {
    pub fn start() -> Self {
        Self {
            started: SystemTime::now(),
            clock: Instant::now(),
        }
    }

    pub fn stop(&self) -> Timing {
        Timing {
            timestamp_unix_ms: self
                .started
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_millis() as u64)
                .unwrap_or(0),
            elapsed_ms: self.clock.elapsed().as_secs_f64() * 1e3,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum Summary {
    Weight(WeightSummary),
    Shot(ShotSummary),
    Torus(Box<TorusSummary>),
    Sweep(SweepSummary),
    Oracle(OracleSummary),
}

#[derive(Debug, Clone, Serialize)]
pub struct WeightSummary {
    pub weight: String,
    pub admissible: bool,
    pub violations: Vec<String>,
    pub s_max: f64,
    pub samples: usize,
    pub min_fprime: [f64; 2],
    pub max_fprime: [f64; 2],
    pub min_fsecond: [f64; 2],
    pub max_fsecond: [f64; 2],
    pub max_inconsistency: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct StateRecord {
    pub t: f64,
    pub x: f64,
    pub r: f64,
    pub theta: f64,
}

impl From<ProfileState> for StateRecord {
    fn from(s: ProfileState) -> Self {
        Self {
            t: s.t,
            x: s.x,
            r: s.r,
            theta: s.theta,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ShotSummary {
    pub radius: f64,
    pub classification: &'static str,
    pub t1: f64,
    pub event_state: StateRecord,
    pub truncation: Option<&'static str>,
    pub residual: Option<f64>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TorusSummary {
    pub r_star: f64,
    pub closure_error: f64,
    pub bracket: [f64; 2],
    pub r0: f64,
    pub probes: usize,
    pub bisection_shots: usize,
    pub boundary_switches: Vec<f64>,
    pub half_length: f64,
    pub samples: usize,
    pub min_r: f64,
    pub turning: f64,
    pub max_residual: f64,
    pub embedded: bool,
    pub embedding_violation: Option<String>,
    pub mesh: Option<MeshSummary>,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MeshSummary {
    pub vertices: usize,
    pub faces: usize,
    pub euler_characteristic: i64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary {
    pub radii: Vec<f64>,
    pub classifications: Vec<&'static str>,
    pub errors: Vec<Option<String>>,
    pub delta: Option<f64>,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleCheck {
    pub suite: &'static str,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleSummary {
    pub passed: bool,
    pub checks: Vec<OracleCheck>,
}
