//! Exact-solution and property suites behind the `oracle` subcommand.

use std::f64::consts::PI;

use fmin_core::shooting::lemmas::lemma_suite;
use fmin_core::{
    integrate, shoot, Classification, IntegratorOptions, ProblemParams, ProfileState,
    WeightFunction,
};

use crate::error::CliError;
use crate::report::OracleCheck;

pub const SAMPLES: usize = 10_000;
pub const LEMMA_RADII: [f64; 4] = [10.0, 20.0, 40.0, 80.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    Sphere,
    Cylinder,
    Lemmas,
    All,
}

fn check(
    suite: &'static str,
    name: impl Into<String>,
    passed: bool,
    detail: String,
) -> OracleCheck {
    OracleCheck {
        suite,
        name: name.into(),
        passed,
        detail,
    }
}

fn shrinker(n: u32) -> Result<ProblemParams, CliError> {
    ProblemParams::new(n, WeightFunction::self_shrinker())
        .map_err(|e| CliError::usage(e.to_string()))
}

/// Shot from the sphere radius: stays on the sphere and lands on the axis.
pub fn sphere(
    n: u32,
    opts: &IntegratorOptions,
    on_axis_tol: f64,
) -> Result<Vec<OracleCheck>, CliError> {
    let p = shrinker(n)?;
    let radius = (2.0 * n as f64).sqrt();
    let shot = shoot(radius, &p, opts, on_axis_tol)?;
    let deviation = shot
        .traj
        .sample(SAMPLES)
        .iter()
        .chain(shot.traj.states())
        .map(|s| (s.x * s.x + s.r * s.r - 2.0 * n as f64).abs())
        .fold(0.0, f64::max);
    let e = shot.event_state;
    let t_exact = 0.5 * PI * radius;
    Ok(vec![
        check(
            "sphere",
            format!("n={n} stays on x^2+r^2=2n"),
            deviation <= 1e-8,
            format!("max deviation {deviation:e}"),
        ),
        check(
            "sphere",
            format!("n={n} lands on the axis"),
            shot.classification == Classification::AxisHit
                && (e.x - radius).abs() <= 1e-6
                && (e.theta + 0.5 * PI).abs() <= 1e-6
                && (e.t - t_exact).abs() <= 1e-6,
            format!(
                "{} at x={} theta={} t={} (expected t={t_exact})",
                shot.classification, e.x, e.theta, e.t
            ),
        ),
    ])
}

/// Shot from the cylinder radius stays on the cylinder for `t` in `[0, 10]`.
pub fn cylinder(n: u32, opts: &IntegratorOptions) -> Result<Vec<OracleCheck>, CliError> {
    let p = shrinker(n)?;
    let radius = p.cylinder_radius();
    let traj = integrate(
        ProfileState::shot(radius),
        &p,
        &[],
        &opts.with_max_time(10.0),
    )?;
    let (mut dr, mut dtheta) = (0.0_f64, 0.0_f64);
    for s in traj.sample(SAMPLES).iter().chain(traj.states()) {
        dr = dr.max((s.r - radius).abs());
        dtheta = dtheta.max(s.theta.abs());
    }
    Ok(vec![check(
        "cylinder",
        format!("n={n} stays at r={radius}"),
        dr <= 1e-9 && dtheta <= 1e-9 && traj.t_end() == 10.0,
        format!(
            "max |r-R| {dr:e}, max |theta| {dtheta:e}, t_end {}",
            traj.t_end()
        ),
    )])
}

pub fn lemmas(
    p: &ProblemParams,
    opts: &IntegratorOptions,
    on_axis_tol: f64,
) -> Result<Vec<OracleCheck>, CliError> {
    let report = lemma_suite(p, &LEMMA_RADII, opts, on_axis_tol)?;
    Ok(report
        .checks
        .into_iter()
        .map(|c| check("lemmas", c.name, c.passed, c.detail))
        .collect())
}
