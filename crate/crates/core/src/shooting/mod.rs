//! Single shots from `(0, R)`, bracketing and bisection of the torus radius,
//! radius sweeps and the horizontal-point search below the comparison curve.

pub mod lemmas;

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::fmt;

use crate::integrate::{
    integrate, Direction, EventKind, EventSpec, IntegrateError, IntegratorOptions, Terminal,
    Trajectory, TruncationReason,
};
use crate::math;
use crate::profile_ode::{l_curve_solve, OdeError, ProblemParams, ProfileState};

/// Default `|x|` below which a vertical point counts as lying on the `r`-axis.
pub const DEFAULT_ON_AXIS_TOL: f64 = 1e-10;

/// How a shot ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Classification {
    /// Vertical (`theta = -pi`) at positive `x`: `R` is below the torus radius.
    VerticalBeyondAxis,
    /// Reached `x = 0` with `theta` in `(-pi, 0)`: `R` is above it.
    CrossedAxisEarly,
    /// Vertical with `|x| <= on_axis_tol`.
    OnAxis,
    /// Reached the rotation axis.
    AxisHit,
    /// `theta` came back to zero.
    ThetaReturned,
    /// No event before the integrator stopped.
    Inconclusive,
}

impl Classification {
    pub fn name(self) -> &'static str {
        match self {
            Classification::VerticalBeyondAxis => "VerticalBeyondAxis",
            Classification::CrossedAxisEarly => "CrossedAxisEarly",
            Classification::OnAxis => "OnAxis",
            Classification::AxisHit => "AxisHit",
            Classification::ThetaReturned => "ThetaReturned",
            Classification::Inconclusive => "Inconclusive",
        }
    }

    /// `Some(true)` below the torus radius, `Some(false)` above, `None` when
    /// the shot says nothing about the side.
    pub fn side(self) -> Option<bool> {
        match self {
            Classification::VerticalBeyondAxis => Some(true),
            Classification::CrossedAxisEarly => Some(false),
            _ => None,
        }
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShotOutcome {
    pub radius: f64,
    pub classification: Classification,
    /// State at the terminal event, or the last state when truncated.
    pub event_state: ProfileState,
    pub truncation: Option<TruncationReason>,
    pub traj: Trajectory,
}

impl ShotOutcome {
    /// Signed miss distance used to steer bisection: `x` at the vertical
    /// point, or minus the remaining angle to `-pi` at an early axis crossing.
    pub fn residual(&self) -> Option<f64> {
        match self.classification {
            Classification::VerticalBeyondAxis | Classification::OnAxis => Some(self.event_state.x),
            Classification::CrossedAxisEarly => Some(-(self.event_state.theta + math::PI)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probe {
    pub radius: f64,
    pub classification: Classification,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ShootError {
    InvalidRadius {
        radius: f64,
    },
    Integrate(IntegrateError),
    Ode(OdeError),
    NoBracket {
        probes: Vec<Probe>,
    },
    /// Bisection met a shot that reaches the rotation axis, so the limit is
    /// a sphere rather than a torus.
    BracketCollapsedOnAxisHit {
        low: f64,
        high: f64,
        radius: f64,
    },
    /// A bisection shot ended without deciding the side.
    Undecided {
        radius: f64,
        classification: Classification,
    },
    NotConverged {
        closure_error: f64,
        low: f64,
        high: f64,
    },
    InvalidEpsilon {
        epsilon: f64,
        r0: f64,
    },
    NoHorizontalPoint {
        reason: &'static str,
        traj: Box<Trajectory>,
    },
}

impl fmt::Display for ShootError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ShootError::InvalidRadius { radius } => {
                write!(f, "shooting radius must be positive (R={radius})")
            }
            ShootError::Integrate(e) => write!(f, "integration failed: {e}"),
            ShootError::Ode(e) => write!(f, "{e}"),
            ShootError::NoBracket { probes } => {
                write!(f, "no sign change among {} probes:", probes.len())?;
                for pr in probes {
                    write!(f, " {}={}", pr.radius, pr.classification)?;
                }
                Ok(())
            }
            ShootError::BracketCollapsedOnAxisHit { low, high, radius } => write!(
                f,
                "shot at R={radius} inside [{low}, {high}] reaches the axis; bracket collapses onto a sphere"
            ),
            ShootError::Undecided {
                radius,
                classification,
            } => write!(f, "shot at R={radius} ended {classification} during bisection"),
            ShootError::NotConverged {
                closure_error,
                low,
                high,
            } => write!(
                f,
                "bracket [{low}, {high}] exhausted with closure error {closure_error:e}"
            ),
            ShootError::InvalidEpsilon { epsilon, r0 } => {
                write!(f, "epsilon must lie in (0, r0={r0}), got {epsilon}")
            }
            ShootError::NoHorizontalPoint { reason, traj } => {
                write!(f, "no horizontal point: {reason} at t={}", traj.t_end())
            }
        }
    }
}

impl core::error::Error for ShootError {}

impl From<IntegrateError> for ShootError {
    fn from(e: IntegrateError) -> Self {
        ShootError::Integrate(e)
    }
}

impl From<OdeError> for ShootError {
    fn from(e: OdeError) -> Self {
        ShootError::Ode(e)
    }
}

/// Shoots from `(0, R)` with zero tangent angle and classifies the first event.
pub fn shoot(
    radius: f64,
    p: &ProblemParams,
    opts: &IntegratorOptions,
    on_axis_tol: f64,
) -> Result<ShotOutcome, ShootError> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(ShootError::InvalidRadius { radius });
    }
    let events = EventSpec::first_return_set(opts);
    let traj = integrate(ProfileState::shot(radius), p, &events, opts)?;
    let (classification, event_state, truncation) = match traj.terminal() {
        Terminal::Event(hit) => {
            let s = hit.state;
            let class = match hit.kind {
                EventKind::RZero => Classification::AxisHit,
                EventKind::ThetaZero => Classification::ThetaReturned,
                EventKind::ThetaMinusPi if s.x.abs() <= on_axis_tol => Classification::OnAxis,
                EventKind::ThetaMinusPi if s.x > 0.0 => Classification::VerticalBeyondAxis,
                // vertical on the far side means the axis was crossed first
                EventKind::ThetaMinusPi => Classification::CrossedAxisEarly,
                EventKind::XZero if s.theta > -math::PI && s.theta < 0.0 => {
                    Classification::CrossedAxisEarly
                }
                _ => Classification::Inconclusive,
            };
            (class, s, None)
        }
        Terminal::Truncated(reason) => (Classification::Inconclusive, traj.last(), Some(*reason)),
    };
    Ok(ShotOutcome {
        radius,
        classification,
        event_state,
        truncation,
        traj,
    })
}

/// The comparison radius `r0 = l(0)` below which no torus shot can start.
pub fn r0(p: &ProblemParams) -> Result<f64, ShootError> {
    Ok(l_curve_solve(0.0, p)?.l)
}

/// Radii probed while bracketing: geometric steps of 1.5 from
/// `max(r0, low_hint)`, capped by `high_hint` (always probed last) and by
/// `max_probes`. Empty when the interval is empty.
pub fn probe_schedule(r0: f64, low_hint: f64, high_hint: f64, max_probes: usize) -> Vec<f64> {
    let start = r0.max(low_hint);
    let mut out = Vec::new();
    if !(start < high_hint) || !start.is_finite() || !high_hint.is_finite() {
        return out;
    }
    let mut r = start;
    while r < high_hint && out.len() < max_probes {
        out.push(r);
        r *= 1.5;
    }
    if out.len() < max_probes {
        out.push(high_hint);
    }
    out
}

/// First adjacent pair of decisive probes on opposite sides. Probes that do
/// not decide a side are skipped.
pub fn bracket_from_probes(probes: &[Probe]) -> Option<(f64, f64)> {
    let decisive: Vec<(f64, bool)> = probes
        .iter()
        .filter_map(|pr| pr.classification.side().map(|s| (pr.radius, s)))
        .collect();
    decisive
        .windows(2)
        .find(|w| w[0].1 != w[1].1)
        .map(|w| (w[0].0, w[1].0))
}

pub fn bracket_rstar(
    p: &ProblemParams,
    low_hint: f64,
    high_hint: f64,
    max_probes: usize,
    opts: &IntegratorOptions,
    on_axis_tol: f64,
) -> Result<((f64, f64), Vec<Probe>), ShootError> {
    let schedule = probe_schedule(r0(p)?, low_hint, high_hint, max_probes);
    let mut probes = Vec::with_capacity(schedule.len());
    for radius in schedule {
        let shot = shoot(radius, p, opts, on_axis_tol)?;
        probes.push(Probe {
            radius,
            classification: shot.classification,
        });
        if let Some(b) = bracket_from_probes(&probes) {
            return Ok((b, probes));
        }
    }
    Err(ShootError::NoBracket { probes })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusSettings {
    pub low_hint: f64,
    pub high_hint: f64,
    pub max_probes: usize,
    pub on_axis_tol: f64,
    /// Bisection stops once the bracket is this narrow.
    pub r_tol: f64,
    pub max_bisections: usize,
}

impl Default for TorusSettings {
    fn default() -> Self {
        Self {
            low_hint: 1.5,
            high_hint: 12.0,
            max_probes: 40,
            on_axis_tol: DEFAULT_ON_AXIS_TOL,
            r_tol: 1e-13,
            max_bisections: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TorusSolution {
    pub r_star: f64,
    /// Half-profile from `(0, R*)` to its vertical point on the `r`-axis.
    pub half_profile: Trajectory,
    pub closure_error: f64,
    pub bracket: (f64, f64),
    /// Bracketing probes followed by every bisection shot, in order.
    pub history: Vec<Probe>,
}

impl TorusSolution {
    /// Radii at which the classification switches side when the history is
    /// sorted by radius. A single entry means a clean boundary.
    pub fn boundary_switches(&self) -> Vec<f64> {
        boundary_switches(&self.history)
    }
}

pub fn boundary_switches(history: &[Probe]) -> Vec<f64> {
    let mut decisive: Vec<(f64, bool)> = history
        .iter()
        .filter_map(|pr| pr.classification.side().map(|s| (pr.radius, s)))
        .collect();
    decisive.sort_by(|a, b| a.0.total_cmp(&b.0));
    decisive
        .windows(2)
        .filter(|w| w[0].1 != w[1].1)
        .map(|w| 0.5 * (w[0].0 + w[1].0))
        .collect()
}

/// Brackets and bisects the shooting radius until the vertical point lands
/// on the `r`-axis.
pub fn find_torus(
    p: &ProblemParams,
    opts: &IntegratorOptions,
    settings: &TorusSettings,
) -> Result<TorusSolution, ShootError> {
    let ((a, b), probes) = bracket_rstar(
        p,
        settings.low_hint,
        settings.high_hint,
        settings.max_probes,
        opts,
        settings.on_axis_tol,
    )?;
    bisect_torus(p, opts, settings, (a, b), probes)
}

/// Bisection on a known bracket; `history` is extended with every shot.
pub fn bisect_torus(
    p: &ProblemParams,
    opts: &IntegratorOptions,
    settings: &TorusSettings,
    bracket: (f64, f64),
    mut history: Vec<Probe>,
) -> Result<TorusSolution, ShootError> {
    let tol = settings.on_axis_tol;
    let mut low = shoot(bracket.0.min(bracket.1), p, opts, tol)?;
    let mut high = shoot(bracket.0.max(bracket.1), p, opts, tol)?;
    for shot in [&low, &high] {
        if shot.classification == Classification::OnAxis {
            return Ok(solution(shot.clone(), (low.radius, high.radius), history));
        }
    }
    let (Some(low_side), Some(high_side)) = (low.classification.side(), high.classification.side())
    else {
        return Err(ShootError::NoBracket { probes: history });
    };
    if low_side == high_side {
        return Err(ShootError::NoBracket { probes: history });
    }

    for _ in 0..settings.max_bisections {
        if high.radius - low.radius <= settings.r_tol {
            break;
        }
        let mid = 0.5 * (low.radius + high.radius);
        if mid <= low.radius || mid >= high.radius {
            break;
        }
        let shot = shoot(mid, p, opts, tol)?;
        history.push(Probe {
            radius: mid,
            classification: shot.classification,
        });
        match shot.classification {
            Classification::OnAxis => {
                return Ok(solution(shot, (low.radius, high.radius), history));
            }
            Classification::AxisHit => {
                return Err(ShootError::BracketCollapsedOnAxisHit {
                    low: low.radius,
                    high: high.radius,
                    radius: mid,
                })
            }
            c => match c.side() {
                Some(s) if s == low_side => low = shot,
                Some(_) => high = shot,
                None => {
                    return Err(ShootError::Undecided {
                        radius: mid,
                        classification: c,
                    })
                }
            },
        }
    }

    // The vertical-point side carries the half-profile that ends at -pi.
    let (vertical, bracket) = if low_side {
        (low.clone(), (low.radius, high.radius))
    } else {
        (high.clone(), (low.radius, high.radius))
    };
    let closure_error = vertical.event_state.x.abs();
    if closure_error > tol {
        return Err(ShootError::NotConverged {
            closure_error,
            low: bracket.0,
            high: bracket.1,
        });
    }
    Ok(solution(vertical, bracket, history))
}

fn solution(shot: ShotOutcome, bracket: (f64, f64), history: Vec<Probe>) -> TorusSolution {
    TorusSolution {
        r_star: shot.radius,
        closure_error: shot.event_state.x.abs(),
        half_profile: shot.traj,
        bracket,
        history,
    }
}

/// One row of a radius sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub radius: f64,
    pub classification: Classification,
    /// State at the first event (or truncation).
    pub event_state: ProfileState,
    /// Tangent angle at the first downward crossing of `r = R - 1/R`.
    pub theta_at_level: Option<f64>,
    /// `x` at that crossing, i.e. the graph `x = g(r)` there.
    pub g_at_level: Option<f64>,
    /// Radius where `g` peaks, the first point with `theta = -pi/2`.
    pub r_max_loc: Option<f64>,
    pub g_max: Option<f64>,
}

pub fn sweep_row(
    radius: f64,
    p: &ProblemParams,
    opts: &IntegratorOptions,
    on_axis_tol: f64,
) -> Result<SweepRow, ShootError> {
    let shot = shoot(radius, p, opts, on_axis_tol)?;
    let traj = &shot.traj;
    let level = radius - 1.0 / radius;
    let at_level = (level > 0.0)
        .then(|| traj.first_crossing(0.0, Direction::Decreasing, opts.event_tol, |s| s.r - level))
        .flatten();
    let peak = traj.first_crossing(0.0, Direction::Decreasing, opts.event_tol, |s| {
        s.theta + math::FRAC_PI_2
    });
    Ok(SweepRow {
        radius,
        classification: shot.classification,
        event_state: shot.event_state,
        theta_at_level: at_level.map(|s| s.theta),
        g_at_level: at_level.map(|s| s.x),
        r_max_loc: peak.map(|s| s.r),
        g_max: peak.map(|s| s.x),
    })
}

/// Sequential sweep in input order; each row carries its own result.
pub fn sweep(
    p: &ProblemParams,
    radii: &[f64],
    opts: &IntegratorOptions,
    on_axis_tol: f64,
) -> Vec<Result<SweepRow, ShootError>> {
    radii
        .iter()
        .map(|&r| sweep_row(r, p, opts, on_axis_tol))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct HorizontalPoint {
    pub x0: f64,
    pub state: ProfileState,
    pub traj: Trajectory,
}

/// Starts at `(0, r0 - epsilon)` and follows the curve as a graph over the
/// `x`-axis until its slope returns to zero from above.
pub fn find_horizontal_point(
    epsilon: f64,
    p: &ProblemParams,
    opts: &IntegratorOptions,
) -> Result<HorizontalPoint, ShootError> {
    let r0 = r0(p)?;
    if !(epsilon > 0.0 && epsilon < r0) {
        return Err(ShootError::InvalidEpsilon { epsilon, r0 });
    }
    let arm = 10.0 * opts.initial_step;
    let events = [
        EventSpec::new(EventKind::ThetaZero, Direction::Decreasing)
            .armed_after(arm)
            .with_arming_level(opts.event_tol),
        EventSpec::new(EventKind::Vertical, Direction::Decreasing),
        EventSpec::new(EventKind::XZero, Direction::Decreasing)
            .armed_after(arm)
            .with_arming_level(opts.event_tol),
        EventSpec::new(EventKind::RZero, Direction::Decreasing),
    ];
    let traj = integrate(ProfileState::shot(r0 - epsilon), p, &events, opts)?;
    let reason = match traj.terminal() {
        Terminal::Event(hit) => match hit.kind {
            EventKind::ThetaZero if hit.state.x > 0.0 => {
                return Ok(HorizontalPoint {
                    x0: hit.state.x,
                    state: hit.state,
                    traj,
                })
            }
            EventKind::ThetaZero => "slope returned to zero at non-positive x",
            EventKind::Vertical => "curve turned vertical before any horizontal point",
            EventKind::XZero => "curve came back to x = 0",
            _ => "curve reached the rotation axis",
        },
        Terminal::Truncated(_) => "integration stopped before any horizontal point",
    };
    Err(ShootError::NoHorizontalPoint {
        reason,
        traj: Box::new(traj),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weight::WeightFunction;

    fn shrinker(n: u32) -> ProblemParams {
        ProblemParams::new(n, WeightFunction::self_shrinker()).unwrap()
    }

    fn saturating() -> ProblemParams {
        ProblemParams::new(2, WeightFunction::saturating(1.0, 2.0, 1.0).unwrap()).unwrap()
    }

    fn opts() -> IntegratorOptions {
        IntegratorOptions::default()
    }

    #[test]
    fn sphere_shot_hits_axis() {
        let s = shoot(2.0, &shrinker(2), &opts(), DEFAULT_ON_AXIS_TOL).unwrap();
        assert_eq!(s.classification, Classification::AxisHit);
        assert!((s.event_state.x - 2.0).abs() < 1e-6);
        assert!((s.event_state.theta + math::FRAC_PI_2).abs() < 1e-6);
        assert!((s.event_state.t - math::PI).abs() < 1e-6);
    }

    #[test]
    fn cylinder_shot_is_inconclusive() {
        let o = opts().with_max_time(10.0);
        let s = shoot(2f64.sqrt(), &shrinker(2), &o, DEFAULT_ON_AXIS_TOL).unwrap();
        assert_eq!(s.classification, Classification::Inconclusive);
        assert_eq!(s.truncation, Some(TruncationReason::MaxTime));
    }

    #[test]
    fn large_radius_crosses_early() {
        let s = shoot(10.0, &shrinker(2), &opts(), DEFAULT_ON_AXIS_TOL).unwrap();
        assert_eq!(s.classification, Classification::CrossedAxisEarly);
        assert!(s.event_state.r > 0.5);
        assert!(s.residual().unwrap() < 0.0);
    }

    #[test]
    fn classes_on_either_side_of_the_torus() {
        let p = shrinker(2);
        let below = shoot(3.0, &p, &opts(), DEFAULT_ON_AXIS_TOL).unwrap();
        assert_eq!(below.classification, Classification::VerticalBeyondAxis);
        assert!(below.residual().unwrap() > 0.0);
        let above = shoot(3.5, &p, &opts(), DEFAULT_ON_AXIS_TOL).unwrap();
        assert_eq!(above.classification, Classification::CrossedAxisEarly);
        let inside = shoot(1.5, &p, &opts(), DEFAULT_ON_AXIS_TOL).unwrap();
        assert_eq!(inside.classification, Classification::ThetaReturned);
    }

    #[test]
    fn invalid_radius() {
        assert_eq!(
            shoot(-1.0, &shrinker(2), &opts(), DEFAULT_ON_AXIS_TOL),
            Err(ShootError::InvalidRadius { radius: -1.0 })
        );
    }

    #[test]
    fn schedule_and_bracket() {
        assert_eq!(probe_schedule(1.0, 2.0, 2.0, 10), Vec::<f64>::new());
        assert_eq!(probe_schedule(1.0, 2.0, 4.0, 10), vec![2.0, 3.0, 4.0]);
        assert_eq!(probe_schedule(2.5, 2.0, 4.0, 10), vec![2.5, 3.75, 4.0]);
        assert_eq!(probe_schedule(1.0, 2.0, 100.0, 2), vec![2.0, 3.0]);

        use Classification::*;
        let probes = [
            Probe {
                radius: 1.0,
                classification: ThetaReturned,
            },
            Probe {
                radius: 2.0,
                classification: VerticalBeyondAxis,
            },
            Probe {
                radius: 3.0,
                classification: AxisHit,
            },
            Probe {
                radius: 4.0,
                classification: CrossedAxisEarly,
            },
        ];
        assert_eq!(bracket_from_probes(&probes), Some((2.0, 4.0)));
        assert_eq!(bracket_from_probes(&probes[..3]), None);
    }

    #[test]
    fn degenerate_hints_give_no_bracket() {
        let err = bracket_rstar(&shrinker(2), 2.0, 2.0, 40, &opts(), DEFAULT_ON_AXIS_TOL);
        assert!(matches!(err, Err(ShootError::NoBracket { .. })));
    }

    #[test]
    fn bracket_starts_at_comparison_radius() {
        let p = shrinker(2);
        let ((lo, hi), probes) =
            bracket_rstar(&p, 1.0, 12.0, 40, &opts(), DEFAULT_ON_AXIS_TOL).unwrap();
        assert_eq!(probes[0].radius, 2f64.sqrt());
        assert!(lo > 2.0 && lo < hi);
    }

    #[test]
    fn boundary_switch_detection() {
        use Classification::*;
        let h = [
            Probe {
                radius: 3.0,
                classification: CrossedAxisEarly,
            },
            Probe {
                radius: 1.0,
                classification: VerticalBeyondAxis,
            },
            Probe {
                radius: 2.0,
                classification: VerticalBeyondAxis,
            },
        ];
        assert_eq!(boundary_switches(&h), vec![2.5]);
        let mut h2 = h.to_vec();
        h2.push(Probe {
            radius: 1.5,
            classification: CrossedAxisEarly,
        });
        assert_eq!(boundary_switches(&h2).len(), 3);
    }

    #[test]
    fn horizontal_point_precondition() {
        let p = saturating();
        let r0 = r0(&p).unwrap();
        assert!(matches!(
            find_horizontal_point(r0, &p, &opts()),
            Err(ShootError::InvalidEpsilon { .. })
        ));
        assert!(matches!(
            find_horizontal_point(0.0, &p, &opts()),
            Err(ShootError::InvalidEpsilon { .. })
        ));
    }

    #[test]
    fn horizontal_point_saturating() {
        let hp = find_horizontal_point(0.01, &saturating(), &opts()).unwrap();
        assert!(hp.x0 > 0.0 && hp.x0.is_finite());
        assert!(hp.state.theta.abs() < 1e-10);
    }

    #[test]
    fn shots_are_bit_stable() {
        let p = saturating();
        let a = shoot(2.3, &p, &opts(), DEFAULT_ON_AXIS_TOL).unwrap();
        let b = shoot(2.3, &p, &opts(), DEFAULT_ON_AXIS_TOL).unwrap();
        assert_eq!(a, b);
    }
}
