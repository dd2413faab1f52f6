//! Numerical checks of the qualitative properties that drive the existence
//! argument: shape of the graph `x = g(r)`, the large-`R` sweep behavior, and
//! the comparison curve.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::{shoot, sweep_row, Classification, ShootError, SweepRow};
use crate::integrate::{Direction, IntegratorOptions, Trajectory};
use crate::math;
use crate::profile_ode::{graph_r_rhs, k_functional, l_curve_slope, l_curve_solve, ProblemParams};

/// Concavity of `x = g(r)` on one shot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConcavityCheck {
    /// Peak of `g` (first `theta = -pi/2`), if any.
    pub peak_r: Option<f64>,
    /// Second difference of `g` at the peak divided by the squared spacing.
    pub peak_second_difference: Option<f64>,
    /// First sampled radius past the peak where `g''` is negative.
    pub concave_from: Option<f64>,
    /// A later radius where `g''` turned non-negative again.
    pub violation_at: Option<f64>,
    pub samples: usize,
}

impl ConcavityCheck {
    pub fn holds(&self) -> bool {
        self.peak_second_difference.is_none_or(|d| d <= 0.0) && self.violation_at.is_none()
    }
}

/// Checks that the peak of `g` is a local maximum and that, on the branch
/// past the peak where `g >= 0` and `g' >= 0`, `g''` stays negative once it
/// is. `g''` comes from the graph equation with `g' = cot(theta)`, skipping
/// near-vertical samples. A sign change only counts once `g''` exceeds what
/// an error of `angle_error` in the tangent angle could produce.
pub fn concavity_check(
    traj: &Trajectory,
    p: &ProblemParams,
    samples: usize,
    event_tol: f64,
    angle_error: f64,
) -> ConcavityCheck {
    let mut out = ConcavityCheck {
        peak_r: None,
        peak_second_difference: None,
        concave_from: None,
        violation_at: None,
        samples: 0,
    };
    let Some(peak) = traj.first_crossing(0.0, Direction::Decreasing, event_tol, |s| {
        s.theta + math::FRAC_PI_2
    }) else {
        return out;
    };
    out.peak_r = Some(peak.r);

    let eta = 1e-3 * peak.r;
    let g_at = |level: f64| {
        traj.first_crossing(0.0, Direction::Decreasing, event_tol, |s| s.r - level)
            .map(|s| s.x)
    };
    if let (Some(above), Some(below)) = (g_at(peak.r + eta), g_at(peak.r - eta)) {
        out.peak_second_difference = Some((above - 2.0 * peak.x + below) / (eta * eta));
    }

    let (t0, t1) = (peak.t, traj.t_end());
    let count = samples.max(2);
    for i in 0..count {
        let t = t0 + (t1 - t0) * i as f64 / (count - 1) as f64;
        let Ok(s) = traj.evaluate(t) else { continue };
        let sin = math::sin(s.theta);
        if sin.abs() < 1e-3 || s.x < 0.0 || !(s.r > 0.0) {
            continue;
        }
        let g1 = math::cos(s.theta) / sin;
        if g1 < 0.0 {
            continue;
        }
        let Ok(rhs) = graph_r_rhs(s.r, s.x, g1, p) else {
            continue;
        };
        let slope = 1.0 + g1 * g1;
        let g2 = slope * rhs;
        let Ok(fp) = p.weight().fprime(s.r * s.r + s.x * s.x) else {
            continue;
        };
        // d(g'')/d(theta) through g' alone
        let noise =
            slope * slope * slope * (0.5 * s.r * fp - (p.n() - 1) as f64 / s.r).abs() * angle_error;
        out.samples += 1;
        if out.concave_from.is_none() {
            if g2 < 0.0 {
                out.concave_from = Some(s.r);
            }
        } else if g2 > noise && out.violation_at.is_none() {
            out.violation_at = Some(s.r);
        }
    }
    out
}

/// `l` sampled on `[0, x_max]`; returns the first `x` where it increases.
pub fn l_curve_increase(
    p: &ProblemParams,
    x_max: f64,
    samples: usize,
) -> Result<Option<f64>, ShootError> {
    let count = samples.max(2);
    let mut prev = l_curve_solve(0.0, p)?.l;
    for i in 1..count {
        let x = x_max * i as f64 / (count - 1) as f64;
        let pt = l_curve_solve(x, p)?;
        if pt.l > prev || l_curve_slope(&pt, p)? > 0.0 {
            return Ok(Some(x));
        }
        prev = pt.l;
    }
    Ok(None)
}

/// Worst values of `K` over a deterministic spread of points: the smallest
/// `K(u)` strictly below the curve and the largest `|K(l)|` on it.
pub fn k_sign_extremes(
    p: &ProblemParams,
    x_max: f64,
    samples: usize,
) -> Result<(f64, f64), ShootError> {
    // additive recurrence with the golden ratio gives well-spread points
    const PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (0.5_f64, 0.25_f64);
    let mut min_below = f64::INFINITY;
    let mut max_on = 0.0_f64;
    for _ in 0..samples {
        a = (a + PHI) % 1.0;
        b = (b + PHI * PHI) % 1.0;
        let x = x_max * a;
        let l = l_curve_solve(x, p)?.l;
        let u = l * (0.01 + 0.98 * b);
        min_below = min_below.min(k_functional(u, x, p)?);
        max_on = max_on.max(k_functional(l, x, p)?.abs());
    }
    Ok((min_below, max_on))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaReport {
    pub rows: Vec<SweepRow>,
    pub checks: Vec<LemmaCheck>,
    /// Smallest `r(t1)` over the sweep.
    pub delta: Option<f64>,
}

impl LemmaReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Sweep-based property suite on the given radii (sorted, large).
pub fn lemma_suite(
    p: &ProblemParams,
    radii: &[f64],
    opts: &IntegratorOptions,
    on_axis_tol: f64,
) -> Result<LemmaReport, ShootError> {
    let rows = radii
        .iter()
        .map(|&r| sweep_row(r, p, opts, on_axis_tol))
        .collect::<Result<Vec<_>, _>>()?;
    let mut checks = Vec::new();
    let mut check = |name, passed, detail: String| {
        checks.push(LemmaCheck {
            name,
            passed,
            detail,
        })
    };

    let crossed = rows
        .iter()
        .all(|r| r.classification == Classification::CrossedAxisEarly);
    check(
        "large R crosses early",
        crossed,
        format!("{} rows", rows.len()),
    );

    let thetas: Vec<Option<f64>> = rows.iter().map(|r| r.theta_at_level).collect();
    let band = thetas
        .iter()
        .all(|t| t.is_some_and(|t| t > -math::FRAC_PI_2 && t < 0.0));
    check("angle band at R - 1/R", band, format!("{thetas:?}"));

    let scaled: Vec<f64> = rows
        .iter()
        .filter_map(|r| r.g_at_level.map(|g| g * r.radius))
        .collect();
    let (lo, hi) = scaled
        .iter()
        .fold((f64::INFINITY, 0.0_f64), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let ratio = hi / lo;
    let ratio_ok = scaled.len() == rows.len() && lo > 0.0 && ratio <= 4.0;
    check("R g(R - 1/R) ratio", ratio_ok, format!("ratio {ratio}"));

    let peaks: Vec<Option<f64>> = rows.iter().map(|r| r.r_max_loc).collect();
    let increasing = peaks.iter().all(Option::is_some) && peaks.windows(2).all(|w| w[0] < w[1]);
    check("peak radius increasing", increasing, format!("{peaks:?}"));

    let delta = rows
        .iter()
        .map(|r| r.event_state.r)
        .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.min(v))));
    check(
        "r(t1) floor",
        delta.is_some_and(|d| d > 0.0),
        format!("delta {delta:?}"),
    );

    let mut concave = true;
    let mut details = String::new();
    for &radius in radii {
        let shot = shoot(radius, p, opts, on_axis_tol)?;
        let c = concavity_check(&shot.traj, p, 2000, opts.event_tol, 100.0 * opts.rel_tol);
        concave &= c.peak_r.is_some() && c.holds();
        details.push_str(&format!(
            "R={radius}: peak {:?} d2 {:?} violation {:?}; ",
            c.peak_r, c.peak_second_difference, c.violation_at
        ));
    }
    check("concavity of g", concave, details);

    let incr = l_curve_increase(p, 10.0, 1001)?;
    check(
        "l non-increasing",
        incr.is_none(),
        format!("first increase {incr:?}"),
    );

    let (k_below, k_on) = k_sign_extremes(p, 10.0, 100)?;
    check(
        "K sign",
        k_below > 0.0 && k_on <= 1e-10,
        format!("min below {k_below:e}, max on {k_on:e}"),
    );

    Ok(LemmaReport {
        rows,
        checks,
        delta,
    })
}
