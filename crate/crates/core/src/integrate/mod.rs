//! Adaptive Dormand–Prince 5(4) integration of the profile system with dense
//! output and directional event location.
//!
//! Events are located on the continuous extension of each accepted step, so
//! the reported crossing is the first one in time among all armed events.
//! Reaching the rotation axis is detected at a small capture radius and the
//! remaining distance is covered along the osculating circle; the term
//! `(n-1)/r` makes the system unstable right at `r = 0`.

mod dopri;

use alloc::vec::Vec;
use core::fmt;

use crate::math;
use crate::profile_ode::{rhs, ProblemParams, ProfileState};
use crate::roots;

/// Which terminal condition an [`EventSpec`] watches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    /// `theta = 0`.
    ThetaZero,
    /// `theta = -pi`.
    ThetaMinusPi,
    /// `x = 0`.
    XZero,
    /// `r = 0` (detected at the capture radius).
    RZero,
    /// `cos(theta) = 0`: the curve stops being a graph over the `x`-axis.
    Vertical,
}

impl EventKind {
    pub fn name(self) -> &'static str {
        match self {
            EventKind::ThetaZero => "ThetaZero",
            EventKind::ThetaMinusPi => "ThetaMinusPi",
            EventKind::XZero => "XZero",
            EventKind::RZero => "RZero",
            EventKind::Vertical => "Vertical",
        }
    }

    fn value(self, y: &[f64; 3], axis_radius: f64) -> f64 {
        match self {
            EventKind::ThetaZero => y[2],
            EventKind::ThetaMinusPi => y[2] + math::PI,
            EventKind::XZero => y[0],
            EventKind::RZero => y[1] - axis_radius,
            EventKind::Vertical => math::cos(y[2]),
        }
    }
}

/// Crossing direction of the event function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Decreasing,
    Increasing,
    Any,
}

impl Direction {
    #[inline]
    fn crosses(self, before: f64, after: f64) -> bool {
        let down = before > 0.0 && after <= 0.0;
        let up = before < 0.0 && after >= 0.0;
        match self {
            Direction::Decreasing => down,
            Direction::Increasing => up,
            Direction::Any => down || up,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventSpec {
    pub kind: EventKind,
    pub direction: Direction,
    /// Crossings before this time are ignored.
    pub arming_time: f64,
    /// The event only arms once `|g|` has exceeded this level, so functions
    /// that start at zero report their first genuine return.
    pub arming_level: f64,
}

impl EventSpec {
    pub fn new(kind: EventKind, direction: Direction) -> Self {
        Self {
            kind,
            direction,
            arming_time: 0.0,
            arming_level: 0.0,
        }
    }

    pub fn armed_after(mut self, t: f64) -> Self {
        self.arming_time = t;
        self
    }

    pub fn with_arming_level(mut self, level: f64) -> Self {
        self.arming_level = level;
        self
    }

    /// The four first-return events of a shot from `(0, R)` with `theta = 0`.
    /// `ThetaZero` and `XZero` vanish at `t = 0`, so they are armed after ten
    /// initial steps and once the function has left the event tolerance.
    /// `theta` returns to zero from below when `R` exceeds the cylinder-like
    /// radius and from above when it is smaller, so both directions count.
    pub fn first_return_set(opts: &IntegratorOptions) -> [EventSpec; 4] {
        let arm = 10.0 * opts.initial_step;
        [
            EventSpec::new(EventKind::RZero, Direction::Decreasing),
            EventSpec::new(EventKind::ThetaMinusPi, Direction::Decreasing),
            EventSpec::new(EventKind::XZero, Direction::Decreasing)
                .armed_after(arm)
                .with_arming_level(opts.event_tol),
            EventSpec::new(EventKind::ThetaZero, Direction::Any)
                .armed_after(arm)
                .with_arming_level(opts.event_tol),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_time: f64,
    pub max_steps: usize,
    pub event_tol: f64,
    pub initial_step: f64,
    /// Radius at which an approach to the rotation axis is captured and
    /// continued along the osculating circle. Angle errors grow like
    /// `r^(1-n)` on the way in, so this should not be tiny.
    pub axis_radius: f64,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-11,
            abs_tol: 1e-13,
            max_time: 500.0,
            max_steps: 2_000_000,
            event_tol: 1e-13,
            initial_step: 1e-3,
            axis_radius: 0.05,
        }
    }
}

impl IntegratorOptions {
    /// Same options with both tolerances divided by `factor`.
    pub fn tightened(&self, factor: f64) -> Self {
        Self {
            rel_tol: self.rel_tol / factor,
            abs_tol: self.abs_tol / factor,
            event_tol: self.event_tol.min(self.abs_tol / factor),
            ..*self
        }
    }

    pub fn with_max_time(mut self, max_time: f64) -> Self {
        self.max_time = max_time;
        self
    }

    fn check(&self) -> Result<(), IntegrateError> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        let fields = [
            ("rel_tol", self.rel_tol),
            ("abs_tol", self.abs_tol),
            ("max_time", self.max_time),
            ("event_tol", self.event_tol),
            ("initial_step", self.initial_step),
        ];
        for (name, v) in fields {
            if !positive(v) {
                return Err(IntegrateError::InvalidOptions(name));
            }
        }
        if !(self.axis_radius >= 0.0) {
            return Err(IntegrateError::InvalidOptions("axis_radius"));
        }
        if self.max_steps == 0 {
            return Err(IntegrateError::InvalidOptions("max_steps"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TruncationReason {
    MaxTime,
    MaxSteps,
    /// The step size underflowed at time `t`.
    StepFailure {
        t: f64,
    },
}

impl TruncationReason {
    pub fn name(self) -> &'static str {
        match self {
            TruncationReason::MaxTime => "MaxTime",
            TruncationReason::MaxSteps => "MaxSteps",
            TruncationReason::StepFailure { .. } => "StepFailure",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventHit {
    pub kind: EventKind,
    pub t: f64,
    pub state: ProfileState,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Terminal {
    Event(EventHit),
    Truncated(TruncationReason),
}

#[derive(Debug, Clone, PartialEq)]
pub enum IntegrateError {
    InvalidInitialState { r: f64 },
    InvalidOptions(&'static str),
    OutOfRange { t: f64, start: f64, end: f64 },
}

impl fmt::Display for IntegrateError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IntegrateError::InvalidInitialState { r } => {
                write!(f, "initial radius must be positive (r={r})")
            }
            IntegrateError::InvalidOptions(name) => write!(f, "invalid integrator option {name}"),
            IntegrateError::OutOfRange { t, start, end } => {
                write!(f, "t={t} outside trajectory span [{start}, {end}]")
            }
        }
    }
}

impl core::error::Error for IntegrateError {}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

#[derive(Debug, Clone, PartialEq)]
enum Segment {
    /// One accepted Runge–Kutta step with its interpolation coefficients.
    Step {
        t0: f64,
        h: f64,
        coeffs: [[f64; 3]; 5],
    },
    /// Constant-curvature continuation from the capture radius to the axis.
    Arc {
        start: ProfileState,
        curvature: f64,
        length: f64,
    },
}

impl Segment {
    fn start(&self) -> f64 {
        match self {
            Segment::Step { t0, .. } => *t0,
            Segment::Arc { start, .. } => start.t,
        }
    }

    fn eval(&self, t: f64) -> [f64; 3] {
        match self {
            Segment::Step { t0, h, coeffs } => {
                let s = (t - t0) / h;
                let s1 = 1.0 - s;
                let mut y = [0.0; 3];
                for (i, yi) in y.iter_mut().enumerate() {
                    let [r1, r2, r3, r4, r5] = [
                        coeffs[0][i],
                        coeffs[1][i],
                        coeffs[2][i],
                        coeffs[3][i],
                        coeffs[4][i],
                    ];
                    *yi = r1 + s * (r2 + s1 * (r3 + s * (r4 + s1 * r5)));
                }
                y
            }
            Segment::Arc {
                start, curvature, ..
            } => arc_point(start, *curvature, t - start.t),
        }
    }
}

/// Point at arc length `s` along the circle of curvature `k` leaving `start`.
fn arc_point(start: &ProfileState, k: f64, s: f64) -> [f64; 3] {
    let half = 0.5 * k * s;
    let sinc = if half.abs() < 1e-8 {
        1.0 - half * half / 6.0
    } else {
        math::sin(half) / half
    };
    let mid = start.theta + half;
    [
        start.x + s * math::cos(mid) * sinc,
        start.r + s * math::sin(mid) * sinc,
        start.theta + k * s,
    ]
}

/// Dense solution of one integration run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    states: Vec<ProfileState>,
    segments: Vec<Segment>,
    terminal: Terminal,
    stats: Stats,
}

impl Trajectory {
    /// Accepted step endpoints, ending with the terminal state.
    pub fn states(&self) -> &[ProfileState] {
        &self.states
    }

    pub fn initial(&self) -> ProfileState {
        self.states[0]
    }

    pub fn last(&self) -> ProfileState {
        *self.states.last().expect("trajectory has an initial state")
    }

    pub fn terminal(&self) -> &Terminal {
        &self.terminal
    }

    pub fn event(&self) -> Option<&EventHit> {
        match &self.terminal {
            Terminal::Event(hit) => Some(hit),
            Terminal::Truncated(_) => None,
        }
    }

    pub fn stats(&self) -> Stats {
        self.stats
    }

    pub fn t_end(&self) -> f64 {
        self.last().t
    }

    /// Interpolated state at time `t` in `[0, t_end]`.
    pub fn evaluate(&self, t: f64) -> Result<ProfileState, IntegrateError> {
        let (start, end) = (self.states[0].t, self.t_end());
        if !(t >= start && t <= end) {
            return Err(IntegrateError::OutOfRange { t, start, end });
        }
        if t == start {
            return Ok(self.states[0]);
        }
        if t == end {
            return Ok(self.last());
        }
        let idx = self.segments.partition_point(|s| s.start() <= t);
        let seg = &self.segments[idx.saturating_sub(1)];
        Ok(ProfileState::from_vector(t, seg.eval(t)))
    }

    /// `count >= 2` states equally spaced in `t` over the whole span.
    pub fn sample(&self, count: usize) -> Vec<ProfileState> {
        let count = count.max(2);
        let end = self.t_end();
        (0..count)
            .map(|i| {
                let t = if i + 1 == count {
                    end
                } else {
                    end * i as f64 / (count - 1) as f64
                };
                self.evaluate(t).expect("sample time inside span")
            })
            .collect()
    }

    /// First time at or after `from` where `f` crosses zero in `direction`,
    /// located on the dense output to `|f| <= tol`.
    pub fn first_crossing(
        &self,
        from: f64,
        direction: Direction,
        tol: f64,
        f: impl Fn(&ProfileState) -> f64,
    ) -> Option<ProfileState> {
        let end = self.t_end();
        let g = |t: f64| f(&self.evaluate(t).expect("time inside span"));
        for (i, seg) in self.segments.iter().enumerate() {
            let seg_end = self.segments.get(i + 1).map_or(end, |s| s.start()).min(end);
            let lo = seg.start().max(from);
            if lo >= seg_end {
                continue;
            }
            const SUB: usize = 8;
            let mut a = lo;
            let mut ga = g(a);
            for j in 1..=SUB {
                let b = if j == SUB {
                    seg_end
                } else {
                    lo + (seg_end - lo) * j as f64 / SUB as f64
                };
                let gb = g(b);
                if direction.crosses(ga, gb) {
                    let t = roots::illinois(a, b, ga, gb, tol, g);
                    return self.evaluate(t).ok();
                }
                a = b;
                ga = gb;
            }
        }
        None
    }
}

struct ArmState {
    spec: EventSpec,
    level_reached: bool,
}

/// Integrates the profile system from `init` until the first armed event or
/// until `max_time` / `max_steps` is reached.
pub fn integrate(
    init: ProfileState,
    p: &ProblemParams,
    events: &[EventSpec],
    opts: &IntegratorOptions,
) -> Result<Trajectory, IntegrateError> {
    opts.check()?;
    if !(init.r > 0.0) || !init.x.is_finite() || !init.theta.is_finite() {
        return Err(IntegrateError::InvalidInitialState { r: init.r });
    }
    let f = |y: &[f64; 3]| -> Option<[f64; 3]> {
        let d = rhs(&ProfileState::from_vector(0.0, *y), p).ok()?;
        let out = [d.dx, d.dr, d.dtheta];
        out.iter().all(|v| v.is_finite()).then_some(out)
    };

    let mut stats = Stats::default();
    let mut t = init.t;
    let mut y = init.vector();
    let Some(mut k1) = f(&y) else {
        return Err(IntegrateError::InvalidInitialState { r: init.r });
    };
    stats.rhs_evals += 1;

    let mut arms: Vec<ArmState> = events
        .iter()
        .map(|spec| ArmState {
            spec: *spec,
            level_reached: spec.arming_level <= 0.0
                || spec.kind.value(&y, opts.axis_radius).abs() > spec.arming_level,
        })
        .collect();

    let mut states = Vec::with_capacity(256);
    states.push(init);
    let mut segments: Vec<Segment> = Vec::with_capacity(256);
    let t_stop = init.t + opts.max_time;
    let mut h = opts.initial_step.min(opts.max_time);
    let exponent = 1.0 / (dopri::ERROR_ORDER + 1.0);

    let terminal = loop {
        if stats.accepted >= opts.max_steps {
            break Terminal::Truncated(TruncationReason::MaxSteps);
        }
        if t >= t_stop {
            break Terminal::Truncated(TruncationReason::MaxTime);
        }
        let last_step = t + h >= t_stop;
        if last_step {
            h = t_stop - t;
        }
        if h <= 1e-14 * (1.0 + t.abs()) {
            break Terminal::Truncated(TruncationReason::StepFailure { t });
        }

        let attempt = dopri_step(&f, &y, &k1, h, opts);
        stats.rhs_evals += 6;
        let Some(step) = attempt else {
            stats.rejected += 1;
            h *= 0.25;
            continue;
        };
        if step.error > 1.0 {
            stats.rejected += 1;
            h *= (0.9 * math::powf(step.error, -exponent)).clamp(0.2, 1.0);
            continue;
        }
        stats.accepted += 1;

        let t1 = if last_step { t_stop } else { t + h };
        let seg = Segment::Step {
            t0: t,
            h,
            coeffs: dense_coefficients(&y, &step, h),
        };

        if let Some((idx, t_hit)) = locate_events(&mut arms, &seg, t, &y, t1, &step.y, opts) {
            let kind = arms[idx].spec.kind;
            let y_hit = seg.eval(t_hit);
            let hit_state = ProfileState::from_vector(t_hit, y_hit);
            segments.push(seg);
            let hit = if kind == EventKind::RZero {
                let hit = continue_to_axis(&hit_state, p);
                if let Some((curvature, length)) = hit.1 {
                    states.push(hit_state);
                    segments.push(Segment::Arc {
                        start: hit_state,
                        curvature,
                        length,
                    });
                }
                hit.0
            } else {
                hit_state
            };
            if hit.t > states.last().map_or(f64::NEG_INFINITY, |s| s.t) {
                states.push(hit);
            }
            break Terminal::Event(EventHit {
                kind,
                t: hit.t,
                state: hit,
            });
        }

        segments.push(seg);
        t = t1;
        y = step.y;
        k1 = step.k7;
        states.push(ProfileState::from_vector(t, y));

        let factor = if step.error == 0.0 {
            5.0
        } else {
            (0.9 * math::powf(step.error, -exponent)).clamp(0.2, 5.0)
        };
        h *= factor;
    };

    Ok(Trajectory {
        states,
        segments,
        terminal,
        stats,
    })
}

struct StepResult {
    y: [f64; 3],
    k: [[f64; 3]; 7],
    k7: [f64; 3],
    error: f64,
}

fn dopri_step(
    f: &impl Fn(&[f64; 3]) -> Option<[f64; 3]>,
    y: &[f64; 3],
    k1: &[f64; 3],
    h: f64,
    opts: &IntegratorOptions,
) -> Option<StepResult> {
    let mut k = [[0.0; 3]; 7];
    k[0] = *k1;
    let mut y_stage = *y;
    for s in 1..7 {
        for (i, ys) in y_stage.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (j, kj) in k.iter().enumerate().take(s) {
                acc += dopri::A[s][j] * kj[i];
            }
            *ys = y[i] + h * acc;
        }
        k[s] = f(&y_stage)?;
    }
    // stage 7 was evaluated at the fifth-order solution
    let y_new = y_stage;
    let mut sum = 0.0;
    for i in 0..3 {
        let mut e = 0.0;
        for (j, kj) in k.iter().enumerate() {
            e += dopri::E[j] * kj[i];
        }
        let scale = opts.abs_tol + opts.rel_tol * y[i].abs().max(y_new[i].abs());
        let ratio = h * e / scale;
        sum += ratio * ratio;
    }
    let error = math::sqrt(sum / 3.0);
    if !error.is_finite() {
        return None;
    }
    Some(StepResult {
        y: y_new,
        k7: k[6],
        k,
        error,
    })
}

fn dense_coefficients(y0: &[f64; 3], step: &StepResult, h: f64) -> [[f64; 3]; 5] {
    let mut c = [[0.0; 3]; 5];
    for i in 0..3 {
        let ydiff = step.y[i] - y0[i];
        let bspl = h * step.k[0][i] - ydiff;
        c[0][i] = y0[i];
        c[1][i] = ydiff;
        c[2][i] = bspl;
        c[3][i] = ydiff - h * step.k7[i] - bspl;
        let mut d = 0.0;
        for (j, kj) in step.k.iter().enumerate() {
            d += dopri::D[j] * kj[i];
        }
        c[4][i] = h * d;
    }
    c
}

/// Scans one accepted step for armed crossings and returns the index of the
/// earliest event with its located time. Arming state is updated in place.
fn locate_events(
    arms: &mut [ArmState],
    seg: &Segment,
    t0: f64,
    y0: &[f64; 3],
    t1: f64,
    y1: &[f64; 3],
    opts: &IntegratorOptions,
) -> Option<(usize, f64)> {
    const SUB: usize = 4;
    let mut best: Option<(usize, f64)> = None;
    for (idx, arm) in arms.iter_mut().enumerate() {
        let spec = arm.spec;
        let lo = t0.max(spec.arming_time);
        if lo > t1 {
            continue;
        }
        let g_at = |t: f64| -> f64 {
            let y = if t == t0 {
                *y0
            } else if t == t1 {
                *y1
            } else {
                seg.eval(t)
            };
            spec.kind.value(&y, opts.axis_radius)
        };
        let mut a = lo;
        let mut ga = g_at(a);
        let mut armed = arm.level_reached || ga.abs() > spec.arming_level;
        let mut found = None;
        for j in 1..=SUB {
            let b = if j == SUB {
                t1
            } else {
                lo + (t1 - lo) * j as f64 / SUB as f64
            };
            if b <= a {
                continue;
            }
            let gb = g_at(b);
            if armed && spec.direction.crosses(ga, gb) {
                let t = roots::illinois(a, b, ga, gb, opts.event_tol, g_at);
                found = Some(t);
                break;
            }
            armed = armed || gb.abs() > spec.arming_level;
            a = b;
            ga = gb;
        }
        arm.level_reached = armed;
        if let Some(t) = found {
            if best.is_none_or(|(_, tb)| t < tb) {
                best = Some((idx, t));
            }
        }
    }
    best
}

/// Continues from the capture radius to `r = 0` along the osculating circle.
/// Returns the state on the axis and, when a continuation exists, the arc's
/// curvature and length.
fn continue_to_axis(
    capture: &ProfileState,
    p: &ProblemParams,
) -> (ProfileState, Option<(f64, f64)>) {
    let Ok(d) = rhs(capture, p) else {
        return (*capture, None);
    };
    let k = d.dtheta;
    let (s0, c0) = (math::sin(capture.theta), math::cos(capture.theta));
    let length = if (k * capture.r).abs() < 1e-14 {
        (s0 < 0.0).then(|| capture.r / -s0)
    } else {
        // first s > 0 with r_c + (cos th_c - cos(th_c + k s)) / k = 0
        let target = c0 + k * capture.r;
        if target.abs() > 1.0 {
            None
        } else {
            let base = math::acos(target);
            let mut best: Option<f64> = None;
            for phi0 in [base, -base] {
                for turn in -2..=2 {
                    let phi = phi0 + math::TAU * turn as f64;
                    let s = (phi - capture.theta) / k;
                    if s > 0.0 && best.is_none_or(|b| s < b) {
                        best = Some(s);
                    }
                }
            }
            best
        }
    };
    match length {
        Some(length) if length.is_finite() => {
            let y = arc_point(capture, k, length);
            let state = ProfileState::new(capture.t + length, y[0], 0.0, y[2]);
            (state, Some((k, length)))
        }
        _ => (*capture, None),
    }
}
