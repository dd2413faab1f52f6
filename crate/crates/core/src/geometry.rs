//! Closing a half-profile by reflection, curve checks on the closed profile,
//! and the surface of revolution for `n = 2`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::integrate::{EventKind, Terminal, Trajectory};
use crate::math;
use crate::profile_ode::{rhs, ProblemParams, ProfileState};

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileMeta {
    pub r_star: f64,
    pub n: u32,
    pub weight: String,
    pub closure_error: f64,
}

/// Closed polyline sampled uniformly in arc length. Point `i` sits at arc
/// length `i * spacing` (stored in `t`); the closing edge runs from the last
/// point back to the first, and `theta` decreases by `2 pi` over one loop.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedProfile {
    pub points: Vec<ProfileState>,
    pub spacing: f64,
    pub meta: ProfileMeta,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GeometryError {
    NotClosed { reason: String },
    TooFewPoints { count: usize },
    DimensionUnsupported { n: u32 },
    TooFewSegments { segments: usize },
}

impl fmt::Display for GeometryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeometryError::NotClosed { reason } => {
                write!(f, "half-profile does not close: {reason}")
            }
            GeometryError::TooFewPoints { count } => {
                write!(f, "need at least 4 points, got {count}")
            }
            GeometryError::DimensionUnsupported { n } => {
                write!(f, "meshing is only available for n=2 (n={n})")
            }
            GeometryError::TooFewSegments { segments } => {
                write!(f, "need at least 8 azimuthal segments, got {segments}")
            }
        }
    }
}

impl core::error::Error for GeometryError {}

/// Resamples a converged half-profile to `count` points and closes it with
/// its mirror image.
pub fn close_profile(
    half: &Trajectory,
    p: &ProblemParams,
    count: usize,
    on_axis_tol: f64,
) -> Result<ClosedProfile, GeometryError> {
    match half.terminal() {
        Terminal::Event(hit) if hit.kind == EventKind::ThetaMinusPi => {}
        Terminal::Event(hit) => {
            return Err(GeometryError::NotClosed {
                reason: format!(
                    "half-profile ends with {} instead of theta = -pi",
                    hit.kind.name()
                ),
            })
        }
        Terminal::Truncated(r) => {
            return Err(GeometryError::NotClosed {
                reason: format!("half-profile truncated ({})", r.name()),
            })
        }
    }
    if count < 3 {
        return Err(GeometryError::TooFewPoints { count });
    }
    let samples = half.sample(count);
    let meta = ProfileMeta {
        r_star: half.initial().r,
        n: p.n(),
        weight: format!("{}", p.weight()),
        closure_error: half.last().x.abs(),
    };
    close_samples(&samples, on_axis_tol, meta)
}

/// Mirrors half-profile samples, equally spaced in arc length from `(0, R)`
/// with `theta = 0` to a vertical point with `theta = -pi` on the `r`-axis.
/// Both seam points are shared with the mirror image.
pub fn close_samples(
    half: &[ProfileState],
    on_axis_tol: f64,
    meta: ProfileMeta,
) -> Result<ClosedProfile, GeometryError> {
    let count = half.len();
    if count < 3 {
        return Err(GeometryError::TooFewPoints { count });
    }
    let (first, last) = (half[0], half[count - 1]);
    let angle_tol = 1e-9;
    let checks = [
        (first.x.abs() <= on_axis_tol, "start is off the r-axis"),
        (first.theta.abs() <= angle_tol, "start is not horizontal"),
        (last.x.abs() <= on_axis_tol, "end is off the r-axis"),
        (
            (last.theta + math::PI).abs() <= angle_tol,
            "end is not vertical at -pi",
        ),
    ];
    if let Some((_, reason)) = checks.iter().find(|(ok, _)| !ok) {
        return Err(GeometryError::NotClosed {
            reason: String::from(*reason),
        });
    }
    let spacing = (last.t - first.t) / (count - 1) as f64;
    let mut points = Vec::with_capacity(2 * count - 2);
    points.extend(
        half.iter()
            .enumerate()
            .map(|(i, s)| ProfileState::new(i as f64 * spacing, s.x, s.r, s.theta)),
    );
    // seam points are pinned onto the axis so the mirror image is exact
    points[0].x = 0.0;
    points[count - 1].x = 0.0;
    for i in (1..count - 1).rev() {
        let s = half[i];
        let k = points.len();
        points.push(ProfileState::new(
            k as f64 * spacing,
            -s.x,
            s.r,
            -math::TAU - s.theta,
        ));
    }
    Ok(ClosedProfile {
        points,
        spacing,
        meta,
    })
}

impl ClosedProfile {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn min_r(&self) -> f64 {
        self.points
            .iter()
            .map(|s| s.r)
            .fold(f64::INFINITY, f64::min)
    }

    /// Total turning of the edge directions around the loop.
    pub fn turning(&self) -> f64 {
        let m = self.points.len();
        let dir = |i: usize| {
            let (a, b) = (self.points[i], self.points[(i + 1) % m]);
            math::atan2(b.r - a.r, b.x - a.x)
        };
        let mut total = 0.0;
        let mut prev = dir(m - 1);
        for i in 0..m {
            let cur = dir(i);
            let mut d = cur - prev;
            while d > math::PI {
                d -= math::TAU;
            }
            while d < -math::PI {
                d += math::TAU;
            }
            total += d;
            prev = cur;
        }
        total
    }

    /// Largest distance from the mirror image of any sample to the nearest
    /// sample.
    pub fn mirror_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for a in &self.points {
            let best = self
                .points
                .iter()
                .map(|b| math::hypot(b.x + a.x, b.r - a.r))
                .fold(f64::INFINITY, f64::min);
            worst = worst.max(best);
        }
        worst
    }
}

/// Fourth-order centered derivative of `theta` with respect to arc length.
/// On a closed profile the stencil wraps around, shifting `theta` by the
/// loop's total change; on an open polyline the two points at each end have
/// no value.
pub fn theta_derivative(thetas: &[f64], spacing: f64, closed: bool) -> Vec<Option<f64>> {
    let m = thetas.len();
    let loop_change = if closed && m > 1 {
        // one full turn, sign taken from the data
        if thetas[m - 1] < thetas[0] {
            -math::TAU
        } else {
            math::TAU
        }
    } else {
        0.0
    };
    let at = |i: isize| -> Option<f64> {
        if closed {
            let mi = m as isize;
            let wraps = i.div_euclid(mi);
            Some(thetas[i.rem_euclid(mi) as usize] + wraps as f64 * loop_change)
        } else if i >= 0 && (i as usize) < m {
            Some(thetas[i as usize])
        } else {
            None
        }
    };
    (0..m as isize)
        .map(|i| {
            let (a, b, c, d) = (at(i - 2)?, at(i - 1)?, at(i + 1)?, at(i + 2)?);
            Some((a - 8.0 * b + 8.0 * c - d) / (12.0 * spacing))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub max: f64,
    /// One entry per sample; `None` where the stencil does not fit.
    pub per_point: Vec<Option<f64>>,
}

fn residuals(
    points: &[ProfileState],
    spacing: f64,
    closed: bool,
    p: &ProblemParams,
) -> ResidualReport {
    let thetas: Vec<f64> = points.iter().map(|s| s.theta).collect();
    let derivs = theta_derivative(&thetas, spacing, closed);
    let per_point: Vec<Option<f64>> = points
        .iter()
        .zip(derivs)
        .map(|(s, d)| {
            let d = d?;
            let expected = rhs(s, p).map(|v| v.dtheta).unwrap_or(f64::NAN);
            Some(d - expected)
        })
        .collect();
    let max = per_point.iter().flatten().fold(0.0_f64, |m, v| {
        if v.is_nan() {
            f64::NAN
        } else {
            m.max(v.abs())
        }
    });
    ResidualReport { max, per_point }
}

/// Curvature residual `d theta/ds - theta'` at every sample of the loop.
pub fn profile_residual(cp: &ClosedProfile, p: &ProblemParams) -> ResidualReport {
    residuals(&cp.points, cp.spacing, true, p)
}

/// Same residual on an open arc sampled uniformly in arc length.
pub fn arc_residuals(points: &[ProfileState], spacing: f64, p: &ProblemParams) -> ResidualReport {
    residuals(points, spacing, false, p)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EmbeddingViolation {
    /// Segments `i -> i+1` and `j -> j+1` meet.
    SegmentsIntersect {
        i: usize,
        j: usize,
    },
    TouchesAxis {
        index: usize,
        r: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmbeddingCheck {
    pub embedded: bool,
    pub min_r: f64,
    pub violation: Option<EmbeddingViolation>,
}

fn orient(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> f64 {
    (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
}

fn on_segment(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> bool {
    c.0 >= a.0.min(b.0) && c.0 <= a.0.max(b.0) && c.1 >= a.1.min(b.1) && c.1 <= a.1.max(b.1)
}

/// Closed-segment intersection, touching and collinear overlap included.
pub fn segments_intersect(p1: (f64, f64), p2: (f64, f64), q1: (f64, f64), q2: (f64, f64)) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

/// Pairwise test of non-adjacent segments of the closed polyline, plus
/// `r > 0` at every sample.
pub fn check_embedded(cp: &ClosedProfile) -> Result<EmbeddingCheck, GeometryError> {
    let m = cp.points.len();
    if m < 4 {
        return Err(GeometryError::TooFewPoints { count: m });
    }
    let min_r = cp.min_r();
    if let Some((index, s)) = cp.points.iter().enumerate().find(|(_, s)| !(s.r > 0.0)) {
        return Ok(EmbeddingCheck {
            embedded: false,
            min_r,
            violation: Some(EmbeddingViolation::TouchesAxis { index, r: s.r }),
        });
    }
    let pt = |i: usize| (cp.points[i % m].x, cp.points[i % m].r);
    let boxes: Vec<[f64; 4]> = (0..m)
        .map(|i| {
            let (a, b) = (pt(i), pt(i + 1));
            [a.0.min(b.0), a.0.max(b.0), a.1.min(b.1), a.1.max(b.1)]
        })
        .collect();
    for i in 0..m {
        for j in (i + 2)..m {
            if i == 0 && j == m - 1 {
                continue;
            }
            let (bi, bj) = (&boxes[i], &boxes[j]);
            if bi[1] < bj[0] || bj[1] < bi[0] || bi[3] < bj[2] || bj[3] < bi[2] {
                continue;
            }
            if segments_intersect(pt(i), pt(i + 1), pt(j), pt(j + 1)) {
                return Ok(EmbeddingCheck {
                    embedded: false,
                    min_r,
                    violation: Some(EmbeddingViolation::SegmentsIntersect { i, j }),
                });
            }
        }
    }
    Ok(EmbeddingCheck {
        embedded: true,
        min_r,
        violation: None,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TorusMesh {
    pub vertices: Vec<[f64; 3]>,
    pub faces: Vec<[usize; 3]>,
    /// Number of profile samples; vertex `i * segments + j` sits on sample `i`.
    pub rings: usize,
    pub segments: usize,
}

/// Revolves the profile about the `x`-axis into a triangulated torus.
pub fn revolve(cp: &ClosedProfile, segments: usize) -> Result<TorusMesh, GeometryError> {
    if cp.meta.n != 2 {
        return Err(GeometryError::DimensionUnsupported { n: cp.meta.n });
    }
    if segments < 8 {
        return Err(GeometryError::TooFewSegments { segments });
    }
    let rings = cp.points.len();
    if rings < 4 {
        return Err(GeometryError::TooFewPoints { count: rings });
    }
    let trig: Vec<(f64, f64)> = (0..segments)
        .map(|j| {
            let psi = math::TAU * j as f64 / segments as f64;
            (math::cos(psi), math::sin(psi))
        })
        .collect();
    let mut vertices = Vec::with_capacity(rings * segments);
    for s in &cp.points {
        for &(c, sn) in &trig {
            vertices.push([s.x, s.r * c, s.r * sn]);
        }
    }
    let mut faces = Vec::with_capacity(2 * rings * segments);
    for i in 0..rings {
        let i1 = (i + 1) % rings;
        for j in 0..segments {
            let j1 = (j + 1) % segments;
            let a = i * segments + j;
            let b = i * segments + j1;
            let c = i1 * segments + j;
            let d = i1 * segments + j1;
            faces.push([a, c, d]);
            faces.push([a, d, b]);
        }
    }
    Ok(TorusMesh {
        vertices,
        faces,
        rings,
        segments,
    })
}

impl TorusMesh {
    fn directed_edges(&self) -> BTreeMap<(usize, usize), usize> {
        let mut edges = BTreeMap::new();
        for f in &self.faces {
            for k in 0..3 {
                *edges.entry((f[k], f[(k + 1) % 3])).or_insert(0) += 1;
            }
        }
        edges
    }

    pub fn edge_count(&self) -> usize {
        let mut undirected = BTreeMap::new();
        for &(a, b) in self.directed_edges().keys() {
            undirected.insert((a.min(b), a.max(b)), ());
        }
        undirected.len()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edge_count() as i64 + self.faces.len() as i64
    }

    /// Every edge is used once in each direction: closed and consistently
    /// oriented.
    pub fn is_closed_oriented(&self) -> bool {
        let edges = self.directed_edges();
        edges
            .iter()
            .all(|(&(a, b), &k)| k == 1 && edges.get(&(b, a)) == Some(&1))
    }
}
