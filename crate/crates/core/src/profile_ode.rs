//! The profile-curve equations of a rotationally symmetric f-minimal
//! hypersurface, in arc-length form and as graphs over either axis, together
//! with the comparison curve `l(x)` and its sign functional `K`.
//!
//! The hypersurface is obtained by rotating `(x(t), r(t))` about the `x`-axis;
//! `theta` is the angle of the tangent with the `x`-axis and is never wrapped.

use core::fmt;

use crate::math;
use crate::roots;
use crate::weight::{WeightError, WeightFunction};

/// A point of the arc-length parameterized profile curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileState {
    pub t: f64,
    pub x: f64,
    pub r: f64,
    pub theta: f64,
}

impl ProfileState {
    pub const fn new(t: f64, x: f64, r: f64, theta: f64) -> Self {
        Self { t, x, r, theta }
    }

    /// The initial condition `x = 0`, `r = radius`, `theta = 0` at `t = 0`.
    pub const fn shot(radius: f64) -> Self {
        Self::new(0.0, 0.0, radius, 0.0)
    }

    /// Image under the symmetry `(x, theta) -> (-x, -pi - theta)`.
    pub fn reflected(&self) -> Self {
        Self::new(self.t, -self.x, self.r, -math::PI - self.theta)
    }

    pub(crate) fn vector(&self) -> [f64; 3] {
        [self.x, self.r, self.theta]
    }

    pub(crate) fn from_vector(t: f64, y: [f64; 3]) -> Self {
        Self::new(t, y[0], y[1], y[2])
    }
}

/// Time derivative of `(x, r, theta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivative {
    pub dx: f64,
    pub dr: f64,
    pub dtheta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum OdeError {
    RadiusNonPositive {
        r: f64,
    },
    Weight(WeightError),
    /// `G` has no sign change on the bracket implied by the declared bounds.
    BracketFailure {
        x: f64,
        low: f64,
        high: f64,
    },
    DimensionTooSmall {
        n: u32,
    },
}

impl fmt::Display for OdeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OdeError::RadiusNonPositive { r } => write!(f, "radius must be positive (r={r})"),
            OdeError::Weight(e) => write!(f, "{e}"),
            OdeError::BracketFailure { x, low, high } => write!(
                f,
                "l-curve equation has no sign change on [{low}, {high}] at x={x}"
            ),
            OdeError::DimensionTooSmall { n } => write!(f, "dimension n must be >= 2 (got {n})"),
        }
    }
}

impl core::error::Error for OdeError {}

impl From<WeightError> for OdeError {
    fn from(e: WeightError) -> Self {
        OdeError::Weight(e)
    }
}

/// Hypersurface dimension `n` and the weight.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemParams {
    n: u32,
    weight: WeightFunction,
}

impl ProblemParams {
    pub fn new(n: u32, weight: WeightFunction) -> Result<Self, OdeError> {
        if n < 2 {
            return Err(OdeError::DimensionTooSmall { n });
        }
        Ok(Self { n, weight })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn weight(&self) -> &WeightFunction {
        &self.weight
    }

    /// `n - 1` as a float.
    #[inline]
    pub(crate) fn nm1(&self) -> f64 {
        (self.n - 1) as f64
    }

    /// Radius `sqrt(2n)` of the sphere solution of the self-shrinker (`f' = 1`).
    pub fn sphere_radius(&self) -> f64 {
        math::sqrt(2.0 * self.n as f64)
    }

    /// Radius `sqrt(2(n-1))` of the cylinder solution of the self-shrinker.
    pub fn cylinder_radius(&self) -> f64 {
        math::sqrt(2.0 * self.nm1())
    }
}

/// Right-hand side of the arc-length system
/// `x' = cos th`, `r' = sin th`,
/// `th' = ((n-1)/r - r f'/2) cos th + (x/2) f' sin th`, `f' = f'(x^2 + r^2)`.
#[inline]
pub fn rhs(state: &ProfileState, p: &ProblemParams) -> Result<Derivative, OdeError> {
    let ProfileState { x, r, theta, .. } = *state;
    if !(r > 0.0) {
        return Err(OdeError::RadiusNonPositive { r });
    }
    let fp = p.weight.fprime(x * x + r * r)?;
    let (s, c) = (math::sin(theta), math::cos(theta));
    Ok(Derivative {
        dx: c,
        dr: s,
        dtheta: (p.nm1() / r - 0.5 * r * fp) * c + 0.5 * x * fp * s,
    })
}

/// Residual of the graph equation over the `x`-axis for `r = u(x)`:
/// `u''/(1+u'^2) - [(n-1)/u + (x u' - u) f'/2]`.
pub fn graph_x_residual(
    x: f64,
    u: f64,
    u1: f64,
    u2: f64,
    p: &ProblemParams,
) -> Result<f64, OdeError> {
    Ok(u2 / (1.0 + u1 * u1) - graph_x_rhs(x, u, u1, p)?)
}

/// Right side of the graph equation over the `x`-axis (`= d theta / dx`).
pub fn graph_x_rhs(x: f64, u: f64, u1: f64, p: &ProblemParams) -> Result<f64, OdeError> {
    let fp = p.weight.fprime(x * x + u * u)?;
    Ok(p.nm1() / u + 0.5 * (x * u1 - u) * fp)
}

/// Residual of the graph equation over the `r`-axis for `x = g(r)`:
/// `g''/(1+g'^2) - [(r f'/2 - (n-1)/r) g' - (f'/2) g]`.
pub fn graph_r_residual(
    r: f64,
    g: f64,
    g1: f64,
    g2: f64,
    p: &ProblemParams,
) -> Result<f64, OdeError> {
    Ok(g2 / (1.0 + g1 * g1) - graph_r_rhs(r, g, g1, p)?)
}

/// Right side of the graph equation over the `r`-axis.
pub fn graph_r_rhs(r: f64, g: f64, g1: f64, p: &ProblemParams) -> Result<f64, OdeError> {
    let fp = p.weight.fprime(r * r + g * g)?;
    Ok((0.5 * r * fp - p.nm1() / r) * g1 - 0.5 * fp * g)
}

/// A point on the comparison curve `2(n-1) - l^2 f'(x^2 + l^2) = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LCurvePoint {
    pub x: f64,
    pub l: f64,
}

/// `G(x, l) = l^2 - 2(n-1)/f'(x^2 + l^2)`.
pub fn l_curve_implicit(x: f64, l: f64, p: &ProblemParams) -> Result<f64, OdeError> {
    let fp = p.weight.fprime(x * x + l * l)?;
    Ok(l * l - 2.0 * p.nm1() / fp)
}

/// Solves for `l(x)` by bisection on the bracket
/// `[sqrt(2(n-1)/M), sqrt(2(n-1)/m)]` given by the declared bounds on `f'`.
pub fn l_curve_solve(x: f64, p: &ProblemParams) -> Result<LCurvePoint, OdeError> {
    let two_nm1 = 2.0 * p.nm1();
    let low = math::sqrt(two_nm1 / p.weight.upper_bound());
    let high = math::sqrt(two_nm1 / p.weight.lower_bound());
    // l^2 f' is increasing in l, so this is decreasing.
    let h =
        |l: f64| -> Result<f64, OdeError> { Ok(two_nm1 - l * l * p.weight.fprime(x * x + l * l)?) };
    let (h_low, h_high) = (h(low)?, h(high)?);
    // Where f' has saturated at a bound the root sits on the bracket end, up
    // to rounding in the bound itself.
    let rounding = 4.0 * f64::EPSILON * two_nm1;
    if h_low.abs() <= rounding {
        return Ok(LCurvePoint { x, l: low });
    }
    if h_high.abs() <= rounding {
        return Ok(LCurvePoint { x, l: high });
    }
    if h_low < 0.0 || h_high > 0.0 {
        // A constant weight has a degenerate bracket whose endpoints may miss the
        // root by an ulp; accept it when the residual is at rounding level.
        if (high - low).abs() <= 4.0 * f64::EPSILON * high {
            let l = if h_low.abs() <= h_high.abs() {
                low
            } else {
                high
            };
            if l_curve_implicit(x, l, p)?.abs() <= 1e-12 {
                return Ok(LCurvePoint { x, l });
            }
        }
        return Err(OdeError::BracketFailure { x, low, high });
    }
    let l = roots::bisect(low, high, h_low, h)?;
    Ok(LCurvePoint { x, l })
}

/// `dl/dx` from implicit differentiation of `G`; never positive for admissible weights.
pub fn l_curve_slope(pt: &LCurvePoint, p: &ProblemParams) -> Result<f64, OdeError> {
    let LCurvePoint { x, l } = *pt;
    let s = x * x + l * l;
    let fp = p.weight.fprime(s)?;
    let fpp = p.weight.fsecond(s)?;
    let nm1 = p.nm1();
    let g_x = 4.0 * nm1 * x * fpp / (fp * fp);
    let g_l = 2.0 * l + 4.0 * nm1 * l * fpp / (fp * fp);
    Ok(-g_x / g_l)
}

/// `K(u) = (n-1)/u - (u/2) f'(x^2 + u^2)`: positive below the l-curve, zero on it.
pub fn k_functional(u: f64, x: f64, p: &ProblemParams) -> Result<f64, OdeError> {
    if !(u > 0.0) {
        return Err(OdeError::RadiusNonPositive { r: u });
    }
    let fp = p.weight.fprime(x * x + u * u)?;
    Ok(p.nm1() / u - 0.5 * u * fp)
}
