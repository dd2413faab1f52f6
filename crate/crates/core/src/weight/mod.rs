//! Radial weight functions `f(s)`, `s = |x|^2`, for the conformal metric.
//!
//! Only `f'` and `f''` ever enter the profile equations, so a weight is
//! described by its derivative. Admissible weights are convex (`f'' >= 0`) with
//! `0 < m <= f' <= M`; [`WeightFunction::validate`] checks this by sampling.

mod expr;

pub use expr::{Expr, Func, ParseError};

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::math;

/// Closed-form description of `f'`.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightKind {
    /// `f'(s) = c`. The classical self-shrinker is `c = 1`.
    Constant(f64),
    /// `f'(s) = upper - (upper - lower) * exp(-rate * s)`.
    Saturating { lower: f64, upper: f64, rate: f64 },
    /// `f'(s)` given by an expression; `f''` is its symbolic derivative.
    Expression { fprime: Expr, fsecond: Expr },
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightFunction {
    kind: WeightKind,
    lower_bound: f64,
    upper_bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum WeightError {
    Parse(ParseError),
    /// Declared bounds violate `0 < m <= M`.
    Bounds {
        lower: f64,
        upper: f64,
    },
    InvalidParameter {
        name: &'static str,
        value: f64,
    },
    /// `f'` or `f''` evaluated to NaN or infinity.
    NonFinite {
        s: f64,
    },
}

impl fmt::Display for WeightError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightError::Parse(e) => write!(f, "{e}"),
            WeightError::Bounds { lower, upper } => {
                write!(
                    f,
                    "bounds must satisfy 0 < m <= M (got m={lower}, M={upper})"
                )
            }
            WeightError::InvalidParameter { name, value } => {
                write!(f, "invalid weight parameter {name}={value}")
            }
            WeightError::NonFinite { s } => write!(f, "weight evaluation is not finite at s={s}"),
        }
    }
}

impl core::error::Error for WeightError {}

impl From<ParseError> for WeightError {
    fn from(e: ParseError) -> Self {
        WeightError::Parse(e)
    }
}

fn check_bounds(lower: f64, upper: f64) -> Result<(), WeightError> {
    if !(lower.is_finite() && upper.is_finite() && lower > 0.0 && upper >= lower) {
        return Err(WeightError::Bounds { lower, upper });
    }
    Ok(())
}

impl WeightFunction {
    pub fn constant(c: f64) -> Result<Self, WeightError> {
        check_bounds(c, c)?;
        Ok(Self {
            kind: WeightKind::Constant(c),
            lower_bound: c,
            upper_bound: c,
        })
    }

    /// The self-shrinker weight `f(s) = s`.
    pub fn self_shrinker() -> Self {
        Self::constant(1.0).expect("1 is a valid constant weight")
    }

    pub fn saturating(lower: f64, upper: f64, rate: f64) -> Result<Self, WeightError> {
        check_bounds(lower, upper)?;
        if !(rate.is_finite() && rate > 0.0) {
            return Err(WeightError::InvalidParameter {
                name: "k",
                value: rate,
            });
        }
        Ok(Self {
            kind: WeightKind::Saturating { lower, upper, rate },
            lower_bound: lower,
            upper_bound: upper,
        })
    }

    /// Builds a weight from an expression for `f'` with declared bounds `m`, `M`.
    pub fn expression(fprime: Expr, lower: f64, upper: f64) -> Result<Self, WeightError> {
        check_bounds(lower, upper)?;
        let fsecond = fprime.derivative();
        Ok(Self {
            kind: WeightKind::Expression { fprime, fsecond },
            lower_bound: lower,
            upper_bound: upper,
        })
    }

    /// Parses `constant <c>`, `saturating <m> <M> <k>` or
    /// `expr "<expression>" m=<m> M=<M>`.
    pub fn parse(text: &str) -> Result<Self, WeightError> {
        SpecParser { src: text, pos: 0 }.weight()
    }

    pub fn kind(&self) -> &WeightKind {
        &self.kind
    }

    /// Declared lower bound `m` on `f'`.
    pub fn lower_bound(&self) -> f64 {
        self.lower_bound
    }

    /// Declared upper bound `M` on `f'`.
    pub fn upper_bound(&self) -> f64 {
        self.upper_bound
    }

    /// `Some(c)` when `f' = c` identically.
    pub fn constant_value(&self) -> Option<f64> {
        match self.kind {
            WeightKind::Constant(c) => Some(c),
            _ => None,
        }
    }

    #[inline]
    pub fn fprime(&self, s: f64) -> Result<f64, WeightError> {
        let v = match &self.kind {
            WeightKind::Constant(c) => *c,
            WeightKind::Saturating { lower, upper, rate } => {
                upper - (upper - lower) * math::exp(-rate * s)
            }
            WeightKind::Expression { fprime, .. } => fprime.eval(s),
        };
        finite(v, s)
    }

    #[inline]
    pub fn fsecond(&self, s: f64) -> Result<f64, WeightError> {
        let v = match &self.kind {
            WeightKind::Constant(_) => 0.0,
            WeightKind::Saturating { lower, upper, rate } => {
                rate * (upper - lower) * math::exp(-rate * s)
            }
            WeightKind::Expression { fsecond, .. } => fsecond.eval(s),
        };
        finite(v, s)
    }

    /// Samples `[0, s_max]` on `samples` evenly spaced points and checks the
    /// admissibility hypotheses.
    pub fn validate(&self, s_max: f64, samples: usize) -> ValidationReport {
        validate(self, s_max, samples)
    }
}

#[inline]
fn finite(v: f64, s: f64) -> Result<f64, WeightError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(WeightError::NonFinite { s })
    }
}

impl fmt::Display for WeightFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            WeightKind::Constant(c) => write!(f, "constant {c:?}"),
            WeightKind::Saturating { lower, upper, rate } => {
                write!(f, "saturating {lower:?} {upper:?} {rate:?}")
            }
            WeightKind::Expression { fprime, .. } => write!(
                f,
                "expr \"{fprime}\" m={:?} M={:?}",
                self.lower_bound, self.upper_bound
            ),
        }
    }
}

impl FromStr for WeightFunction {
    type Err = WeightError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

struct SpecParser<'a> {
    src: &'a str,
    pos: usize,
}

impl SpecParser<'_> {
    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn word(&mut self) -> (usize, &str) {
        self.skip_ws();
        let start = self.pos;
        let rest = &self.src[start..];
        let len = rest
            .find(|c: char| c.is_whitespace() || c == '=' || c == '"')
            .unwrap_or(rest.len());
        self.pos += len;
        (start, &self.src[start..start + len])
    }

    fn float(&mut self) -> Result<f64, WeightError> {
        self.skip_ws();
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let mut i = start;
        if i < bytes.len() && (bytes[i] == b'-' || bytes[i] == b'+') {
            i += 1;
        }
        let len = expr::scan_float(&bytes[i..]);
        let end = i + len;
        let boundary = end == bytes.len() || bytes[end].is_ascii_whitespace();
        if len == 0 || !boundary {
            return Err(ParseError::new(start, &["number"]).into());
        }
        self.pos = end;
        self.src[start..end]
            .parse()
            .map_err(|_| ParseError::new(start, &["number"]).into())
    }

    fn expect(&mut self, token: &'static str) -> Result<(), WeightError> {
        self.skip_ws();
        if self.src[self.pos..].starts_with(token) {
            self.pos += token.len();
            Ok(())
        } else {
            Err(ParseError::new(self.pos, &[token]).into())
        }
    }

    fn end(&mut self) -> Result<(), WeightError> {
        self.skip_ws();
        if self.pos == self.src.len() {
            Ok(())
        } else {
            Err(ParseError::new(self.pos, &["end of input"]).into())
        }
    }

    fn weight(mut self) -> Result<WeightFunction, WeightError> {
        let (start, head) = self.word();
        match head {
            "constant" => {
                let c = self.float()?;
                self.end()?;
                WeightFunction::constant(c)
            }
            "saturating" => {
                let m = self.float()?;
                let big_m = self.float()?;
                let k = self.float()?;
                self.end()?;
                WeightFunction::saturating(m, big_m, k)
            }
            "expr" => {
                self.expect("\"")?;
                let body_start = self.pos;
                let Some(len) = self.src[body_start..].find('"') else {
                    return Err(ParseError::new(self.src.len(), &["\""]).into());
                };
                let body = &self.src[body_start..body_start + len];
                let ast = Expr::parse(body).map_err(|e| e.shifted(body_start))?;
                self.pos = body_start + len + 1;
                self.expect("m")?;
                self.expect("=")?;
                let m = self.float()?;
                self.expect("M")?;
                self.expect("=")?;
                let big_m = self.float()?;
                self.end()?;
                WeightFunction::expression(ast, m, big_m)
            }
            _ => Err(ParseError::new(start, &["constant", "saturating", "expr"]).into()),
        }
    }
}

/// One failed admissibility condition, located at the first offending sample.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// `f'(s) < m`.
    BelowLowerBound {
        s: f64,
        value: f64,
    },
    /// `f'(s) > M`.
    AboveUpperBound {
        s: f64,
        value: f64,
    },
    /// `f''(s) < 0`.
    NotConvex {
        s: f64,
        value: f64,
    },
    /// `f''` disagrees with a finite difference of `f'`.
    InconsistentDerivative {
        s: f64,
        mismatch: f64,
    },
    NonFinite {
        s: f64,
    },
}

impl Violation {
    pub fn describe(&self) -> String {
        match self {
            Violation::BelowLowerBound { s, value } => {
                format!("lower bound m violated: f'({s}) = {value}")
            }
            Violation::AboveUpperBound { s, value } => {
                format!("upper bound M violated: f'({s}) = {value}")
            }
            Violation::NotConvex { s, value } => format!("convexity violated: f''({s}) = {value}"),
            Violation::InconsistentDerivative { s, mismatch } => {
                format!("f'' inconsistent with f' at s={s} (mismatch {mismatch})")
            }
            Violation::NonFinite { s } => format!("non-finite evaluation at s={s}"),
        }
    }
}

/// Relative slack on the declared bounds.
pub const BOUND_TOL: f64 = 1e-9;
/// Largest admissible negative excursion of `f''`.
pub const CONVEXITY_TOL: f64 = 1e-12;
/// Largest admissible `|f'' - fd(f')| / (1 + |f''|)`.
pub const CONSISTENCY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub s_max: f64,
    pub samples: usize,
    /// `(s, f'(s))` at the smallest sampled `f'`.
    pub min_fprime: (f64, f64),
    pub max_fprime: (f64, f64),
    pub min_fsecond: (f64, f64),
    pub max_fsecond: (f64, f64),
    pub max_inconsistency: f64,
    pub violations: Vec<Violation>,
    pub admissible: bool,
}

/// Finite difference of `f'` at `s`: centered where `s - h >= 0`, otherwise the
/// second-order forward formula.
pub fn fprime_difference(wf: &WeightFunction, s: f64, h: f64) -> Result<f64, WeightError> {
    if s - h >= 0.0 {
        Ok((wf.fprime(s + h)? - wf.fprime(s - h)?) / (2.0 * h))
    } else {
        let f0 = wf.fprime(s)?;
        let f1 = wf.fprime(s + h)?;
        let f2 = wf.fprime(s + 2.0 * h)?;
        Ok((-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * h))
    }
}

fn validate(wf: &WeightFunction, s_max: f64, samples: usize) -> ValidationReport {
    let samples = samples.max(2);
    let mut report = ValidationReport {
        s_max,
        samples,
        min_fprime: (0.0, f64::INFINITY),
        max_fprime: (0.0, f64::NEG_INFINITY),
        min_fsecond: (0.0, f64::INFINITY),
        max_fsecond: (0.0, f64::NEG_INFINITY),
        max_inconsistency: 0.0,
        violations: Vec::new(),
        admissible: true,
    };
    let mut below = None;
    let mut above = None;
    let mut concave = None;
    let mut inconsistent = None;
    let mut non_finite = None;

    for i in 0..samples {
        let s = s_max * i as f64 / (samples - 1) as f64;
        let h = 1e-5 * (1.0 + s);
        let (fp, fpp, fd) = match (wf.fprime(s), wf.fsecond(s), fprime_difference(wf, s, h)) {
            (Ok(a), Ok(b), Ok(c)) => (a, b, c),
            _ => {
                non_finite.get_or_insert(Violation::NonFinite { s });
                continue;
            }
        };
        if fp < report.min_fprime.1 {
            report.min_fprime = (s, fp);
        }
        if fp > report.max_fprime.1 {
            report.max_fprime = (s, fp);
        }
        if fpp < report.min_fsecond.1 {
            report.min_fsecond = (s, fpp);
        }
        if fpp > report.max_fsecond.1 {
            report.max_fsecond = (s, fpp);
        }
        let mismatch = (fpp - fd).abs() / (1.0 + fpp.abs());
        report.max_inconsistency = report.max_inconsistency.max(mismatch);

        if fp < wf.lower_bound * (1.0 - BOUND_TOL) {
            below.get_or_insert(Violation::BelowLowerBound { s, value: fp });
        }
        if fp > wf.upper_bound * (1.0 + BOUND_TOL) {
            above.get_or_insert(Violation::AboveUpperBound { s, value: fp });
        }
        if fpp < -CONVEXITY_TOL {
            concave.get_or_insert(Violation::NotConvex { s, value: fpp });
        }
        if mismatch > CONSISTENCY_TOL {
            inconsistent.get_or_insert(Violation::InconsistentDerivative { s, mismatch });
        }
    }

    report.violations = [below, above, concave, inconsistent, non_finite]
        .into_iter()
        .flatten()
        .collect();
    report.admissible = report.violations.is_empty();
    report
}
