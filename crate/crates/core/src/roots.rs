//! Scalar bracketed root finders.

/// Bisection to full double precision on a bracket with `f(a)` of sign `fa`
/// and `f(b)` of the opposite sign. Returns the bracket end with the smaller
/// residual once the bracket cannot shrink further.
pub(crate) fn bisect<E>(
    mut a: f64,
    mut b: f64,
    mut fa: f64,
    mut f: impl FnMut(f64) -> Result<f64, E>,
) -> Result<f64, E> {
    let mut fb = f(b)?;
    loop {
        let m = 0.5 * (a + b);
        if m <= a.min(b) || m >= a.max(b) {
            return Ok(if fa.abs() <= fb.abs() { a } else { b });
        }
        let fm = f(m)?;
        if fm == 0.0 {
            return Ok(m);
        }
        if (fm > 0.0) == (fa > 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
            fb = fm;
        }
    }
}

/// Illinois-modified regula falsi on `[a, b]` with `f(a)`, `f(b)` of opposite
/// signs. Stops when `|f| <= f_tol` or the bracket is at rounding level, and
/// returns the point with the smaller residual.
pub(crate) fn illinois(
    mut a: f64,
    mut b: f64,
    mut fa: f64,
    mut fb: f64,
    f_tol: f64,
    mut f: impl FnMut(f64) -> f64,
) -> f64 {
    if fa.abs() <= f_tol {
        return a;
    }
    if fb.abs() <= f_tol {
        return b;
    }
    let mut side = 0i8;
    for _ in 0..200 {
        let width = (b - a).abs();
        if width <= 4.0 * f64::EPSILON * a.abs().max(b.abs()).max(1.0) {
            break;
        }
        let mut c = (a * fb - b * fa) / (fb - fa);
        if !(c > a.min(b) && c < a.max(b)) {
            c = 0.5 * (a + b);
        }
        let fc = f(c);
        if fc.abs() <= f_tol {
            return c;
        }
        if (fc > 0.0) == (fb > 0.0) {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
    }
    if fa.abs() <= fb.abs() {
        a
    } else {
        b
    }
}
