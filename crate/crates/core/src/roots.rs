//! Real bracketing helpers shared by the spectral solvers.

use crate::error::{Error, Result};

/// Bisection on a sign change `f(a) f(b) < 0` down to a few ulps.
pub(crate) fn bisect<F>(mut f: F, mut a: f64, mut b: f64, mut fa: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if a > b {
        std::mem::swap(&mut a, &mut b);
        fa = f(a)?;
    }
    for _ in 0..300 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b || b - a <= 2.0 * f64::EPSILON * a.abs().max(b.abs()) {
            return Ok(m);
        }
        let fm = f(m)?;
        if fm == 0.0 {
            return Ok(m);
        }
        if (fa < 0.0) == (fm < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// A few Newton steps kept inside `[lo, hi]`.
pub(crate) fn polish<F>(mut f: F, mut x: f64, lo: f64, hi: f64, steps: usize) -> Result<f64>
where
    F: FnMut(f64) -> Result<(f64, f64)>,
{
    for _ in 0..steps {
        let (v, dv) = f(x)?;
        if v == 0.0 || dv == 0.0 || !dv.is_finite() {
            break;
        }
        let next = x - v / dv;
        if !(next >= lo && next <= hi) {
            break;
        }
        if next == x {
            break;
        }
        x = next;
    }
    Ok(x)
}

/// Root of `f` on `[a, b]`, which must bracket a sign change.
pub(crate) fn bracketed_root<F, D>(mut f: F, deriv: D, a: f64, b: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
    D: FnMut(f64) -> Result<(f64, f64)>,
{
    let fa = f(a)?;
    let fb = f(b)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if (fa < 0.0) == (fb < 0.0) {
        return Err(Error::convergence(
            format!("no sign change on [{a}, {b}] (f = {fa}, {fb})"),
            0,
        ));
    }
    let x = bisect(&mut f, a, b, fa)?;
    polish(deriv, x, a.min(b), a.max(b), 3)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_square_root_of_two() {
        let x = bracketed_root(|x| Ok(x * x - 2.0), |x| Ok((x * x - 2.0, 2.0 * x)), 0.0, 2.0).unwrap();
        assert!((x - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn missing_bracket_is_an_error() {
        assert!(bracketed_root(|x| Ok(x * x + 1.0), |x| Ok((x * x + 1.0, 2.0 * x)), -1.0, 1.0).is_err());
    }
}
