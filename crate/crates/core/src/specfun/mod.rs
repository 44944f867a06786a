//! Special-function kernel.
//!
//! Every Bessel quantity in the crate goes through the entire-function series
//!
//! ```text
//! J̃_ν(z) = 1 + Σ_{k≥1} (-1)^k / (k! (k+ν)!) (z/4)^k,   (k+ν)! = (1+ν)(2+ν)⋯(k+ν)
//! ```
//!
//! related to the ordinary Bessel function by `J_ν(w) = (w/2)^ν J̃_ν(w²) / Γ(1+ν)`.
//! The series is summed in double-double precision and is trusted for
//! `|z| ≤ SeriesControl::domain_radius` (400 by default).

mod dd;

use std::collections::HashMap;
use std::sync::{Arc, LazyLock, RwLock};

use num_complex::Complex64;

use crate::error::{Error, Result};
use dd::{CDd, Dd};

/// Order `ν` of a Bessel function. Any finite `ν > -1` is accepted, which keeps
/// every generalized factorial `(1+ν)⋯(k+ν)` strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct BesselOrder(f64);

impl BesselOrder {
    pub fn new(nu: f64) -> Result<Self> {
        if !nu.is_finite() || nu <= -1.0 {
            return Err(Error::domain(format!("Bessel order {nu} must be finite and > -1")));
        }
        Ok(BesselOrder(nu))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Truncation and trust-region controls for the series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesControl {
    pub rel_tol: f64,
    pub max_terms: usize,
    /// Largest `|z|` (squared-argument variable) for which results are returned.
    pub domain_radius: f64,
}

impl Default for SeriesControl {
    fn default() -> Self {
        SeriesControl {
            rel_tol: 1e-15,
            max_terms: 200,
            domain_radius: 400.0,
        }
    }
}

impl SeriesControl {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(Error::domain("rel_tol must lie in (0, 1)"));
        }
        if self.max_terms < 10 {
            return Err(Error::domain("max_terms must be at least 10"));
        }
        if !(self.domain_radius > 0.0) {
            return Err(Error::domain("domain_radius must be positive"));
        }
        Ok(())
    }
}

/// Γ(−β)/Γ(β) for β ∈ [1/2, 1).
///
/// Evaluated as −Γ(1−β)/Γ(1+β), which only touches positive arguments.
pub fn gamma_ratio(beta: f64) -> Result<f64> {
    if !(0.5..1.0).contains(&beta) {
        return Err(Error::domain(format!("beta = {beta} outside [1/2, 1)")));
    }
    Ok(-gamma(1.0 - beta) / gamma(1.0 + beta))
}

/// Euler's gamma function.
pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

struct SeriesSum {
    value: Complex64,
    derivative: Complex64,
}

fn sum_series(nu: f64, z: Complex64, ctl: &SeriesControl, with_derivative: bool) -> Result<SeriesSum> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::domain("series argument is not finite"));
    }
    let radius = z.norm();
    if radius > ctl.domain_radius {
        return Err(Error::range(format!(
            "|z| = {radius} exceeds the series window {}",
            ctl.domain_radius
        )));
    }

    let step = -z / 4.0;
    let quarter = radius / 4.0;

    let mut term = CDd::ONE;
    let mut sum = CDd::ONE;
    // derivative terms d_k = k a_k z^{k-1}; d_1 = -1 / (4 (1+ν))
    let mut dterm = CDd::ZERO;
    let mut dsum = CDd::ZERO;
    let mut peak = 1.0_f64;
    let mut dpeak = 0.0_f64;

    for k in 1..=ctl.max_terms {
        let kf = k as f64;
        let k_plus_nu = Dd::sum_f64(kf, nu);
        term = term.mul_c64(step).div_dd(k_plus_nu.mul_f64(kf));
        sum = sum.add(term);
        let t = term.norm_f64();
        peak = peak.max(t);

        let mut dt = 0.0;
        if with_derivative {
            if k == 1 {
                dterm = CDd::ONE.div_dd(k_plus_nu.mul_f64(-4.0));
            } else {
                dterm = dterm.mul_c64(step).div_dd(k_plus_nu.mul_f64(kf - 1.0));
            }
            dsum = dsum.add(dterm);
            dt = dterm.norm_f64();
            dpeak = dpeak.max(dt);
        }

        // terms only decrease once k (k+ν) exceeds |z|/4
        if kf * (kf + nu) < quarter {
            continue;
        }
        let s = sum.norm_f64();
        let value_done = t <= ctl.rel_tol * s || t <= 1e-32 * peak;
        let deriv_done = !with_derivative || {
            let ds = dsum.norm_f64();
            dt <= ctl.rel_tol * ds || dt <= 1e-32 * dpeak
        };
        if value_done && deriv_done {
            return Ok(SeriesSum {
                value: sum.to_c64(),
                derivative: dsum.to_c64(),
            });
        }
    }
    Err(Error::accuracy(
        format!("series for nu = {nu} at z = {z} not converged in {} terms", ctl.max_terms),
        term.norm_f64() / sum.norm_f64().max(f64::MIN_POSITIVE),
    ))
}

/// The entire function `J̃_ν(z)`.
pub fn tilde_j(nu: BesselOrder, z: Complex64, ctl: &SeriesControl) -> Result<Complex64> {
    Ok(sum_series(nu.0, z, ctl, false)?.value)
}

/// `J̃_ν(z)` together with its term-wise derivative `d/dz J̃_ν(z)`.
pub fn tilde_j_with_derivative(
    nu: BesselOrder,
    z: Complex64,
    ctl: &SeriesControl,
) -> Result<(Complex64, Complex64)> {
    let s = sum_series(nu.0, z, ctl, true)?;
    Ok((s.value, s.derivative))
}

/// Real-argument shorthand used by the root finders.
pub(crate) fn tilde_j_real(nu: f64, x: f64) -> Result<f64> {
    Ok(sum_series(nu, Complex64::new(x, 0.0), &SeriesControl::default(), false)?
        .value
        .re)
}

pub(crate) fn tilde_j_real_with_derivative(nu: f64, x: f64) -> Result<(f64, f64)> {
    let s = sum_series(nu, Complex64::new(x, 0.0), &SeriesControl::default(), true)?;
    Ok((s.value.re, s.derivative.re))
}

pub(crate) fn tilde_j_complex_with_derivative(nu: f64, z: Complex64) -> Result<(Complex64, Complex64)> {
    let s = sum_series(nu, z, &SeriesControl::default(), true)?;
    Ok((s.value, s.derivative))
}

pub(crate) fn tilde_j_complex(nu: f64, z: Complex64) -> Result<Complex64> {
    Ok(sum_series(nu, z, &SeriesControl::default(), false)?.value)
}

/// Bessel function of the first kind `J_ν(w) = (w/2)^ν J̃_ν(w²)/Γ(1+ν)`, principal power.
pub fn bessel_j(nu: BesselOrder, w: Complex64, ctl: &SeriesControl) -> Result<Complex64> {
    let v = nu.0;
    if w == Complex64::new(0.0, 0.0) {
        return if v > 0.0 {
            Ok(Complex64::new(0.0, 0.0))
        } else if v == 0.0 {
            Ok(Complex64::new(1.0, 0.0))
        } else {
            Err(Error::domain(format!("J_{v} is singular at the origin")))
        };
    }
    let series = tilde_j(nu, w * w, ctl)?;
    let prefactor = if w.im == 0.0 && w.re > 0.0 {
        Complex64::new((w.re / 2.0).powf(v), 0.0)
    } else {
        (w / 2.0).powf(v)
    };
    Ok(prefactor * series / gamma(1.0 + v))
}

/// Real-argument `J_ν(x)` for `x > 0`.
pub fn bessel_j_real(nu: BesselOrder, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return bessel_j(nu, Complex64::new(x, 0.0), &SeriesControl::default()).map(|c| c.re);
    }
    let series = tilde_j_real(nu.0, x * x)?;
    Ok((x / 2.0).powf(nu.0) * series / gamma(1.0 + nu.0))
}

/// Modified Bessel function `I_ν(x) = (x/2)^ν J̃_ν(-x²)/Γ(1+ν)` for `x > 0`.
pub fn bessel_i(nu: BesselOrder, x: f64, ctl: &SeriesControl) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::domain(format!("bessel_i needs x > 0, got {x}")));
    }
    let series = tilde_j(nu, Complex64::new(-x * x, 0.0), ctl)?;
    Ok((x / 2.0).powf(nu.0) * series.re / gamma(1.0 + nu.0))
}

// Zeros are cached per order over the whole trusted window.
static ZERO_CACHE: LazyLock<RwLock<HashMap<u64, Arc<Vec<f64>>>>> =
    LazyLock::new(|| RwLock::new(HashMap::new()));

const SCAN_STEP: f64 = 0.125;

fn zeros_in_window(nu: f64) -> Result<Arc<Vec<f64>>> {
    let key = nu.to_bits();
    if let Some(z) = ZERO_CACHE.read().expect("zero cache poisoned").get(&key) {
        return Ok(z.clone());
    }
    let computed = Arc::new(scan_zeros(nu)?);
    let mut cache = ZERO_CACHE.write().expect("zero cache poisoned");
    Ok(cache.entry(key).or_insert(computed).clone())
}

fn scan_zeros(nu: f64) -> Result<Vec<f64>> {
    let x_lim = SeriesControl::default().domain_radius.sqrt();
    let f = |x: f64| tilde_j_real(nu, x * x);
    let mut zeros = Vec::new();
    let mut a = 0.0;
    let mut fa = 1.0;
    while a < x_lim {
        let b = (a + SCAN_STEP).min(x_lim);
        let fb = f(b)?;
        if fa == 0.0 {
            zeros.push(a);
        } else if fa * fb < 0.0 {
            zeros.push(refine_zero(nu, a, b, fa)?);
        }
        a = b;
        fa = fb;
    }
    Ok(zeros)
}

/// Bisection on the sign change of `J̃_ν(x²)` followed by a guarded Newton polish.
fn refine_zero(nu: f64, mut a: f64, mut b: f64, mut fa: f64) -> Result<f64> {
    for _ in 0..200 {
        if b - a <= 4.0 * f64::EPSILON * b {
            break;
        }
        let m = 0.5 * (a + b);
        let fm = tilde_j_real(nu, m * m)?;
        if fm == 0.0 {
            return Ok(m);
        }
        if fa * fm < 0.0 {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    let mut x = 0.5 * (a + b);
    for _ in 0..3 {
        let (v, dv) = tilde_j_real_with_derivative(nu, x * x)?;
        let slope = 2.0 * x * dv;
        if slope == 0.0 {
            break;
        }
        let next = x - v / slope;
        if !(next >= a && next <= b) {
            break;
        }
        x = next;
    }
    Ok(x)
}

/// The m-th strictly positive zero `λ_{m,ν}` of `J_ν` (m ≥ 1).
///
/// Orders in `(-1, 1/2)` are accepted as well; the wedge uses `ν = -β` for the
/// `α = 0` eigenvalues.
pub fn bessel_zero(nu: f64, m: usize) -> Result<f64> {
    BesselOrder::new(nu)?;
    if m == 0 {
        return Err(Error::domain("zero index m starts at 1"));
    }
    let radius = SeriesControl::default().domain_radius.sqrt();
    // asymptotic location; far beyond the window there is nothing to search
    let guess = (m as f64 + nu / 2.0 - 0.25) * std::f64::consts::PI;
    if guess > radius + std::f64::consts::PI {
        return Err(Error::range(format!(
            "zero {m} of J_{nu} (near {guess:.3}) lies outside the series window"
        )));
    }
    let zeros = zeros_in_window(nu)?;
    zeros.get(m - 1).copied().ok_or_else(|| {
        Error::range(format!(
            "zero {m} of J_{nu} lies outside the series window (x ≤ {radius})"
        ))
    })
}

/// All positive zeros of `J_ν` not exceeding `x_max`, ascending.
pub fn bessel_zeros_below(nu: f64, x_max: f64) -> Result<Vec<f64>> {
    BesselOrder::new(nu)?;
    let radius = SeriesControl::default().domain_radius.sqrt();
    if x_max > radius {
        return Err(Error::range(format!(
            "x_max = {x_max} exceeds the series window {radius}"
        )));
    }
    let zeros = zeros_in_window(nu)?;
    Ok(zeros.iter().copied().take_while(|&x| x <= x_max).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn order(nu: f64) -> BesselOrder {
        BesselOrder::new(nu).unwrap()
    }

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn gamma_ratio_at_one_half_is_minus_two() {
        assert!((gamma_ratio(0.5).unwrap() + 2.0).abs() < 1e-14);
        // Γ(−1/2)/Γ(1/2) directly
        let direct = gamma(-0.5) / gamma(0.5);
        assert!((direct + 2.0).abs() < 1e-14);
    }

    #[test]
    fn gamma_ratio_rejects_convex_wedges() {
        assert!(matches!(gamma_ratio(0.4), Err(Error::Domain(_))));
        assert!(matches!(gamma_ratio(1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn order_validation() {
        assert!(BesselOrder::new(-1.0).is_err());
        assert!(BesselOrder::new(f64::NAN).is_err());
        assert!(BesselOrder::new(-0.75).is_ok());
    }

    #[test]
    fn tilde_j_at_origin_is_one() {
        let ctl = SeriesControl::default();
        for nu in [0.5, 0.75, -0.75, 3.0] {
            assert_eq!(tilde_j(order(nu), c(0.0), &ctl).unwrap(), c(1.0));
        }
    }

    #[test]
    fn tilde_j_half_vanishes_at_pi_squared() {
        let v = tilde_j(order(0.5), c(PI * PI), &SeriesControl::default()).unwrap();
        assert!(v.norm() < 1e-12, "{v}");
    }

    #[test]
    fn tilde_j_half_is_sinc() {
        // J̃_{1/2}(x²) = sin x / x, J̃_{-1/2}(x²) = cos x
        for x in [0.3, 2.0, 7.5, 17.0, 19.9] {
            let s = tilde_j_real(0.5, x * x).unwrap();
            let cc = tilde_j_real(-0.5, x * x).unwrap();
            assert!((s - x.sin() / x).abs() < 1e-15, "x={x}: {s}");
            assert!((cc - x.cos()).abs() < 1e-15, "x={x}: {cc}");
        }
    }

    #[test]
    fn negative_argument_sums_positive_terms() {
        // J̃_{1/2}(-x²) = sinh x / x
        let x: f64 = 1.0;
        let v = tilde_j_real(0.5, -x * x).unwrap();
        assert!((v - x.sinh() / x).abs() < 1e-15);
    }

    #[test]
    fn series_rejects_arguments_outside_window() {
        let r = tilde_j(order(0.5), c(401.0), &SeriesControl::default());
        assert!(matches!(r, Err(Error::Range(_))));
    }

    #[test]
    fn too_few_terms_is_an_accuracy_error() {
        let ctl = SeriesControl {
            max_terms: 10,
            ..SeriesControl::default()
        };
        let r = tilde_j(order(0.5), c(300.0), &ctl);
        assert!(matches!(r, Err(Error::Accuracy { .. })));
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let h = 1e-5;
        for &(nu, x) in &[(0.75, 2.0), (-0.75, 10.0), (0.5, -3.0)] {
            let (_, d) = tilde_j_real_with_derivative(nu, x).unwrap();
            let fd = (tilde_j_real(nu, x + h).unwrap() - tilde_j_real(nu, x - h).unwrap()) / (2.0 * h);
            assert!((d - fd).abs() < 1e-8 * (1.0 + d.abs()), "{nu} {x}: {d} vs {fd}");
        }
    }

    #[test]
    fn bessel_j_half_closed_form() {
        let v = bessel_j(order(0.5), c(PI / 2.0), &SeriesControl::default()).unwrap();
        assert!((v.re - 2.0 / PI).abs() < 1e-15);
        assert_eq!(v.im, 0.0);
    }

    #[test]
    fn bessel_j_one_vanishes_at_origin() {
        assert_eq!(bessel_j(order(1.0), c(0.0), &SeriesControl::default()).unwrap(), c(0.0));
        assert!(bessel_j(order(-0.5), c(0.0), &SeriesControl::default()).is_err());
    }

    #[test]
    fn bessel_i_half_closed_form() {
        let v = bessel_i(order(0.5), 1.0, &SeriesControl::default()).unwrap();
        let exact = (2.0 / PI).sqrt() * 1.0_f64.sinh();
        assert!((v - exact).abs() < 1e-15);
        let small = bessel_i(order(0.75), 1e-8, &SeriesControl::default()).unwrap();
        assert!(small > 0.0 && small < 1e-5);
    }

    #[test]
    fn zeros_of_half_order_are_multiples_of_pi() {
        assert!((bessel_zero(0.5, 1).unwrap() - PI).abs() < 1e-12 * PI);
        assert!((bessel_zero(0.5, 3).unwrap() - 3.0 * PI).abs() < 1e-12 * 3.0 * PI);
    }

    #[test]
    fn first_zero_of_j1_matches_tables() {
        let z = bessel_zero(1.0, 1).unwrap();
        assert!((z - 3.831_705_970_207_512).abs() < 1e-12 * z);
    }

    #[test]
    fn zeros_beyond_window_are_range_errors() {
        assert!(matches!(bessel_zero(0.5, 7), Err(Error::Range(_))));
        assert!(matches!(bessel_zero(0.5, 60), Err(Error::Range(_))));
        assert!(matches!(bessel_zero(0.5, 0), Err(Error::Domain(_))));
    }

    #[test]
    fn zeros_below_filters_and_sorts() {
        let z = bessel_zeros_below(0.5, 10.0).unwrap();
        assert_eq!(z.len(), 3);
        assert!(z.windows(2).all(|w| w[0] < w[1]));
    }
}
