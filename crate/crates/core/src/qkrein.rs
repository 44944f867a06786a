//! Kreĭn Q-functions of the wedge, the lead and the hybrid, the deficiency
//! functions `G`, `G_z`, the singular profile `S` and the renormalized vertex
//! trace `τ`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{QuadratureControl, WedgeQuadrature};
use crate::specfun::{self, bessel_zeros_below, SeriesControl};

/// Magnitude of `J̃_β(z)` below which `z` is treated as a Friedrichs eigenvalue.
pub const POLE_GUARD: f64 = 1e-13;

/// Opening parameter `β ∈ [1/2, 1)` of the non-convex wedge `0 < θ < π/β`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WedgeGeometry {
    beta: f64,
}

impl WedgeGeometry {
    pub fn new(beta: f64) -> Result<Self> {
        if !(0.5..1.0).contains(&beta) {
            return Err(Error::domain(format!(
                "beta = {beta} must lie in [1/2, 1) for a non-convex wedge"
            )));
        }
        Ok(WedgeGeometry { beta })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Interior angle `ω = π/β ∈ (π, 2π]`.
    pub fn omega(&self) -> f64 {
        PI / self.beta
    }
}

/// The three real coupling parameters. The boundary matrix is
/// `Θ = (γ, ε; ε, α+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingMatrix {
    pub alpha: f64,
    pub gamma: f64,
    pub eps: f64,
}

impl CouplingMatrix {
    pub fn new(alpha: f64, gamma: f64, eps: f64) -> Result<Self> {
        if !(alpha.is_finite() && gamma.is_finite() && eps.is_finite()) {
            return Err(Error::domain("coupling parameters must be finite"));
        }
        if eps < 0.0 {
            return Err(Error::domain(format!("coupling eps = {eps} must be non-negative")));
        }
        Ok(CouplingMatrix { alpha, gamma, eps })
    }

    pub fn theta(&self) -> [[f64; 2]; 2] {
        [[self.gamma, self.eps], [self.eps, self.alpha + 1.0]]
    }

    /// Strength `a = -1/γ` of the point interaction at the end of the lead.
    pub fn point_interaction_strength(&self) -> Option<f64> {
        (self.gamma != 0.0).then(|| -1.0 / self.gamma)
    }

    pub fn decoupled(&self) -> Self {
        CouplingMatrix { eps: 0.0, ..*self }
    }
}

/// Polar point of the wedge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WedgePoint {
    pub r: f64,
    pub theta: f64,
}

impl WedgePoint {
    /// Interior point: `0 < r < 1`, `0 < θ < π/β`.
    pub fn new(geom: WedgeGeometry, r: f64, theta: f64) -> Result<Self> {
        if !(r > 0.0 && r < 1.0 && theta > 0.0 && theta < geom.omega()) {
            return Err(Error::domain(format!(
                "({r}, {theta}) is not inside the wedge of angle {}",
                geom.omega()
            )));
        }
        Ok(WedgePoint { r, theta })
    }

    /// Point of the closure minus the vertex: `0 < r ≤ 1`, `0 ≤ θ ≤ π/β`.
    pub fn on_closure(geom: WedgeGeometry, r: f64, theta: f64) -> Result<Self> {
        if !(r > 0.0 && r <= 1.0 && (0.0..=geom.omega()).contains(&theta)) {
            return Err(Error::domain(format!(
                "({r}, {theta}) is not in the closed wedge of angle {}",
                geom.omega()
            )));
        }
        Ok(WedgePoint { r, theta })
    }
}

/// Physical branch: `Im √z > 0` off `[0, ∞)`, positive root on `(0, ∞)`
/// (boundary value from the upper half-plane).
pub fn physical_sqrt(z: Complex64) -> Complex64 {
    if z.im == 0.0 && z.re >= 0.0 {
        return Complex64::new(z.re.sqrt(), 0.0);
    }
    let s = z.sqrt();
    if s.im < 0.0 {
        -s
    } else {
        s
    }
}

/// Branch used for resonances.
///
/// Resonances are poles of the resolvent continued from the upper half-plane
/// through `(0, ∞)` onto the second sheet. On that continuation `√z` keeps a
/// positive real part and picks up a negative imaginary part below the axis,
/// i.e. it is the principal root with its cut along `(-∞, 0)`. On the upper
/// half-plane and on `(0, ∞)` it coincides with [`physical_sqrt`]; on the
/// negative axis the physical value `i√|z|` is used so that real negative
/// energies still see the bound-state branch.
pub fn resonance_sqrt(z: Complex64) -> Complex64 {
    if z.im == 0.0 && z.re < 0.0 {
        return Complex64::new(0.0, (-z.re).sqrt());
    }
    z.sqrt()
}

fn nearest_friedrichs_pole(beta: f64, z: Complex64) -> f64 {
    let radius = SeriesControl::default().domain_radius.sqrt();
    bessel_zeros_below(beta, radius)
        .unwrap_or_default()
        .into_iter()
        .map(|x| x * x)
        .min_by(|a, b| (a - z.re).abs().total_cmp(&(b - z.re).abs()))
        .unwrap_or(f64::NAN)
}

/// `J̃_{-β}`, `J̃_β` and their derivatives at `z`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct WedgeSeries {
    pub minus: Complex64,
    pub minus_d: Complex64,
    pub plus: Complex64,
    pub plus_d: Complex64,
}

pub(crate) fn wedge_series(geom: WedgeGeometry, z: Complex64) -> Result<WedgeSeries> {
    let (minus, minus_d) = specfun::tilde_j_complex_with_derivative(-geom.beta, z)?;
    let (plus, plus_d) = specfun::tilde_j_complex_with_derivative(geom.beta, z)?;
    Ok(WedgeSeries {
        minus,
        minus_d,
        plus,
        plus_d,
    })
}

fn check_pole(geom: WedgeGeometry, z: Complex64, plus: Complex64) -> Result<()> {
    if plus.norm() < POLE_GUARD {
        return Err(Error::Pole {
            z: z.to_string(),
            nearest: nearest_friedrichs_pole(geom.beta, z),
        });
    }
    Ok(())
}

/// Wedge Q-function `Q^W_z = -J̃_{-β}(z)/J̃_β(z)`.
pub fn q_wedge(geom: WedgeGeometry, z: Complex64) -> Result<Complex64> {
    let minus = specfun::tilde_j_complex(-geom.beta, z)?;
    let plus = specfun::tilde_j_complex(geom.beta, z)?;
    check_pole(geom, z, plus)?;
    Ok(-minus / plus)
}

/// `Q^W_z` and `dQ^W_z/dz`.
pub fn q_wedge_with_derivative(geom: WedgeGeometry, z: Complex64) -> Result<(Complex64, Complex64)> {
    let s = wedge_series(geom, z)?;
    check_pole(geom, z, s.plus)?;
    let q = -s.minus / s.plus;
    let dq = -(s.minus_d * s.plus - s.minus * s.plus_d) / (s.plus * s.plus);
    Ok((q, dq))
}

/// `dQ^W_z/dz`, equal to `‖G_z‖²` on the real axis.
pub fn q_wedge_deriv(geom: WedgeGeometry, z: Complex64) -> Result<Complex64> {
    Ok(q_wedge_with_derivative(geom, z)?.1)
}

/// Real-axis convenience.
pub fn q_wedge_real(geom: WedgeGeometry, lambda: f64) -> Result<f64> {
    Ok(q_wedge(geom, Complex64::new(lambda, 0.0))?.re)
}

/// Lead Q-function `Q^L_z = i/√z` on the physical sheet.
pub fn q_lead(z: Complex64) -> Result<Complex64> {
    if z == Complex64::new(0.0, 0.0) {
        return Err(Error::domain("the lead Q-function is singular at z = 0"));
    }
    Ok(Complex64::i() / physical_sqrt(z))
}

/// Hybrid Q-function `diag(Q^L_z, Q^W_z + 1)`.
pub fn q_hybrid(geom: WedgeGeometry, z: Complex64) -> Result<[[Complex64; 2]; 2]> {
    let zero = Complex64::new(0.0, 0.0);
    Ok([[q_lead(z)?, zero], [zero, q_wedge(geom, z)? + 1.0]])
}

/// `G(r,θ) = (r^β − r^{−β}) sin βθ / √π`.
pub fn eval_g(geom: WedgeGeometry, p: WedgePoint) -> f64 {
    let b = geom.beta;
    (p.r.powf(b) - p.r.powf(-b)) * (b * p.theta).sin() / PI.sqrt()
}

/// `S(r,θ) = r^β sin βθ / √π`.
pub fn eval_s(geom: WedgeGeometry, p: WedgePoint) -> f64 {
    let b = geom.beta;
    p.r.powf(b) * (b * p.theta).sin() / PI.sqrt()
}

/// `G_z` with the `z`-dependent ratio `J̃_{-β}(z)/J̃_β(z)` precomputed.
#[derive(Debug, Clone, Copy)]
pub struct GzProfile {
    beta: f64,
    z: Complex64,
    ratio: Complex64,
}

impl GzProfile {
    pub fn new(geom: WedgeGeometry, z: Complex64) -> Result<Self> {
        let q = q_wedge(geom, z)?;
        Ok(GzProfile {
            beta: geom.beta,
            z,
            ratio: -q,
        })
    }

    pub fn z(&self) -> Complex64 {
        self.z
    }

    /// Radial factor, so that `G_z(r,θ) = radial(r) · sin βθ`.
    pub fn radial(&self, r: f64) -> Complex64 {
        let b = self.beta;
        let w = self.z * (r * r);
        // |z r²| ≤ |z| for r ≤ 1, so the window check already passed in new()
        let plus = specfun::tilde_j_complex(b, w).expect("inside series window");
        let minus = specfun::tilde_j_complex(-b, w).expect("inside series window");
        (self.ratio * plus * r.powf(b) - minus * r.powf(-b)) / PI.sqrt()
    }

    pub fn eval_polar(&self, r: f64, theta: f64) -> Complex64 {
        self.radial(r) * (self.beta * theta).sin()
    }

    pub fn eval(&self, p: WedgePoint) -> Complex64 {
        self.eval_polar(p.r, p.theta)
    }

    /// Radial factor of `G − G_z`, written so that both differences are formed
    /// before scaling by `r^{±β}`.
    pub fn radial_difference(&self, r: f64) -> Complex64 {
        let b = self.beta;
        let w = self.z * (r * r);
        let plus = specfun::tilde_j_complex(b, w).expect("inside series window");
        let minus = specfun::tilde_j_complex(-b, w).expect("inside series window");
        let one = Complex64::new(1.0, 0.0);
        ((one - self.ratio * plus) * r.powf(b) - (one - minus) * r.powf(-b)) / PI.sqrt()
    }
}

/// Deficiency function `G_z(r, θ)`.
pub fn eval_gz(geom: WedgeGeometry, z: Complex64, p: WedgePoint) -> Result<Complex64> {
    Ok(GzProfile::new(geom, z)?.eval(p))
}

/// Controls for the vertex trace extrapolation.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceControl {
    /// Radii `2^{-j}` for `j` in this inclusive range.
    pub first_level: u32,
    pub last_level: u32,
    /// Powers of `r` removed by successive Richardson steps. `None` uses the
    /// expansion of functions in the extension domain, `2−2β, 2, 4−2β, 4`.
    pub exponents: Option<Vec<f64>>,
    /// Largest accepted difference between the last two extrapolants.
    pub tol: f64,
    pub quadrature: QuadratureControl,
}

impl Default for TraceControl {
    fn default() -> Self {
        TraceControl {
            first_level: 3,
            last_level: 12,
            exponents: None,
            tol: 1e-5,
            quadrature: QuadratureControl {
                vertex_exponent: Some(0.0),
                tol: 1e-6,
                ..QuadratureControl::default()
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEstimate {
    pub value: Complex64,
    pub error: f64,
}

/// Renormalized vertex trace
/// `τf = (√π β(β+2)/2) lim_{r↓0} r^{−β} ∫_W f(r x) dx`,
/// evaluated on radii `2^{-j}` and Richardson-extrapolated.
///
/// `f` takes polar coordinates `(r, θ)`.
pub fn tau_trace<F>(f: F, geom: WedgeGeometry, ctl: &TraceControl) -> Result<TraceEstimate>
where
    F: Fn(f64, f64) -> Complex64 + Sync,
{
    let b = geom.beta;
    if ctl.last_level <= ctl.first_level + 1 {
        return Err(Error::domain("trace extrapolation needs at least three radii"));
    }
    let quad = WedgeQuadrature::new(geom, ctl.quadrature)?;
    let scale = PI.sqrt() * b * (b + 2.0) / 2.0;

    let mut column = Vec::new();
    for j in ctl.first_level..=ctl.last_level {
        let rho = 0.5_f64.powi(j as i32);
        let integral = quad.integrate(|r, t| f(rho * r, t))?.value;
        column.push(integral * rho.powf(-b) * scale);
    }

    let default_exponents = [2.0 - 2.0 * b, 2.0, 4.0 - 2.0 * b, 4.0];
    let exponents: &[f64] = ctl.exponents.as_deref().unwrap_or(&default_exponents);

    // column[i] belongs to the i-th radius, halving each step
    let mut table = column;
    for &p in exponents.iter().take(table.len().saturating_sub(2)) {
        let factor = 2.0_f64.powf(p) - 1.0;
        table = table
            .windows(2)
            .map(|w| w[1] + (w[1] - w[0]) / factor)
            .collect();
    }
    let n = table.len();
    let value = table[n - 1];
    let error = (table[n - 1] - table[n - 2]).norm();
    if error > ctl.tol {
        return Err(Error::accuracy("vertex trace extrapolation did not settle", error));
    }
    Ok(TraceEstimate { value, error })
}

/// `‖G_λ‖² = dQ^W/dλ` for real `λ` off the Friedrichs poles.
pub fn gz_norm_sq(geom: WedgeGeometry, lambda: f64) -> Result<f64> {
    Ok(q_wedge_deriv(geom, Complex64::new(lambda, 0.0))?.re)
}

/// Bilinear pairing `∫_W G_w G_z` by wedge quadrature (no conjugation).
pub fn gz_pairing(
    geom: WedgeGeometry,
    w: Complex64,
    z: Complex64,
    quad: &WedgeQuadrature,
) -> Result<Complex64> {
    let gw = GzProfile::new(geom, w)?;
    let gz = GzProfile::new(geom, z)?;
    let b = geom.beta;
    Ok(quad
        .integrate(|r, t| {
            let s = (b * t).sin();
            gw.radial(r) * gz.radial(r) * s * s
        })?
        .value)
}

/// `∫_W |G_λ|²` computed by wedge quadrature.
pub fn gz_norm_sq_by_quadrature(geom: WedgeGeometry, lambda: f64, ctl: QuadratureControl) -> Result<f64> {
    let quad = WedgeQuadrature::new(geom, ctl)?;
    let z = Complex64::new(lambda, 0.0);
    Ok(gz_pairing(geom, z, z, &quad)?.re)
}

/// Both routes to `‖G_λ‖²`; fails when they disagree by more than `1e-4` relative.
pub fn gz_norm_sq_checked(geom: WedgeGeometry, lambda: f64) -> Result<f64> {
    let analytic = gz_norm_sq(geom, lambda)?;
    let quad = gz_norm_sq_by_quadrature(geom, lambda, QuadratureControl::default())?;
    let rel = (analytic - quad).abs() / analytic.abs();
    if rel > 1e-4 {
        return Err(Error::accuracy(
            format!("‖G_λ‖² routes disagree at λ = {lambda}: {analytic} vs {quad}"),
            rel,
        ));
    }
    Ok(analytic)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geom(b: f64) -> WedgeGeometry {
        WedgeGeometry::new(b).unwrap()
    }

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn geometry_validation() {
        assert!(WedgeGeometry::new(0.49).is_err());
        assert!(WedgeGeometry::new(1.0).is_err());
        assert!((geom(0.5).omega() - 2.0 * PI).abs() < 1e-15);
    }

    #[test]
    fn coupling_matrix_is_symmetric() {
        let t = CouplingMatrix::new(0.3, -1.0, 0.2).unwrap().theta();
        assert_eq!(t[0][1], t[1][0]);
        assert_eq!(t[1][1], 1.3);
        assert!(CouplingMatrix::new(0.0, 0.0, -0.1).is_err());
        assert_eq!(CouplingMatrix::new(0.0, 2.0, 0.0).unwrap().point_interaction_strength(), Some(-0.5));
        assert_eq!(CouplingMatrix::new(0.0, 0.0, 0.0).unwrap().point_interaction_strength(), None);
    }

    #[test]
    fn q_at_zero_is_minus_one() {
        assert_eq!(q_wedge(geom(0.7), c(0.0)).unwrap(), c(-1.0));
    }

    #[test]
    fn q_half_negative_energy_is_minus_coth() {
        let v = q_wedge_real(geom(0.5), -1.0).unwrap();
        let exact = -1.0 / 1.0_f64.tanh();
        assert!((v - exact).abs() < 1e-14);
        assert!((v + 1.31304).abs() < 1e-5);
    }

    #[test]
    fn q_half_vanishes_at_quarter_pi_squared() {
        let v = q_wedge_real(geom(0.5), PI * PI / 4.0).unwrap();
        assert!(v.abs() < 1e-14);
    }

    #[test]
    fn pole_reports_nearest_friedrichs_eigenvalue() {
        let err = q_wedge(geom(0.5), c(PI * PI)).unwrap_err();
        match err {
            Error::Pole { nearest, .. } => assert!((nearest - PI * PI).abs() < 1e-10),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn derivative_matches_finite_difference_real_and_complex() {
        let h = 1e-5;
        let g = geom(0.5);
        let d = q_wedge_deriv(g, c(0.0)).unwrap();
        let fd = (q_wedge(g, c(h)).unwrap() - q_wedge(g, c(-h)).unwrap()) / (2.0 * h);
        assert!((d - fd).norm() < 1e-6 * d.norm());
        assert!((d.re - 1.0 / 3.0).abs() < 1e-14);

        let g = geom(0.75);
        let z = Complex64::new(2.0, 1.0);
        let d = q_wedge_deriv(g, z).unwrap();
        let hz = c(h);
        let fd = (q_wedge(g, z + hz).unwrap() - q_wedge(g, z - hz).unwrap()) / (2.0 * h);
        assert!((d - fd).norm() < 1e-6 * d.norm());
    }

    #[test]
    fn derivative_is_positive_below_first_pole() {
        let g = geom(0.8);
        let pole = specfun::bessel_zero(0.8, 1).unwrap().powi(2);
        for i in 0..200 {
            let lam = -10.0 + (pole + 10.0) * (i as f64 + 0.5) / 200.0;
            assert!(gz_norm_sq(g, lam).unwrap() > 0.0, "λ = {lam}");
        }
    }

    #[test]
    fn conjugate_symmetry() {
        let g = geom(0.6);
        let z = Complex64::new(7.0, -2.5);
        let a = q_wedge(g, z.conj()).unwrap();
        let b = q_wedge(g, z).unwrap().conj();
        assert!((a - b).norm() < 1e-14 * a.norm());
    }

    #[test]
    fn lead_q_on_both_sides_of_the_cut() {
        assert!((q_lead(c(-1.0)).unwrap() - c(1.0)).norm() < 1e-15);
        assert!((q_lead(c(4.0)).unwrap() - Complex64::new(0.0, 0.5)).norm() < 1e-15);
        assert!((q_lead(c(-4.0)).unwrap() - c(0.5)).norm() < 1e-15);
        assert!(q_lead(c(0.0)).is_err());
        // -0.0 imaginary part still lands on the physical sheet
        assert!((q_lead(Complex64::new(-4.0, -0.0)).unwrap() - c(0.5)).norm() < 1e-15);
    }

    #[test]
    fn sheets_agree_in_upper_half_plane() {
        let z = Complex64::new(3.0, 0.7);
        assert!((physical_sqrt(z) - resonance_sqrt(z)).norm() < 1e-15);
        let below = Complex64::new(3.0, -0.7);
        assert!(resonance_sqrt(below).re > 0.0 && resonance_sqrt(below).im < 0.0);
        assert!(physical_sqrt(below).im > 0.0);
    }

    #[test]
    fn hybrid_q_is_diagonal_composition() {
        let g = geom(0.5);
        let m = q_hybrid(g, c(-1.0)).unwrap();
        assert!((m[0][0] - c(1.0)).norm() < 1e-15);
        assert!((m[1][1] - c(1.0 - 1.0 / 1.0_f64.tanh())).norm() < 1e-14);
        assert_eq!(m[0][1], c(0.0));
        assert_eq!(m[1][0], c(0.0));
    }

    #[test]
    fn g_and_s_closed_forms() {
        let g = geom(0.5);
        let p = WedgePoint::new(g, 0.5, PI).unwrap();
        let exact = (0.5_f64.sqrt() - 2.0_f64.sqrt()) / PI.sqrt();
        assert!((eval_g(g, p) - exact).abs() < 1e-15);
        let edge = WedgePoint::on_closure(g, 1.0, 1.0).unwrap();
        assert_eq!(eval_g(g, edge), 0.0);
        let p = WedgePoint::new(g, 0.25, PI).unwrap();
        assert!((eval_s(g, p) - 1.0 / (2.0 * PI.sqrt())).abs() < 1e-15);
        let top = WedgePoint::on_closure(g, 1.0, PI).unwrap();
        assert!((eval_s(g, top) - 1.0 / PI.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn gz_reduces_to_g_at_zero_and_vanishes_on_arc() {
        let g = geom(0.65);
        let p = WedgePoint::new(g, 0.3, 1.1).unwrap();
        let gz = eval_gz(g, c(0.0), p).unwrap();
        assert_eq!(gz.re, eval_g(g, p));
        let arc = WedgePoint::on_closure(g, 1.0, 0.9).unwrap();
        for z in [c(3.0), Complex64::new(-2.0, 5.0)] {
            assert!(eval_gz(g, z, arc).unwrap().norm() < 1e-14);
        }
    }

    #[test]
    fn gz_half_order_closed_form() {
        // β = 1/2, z = 1: G_1(r,θ) = (1/√π)(cot(1) sin r − cos r)/√r · sin(θ/2)
        let g = geom(0.5);
        let p = WedgePoint::new(g, 0.5, PI).unwrap();
        let v = eval_gz(g, c(1.0), p).unwrap();
        let r: f64 = 0.5;
        let exact = ((1.0_f64.cos() / 1.0_f64.sin()) * r.sin() - r.cos()) / r.sqrt() / PI.sqrt();
        assert!((v.re - exact).abs() < 1e-14, "{} vs {exact}", v.re);
    }

    #[test]
    fn trace_of_singular_profile_is_one() {
        for b in [0.5, 0.75] {
            let g = geom(b);
            let t = tau_trace(
                |r, th| c(r.powf(b) * (b * th).sin() / PI.sqrt()),
                g,
                &TraceControl::default(),
            )
            .unwrap();
            assert!((t.value.re - 1.0).abs() < 1e-10, "{b}: {}", t.value);
        }
    }

    #[test]
    fn trace_of_g_minus_gz_recovers_q_plus_one() {
        let g = geom(0.5);
        let prof = GzProfile::new(g, c(-1.0)).unwrap();
        let t = tau_trace(
            |r, th| prof.radial_difference(r) * (0.5 * th).sin(),
            g,
            &TraceControl::default(),
        )
        .unwrap();
        let expected = q_wedge(g, c(-1.0)).unwrap() + 1.0;
        assert!((t.value - expected).norm() < 1e-6, "{} vs {expected}", t.value);
    }

    #[test]
    fn norm_routes_agree_at_zero_energy() {
        let g = geom(0.5);
        let v = gz_norm_sq_checked(g, 0.0).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-12);
    }
}
