//! Resonances of the hybrid Hamiltonian.
//!
//! A resonance is a zero of the secular determinant
//! `D(z) = (γ − Q^L_z)(α − Q^W_z) − ε²` continued from the upper half-plane
//! through `(0, ∞)` onto the second sheet of `√z`. `Q^W` is entire in `z` apart
//! from its poles, so only the lead function `Q^L_z = i/√z` feels the sheet; it
//! is evaluated with [`resonance_sqrt`](crate::qkrein::resonance_sqrt), i.e. the
//! principal root, which has `Re √z > 0` and `Im √z < 0` just below the positive
//! axis. With the physical branch instead, `Im √z` would flip sign across the
//! axis and the roots found would be pushed back onto the first sheet, where
//! no non-real zeros exist.
//!
//! Newton works on the pole-free product `J̃_β(z) · D(z)`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qkrein::{self, resonance_sqrt, CouplingMatrix, WedgeGeometry};
use crate::specfun::SeriesControl;
use crate::spectra;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Method {
    Perturbative,
    FixedPoint,
    Newton,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Perturbative => "PERTURBATIVE",
            Method::FixedPoint => "FIXED_POINT",
            Method::Newton => "NEWTON",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resonance {
    pub z: Complex64,
    /// Index of the parent eigenvalue `λ_m` of the decoupled wedge.
    pub m: usize,
    pub eps: f64,
    pub method: Method,
    pub iterations: usize,
    /// `|det(Θ − Q^H_z)|` at `z`.
    pub residual: f64,
    /// `|z_k − z_{k−1}|` for every iteration taken.
    pub steps: Vec<f64>,
}

impl Resonance {
    /// Ratios of successive step lengths (the observed contraction factors).
    pub fn step_ratios(&self) -> Vec<f64> {
        self.steps
            .windows(2)
            .filter(|w| w[0] > 0.0)
            .map(|w| w[1] / w[0])
            .collect()
    }
}

fn window_check(z: Complex64) -> Result<()> {
    let r = SeriesControl::default().domain_radius;
    if !(z.norm() <= r) {
        return Err(Error::range(format!("z = {z} lies outside the energy window |z| <= {r}")));
    }
    Ok(())
}

/// `Q^L_z` on the resonance sheet.
pub fn q_lead_resonance(z: Complex64) -> Result<Complex64> {
    if z == Complex64::new(0.0, 0.0) {
        return Err(Error::domain("the lead Q-function is singular at z = 0"));
    }
    Ok(Complex64::i() / resonance_sqrt(z))
}

/// Secular determinant `(γ − Q^L_z)(α − Q^W_z) − ε²` on the resonance sheet.
pub fn det_secular(geom: WedgeGeometry, c: &CouplingMatrix, z: Complex64) -> Result<Complex64> {
    window_check(z)?;
    let ql = q_lead_resonance(z)?;
    let qw = qkrein::q_wedge(geom, z)?;
    Ok((c.gamma - ql) * (c.alpha - qw) - c.eps * c.eps)
}

/// `J̃_β(z) D(z)` and its derivative.
fn regularized_det(geom: WedgeGeometry, c: &CouplingMatrix, z: Complex64) -> Result<(Complex64, Complex64)> {
    window_check(z)?;
    if z == Complex64::new(0.0, 0.0) {
        return Err(Error::domain("the secular determinant is singular at z = 0"));
    }
    let s = qkrein::wedge_series(geom, z)?;
    let root = resonance_sqrt(z);
    let lead = c.gamma - Complex64::i() / root;
    // d/dz (γ − i z^{-1/2}) = i/(2 z^{3/2})
    let lead_d = Complex64::i() / (2.0 * root * root * root);
    let g = c.alpha * s.plus + s.minus;
    let g_d = c.alpha * s.plus_d + s.minus_d;
    let e2 = c.eps * c.eps;
    let f = lead * g - e2 * s.plus;
    let df = lead_d * g + lead * g_d - e2 * s.plus_d;
    Ok((f, df))
}

fn residual_at(geom: WedgeGeometry, c: &CouplingMatrix, z: Complex64) -> f64 {
    det_secular(geom, c, z).map(|d| d.norm()).unwrap_or(f64::NAN)
}

/// Weak-coupling coefficient `w_m` in `r_m(ε) = λ_m + w_m ε² + O(ε⁴)`.
pub fn weak_coupling_w(geom: WedgeGeometry, alpha: f64, gamma: f64, m: usize) -> Result<Complex64> {
    let lambda = spectra::parent_eigenvalue(geom, alpha, m)?.lambda;
    weak_coupling_w_at(geom, gamma, lambda)
}

fn weak_coupling_w_at(geom: WedgeGeometry, gamma: f64, lambda: f64) -> Result<Complex64> {
    let rho = qkrein::gz_norm_sq(geom, lambda)?;
    let denom = rho * (lambda * gamma * gamma + 1.0);
    Ok(Complex64::new(-lambda * gamma / denom, -lambda.sqrt() / denom))
}

/// First-order prediction `λ_m + w_m ε²`.
pub fn resonance_perturbative(geom: WedgeGeometry, c: &CouplingMatrix, m: usize) -> Result<Resonance> {
    let lambda = spectra::parent_eigenvalue(geom, c.alpha, m)?.lambda;
    let z = lambda + weak_coupling_w_at(geom, c.gamma, lambda)? * (c.eps * c.eps);
    Ok(Resonance {
        z,
        m,
        eps: c.eps,
        method: Method::Perturbative,
        iterations: 0,
        residual: residual_at(geom, c, z),
        steps: Vec::new(),
    })
}

/// How the fixed-point map treats `Q^W_{z_k}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum FixedPointScheme {
    /// `z_k = z_{k−1} + (f(z_{k−1}) − Q^W_{z_{k−1}})/ρ`: the linearization is
    /// re-centred at every step, so the limit is an exact root of `D`.
    #[default]
    Chord,
    /// `z_k = λ_m + (f(z_{k−1}) − α)/ρ`: the literal first-order scheme. Its
    /// limit differs from the root by `O(ε⁴)`.
    Linearized,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointControl {
    pub tol: f64,
    pub max_iter: usize,
    /// Largest accepted ratio of successive step lengths.
    pub max_ratio: f64,
    pub scheme: FixedPointScheme,
}

impl Default for FixedPointControl {
    fn default() -> Self {
        FixedPointControl {
            tol: 1e-13,
            max_iter: 200,
            max_ratio: 0.5,
            scheme: FixedPointScheme::Chord,
        }
    }
}

/// `f(z) = α − ε²√z/(γ√z − i)`; roots of `D` solve `Q^W_z = f(z)`.
fn fixed_point_rhs(c: &CouplingMatrix, z: Complex64) -> Complex64 {
    let s = resonance_sqrt(z);
    c.alpha - c.eps * c.eps * s / (c.gamma * s - Complex64::i())
}

/// Fixed-point iteration started at the parent eigenvalue `λ_m`.
pub fn resonance_fixed_point(
    geom: WedgeGeometry,
    c: &CouplingMatrix,
    m: usize,
    ctl: &FixedPointControl,
) -> Result<Resonance> {
    let lambda = spectra::parent_eigenvalue(geom, c.alpha, m)?.lambda;
    let rho = qkrein::gz_norm_sq(geom, lambda)?;
    let z0 = Complex64::new(lambda, 0.0);
    let mut z = z0;
    let mut steps = Vec::new();
    for k in 1..=ctl.max_iter {
        let f = fixed_point_rhs(c, z);
        let next = match ctl.scheme {
            FixedPointScheme::Chord => {
                let q = if k == 1 {
                    // Q^W_{λ_m} = α by construction
                    Complex64::new(c.alpha, 0.0)
                } else {
                    qkrein::q_wedge(geom, z)?
                };
                z + (f - q) / rho
            }
            FixedPointScheme::Linearized => z0 + (f - c.alpha) / rho,
        };
        let step = (next - z).norm();
        if !step.is_finite() {
            return Err(Error::convergence("fixed-point iterate is not finite; try Newton", k));
        }
        steps.push(step);
        z = next;
        if let [.., a, b] = steps[..] {
            if a > 0.0 && b > ctl.max_ratio * a && b > ctl.tol * z.norm().max(1.0) {
                return Err(Error::convergence(
                    format!("fixed point is not contracting (step ratio {:.3}); try Newton", b / a),
                    k,
                ));
            }
        }
        if step <= ctl.tol * z.norm().max(1.0) {
            return Ok(Resonance {
                z,
                m,
                eps: c.eps,
                method: Method::FixedPoint,
                iterations: k,
                residual: residual_at(geom, c, z),
                steps,
            });
        }
    }
    Err(Error::convergence("fixed point reached max_iter; try Newton", ctl.max_iter))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonControl {
    /// Step tolerance relative to `max(|z|, 1)`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NewtonControl {
    fn default() -> Self {
        NewtonControl {
            tol: 1e-15,
            max_iter: 40,
        }
    }
}

fn fd_derivative(geom: WedgeGeometry, c: &CouplingMatrix, z: Complex64) -> Result<Complex64> {
    let h = 1e-7 * z.norm().max(1.0);
    let (fp, _) = regularized_det(geom, c, z + h)?;
    let (fm, _) = regularized_det(geom, c, z - h)?;
    Ok((fp - fm) / (2.0 * h))
}

/// Newton polish of a root of the secular determinant seeded at `z0`.
pub fn resonance_newton(
    geom: WedgeGeometry,
    c: &CouplingMatrix,
    z0: Complex64,
    m: usize,
    ctl: &NewtonControl,
) -> Result<Resonance> {
    let mut z = z0;
    let (mut f, mut df) = regularized_det(geom, c, z)?;
    let mut steps: Vec<f64> = Vec::new();
    for k in 1..=ctl.max_iter {
        if f == Complex64::new(0.0, 0.0) {
            return finish(geom, c, z, m, k - 1, steps);
        }
        if !(df.norm() > 1e-300) || !df.re.is_finite() || !df.im.is_finite() {
            df = fd_derivative(geom, c, z)?;
            if !(df.norm() > 1e-300) {
                return Err(Error::convergence("secular derivative vanishes", k));
            }
        }
        let mut delta = -f / df;
        let mut next = z + delta;
        let mut trial = regularized_det(geom, c, next);
        // damp only genuinely bad steps
        let mut halvings = 0;
        while match &trial {
            Ok((fn_, _)) => fn_.norm() > 2.0 * f.norm() && delta.norm() > 1e-10 * z.norm().max(1.0),
            Err(_) => true,
        } {
            halvings += 1;
            if halvings > 30 {
                return Err(Error::convergence("Newton step could not be damped", k));
            }
            delta *= 0.5;
            next = z + delta;
            trial = regularized_det(geom, c, next);
        }
        let (fn_, dfn) = trial?;
        let step = delta.norm();
        let scale = next.norm().max(1.0);
        // once in the rounding regime, a step that no longer shrinks ends the run
        let stalled = step <= 1e-12 * scale && steps.last().is_some_and(|&p| step >= 0.5 * p);
        steps.push(step);
        z = next;
        f = fn_;
        df = dfn;
        if step <= ctl.tol * scale || stalled {
            return finish(geom, c, z, m, k, steps);
        }
    }
    let last = steps.last().copied().unwrap_or(f64::INFINITY);
    if last <= 1e-12 * z.norm().max(1.0) {
        return finish(geom, c, z, m, ctl.max_iter, steps);
    }
    Err(Error::convergence(
        format!("Newton did not converge from z0 = {z0} (last step {last:e})"),
        ctl.max_iter,
    ))
}

fn finish(
    geom: WedgeGeometry,
    c: &CouplingMatrix,
    z: Complex64,
    m: usize,
    iterations: usize,
    steps: Vec<f64>,
) -> Result<Resonance> {
    Ok(Resonance {
        z,
        m,
        eps: c.eps,
        method: Method::Newton,
        iterations,
        residual: residual_at(geom, c, z),
        steps,
    })
}

/// Fixed point followed by Newton; falls back to a Newton run seeded at the
/// perturbative prediction when the fixed point does not contract.
pub fn locate_resonance(geom: WedgeGeometry, c: &CouplingMatrix, m: usize) -> Result<Resonance> {
    let seed = match resonance_fixed_point(geom, c, m, &FixedPointControl::default()) {
        Ok(r) => r.z,
        Err(Error::Convergence { .. }) => resonance_perturbative(geom, c, m)?.z,
        Err(e) => return Err(e),
    };
    resonance_newton(geom, c, seed, m, &NewtonControl::default())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    /// ε or β.
    pub param: f64,
    pub z: Complex64,
    pub method: Method,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepFailure {
    pub index: usize,
    pub param: f64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Sweep {
    pub rows: Vec<SweepRow>,
    /// Grid points that produced no row.
    pub failures: Vec<SweepFailure>,
}

fn check_grid(grid: &[f64], what: &str) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::domain(format!("{what} grid is empty")));
    }
    if grid.iter().any(|x| !x.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::domain(format!("{what} grid must be finite and strictly increasing")));
    }
    Ok(())
}

fn row(param: f64, r: &Resonance) -> SweepRow {
    SweepRow {
        param,
        z: r.z,
        method: r.method,
        residual: r.residual,
    }
}

/// Continuation of the `m`-th resonance along an ascending ε grid.
///
/// Stops at the first point where the track is lost; the failure is recorded
/// and the rows computed so far are returned.
pub fn sweep_eps(geom: WedgeGeometry, alpha: f64, gamma: f64, m: usize, eps_grid: &[f64]) -> Result<Sweep> {
    check_grid(eps_grid, "eps")?;
    if eps_grid[0] < 0.0 {
        return Err(Error::domain("eps must be non-negative"));
    }
    let lambda = spectra::parent_eigenvalue(geom, alpha, m)?.lambda;
    let w = weak_coupling_w_at(geom, gamma, lambda)?;
    let newton = NewtonControl::default();
    let mut sweep = Sweep::default();
    let mut prev: Option<(f64, Complex64)> = None;
    for (i, &eps) in eps_grid.iter().enumerate() {
        let c = CouplingMatrix::new(alpha, gamma, eps)?;
        let found = match prev {
            None => locate_resonance(geom, &c, m),
            Some((e0, z0)) => {
                let predicted = z0 + w * (eps * eps - e0 * e0);
                resonance_newton(geom, &c, predicted, m, &newton)
                    .or_else(|_| resonance_newton(geom, &c, z0, m, &newton))
            }
        };
        match found {
            Ok(r) if eps == 0.0 || r.z.im < 0.0 => {
                sweep.rows.push(row(eps, &r));
                prev = Some((eps, r.z));
            }
            Ok(r) => {
                sweep.failures.push(SweepFailure {
                    index: i,
                    param: eps,
                    message: format!("track left the lower half-plane at z = {}", r.z),
                });
                break;
            }
            Err(e) => {
                sweep.failures.push(SweepFailure {
                    index: i,
                    param: eps,
                    message: e.to_string(),
                });
                break;
            }
        }
    }
    Ok(sweep)
}

/// Resonance of index `m` for each β of the grid (independent solves).
pub fn sweep_beta(alpha: f64, gamma: f64, eps: f64, m: usize, beta_grid: &[f64]) -> Result<Sweep> {
    check_grid(beta_grid, "beta")?;
    let c = CouplingMatrix::new(alpha, gamma, eps)?;
    let results: Vec<Result<Resonance>> = beta_grid
        .par_iter()
        .map(|&b| {
            let geom = WedgeGeometry::new(b)?;
            locate_resonance(geom, &c, m)
        })
        .collect();
    let mut sweep = Sweep::default();
    for (i, (res, &b)) in results.into_iter().zip(beta_grid).enumerate() {
        match res {
            Ok(r) => sweep.rows.push(row(b, &r)),
            Err(e) => sweep.failures.push(SweepFailure {
                index: i,
                param: b,
                message: e.to_string(),
            }),
        }
    }
    Ok(sweep)
}

/// Secular determinant continued to the upper sheet only, used to confirm
/// that no root exists there.
pub fn det_secular_physical(geom: WedgeGeometry, c: &CouplingMatrix, z: Complex64) -> Result<Complex64> {
    let ql = qkrein::q_lead(z)?;
    let qw = qkrein::q_wedge(geom, z)?;
    Ok((c.gamma - ql) * (c.alpha - qw) - c.eps * c.eps)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (WedgeGeometry, f64) {
        let g = WedgeGeometry::new(0.75).unwrap();
        let lam = spectra::parent_eigenvalue(g, 0.0, 1).unwrap().lambda;
        (g, lam)
    }

    #[test]
    fn parent_eigenvalue_matches_prototype() {
        let (_, lam) = setup();
        assert!((lam - 18.353_117_070_321_02).abs() < 1e-10);
    }

    #[test]
    fn weak_coupling_signs() {
        let g = WedgeGeometry::new(0.75).unwrap();
        let w = weak_coupling_w(g, 0.0, 1.0, 1).unwrap();
        assert!((w.re + 0.468_305_396).abs() < 1e-8 && (w.im + 0.109_313_612).abs() < 1e-8, "{w}");
        let w0 = weak_coupling_w(g, 0.0, 0.0, 1).unwrap();
        assert_eq!(w0.re, 0.0);
        assert!(w0.im < 0.0);
        assert!(weak_coupling_w(g, 0.0, -1.0, 1).unwrap().re > 0.0);
    }

    #[test]
    fn det_secular_at_parent_is_minus_eps_squared() {
        let (g, lam) = setup();
        let c = CouplingMatrix::new(0.0, 1.0, 0.3).unwrap();
        let d = det_secular(g, &c, Complex64::new(lam, 0.0)).unwrap();
        assert!((d + 0.09).norm() < 1e-10);
    }

    #[test]
    fn fixed_point_and_newton_agree() {
        let (g, lam) = setup();
        let c = CouplingMatrix::new(0.0, 1.0, 0.1).unwrap();
        let fp = resonance_fixed_point(g, &c, 1, &FixedPointControl::default()).unwrap();
        assert!(fp.step_ratios().iter().all(|&r| r <= 0.5));
        assert!(fp.residual < 1e-9 && fp.z.im < 0.0);
        assert!((fp.z - lam).norm() <= 5.0 * 0.01);
        let nw = resonance_newton(g, &c, fp.z, 1, &NewtonControl::default()).unwrap();
        assert!(nw.iterations <= 5);
        assert!((nw.z - fp.z).norm() < 1e-10);
        // the mirror point in the upper half-plane is not a root
        assert!(det_secular(g, &c, nw.z.conj()).unwrap().norm() > 1e-3);
    }

    #[test]
    fn zero_coupling_fixed_point_is_exact() {
        let (g, lam) = setup();
        let c = CouplingMatrix::new(0.0, 1.0, 0.0).unwrap();
        let fp = resonance_fixed_point(g, &c, 1, &FixedPointControl::default()).unwrap();
        assert_eq!(fp.z, Complex64::new(lam, 0.0));
        assert_eq!(fp.iterations, 1);
        let nw = resonance_newton(g, &c, Complex64::new(lam + 0.01, 0.0), 1, &NewtonControl::default()).unwrap();
        assert!((nw.z - lam).norm() < 1e-12);
    }

    #[test]
    fn linearized_scheme_is_close_but_not_exact() {
        let (g, _) = setup();
        let c = CouplingMatrix::new(0.0, 1.0, 0.1).unwrap();
        let ctl = FixedPointControl {
            scheme: FixedPointScheme::Linearized,
            ..FixedPointControl::default()
        };
        let lin = resonance_fixed_point(g, &c, 1, &ctl).unwrap();
        let exact = locate_resonance(g, &c, 1).unwrap();
        assert!((lin.z - exact.z).norm() < 1e-3);
    }

    #[test]
    fn perturbative_order() {
        let (g, lam) = setup();
        let w = weak_coupling_w(g, 0.0, 1.0, 1).unwrap();
        let err = |eps: f64| {
            let c = CouplingMatrix::new(0.0, 1.0, eps).unwrap();
            let r = locate_resonance(g, &c, 1).unwrap();
            (r.z - (lam + w * eps * eps)).norm()
        };
        for eps in [0.2, 0.1, 0.05] {
            let ratio = err(eps) / err(eps / 2.0);
            assert!((4.0..=16.0).contains(&ratio), "{eps}: {ratio}");
        }
    }

    #[test]
    fn no_root_on_the_physical_sheet_near_parent() {
        let (g, lam) = setup();
        let c = CouplingMatrix::new(0.0, 1.0, 0.3).unwrap();
        let r = locate_resonance(g, &c, 1).unwrap();
        assert!(det_secular_physical(g, &c, r.z).unwrap().norm() > 1e-3);
        assert!(r.z.re > 0.9 * lam);
    }

    #[test]
    fn eps_sweep_small_slope_and_continuity() {
        let g = WedgeGeometry::new(0.75).unwrap();
        let grid: Vec<f64> = (0..=30).map(|i| i as f64 * 0.01).collect();
        let s = sweep_eps(g, 0.0, 1.0, 1, &grid).unwrap();
        assert!(s.failures.is_empty());
        assert_eq!(s.rows.len(), grid.len());
        let w = weak_coupling_w(g, 0.0, 1.0, 1).unwrap();
        let slope = s.rows[5].z.im / (0.05f64 * 0.05);
        assert!((slope - w.im).abs() < 0.05 * w.im.abs());
        for pair in s.rows.windows(2) {
            let de2 = pair[1].param.powi(2) - pair[0].param.powi(2);
            assert!((pair[1].z - pair[0].z).norm() <= 10.0 * w.norm() * de2 + 1e-9);
        }
        assert!(s.rows.iter().skip(1).all(|r| r.z.im < 0.0 && r.residual < 1e-9));
    }

    #[test]
    fn beta_sweep_rows_in_lower_half_plane() {
        let grid = [0.5, 0.6, 0.7, 0.8, 0.9];
        let s = sweep_beta(0.0, 1.0, 1.0, 1, &grid).unwrap();
        assert!(s.failures.is_empty(), "{:?}", s.failures);
        assert!(s.rows.iter().all(|r| r.z.im < 0.0));
        let g = WedgeGeometry::new(0.5).unwrap();
        let lone = locate_resonance(g, &CouplingMatrix::new(0.0, 1.0, 1.0).unwrap(), 1).unwrap();
        assert!((lone.z - s.rows[0].z).norm() < 1e-12);
    }

    #[test]
    fn bad_grids_are_rejected() {
        let g = WedgeGeometry::new(0.75).unwrap();
        assert!(sweep_eps(g, 0.0, 1.0, 1, &[0.2, 0.1]).is_err());
        assert!(sweep_beta(0.0, 1.0, 1.0, 1, &[]).is_err());
    }
}
