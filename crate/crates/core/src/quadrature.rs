//! Tensor Gauss–Legendre quadrature on the wedge `0 < r < 1, 0 < θ < π/β`.
//!
//! Radially the unit interval is split into geometric panels with edges
//! `2^{-j}`, `j = 0..=levels`. The innermost panel `[0, 2^{-levels}]` is mapped
//! by `r = h t^p`, which turns an integrable vertex singularity `r^a · r dr`
//! into the smooth weight `t^{p(a+2)-1}`. The angle is split into equal panels.
//! Every integral is computed at order `n` and `2n`; the difference is the
//! reported error estimate.

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::qkrein::WedgeGeometry;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureControl {
    /// Gauss order per panel for the coarse rule; the fine rule doubles it.
    pub order: usize,
    /// Number of geometric radial levels (innermost edge `2^{-levels}`).
    pub radial_levels: usize,
    pub theta_panels: usize,
    /// Worst power `a` in `f ~ r^a` at the vertex; `None` means `-2β`.
    pub vertex_exponent: Option<f64>,
    /// Accepted error estimate, relative to `max(|value|, 1)`.
    pub tol: f64,
}

impl Default for QuadratureControl {
    fn default() -> Self {
        QuadratureControl {
            order: 16,
            radial_levels: 14,
            theta_panels: 2,
            vertex_exponent: None,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult<T> {
    pub value: T,
    pub error: f64,
}

fn gauss_pairs(order: usize) -> Vec<(f64, f64)> {
    let n = NonZeroUsize::new(order.max(1)).expect("order is positive");
    GaussLegendre::new(n).as_node_weight_pairs().to_vec()
}

/// Nodes and weights (`dr`, no Jacobian) of the graded radial rule on `[0, 1]`.
pub fn radial_rule(order: usize, levels: usize, map_power: f64) -> Vec<(f64, f64)> {
    let pairs = gauss_pairs(order);
    let mut out = Vec::with_capacity(order * (levels + 1));
    for j in 0..levels {
        let b = 0.5_f64.powi(j as i32);
        let a = 0.5 * b;
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        out.extend(pairs.iter().map(|&(x, w)| (mid + half * x, half * w)));
    }
    let h = 0.5_f64.powi(levels as i32);
    let p = map_power.max(1.0);
    out.extend(pairs.iter().map(|&(x, w)| {
        let t = 0.5 * (x + 1.0);
        let r = h * t.powf(p);
        (r, 0.5 * w * h * p * t.powf(p - 1.0))
    }));
    out
}

fn theta_rule(order: usize, panels: usize, width: f64) -> Vec<(f64, f64)> {
    let pairs = gauss_pairs(order);
    let panels = panels.max(1);
    let step = width / panels as f64;
    let mut out = Vec::with_capacity(order * panels);
    for k in 0..panels {
        let a = step * k as f64;
        out.extend(
            pairs
                .iter()
                .map(|&(x, w)| (a + 0.5 * step * (x + 1.0), 0.5 * step * w)),
        );
    }
    out
}

#[derive(Debug, Clone)]
struct TensorRule {
    // (r, w_r * r)
    radial: Vec<(f64, f64)>,
    theta: Vec<(f64, f64)>,
}

impl TensorRule {
    fn apply<F>(&self, f: &F) -> Complex64
    where
        F: Fn(f64, f64) -> Complex64 + Sync,
    {
        let rows: Vec<Complex64> = self
            .radial
            .par_iter()
            .map(|&(r, wr)| {
                let mut acc = Complex64::new(0.0, 0.0);
                for &(t, wt) in &self.theta {
                    acc += f(r, t) * wt;
                }
                acc * wr
            })
            .collect();
        rows.into_iter().sum()
    }
}

/// Precomputed coarse/fine tensor rules for one wedge.
#[derive(Debug, Clone)]
pub struct WedgeQuadrature {
    control: QuadratureControl,
    coarse: TensorRule,
    fine: TensorRule,
}

impl WedgeQuadrature {
    pub fn new(geom: WedgeGeometry, control: QuadratureControl) -> Result<Self> {
        if control.order == 0 || control.radial_levels == 0 {
            return Err(Error::domain("quadrature order and radial levels must be positive"));
        }
        let a = control.vertex_exponent.unwrap_or(-2.0 * geom.beta());
        if a <= -2.0 {
            return Err(Error::domain(format!(
                "vertex exponent {a} is not integrable against r dr"
            )));
        }
        let p = (3.0 / (a + 2.0)).ceil().max(1.0);
        let build = |order: usize| TensorRule {
            radial: radial_rule(order, control.radial_levels, p)
                .into_iter()
                .map(|(r, w)| (r, w * r))
                .collect(),
            theta: theta_rule(order, control.theta_panels, geom.omega()),
        };
        Ok(WedgeQuadrature {
            control,
            coarse: build(control.order),
            fine: build(2 * control.order),
        })
    }

    pub fn control(&self) -> &QuadratureControl {
        &self.control
    }

    /// `∫_W f(r, θ) r dr dθ` with an order-doubling error estimate. Does not
    /// enforce the tolerance.
    pub fn estimate<F>(&self, f: F) -> QuadratureResult<Complex64>
    where
        F: Fn(f64, f64) -> Complex64 + Sync,
    {
        let coarse = self.coarse.apply(&f);
        let fine = self.fine.apply(&f);
        QuadratureResult {
            value: fine,
            error: (fine - coarse).norm(),
        }
    }

    /// As [`estimate`](Self::estimate), failing when the estimate exceeds the tolerance.
    pub fn integrate<F>(&self, f: F) -> Result<QuadratureResult<Complex64>>
    where
        F: Fn(f64, f64) -> Complex64 + Sync,
    {
        let res = self.estimate(f);
        if !res.value.re.is_finite() || !res.value.im.is_finite() {
            return Err(Error::accuracy("wedge quadrature produced a non-finite value", f64::INFINITY));
        }
        if res.error > self.control.tol * res.value.norm().max(1.0) {
            return Err(Error::accuracy("wedge quadrature tolerance not met", res.error));
        }
        Ok(res)
    }

    pub fn integrate_real<F>(&self, f: F) -> Result<QuadratureResult<f64>>
    where
        F: Fn(f64, f64) -> f64 + Sync,
    {
        let res = self.integrate(|r, t| Complex64::new(f(r, t), 0.0))?;
        Ok(QuadratureResult {
            value: res.value.re,
            error: res.error,
        })
    }
}

/// One-shot wedge integral with default grading.
pub fn wedge_quadrature<F>(
    f: F,
    geom: WedgeGeometry,
    control: QuadratureControl,
) -> Result<QuadratureResult<Complex64>>
where
    F: Fn(f64, f64) -> Complex64 + Sync,
{
    WedgeQuadrature::new(geom, control)?.integrate(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn area_of_wedge() {
        for beta in [0.5, 0.7, 0.95] {
            let geom = WedgeGeometry::new(beta).unwrap();
            let q = WedgeQuadrature::new(geom, QuadratureControl::default()).unwrap();
            let a = q.integrate_real(|_, _| 1.0).unwrap();
            assert!((a.value - PI / (2.0 * beta)).abs() < 1e-13, "{beta}: {}", a.value);
        }
    }

    #[test]
    fn vertex_singularity_is_integrated() {
        // ∫ r^{-2β} r dr dθ = (π/β) / (2 - 2β)
        for beta in [0.5, 0.8, 0.95] {
            let geom = WedgeGeometry::new(beta).unwrap();
            let q = WedgeQuadrature::new(geom, QuadratureControl::default()).unwrap();
            let v = q.integrate_real(|r, _| r.powf(-2.0 * beta)).unwrap().value;
            let exact = (PI / beta) / (2.0 - 2.0 * beta);
            assert!((v - exact).abs() < 1e-10 * exact, "{beta}: {v} vs {exact}");
        }
    }

    #[test]
    fn radial_rule_integrates_polynomials() {
        let rule = radial_rule(16, 14, 3.0);
        let s: f64 = rule.iter().map(|&(r, w)| w * r.powi(5)).sum();
        assert!((s - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn unresolved_integrand_reports_accuracy_error() {
        let geom = WedgeGeometry::new(0.5).unwrap();
        let ctl = QuadratureControl {
            order: 2,
            tol: 1e-14,
            ..QuadratureControl::default()
        };
        let q = WedgeQuadrature::new(geom, ctl).unwrap();
        let r = q.integrate_real(|r, t| (60.0 * r).cos() * (1.0 + (25.0 * t).cos().powi(2)));
        assert!(matches!(r, Err(Error::Accuracy { .. })));
    }

    #[test]
    fn rejects_non_integrable_exponent() {
        let geom = WedgeGeometry::new(0.5).unwrap();
        let ctl = QuadratureControl {
            vertex_exponent: Some(-2.0),
            ..QuadratureControl::default()
        };
        assert!(WedgeQuadrature::new(geom, ctl).is_err());
    }
}
