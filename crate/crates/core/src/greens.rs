//! Resolvent kernels of the lead, the wedge and the hybrid.
//!
//! All kernels are those of `(Δ + z)^{-1}` acting on the respective component:
//! the Friedrichs kernel is `Σ ψ_{m,n}(p) ψ_{m,n}(q) / (z − λ²_{m,nβ})`, and the
//! extensions are rank-one (wedge) or rank-two (hybrid) perturbations of the
//! decoupled kernels built from `G_z` and the lead boundary values.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qkrein::{self, physical_sqrt, CouplingMatrix, GzProfile, WedgeGeometry, WedgePoint};
use crate::spectra::{self, FriedrichsMode};

pub use crate::quadrature::{wedge_quadrature, QuadratureControl, QuadratureResult};

/// Default mode window for the Friedrichs sum.
pub const DEFAULT_MODE_WINDOW: f64 = 350.0;

/// A kernel value with its truncation-error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelValue {
    pub value: Complex64,
    pub error: f64,
}

/// Kernel of the Neumann half-line resolvent,
/// `−(i/2)(e^{i√z|x−y|} + e^{i√z(x+y)})/√z` with `Im √z > 0`.
pub fn resolvent_lead(z: Complex64, x: f64, y: f64) -> Result<Complex64> {
    if z.im == 0.0 && z.re >= 0.0 {
        return Err(Error::domain(format!("z = {z} lies on the lead spectrum [0, ∞)")));
    }
    if !(x >= 0.0 && y >= 0.0) {
        return Err(Error::domain("lead coordinates must be non-negative"));
    }
    let s = physical_sqrt(z);
    let i = Complex64::i();
    Ok(-0.5 * i * ((i * s * (x - y).abs()).exp() + (i * s * (x + y)).exp()) / s)
}

/// Friedrichs modes of one wedge up to an energy window.
#[derive(Debug, Clone)]
pub struct FriedrichsModes {
    geom: WedgeGeometry,
    window: f64,
    modes: Vec<FriedrichsMode>,
}

impl FriedrichsModes {
    pub fn new(geom: WedgeGeometry, window: f64) -> Result<Self> {
        Ok(FriedrichsModes {
            geom,
            window,
            modes: spectra::friedrichs_modes(geom, window)?,
        })
    }

    pub fn geometry(&self) -> WedgeGeometry {
        self.geom
    }

    pub fn window(&self) -> f64 {
        self.window
    }

    pub fn modes(&self) -> &[FriedrichsMode] {
        &self.modes
    }

    /// Truncated mode sum. The error estimate is the absolute contribution of
    /// the top octave `(E/2, E]` of the window: with Weyl growth the number of
    /// modes per octave doubles while each term shrinks like `1/λ²`, so the
    /// discarded tail is of the same size as the last retained octave.
    pub fn resolvent(&self, z: Complex64, p: WedgePoint, q: WedgePoint) -> Result<KernelValue> {
        let mut value = Complex64::new(0.0, 0.0);
        let mut shell = 0.0;
        for mode in &self.modes {
            let d = z - mode.eigenvalue;
            if d.norm() < qkrein::POLE_GUARD * mode.eigenvalue.max(1.0) {
                return Err(Error::Pole {
                    z: z.to_string(),
                    nearest: mode.eigenvalue,
                });
            }
            let term = mode.eval_polar(p.r, p.theta) * mode.eval_polar(q.r, q.theta) / d;
            if mode.eigenvalue > 0.5 * self.window {
                shell += term.norm();
            }
            value += term;
        }
        Ok(KernelValue { value, error: shell })
    }
}

/// Friedrichs resolvent kernel with the default window; fails when the
/// truncation estimate exceeds `mode_tol`.
pub fn resolvent_friedrichs(
    geom: WedgeGeometry,
    z: Complex64,
    p: WedgePoint,
    q: WedgePoint,
    mode_tol: f64,
) -> Result<KernelValue> {
    let modes = FriedrichsModes::new(geom, DEFAULT_MODE_WINDOW)?;
    checked(modes.resolvent(z, p, q)?, mode_tol)
}

fn checked(v: KernelValue, mode_tol: f64) -> Result<KernelValue> {
    if v.error > mode_tol {
        return Err(Error::accuracy(
            "Friedrichs mode window too small for the requested tolerance",
            v.error,
        ));
    }
    Ok(v)
}

/// Kernel of the `α`-extension, `R^F_z(p,q) − G_z(p) G_z(q)/(α − Q^W_z)`.
pub fn resolvent_wedge_alpha(
    modes: &FriedrichsModes,
    alpha: f64,
    z: Complex64,
    p: WedgePoint,
    q: WedgePoint,
) -> Result<KernelValue> {
    let geom = modes.geometry();
    let qw = qkrein::q_wedge(geom, z)?;
    let denom = alpha - qw;
    if denom.norm() < 1e-14 * (1.0 + alpha.abs()) {
        return Err(Error::Pole {
            z: z.to_string(),
            nearest: z.re,
        });
    }
    let gz = GzProfile::new(geom, z)?;
    let rf = modes.resolvent(z, p, q)?;
    Ok(KernelValue {
        value: rf.value - gz.eval(p) * gz.eval(q) / denom,
        error: rf.error,
    })
}

/// Source/target points for the hybrid kernel: `x`, `y` on the lead and
/// `p`, `q` in the wedge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HybridPoints {
    pub x: f64,
    pub y: f64,
    pub p: WedgePoint,
    pub q: WedgePoint,
}

/// The four blocks of the hybrid resolvent kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HybridKernel {
    /// `(x, y)`
    pub lead_lead: Complex64,
    /// `(x, q)`
    pub lead_wedge: Complex64,
    /// `(p, y)`
    pub wedge_lead: Complex64,
    /// `(p, q)`
    pub wedge_wedge: Complex64,
    /// Truncation estimate inherited from the Friedrichs sum.
    pub error: f64,
}

impl HybridKernel {
    pub fn max_norm(&self) -> f64 {
        [self.lead_lead, self.lead_wedge, self.wedge_lead, self.wedge_wedge]
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }
}

/// Inverse of `((γ − Q^L_z, ε), (ε, α − Q^W_z))`.
fn coupling_inverse(geom: WedgeGeometry, c: &CouplingMatrix, z: Complex64) -> Result<[[Complex64; 2]; 2]> {
    let a = c.gamma - qkrein::q_lead(z)?;
    let d = c.alpha - qkrein::q_wedge(geom, z)?;
    let e = Complex64::new(c.eps, 0.0);
    let det = a * d - e * e;
    if det.norm() < 1e-14 * (1.0 + a.norm() * d.norm()) {
        return Err(Error::Pole {
            z: z.to_string(),
            nearest: z.re,
        });
    }
    Ok([[d / det, -e / det], [-e / det, a / det]])
}

/// Hybrid resolvent kernel: the decoupled kernel `diag(R^N, R^F)` minus the
/// rank-two correction through the lead endpoint and `G_z`.
pub fn resolvent_hybrid(
    modes: &FriedrichsModes,
    c: &CouplingMatrix,
    z: Complex64,
    pts: &HybridPoints,
) -> Result<HybridKernel> {
    let geom = modes.geometry();
    let inv = coupling_inverse(geom, c, z)?;
    let gz = GzProfile::new(geom, z)?;
    let rx0 = resolvent_lead(z, pts.x, 0.0)?;
    let r0y = resolvent_lead(z, 0.0, pts.y)?;
    let gp = gz.eval(pts.p);
    let gq = gz.eval(pts.q);
    let rf = modes.resolvent(z, pts.p, pts.q)?;
    Ok(HybridKernel {
        lead_lead: resolvent_lead(z, pts.x, pts.y)? - rx0 * inv[0][0] * r0y,
        lead_wedge: -rx0 * inv[0][1] * gq,
        wedge_lead: -gp * inv[1][0] * r0y,
        wedge_wedge: rf.value - gp * inv[1][1] * gq,
        error: rf.error,
    })
}
