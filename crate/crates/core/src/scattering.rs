//! On-shell scattering of a particle sent in along the lead.
//!
//! The wedge is compact, so the only open channel is the lead and the
//! scattering matrix is `diag(s11, 1)` with
//!
//! ```text
//! s11 = ((γ + i/√λ)(α − Q^W_λ) − ε²) / ((γ − i/√λ)(α − Q^W_λ) − ε²).
//! ```
//!
//! For real data the numerator is the conjugate of the denominator, so `s11`
//! is a pure phase. Both factors are multiplied by `J̃_β(λ)` before division;
//! this makes the Friedrichs poles of `Q^W` removable points where the formula
//! reduces to `(γ + i/√λ)/(γ − i/√λ)` without special-casing.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qkrein::{CouplingMatrix, WedgeGeometry, POLE_GUARD};
use crate::specfun::{self, BesselOrder};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatteringRecord {
    pub lambda: f64,
    pub k: f64,
    pub s11: Complex64,
    pub s22: Complex64,
    pub refl: Complex64,
    /// Principal argument of `refl` in `(−π, π]`.
    pub phase: f64,
    /// Phase continued along the scan with `2π` jumps removed.
    pub unwrapped_phase: f64,
    /// Set when `λ` sits on a Friedrichs pole of `Q^W` (limit value used).
    pub at_pole: bool,
}

fn check_energy(lambda: f64) -> Result<()> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::domain(format!("scattering needs a positive energy, got {lambda}")));
    }
    let window = specfun::SeriesControl::default().domain_radius;
    if lambda > window {
        return Err(Error::range(format!("energy {lambda} exceeds the window {window}")));
    }
    Ok(())
}

/// Returns `(s11, at_pole)`.
fn s11_regularized(geom: WedgeGeometry, c: &CouplingMatrix, lambda: f64) -> Result<(Complex64, bool)> {
    check_energy(lambda)?;
    let plus = specfun::tilde_j_real(geom.beta(), lambda)?;
    let minus = specfun::tilde_j_real(-geom.beta(), lambda)?;
    let h = c.alpha * plus + minus;
    let e2p = c.eps * c.eps * plus;
    let lead = Complex64::new(c.gamma, 1.0 / lambda.sqrt());
    let num = lead * h - e2p;
    let den = lead.conj() * h - e2p;
    Ok((num / den, plus.abs() < POLE_GUARD))
}

/// `S(λ) = diag(s11, 1)`.
pub fn s_matrix(geom: WedgeGeometry, c: &CouplingMatrix, lambda: f64) -> Result<[[Complex64; 2]; 2]> {
    let (s11, _) = s11_regularized(geom, c, lambda)?;
    let zero = Complex64::new(0.0, 0.0);
    Ok([[s11, zero], [zero, Complex64::new(1.0, 0.0)]])
}

/// Reflection amplitude `R(k)` at momentum `k`, evaluated through the
/// ordinary Bessel functions `J_{±β}(k)`:
/// `Q^W_{k²} = Γ(−β)/Γ(β) (k/2)^{2β} J_{−β}(k)/J_β(k)`.
pub fn reflection(geom: WedgeGeometry, c: &CouplingMatrix, k: f64) -> Result<Complex64> {
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::domain(format!("reflection needs k > 0, got {k}")));
    }
    check_energy(k * k)?;
    let b = geom.beta();
    let jp = specfun::bessel_j_real(BesselOrder::new(b)?, k)?;
    let jm = specfun::bessel_j_real(BesselOrder::new(-b)?, k)?;
    // (α − Q^W) J_β
    let h = c.alpha * jp - specfun::gamma_ratio(b)? * (0.5 * k).powf(2.0 * b) * jm;
    let e2j = c.eps * c.eps * jp;
    let lead = Complex64::new(c.gamma, 1.0 / k);
    Ok((lead * h - e2j) / (lead.conj() * h - e2j))
}

/// Principal argument in `(−π, π]`.
fn principal_arg(z: Complex64) -> f64 {
    let a = z.arg();
    if a <= -PI {
        a + 2.0 * PI
    } else {
        a
    }
}

/// Scattering records along an ascending momentum grid, with unwrapped phase.
pub fn phase_scan(geom: WedgeGeometry, c: &CouplingMatrix, k_grid: &[f64]) -> Result<Vec<ScatteringRecord>> {
    if k_grid.iter().any(|k| !(*k > 0.0)) || k_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::domain("k grid must be positive and strictly increasing"));
    }
    let mut records = k_grid
        .par_iter()
        .map(|&k| {
            let lambda = k * k;
            let (s11, at_pole) = s11_regularized(geom, c, lambda)?;
            let refl = s11;
            let phase = principal_arg(refl);
            Ok(ScatteringRecord {
                lambda,
                k,
                s11,
                s22: Complex64::new(1.0, 0.0),
                refl,
                phase,
                unwrapped_phase: phase,
                at_pole,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut offset = 0.0;
    for i in 1..records.len() {
        let jump = records[i].phase - records[i - 1].phase;
        offset -= 2.0 * PI * (jump / (2.0 * PI)).round();
        records[i].unwrapped_phase = records[i].phase + offset;
    }
    Ok(records)
}
