//! Real spectrum of the wedge extensions and of the hybrid Hamiltonian.
//!
//! Wedge eigenvalues of the extension labelled by `α` solve `Q^W_λ = α`.
//! Since `Q^W = -J̃_{-β}/J̃_β`, the roots are searched as zeros of the entire
//! function `α J̃_β(λ) + J̃_{-β}(λ)`, which has no poles to step around.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qkrein::{self, CouplingMatrix, WedgeGeometry};
use crate::roots;
use crate::specfun::{self, bessel_zeros_below, gamma, SeriesControl};

/// Largest energy accepted anywhere in this module.
pub fn energy_window() -> f64 {
    SeriesControl::default().domain_radius
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SpectralTag {
    FriedrichsEmbedded,
    NonfriedrichsPos,
    NonfriedrichsNeg,
    LeadBound,
    HybridBound,
}

impl SpectralTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            SpectralTag::FriedrichsEmbedded => "FRIEDRICHS_EMBEDDED",
            SpectralTag::NonfriedrichsPos => "NONFRIEDRICHS_POS",
            SpectralTag::NonfriedrichsNeg => "NONFRIEDRICHS_NEG",
            SpectralTag::LeadBound => "LEAD_BOUND",
            SpectralTag::HybridBound => "HYBRID_BOUND",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralPoint {
    pub lambda: f64,
    pub tag: SpectralTag,
    /// `(m, n)` for Friedrichs modes, `(m, 1)` for interlaced roots `λ_m`.
    pub indices: Option<(usize, usize)>,
    /// Residual of the defining equation at `lambda`.
    pub residual: f64,
    /// Set when the point is exactly zero by construction (α = −1).
    pub exact_zero: bool,
}

/// Friedrichs mode `ψ_{m,n}` with eigenvalue `λ²_{m,nβ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FriedrichsMode {
    pub m: usize,
    pub n: usize,
    /// `λ_{m,nβ}`, the Bessel zero.
    pub zero: f64,
    pub eigenvalue: f64,
    order: f64,
    beta: f64,
    // 2 √(β/π) / (J_{nβ+1}(λ) Γ(1+nβ))
    scale: f64,
}

impl FriedrichsMode {
    fn new(geom: WedgeGeometry, m: usize, n: usize, zero: f64) -> Result<Self> {
        let beta = geom.beta();
        let order = n as f64 * beta;
        let next = specfun::bessel_j_real(specfun::BesselOrder::new(order + 1.0)?, zero)?;
        let scale = 2.0 * (beta / PI).sqrt() / (next * gamma(1.0 + order));
        Ok(FriedrichsMode {
            m,
            n,
            zero,
            eigenvalue: zero * zero,
            order,
            beta,
            scale,
        })
    }

    /// Radial factor `2√(β/π) J_{nβ}(λ r)/J_{nβ+1}(λ)`.
    pub fn radial(&self, r: f64) -> f64 {
        let x = self.zero * r;
        let series = specfun::tilde_j_real(self.order, x * x).expect("inside series window");
        self.scale * (0.5 * x).powf(self.order) * series
    }

    pub fn eval_polar(&self, r: f64, theta: f64) -> f64 {
        self.radial(r) * (self.order * theta).sin()
    }

    pub fn angular_order(&self) -> f64 {
        self.order
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

fn check_window(e_max: f64) -> Result<()> {
    if !e_max.is_finite() || e_max > energy_window() {
        return Err(Error::range(format!(
            "E_max = {e_max} exceeds the energy window {}",
            energy_window()
        )));
    }
    Ok(())
}

/// Default energy cut: `min(350, λ²_{6,β})`.
pub fn default_e_max(geom: WedgeGeometry) -> f64 {
    specfun::bessel_zero(geom.beta(), 6)
        .map(|z| (z * z).min(350.0))
        .unwrap_or(350.0)
}

/// All Friedrichs modes with `λ²_{m,nβ} ≤ e_max`, ascending.
pub fn friedrichs_modes(geom: WedgeGeometry, e_max: f64) -> Result<Vec<FriedrichsMode>> {
    check_window(e_max)?;
    let mut modes = Vec::new();
    if e_max <= 0.0 {
        return Ok(modes);
    }
    let x_max = e_max.sqrt();
    for n in 1.. {
        let zeros = bessel_zeros_below(n as f64 * geom.beta(), x_max)?;
        if zeros.is_empty() {
            break;
        }
        for (i, &z) in zeros.iter().enumerate() {
            modes.push(FriedrichsMode::new(geom, i + 1, n, z)?);
        }
    }
    modes.sort_by(|a, b| a.eigenvalue.total_cmp(&b.eigenvalue));
    Ok(modes)
}

/// `(λ²_{m,nβ}, m, n)` triples up to `e_max`, ascending.
pub fn friedrichs_eigenvalues(geom: WedgeGeometry, e_max: f64) -> Result<Vec<(f64, usize, usize)>> {
    Ok(friedrichs_modes(geom, e_max)?
        .into_iter()
        .map(|m| (m.eigenvalue, m.m, m.n))
        .collect())
}

/// Normalized Friedrichs eigenfunction `ψ_{m,n}(r, θ)`.
pub fn eigenfunction_psi(geom: WedgeGeometry, m: usize, n: usize, p: qkrein::WedgePoint) -> Result<f64> {
    if m == 0 || n == 0 {
        return Err(Error::domain("mode indices start at 1"));
    }
    let zero = specfun::bessel_zero(n as f64 * geom.beta(), m)?;
    Ok(FriedrichsMode::new(geom, m, n, zero)?.eval_polar(p.r, p.theta))
}

/// Friedrichs eigenvalues with `n > 1`; they persist for every extension.
pub fn sigma_f(geom: WedgeGeometry, e_max: f64) -> Result<Vec<SpectralPoint>> {
    Ok(friedrichs_modes(geom, e_max)?
        .into_iter()
        .filter(|m| m.n > 1)
        .map(|m| {
            let residual = specfun::bessel_j_real(specfun::BesselOrder::new(m.order).unwrap(), m.zero)
                .map(f64::abs)
                .unwrap_or(f64::NAN);
            SpectralPoint {
                lambda: m.eigenvalue,
                tag: SpectralTag::FriedrichsEmbedded,
                indices: Some((m.m, m.n)),
                residual,
                exact_zero: false,
            }
        })
        .collect())
}

/// Roots of `Q^W_λ = α`, split by the monotone branches of `Q^W`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaSpectrum {
    /// Negative root (present iff α < −1).
    pub negative: Vec<SpectralPoint>,
    /// Root in `[0, λ²_{1,β})` (present iff α ≥ −1).
    pub low: Vec<SpectralPoint>,
    /// `λ_m ∈ (λ²_{m,β}, λ²_{m+1,β})`, indexed by m.
    pub interlaced: Vec<SpectralPoint>,
}

impl AlphaSpectrum {
    /// The unique root below the first Friedrichs pole.
    pub fn singleton(&self) -> &SpectralPoint {
        self.negative
            .first()
            .or(self.low.first())
            .expect("the low branch always has exactly one root")
    }

    /// Non-negative roots in increasing order (the set `Σ^+_α`).
    pub fn positive(&self) -> Vec<SpectralPoint> {
        self.low.iter().chain(self.interlaced.iter()).copied().collect()
    }

    pub fn all(&self) -> Vec<SpectralPoint> {
        self.negative.iter().chain(self.positive().iter()).copied().collect()
    }
}

fn secular_wedge(geom: WedgeGeometry, alpha: f64, lambda: f64) -> Result<f64> {
    let plus = specfun::tilde_j_real(geom.beta(), lambda)?;
    let minus = specfun::tilde_j_real(-geom.beta(), lambda)?;
    Ok(alpha * plus + minus)
}

fn secular_wedge_deriv(geom: WedgeGeometry, alpha: f64, lambda: f64) -> Result<(f64, f64)> {
    let (p, dp) = specfun::tilde_j_real_with_derivative(geom.beta(), lambda)?;
    let (m, dm) = specfun::tilde_j_real_with_derivative(-geom.beta(), lambda)?;
    Ok((alpha * p + m, alpha * dp + dm))
}

fn wedge_root(geom: WedgeGeometry, alpha: f64, a: f64, b: f64) -> Result<f64> {
    roots::bracketed_root(
        |x| secular_wedge(geom, alpha, x),
        |x| secular_wedge_deriv(geom, alpha, x),
        a,
        b,
    )
}

fn nonfriedrichs_point(geom: WedgeGeometry, alpha: f64, lambda: f64, m: Option<usize>) -> SpectralPoint {
    let residual = qkrein::q_wedge_real(geom, lambda)
        .map(|q| (q - alpha).abs())
        .unwrap_or(f64::NAN);
    SpectralPoint {
        lambda,
        tag: if lambda < 0.0 {
            SpectralTag::NonfriedrichsNeg
        } else {
            SpectralTag::NonfriedrichsPos
        },
        indices: m.map(|m| (m, 1)),
        residual,
        exact_zero: false,
    }
}

/// The interlaced root `λ_m ∈ (λ²_{m,β}, λ²_{m+1,β})` for `m ≥ 1`; `m = 0`
/// selects the root below the first pole, which must be positive.
pub fn parent_eigenvalue(geom: WedgeGeometry, alpha: f64, m: usize) -> Result<SpectralPoint> {
    if m == 0 {
        let p = alpha_singleton(geom, alpha)?;
        if p.lambda <= 0.0 {
            return Err(Error::domain(format!(
                "alpha = {alpha} has no positive root below the first Friedrichs eigenvalue"
            )));
        }
        return Ok(p);
    }
    let window = energy_window();
    let left = specfun::bessel_zero(geom.beta(), m)?.powi(2);
    let right = match specfun::bessel_zero(geom.beta(), m + 1) {
        Ok(x) => (x * x).min(window),
        Err(Error::Range(_)) => window,
        Err(e) => return Err(e),
    };
    if left >= window {
        return Err(Error::range(format!("lambda_{m} lies outside the energy window")));
    }
    let root = wedge_root(geom, alpha, left, right).map_err(|e| match e {
        Error::Convergence { .. } => Error::range(format!(
            "lambda_{m} for alpha = {alpha} lies beyond the energy window"
        )),
        e => e,
    })?;
    Ok(nonfriedrichs_point(geom, alpha, root, Some(m)))
}

/// The root of `Q^W_λ = α` below `λ²_{1,β}`.
pub fn alpha_singleton(geom: WedgeGeometry, alpha: f64) -> Result<SpectralPoint> {
    if !alpha.is_finite() {
        return Err(Error::domain("alpha must be finite"));
    }
    if alpha == -1.0 {
        return Ok(SpectralPoint {
            lambda: 0.0,
            tag: SpectralTag::NonfriedrichsPos,
            indices: None,
            residual: 0.0,
            exact_zero: true,
        });
    }
    let first_pole = specfun::bessel_zero(geom.beta(), 1)?.powi(2);
    let root = if alpha > -1.0 {
        wedge_root(geom, alpha, 0.0, first_pole)?
    } else {
        // walk down until Q^W < α
        let mut lo = -1.0;
        loop {
            if lo < -energy_window() {
                return Err(Error::range(format!(
                    "the negative root for alpha = {alpha} lies below the energy window"
                )));
            }
            if secular_wedge(geom, alpha, lo)? > 0.0 {
                break;
            }
            lo = (2.0 * lo).max(-energy_window() - 1.0);
            if lo < -energy_window() {
                lo = -energy_window();
                if secular_wedge(geom, alpha, lo)? <= 0.0 {
                    return Err(Error::range(format!(
                        "the negative root for alpha = {alpha} lies below the energy window"
                    )));
                }
                break;
            }
        }
        wedge_root(geom, alpha, lo, 0.0)?
    };
    Ok(nonfriedrichs_point(geom, alpha, root, None))
}

/// Solves `Q^W_λ = α` on every monotone branch up to `e_max`.
pub fn sigma_alpha(geom: WedgeGeometry, alpha: f64, e_max: f64) -> Result<AlphaSpectrum> {
    check_window(e_max)?;
    let single = alpha_singleton(geom, alpha)?;
    let mut out = AlphaSpectrum {
        negative: Vec::new(),
        low: Vec::new(),
        interlaced: Vec::new(),
    };
    if single.lambda < 0.0 {
        out.negative.push(single);
    } else if single.lambda <= e_max {
        out.low.push(single);
    }

    let window = energy_window();
    let poles: Vec<f64> = bessel_zeros_below(geom.beta(), window.sqrt())?
        .into_iter()
        .map(|x| x * x)
        .collect();
    for (i, &left) in poles.iter().enumerate() {
        if left >= e_max {
            break;
        }
        let right = poles.get(i + 1).copied().unwrap_or(window);
        let fa = secular_wedge(geom, alpha, left)?;
        let fb = secular_wedge(geom, alpha, right)?;
        if (fa < 0.0) == (fb < 0.0) {
            if poles.get(i + 1).is_some() {
                return Err(Error::convergence(
                    format!("no root of Q = {alpha} between poles {left} and {right}"),
                    0,
                ));
            }
            // the last branch leaves the window before reaching α
            break;
        }
        let root = wedge_root(geom, alpha, left, right)?;
        if root <= e_max {
            out.interlaced.push(nonfriedrichs_point(geom, alpha, root, Some(i + 1)));
        }
    }
    Ok(out)
}

/// `−γ^{−2}` when the point interaction `a = −1/γ` is attractive (γ > 0).
pub fn lead_bound_state(gamma: f64) -> Option<SpectralPoint> {
    (gamma > 0.0 && gamma.is_finite()).then(|| {
        let lambda = -1.0 / (gamma * gamma);
        SpectralPoint {
            lambda,
            tag: SpectralTag::LeadBound,
            indices: None,
            residual: (gamma - 1.0 / (-lambda).sqrt()).abs(),
            exact_zero: false,
        }
    })
}

/// Secular function on the negative axis written in `s = √|λ|` and multiplied
/// by `√|λ| J̃_β(λ) > 0`:
/// `K(s) = (γ s − 1)(α J̃_β + J̃_{−β}) − ε² s J̃_β`, all at `λ = −s²`.
fn hybrid_secular(geom: WedgeGeometry, c: &CouplingMatrix, s: f64) -> Result<(f64, f64)> {
    let lam = -s * s;
    let (p, dp) = specfun::tilde_j_real_with_derivative(geom.beta(), lam)?;
    let (m, dm) = specfun::tilde_j_real_with_derivative(-geom.beta(), lam)?;
    let g = c.alpha * p + m;
    let dg = -2.0 * s * (c.alpha * dp + dm);
    let dp_s = -2.0 * s * dp;
    let e2 = c.eps * c.eps;
    let k = (c.gamma * s - 1.0) * g - e2 * s * p;
    let dk = c.gamma * g + (c.gamma * s - 1.0) * dg - e2 * p - e2 * s * dp_s;
    Ok((k, dk))
}

/// `(γ − Q^L_λ)(α − Q^W_λ) − ε²` for real `λ < 0`.
pub fn hybrid_secular_real(geom: WedgeGeometry, c: &CouplingMatrix, lambda: f64) -> Result<f64> {
    if !(lambda < 0.0) {
        return Err(Error::domain("the real secular function is used on λ < 0"));
    }
    let q = qkrein::q_wedge_real(geom, lambda)?;
    Ok((c.gamma - 1.0 / (-lambda).sqrt()) * (c.alpha - q) - c.eps * c.eps)
}

const SCAN_PANELS: usize = 1000;

/// Discrete spectrum of `H_Θ` in `[λ_min, 0)`.
pub fn hybrid_discrete_spectrum(
    geom: WedgeGeometry,
    c: &CouplingMatrix,
    lambda_min: f64,
) -> Result<Vec<SpectralPoint>> {
    if !(lambda_min < 0.0 && lambda_min.is_finite()) {
        return Err(Error::domain("lambda_min must be finite and negative"));
    }
    if -lambda_min > energy_window() {
        return Err(Error::range(format!(
            "lambda_min = {lambda_min} lies outside the energy window"
        )));
    }
    let to_point = |lambda: f64| SpectralPoint {
        lambda,
        tag: SpectralTag::HybridBound,
        indices: None,
        residual: hybrid_secular_real(geom, c, lambda)
            .map(f64::abs)
            .unwrap_or(f64::NAN),
        exact_zero: false,
    };

    let mut found = Vec::new();
    if c.eps == 0.0 {
        // the product factorizes; solve each factor so that coincident roots survive
        if let Some(lead) = lead_bound_state(c.gamma) {
            if lead.lambda >= lambda_min {
                found.push(lead.lambda);
            }
        }
        match alpha_singleton(geom, c.alpha) {
            Ok(p) if p.lambda < 0.0 && p.lambda >= lambda_min => found.push(p.lambda),
            Ok(_) | Err(Error::Range(_)) => {}
            Err(e) => return Err(e),
        }
    } else {
        let s_max = (-lambda_min).sqrt();
        let s0 = 1e-9 * s_max;
        let h = (s_max - s0) / SCAN_PANELS as f64;
        let mut a = s0;
        let mut fa = hybrid_secular(geom, c, a)?.0;
        for i in 1..=SCAN_PANELS {
            let b = if i == SCAN_PANELS { s_max } else { s0 + h * i as f64 };
            let fb = hybrid_secular(geom, c, b)?.0;
            if fb == 0.0 {
                found.push(-b * b);
            } else if (fa < 0.0) != (fb < 0.0) && fa != 0.0 {
                let s = roots::bisect(|s| Ok(hybrid_secular(geom, c, s)?.0), a, b, fa)?;
                let s = roots::polish(|s| hybrid_secular(geom, c, s), s, a, b, 3)?;
                found.push(-s * s);
            }
            a = b;
            fa = fb;
        }
    }
    found.sort_by(|a, b| a.total_cmp(b));
    found.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
    Ok(found.into_iter().map(to_point).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn half_line() -> Self {
        Interval {
            lo: 0.0,
            hi: f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumParameters {
    pub beta: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub eps: f64,
    pub e_max: f64,
    pub lambda_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub essential: Interval,
    pub absolutely_continuous: Interval,
    /// The continuous spectrum is `continuous` minus the points listed here.
    pub continuous: Interval,
    pub continuous_removed: Vec<f64>,
    pub discrete: Vec<SpectralPoint>,
    pub point: Vec<SpectralPoint>,
    /// Whether 0 is a point eigenvalue. Only the decoupled α = −1 wedge has one.
    pub zero_in_point_spectrum: bool,
    pub parameters: SpectrumParameters,
}

/// Full classification of the real spectrum below `e_max`.
pub fn classify_spectrum(
    geom: WedgeGeometry,
    c: &CouplingMatrix,
    e_max: f64,
    lambda_min: f64,
) -> Result<SpectrumReport> {
    check_window(e_max)?;
    let embedded = sigma_f(geom, e_max)?;
    let mut discrete;
    let mut point;
    let mut zero_in_point_spectrum = false;

    if c.eps == 0.0 {
        // decoupled: σ_d(−L_γ) ∪ Σ^-_α discrete, plus every wedge eigenvalue embedded
        discrete = Vec::new();
        if let Some(lead) = lead_bound_state(c.gamma) {
            if lead.lambda >= lambda_min {
                discrete.push(lead);
            }
        }
        let wedge = match sigma_alpha(geom, c.alpha, e_max) {
            Ok(w) => w,
            Err(Error::Range(_)) if c.alpha < -1.0 => AlphaSpectrum {
                negative: Vec::new(),
                low: Vec::new(),
                interlaced: sigma_alpha_positive_only(geom, c.alpha, e_max)?,
            },
            Err(e) => return Err(e),
        };
        discrete.extend(wedge.negative.iter().filter(|p| p.lambda >= lambda_min).copied());
        point = discrete.clone();
        point.extend(wedge.positive());
        zero_in_point_spectrum = wedge.low.iter().any(|p| p.exact_zero);
    } else {
        discrete = hybrid_discrete_spectrum(geom, c, lambda_min)?;
        point = discrete.clone();
    }
    point.extend(embedded.iter().copied());
    discrete.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    point.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));

    Ok(SpectrumReport {
        essential: Interval::half_line(),
        absolutely_continuous: Interval::half_line(),
        continuous: Interval::half_line(),
        continuous_removed: embedded.iter().map(|p| p.lambda).collect(),
        discrete,
        point,
        zero_in_point_spectrum,
        parameters: SpectrumParameters {
            beta: geom.beta(),
            alpha: c.alpha,
            gamma: c.gamma,
            eps: c.eps,
            e_max,
            lambda_min,
        },
    })
}

fn sigma_alpha_positive_only(geom: WedgeGeometry, alpha: f64, e_max: f64) -> Result<Vec<SpectralPoint>> {
    // same interlaced search as sigma_alpha, used when the negative root is out of range
    let window = energy_window();
    let poles: Vec<f64> = bessel_zeros_below(geom.beta(), window.sqrt())?
        .into_iter()
        .map(|x| x * x)
        .collect();
    let mut out = Vec::new();
    for (i, &left) in poles.iter().enumerate() {
        if left >= e_max {
            break;
        }
        let Some(&right) = poles.get(i + 1) else { break };
        let root = wedge_root(geom, alpha, left, right)?;
        if root <= e_max {
            out.push(nonfriedrichs_point(geom, alpha, root, Some(i + 1)));
        }
    }
    Ok(out)
}

/// `Q^W` evaluated through the modified-Bessel form on `λ < 0`; independent
/// of the `J̃` ratio and used as a cross-check.
pub fn q_wedge_modified_bessel_form(geom: WedgeGeometry, lambda: f64) -> Result<f64> {
    if !(lambda < 0.0) {
        return Err(Error::domain("modified-Bessel form needs λ < 0"));
    }
    let b = geom.beta();
    let x = (-lambda).sqrt();
    let ctl = SeriesControl::default();
    let ip = specfun::bessel_i(specfun::BesselOrder::new(b)?, x, &ctl)?;
    let im = specfun::bessel_i(specfun::BesselOrder::new(-b)?, x, &ctl)?;
    Ok(specfun::gamma_ratio(b)? * (-lambda / 4.0).powf(b) * im / ip)
}
