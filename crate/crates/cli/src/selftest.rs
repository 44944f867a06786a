//! Quick closed-form oracle checks for a fresh build.

use std::f64::consts::PI;

use num_complex::Complex64;

use wedge_hybrid::qkrein::{self, CouplingMatrix, WedgeGeometry};
use wedge_hybrid::{scattering, specfun, spectra};

use crate::CliError;

type Check = Result<String, String>;

fn half_order_q() -> Check {
    let g = WedgeGeometry::new(0.5).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for i in 0..400 {
        let x = 0.05 + 17.0 * i as f64 / 400.0;
        if (x / PI - (x / PI).round()).abs() * PI < 1e-3 {
            continue;
        }
        let q = qkrein::q_wedge_real(g, x * x).map_err(|e| e.to_string())?;
        worst = worst.max((q + x / x.tan()).abs() / (x / x.tan()).abs());
        let q = qkrein::q_wedge_real(g, -x * x).map_err(|e| e.to_string())?;
        worst = worst.max((q + x / x.tanh()).abs() / (x / x.tanh()));
    }
    if worst < 1e-10 {
        Ok(format!("max rel residual {worst:.3e}"))
    } else {
        Err(format!("max rel residual {worst:.3e}"))
    }
}

fn normalization() -> Check {
    let mut worst: f64 = 0.0;
    for i in 0..10 {
        let g = WedgeGeometry::new(0.5 + 0.05 * i as f64).map_err(|e| e.to_string())?;
        let q = qkrein::q_wedge(g, Complex64::new(0.0, 0.0)).map_err(|e| e.to_string())?;
        worst = worst.max((q + 1.0).norm());
    }
    if worst < 1e-12 {
        Ok(format!("max |Q(0)+1| {worst:.3e}"))
    } else {
        Err(format!("max |Q(0)+1| {worst:.3e}"))
    }
}

fn alpha_zero_roots() -> Check {
    let g = WedgeGeometry::new(0.5).map_err(|e| e.to_string())?;
    let pos = spectra::sigma_alpha(g, 0.0, 300.0).map_err(|e| e.to_string())?.positive();
    let mut worst: f64 = 0.0;
    for k in 1..=5 {
        let exact = (PI * (k as f64 - 0.5)).powi(2);
        let got = pos.get(k - 1).ok_or("missing root")?.lambda;
        worst = worst.max((got - exact).abs() / exact);
    }
    if worst < 1e-10 {
        Ok(format!("max rel residual {worst:.3e}"))
    } else {
        Err(format!("max rel residual {worst:.3e}"))
    }
}

fn interlacing() -> Check {
    for b in [0.5, 0.7, 0.9] {
        let g = WedgeGeometry::new(b).map_err(|e| e.to_string())?;
        for alpha in [-3.0, -1.0, 0.0, 2.0] {
            for m in 1..=4 {
                let lm = spectra::parent_eigenvalue(g, alpha, m).map_err(|e| e.to_string())?.lambda;
                let lo = specfun::bessel_zero(b, m).map_err(|e| e.to_string())?.powi(2);
                let hi = specfun::bessel_zero(b, m + 1).map_err(|e| e.to_string())?.powi(2);
                if !(lo < lm && lm < hi) {
                    return Err(format!("beta={b} alpha={alpha} m={m}: {lm} outside ({lo}, {hi})"));
                }
            }
        }
    }
    Ok("48 roots strictly interlaced".into())
}

// splitmix64, enough for reproducible sampling here
struct Sampler(u64);

impl Sampler {
    fn next(&mut self) -> f64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
        (z >> 11) as f64 / (1u64 << 53) as f64
    }

    fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next()
    }
}

fn unitarity() -> Check {
    let mut s = Sampler(2024);
    let samples = 2000;
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let g = WedgeGeometry::new(s.range(0.5, 0.99)).map_err(|e| e.to_string())?;
        let c = CouplingMatrix::new(s.range(-5.0, 5.0), s.range(-5.0, 5.0), s.range(0.0, 3.0))
            .map_err(|e| e.to_string())?;
        let k = s.range(0.01, 19.9);
        let r = scattering::reflection(g, &c, k).map_err(|e| e.to_string())?;
        worst = worst.max((r.norm() - 1.0).abs());
    }
    if worst < 1e-12 {
        Ok(format!("{samples} samples, max ||R|-1| {worst:.3e}"))
    } else {
        Err(format!("{samples} samples, max ||R|-1| {worst:.3e}"))
    }
}

pub fn run() -> Result<(), CliError> {
    let checks: [(&str, fn() -> Check); 5] = [
        ("closed-form Q at beta=1/2", half_order_q),
        ("Q(0) = -1", normalization),
        ("alpha=0 roots at beta=1/2", alpha_zero_roots),
        ("interlacing", interlacing),
        ("unitarity", unitarity),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        match check() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    if failed > 0 {
        return Err(CliError::Partial(format!("selftest: {failed} check(s) failed")));
    }
    Ok(())
}
