use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};

use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Value};

use wedge_hybrid::greens::{self, FriedrichsModes, HybridPoints};
use wedge_hybrid::qkrein::{CouplingMatrix, WedgeGeometry, WedgePoint};
use wedge_hybrid::resonance::{self, Sweep};
use wedge_hybrid::{scattering, spectra};

use crate::config::{parse_complex, parse_pair, Params};
use crate::output::{Cell, Format, Table};
use crate::{CliError, Command, Coupling, Io};

/// Resolved parameters echoed into JSON output; reading that output back as
/// a config reproduces the run.
type Echo = BTreeMap<String, Value>;

fn load(io: &Io) -> Result<Params, CliError> {
    match &io.config {
        Some(path) => Params::from_file(path),
        None => Ok(Params::default()),
    }
}

fn apply_coupling(p: &mut Params, c: Coupling) {
    p.set("beta", c.beta);
    p.set("alpha", c.alpha);
    p.set("gamma", c.gamma);
    p.set("eps", c.eps);
}

fn emit(io: &Io, table: &Table, echo: &Echo) -> Result<(), CliError> {
    let mut sink: Box<dyn Write> = match &io.output {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    };
    match io.format {
        Format::Csv => table.write_csv(&mut *sink)?,
        Format::Json => table.write_json(echo, &mut *sink)?,
    }
    sink.flush()?;
    Ok(())
}

fn coupling(p: &Params, echo: &mut Echo) -> Result<(WedgeGeometry, CouplingMatrix), CliError> {
    let beta = p.f64_required("beta")?;
    let alpha = p.f64_required("alpha")?;
    let gamma = p.f64_required("gamma")?;
    let eps = p.f64_or("eps", 0.0)?;
    echo.insert("beta".into(), json!(beta));
    echo.insert("alpha".into(), json!(alpha));
    echo.insert("gamma".into(), json!(gamma));
    echo.insert("eps".into(), json!(eps));
    Ok((WedgeGeometry::new(beta)?, CouplingMatrix::new(alpha, gamma, eps)?))
}

fn parse_indices(s: &str) -> Result<Vec<usize>, CliError> {
    let v: Vec<usize> = s
        .split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("m: '{t}' is not a non-negative integer")))
        })
        .collect::<Result<_, _>>()?;
    if v.is_empty() {
        return Err(CliError::Usage("m: empty list".into()));
    }
    Ok(v)
}

fn echo_command(echo: &mut Echo, name: &str) {
    echo.insert("command".into(), json!(name));
}

pub(crate) fn execute(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Spectrum {
            coupling: c,
            emax,
            lambda_min,
            io,
        } => {
            let mut p = load(&io)?;
            apply_coupling(&mut p, c);
            p.set("emax", emax);
            p.set("lambda_min", lambda_min);
            p.check_keys(&["beta", "alpha", "gamma", "eps", "emax", "lambda_min"])?;
            spectrum(&p, &io)
        }
        Command::Resonances { coupling: c, m, io } => {
            let mut p = load(&io)?;
            apply_coupling(&mut p, c);
            p.set("m", m);
            p.check_keys(&["beta", "alpha", "gamma", "eps", "m"])?;
            resonances(&p, &io)
        }
        Command::SweepEps {
            beta,
            alpha,
            gamma,
            m,
            eps,
            io,
        } => {
            let mut p = load(&io)?;
            p.set("beta", beta);
            p.set("alpha", alpha);
            p.set("gamma", gamma);
            p.set("m", m);
            p.set("eps", eps);
            p.check_keys(&["beta", "alpha", "gamma", "m", "eps"])?;
            sweep_eps(&p, &io)
        }
        Command::SweepBeta {
            alpha,
            gamma,
            eps,
            m,
            beta,
            io,
        } => {
            let mut p = load(&io)?;
            p.set("alpha", alpha);
            p.set("gamma", gamma);
            p.set("eps", eps);
            p.set("m", m);
            p.set("beta", beta);
            p.check_keys(&["beta", "alpha", "gamma", "m", "eps"])?;
            sweep_beta(&p, &io)
        }
        Command::Scatter { coupling: c, k, io } => {
            let mut p = load(&io)?;
            apply_coupling(&mut p, c);
            p.set("k", k);
            p.check_keys(&["beta", "alpha", "gamma", "eps", "k"])?;
            scatter(&p, &io)
        }
        Command::Kernel {
            coupling: c,
            block,
            z,
            x,
            y,
            p: pw,
            q: qw,
            mode_tol,
            io,
        } => {
            let mut p = load(&io)?;
            apply_coupling(&mut p, c);
            p.set("block", block);
            p.set("z", z);
            p.set("x", x);
            p.set("y", y);
            p.set("p", pw);
            p.set("q", qw);
            p.set("mode_tol", mode_tol);
            p.check_keys(&["beta", "alpha", "gamma", "eps", "block", "z", "x", "y", "p", "q", "mode_tol"])?;
            kernel(&p, &io)
        }
        Command::Selftest => unreachable!("handled by the caller"),
    }
}

fn spectrum(p: &Params, io: &Io) -> Result<(), CliError> {
    let mut echo = Echo::new();
    echo_command(&mut echo, "spectrum");
    let (geom, c) = coupling(p, &mut echo)?;
    let emax = p.f64_or("emax", spectra::default_e_max(geom))?;
    let lambda_min = p.f64_or("lambda_min", -100.0)?;
    echo.insert("emax".into(), json!(emax));
    echo.insert("lambda_min".into(), json!(lambda_min));
    let report = spectra::classify_spectrum(geom, &c, emax, lambda_min)?;
    let mut t = Table::new(&["lambda", "tag", "m", "n", "residual", "discrete"]);
    for pt in &report.point {
        let (m, n) = match pt.indices {
            Some((m, n)) => (Cell::Int(m), Cell::Int(n)),
            None => (Cell::Empty, Cell::Empty),
        };
        t.push(vec![
            Cell::Num(pt.lambda),
            Cell::Text(pt.tag.as_str().into()),
            m,
            n,
            Cell::Num(pt.residual),
            Cell::Bool(report.discrete.contains(pt)),
        ]);
    }
    emit(io, &t, &echo)
}

fn resonances(p: &Params, io: &Io) -> Result<(), CliError> {
    let mut echo = Echo::new();
    echo_command(&mut echo, "resonances");
    let (geom, c) = coupling(p, &mut echo)?;
    let ms_raw = p.raw("m").unwrap_or("1").to_string();
    let ms = parse_indices(&ms_raw)?;
    echo.insert("m".into(), json!(ms_raw));
    let results: Vec<_> = ms
        .par_iter()
        .map(|&m| resonance::locate_resonance(geom, &c, m))
        .collect();
    let mut t = Table::new(&["m", "eps", "re_z", "im_z", "method", "residual", "iterations"]);
    let mut failures = Vec::new();
    for (m, r) in ms.iter().zip(results) {
        match r {
            Ok(r) => t.push(vec![
                Cell::Int(*m),
                Cell::Num(r.eps),
                Cell::Num(r.z.re),
                Cell::Num(r.z.im),
                Cell::Text(r.method.as_str().into()),
                Cell::Num(r.residual),
                Cell::Int(r.iterations),
            ]),
            Err(e) => failures.push((*m, e)),
        }
    }
    if t.rows.is_empty() && !failures.is_empty() {
        return Err(failures.swap_remove(0).1.into());
    }
    emit(io, &t, &echo)?;
    if !failures.is_empty() {
        let list: Vec<String> = failures.iter().map(|(m, e)| format!("m={m}: {e}")).collect();
        return Err(CliError::Partial(list.join("; ")));
    }
    Ok(())
}

fn sweep_table(s: &Sweep) -> Table {
    let mut t = Table::new(&["param", "re_z", "im_z", "method", "residual"]);
    for r in &s.rows {
        t.push(vec![
            Cell::Num(r.param),
            Cell::Num(r.z.re),
            Cell::Num(r.z.im),
            Cell::Text(r.method.as_str().into()),
            Cell::Num(r.residual),
        ]);
    }
    t
}

fn sweep_outcome(io: &Io, s: &Sweep, echo: &Echo) -> Result<(), CliError> {
    emit(io, &sweep_table(s), echo)?;
    if !s.failures.is_empty() {
        let list: Vec<String> = s
            .failures
            .iter()
            .map(|f| format!("row {} (param {}): {}", f.index, f.param, f.message))
            .collect();
        return Err(CliError::Partial(format!("sweep incomplete: {}", list.join("; "))));
    }
    Ok(())
}

fn sweep_eps(p: &Params, io: &Io) -> Result<(), CliError> {
    let mut echo = Echo::new();
    echo_command(&mut echo, "sweep-eps");
    let beta = p.f64_required("beta")?;
    let alpha = p.f64_required("alpha")?;
    let gamma = p.f64_required("gamma")?;
    let m = p.usize_or("m", 1)?;
    let grid = p.grid("eps")?;
    echo.insert("beta".into(), json!(beta));
    echo.insert("alpha".into(), json!(alpha));
    echo.insert("gamma".into(), json!(gamma));
    echo.insert("m".into(), json!(m));
    echo.insert("eps".into(), json!(p.raw("eps").unwrap_or_default()));
    let s = resonance::sweep_eps(WedgeGeometry::new(beta)?, alpha, gamma, m, &grid)?;
    sweep_outcome(io, &s, &echo)
}

fn sweep_beta(p: &Params, io: &Io) -> Result<(), CliError> {
    let mut echo = Echo::new();
    echo_command(&mut echo, "sweep-beta");
    let alpha = p.f64_required("alpha")?;
    let gamma = p.f64_required("gamma")?;
    let eps = p.f64_required("eps")?;
    let m = p.usize_or("m", 1)?;
    let grid = p.grid("beta")?;
    echo.insert("alpha".into(), json!(alpha));
    echo.insert("gamma".into(), json!(gamma));
    echo.insert("eps".into(), json!(eps));
    echo.insert("m".into(), json!(m));
    echo.insert("beta".into(), json!(p.raw("beta").unwrap_or_default()));
    let s = resonance::sweep_beta(alpha, gamma, eps, m, &grid)?;
    sweep_outcome(io, &s, &echo)
}

fn scatter(p: &Params, io: &Io) -> Result<(), CliError> {
    let mut echo = Echo::new();
    echo_command(&mut echo, "scatter");
    let (geom, c) = coupling(p, &mut echo)?;
    let grid = p.grid("k")?;
    echo.insert("k".into(), json!(p.raw("k").unwrap_or_default()));
    let recs = scattering::phase_scan(geom, &c, &grid)?;
    let mut t = Table::new(&["k", "lambda", "re_r", "im_r", "phase", "unwrapped_phase", "at_pole"]);
    for r in &recs {
        t.push(vec![
            Cell::Num(r.k),
            Cell::Num(r.lambda),
            Cell::Num(r.refl.re),
            Cell::Num(r.refl.im),
            Cell::Num(r.phase),
            Cell::Num(r.unwrapped_phase),
            Cell::Bool(r.at_pole),
        ]);
    }
    emit(io, &t, &echo)
}

fn wedge_point(p: &Params, key: &str, geom: WedgeGeometry, echo: &mut Echo) -> Result<WedgePoint, CliError> {
    let raw = p
        .raw(key)
        .ok_or_else(|| CliError::Usage(format!("missing required point --{key} r,theta")))?;
    let (r, theta) = parse_pair(key, raw)?;
    echo.insert(key.into(), json!(raw));
    Ok(WedgePoint::on_closure(geom, r, theta)?)
}

fn lead_point(p: &Params, key: &str, echo: &mut Echo) -> Result<f64, CliError> {
    let v = p.f64_required(key)?;
    echo.insert(key.into(), json!(v));
    Ok(v)
}

fn kernel(p: &Params, io: &Io) -> Result<(), CliError> {
    let mut echo = Echo::new();
    echo_command(&mut echo, "kernel");
    let block = p.raw("block").unwrap_or("hybrid").to_string();
    echo.insert("block".into(), json!(block));
    let z_raw = p
        .raw("z")
        .ok_or_else(|| CliError::Usage("missing required parameter --z re,im".into()))?;
    let z: Complex64 = parse_complex("z", z_raw)?;
    echo.insert("z".into(), json!(z_raw));
    let mode_tol = p.f64_or("mode_tol", 1e-2)?;
    let mut t = Table::new(&["block", "re", "im", "error"]);
    let mut row = |name: &str, v: Complex64, err: f64| {
        t.push(vec![Cell::Text(name.into()), Cell::Num(v.re), Cell::Num(v.im), Cell::Num(err)]);
    };
    let check = |err: f64| -> Result<(), CliError> {
        if err > mode_tol {
            return Err(wedge_hybrid::Error::Accuracy {
                message: "Friedrichs mode window too small for --mode-tol".into(),
                estimate: err,
            }
            .into());
        }
        Ok(())
    };
    match block.as_str() {
        "lead" => {
            let x = lead_point(p, "x", &mut echo)?;
            let y = lead_point(p, "y", &mut echo)?;
            row("lead", greens::resolvent_lead(z, x, y)?, 0.0);
        }
        "friedrichs" => {
            let beta = p.f64_required("beta")?;
            echo.insert("beta".into(), json!(beta));
            echo.insert("mode_tol".into(), json!(mode_tol));
            let geom = WedgeGeometry::new(beta)?;
            let pw = wedge_point(p, "p", geom, &mut echo)?;
            let qw = wedge_point(p, "q", geom, &mut echo)?;
            let v = greens::resolvent_friedrichs(geom, z, pw, qw, mode_tol)?;
            row("friedrichs", v.value, v.error);
        }
        "alpha" => {
            let beta = p.f64_required("beta")?;
            let alpha = p.f64_required("alpha")?;
            echo.insert("beta".into(), json!(beta));
            echo.insert("alpha".into(), json!(alpha));
            echo.insert("mode_tol".into(), json!(mode_tol));
            let geom = WedgeGeometry::new(beta)?;
            let pw = wedge_point(p, "p", geom, &mut echo)?;
            let qw = wedge_point(p, "q", geom, &mut echo)?;
            let modes = FriedrichsModes::new(geom, greens::DEFAULT_MODE_WINDOW)?;
            let v = greens::resolvent_wedge_alpha(&modes, alpha, z, pw, qw)?;
            check(v.error)?;
            row("alpha", v.value, v.error);
        }
        "hybrid" => {
            let (geom, c) = coupling(p, &mut echo)?;
            echo.insert("mode_tol".into(), json!(mode_tol));
            let x = lead_point(p, "x", &mut echo)?;
            let y = lead_point(p, "y", &mut echo)?;
            let pw = wedge_point(p, "p", geom, &mut echo)?;
            let qw = wedge_point(p, "q", geom, &mut echo)?;
            let modes = FriedrichsModes::new(geom, greens::DEFAULT_MODE_WINDOW)?;
            let k = greens::resolvent_hybrid(&modes, &c, z, &HybridPoints { x, y, p: pw, q: qw })?;
            check(k.error)?;
            row("lead_lead", k.lead_lead, 0.0);
            row("lead_wedge", k.lead_wedge, 0.0);
            row("wedge_lead", k.wedge_lead, 0.0);
            row("wedge_wedge", k.wedge_wedge, k.error);
        }
        other => {
            return Err(CliError::Usage(format!(
                "unknown block '{other}' (expected lead, friedrichs, alpha or hybrid)"
            )))
        }
    }
    emit(io, &t, &echo)
}
