use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_wedge-hybrid"));
    c.env_remove("WEDGE_HYBRID_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn csv_rows(s: &str) -> Vec<Vec<String>> {
    s.lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn spectrum_at_half_order() {
    let o = run(&["spectrum", "--beta", "0.5", "--alpha", "-2", "--gamma", "1", "--eps", "0.1", "--emax", "100"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.starts_with("lambda,tag,m,n,residual,discrete\n"));
    let rows = csv_rows(&out);
    let bound: Vec<f64> = rows
        .iter()
        .filter(|r| r[1] == "HYBRID_BOUND")
        .map(|r| r[0].parse().unwrap())
        .collect();
    assert!(!bound.is_empty());
    assert!(bound.iter().all(|&l| l < 0.0));
    // embedded Friedrichs eigenvalues at β = 1/2 are squared zeros of J_1
    let first = rows.iter().find(|r| r[1] == "FRIEDRICHS_EMBEDDED").unwrap();
    let l: f64 = first[0].parse().unwrap();
    assert!((l - 3.831_705_970_207_512_f64.powi(2)).abs() < 1e-9, "{l}");
}

#[test]
fn sweep_eps_starts_on_the_real_axis_and_descends() {
    let o = run(&["sweep-eps", "--beta", "0.75", "--alpha", "0", "--gamma", "1", "--m", "1", "--eps", "0:0.05:0.01"]);
    assert_eq!(o.status.code(), Some(0));
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 6);
    let im: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    assert_eq!(im[0], 0.0);
    assert!(im.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn json_output_replays_as_config() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("run.json");
    let args = ["resonances", "--beta", "0.8", "--alpha", "1.5", "--gamma", "-0.5", "--eps", "0.4", "--m", "1,2"];
    let direct = run(&args);
    assert_eq!(direct.status.code(), Some(0));
    let mut with_json = args.to_vec();
    with_json.extend(["--format", "json", "-o", json.to_str().unwrap()]);
    assert_eq!(run(&with_json).status.code(), Some(0));
    let replay = run(&["resonances", "--config", json.to_str().unwrap()]);
    assert_eq!(replay.status.code(), Some(0), "{}", String::from_utf8_lossy(&replay.stderr));
    assert_eq!(direct.stdout, replay.stdout);
}

#[test]
fn key_value_config_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("params.cfg");
    std::fs::write(&cfg, "# scan\nbeta = 0.6\nalpha = 0\ngamma = 1\neps = 0.2\nk = 1:3:0.5\n").unwrap();
    let from_file = run(&["scatter", "--config", cfg.to_str().unwrap(), "--eps", "0.3"]);
    let flags = run(&["scatter", "--beta", "0.6", "--alpha", "0", "--gamma", "1", "--eps", "0.3", "--k", "1:3:0.5"]);
    assert_eq!(from_file.status.code(), Some(0));
    assert_eq!(from_file.stdout, flags.stdout);
    for r in csv_rows(&stdout(&flags)) {
        let (re, im): (f64, f64) = (r[2].parse().unwrap(), r[3].parse().unwrap());
        assert!((re.hypot(im) - 1.0).abs() < 1e-12);
    }
}

#[test]
fn thread_count_does_not_change_output() {
    let args = ["sweep-beta", "--alpha", "0.5", "--gamma", "1", "--eps", "0.3", "--m", "1", "--beta", "0.5:0.9:0.05"];
    let one = bin().args(args).env("WEDGE_HYBRID_THREADS", "1").output().unwrap();
    let four = bin().args(args).env("WEDGE_HYBRID_THREADS", "4").output().unwrap();
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, four.stdout);
    assert_eq!(csv_rows(&stdout(&one)).len(), 9);
}

#[test]
fn kernel_blocks() {
    let lead = run(&["kernel", "--block", "lead", "--z", "-4,0", "--x", "0.5", "--y", "0.5"]);
    assert_eq!(lead.status.code(), Some(0));
    let r = &csv_rows(&stdout(&lead))[0];
    // (z + d²)⁻¹ with Neumann at 0, z = −4: −(e^{−2|x−y|} + e^{−2(x+y)})/4
    let exact = -(1.0 + (-2.0f64).exp()) / 4.0;
    assert!((r[1].parse::<f64>().unwrap() - exact).abs() < 1e-14);

    let args = [
        "kernel", "--beta", "0.7", "--alpha", "0.3", "--gamma", "1", "--eps", "0.5", "--z", "2,1", "--x", "0.4",
        "--y", "1.1", "--p", "0.5,1", "--q", "0.7,2",
    ];
    // the truncation estimate of the mode sum exceeds the default tolerance here
    let strict = run(&args);
    assert_eq!(strict.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&strict.stderr).contains("accuracy"));
    let mut loose = args.to_vec();
    loose.extend(["--mode-tol", "0.1"]);
    let hybrid = run(&loose);
    assert_eq!(hybrid.status.code(), Some(0), "{}", String::from_utf8_lossy(&hybrid.stderr));
    let blocks: Vec<String> = csv_rows(&stdout(&hybrid)).into_iter().map(|r| r[0].clone()).collect();
    assert_eq!(blocks, ["lead_lead", "lead_wedge", "wedge_lead", "wedge_wedge"]);
}

#[test]
fn selftest_passes() {
    let o = run(&["selftest"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert_eq!(out.lines().filter(|l| l.starts_with("PASS")).count(), 5);
    assert!(!out.contains("FAIL"));
}

#[test]
fn exit_codes() {
    // usage
    assert_eq!(run(&["bogus"]).status.code(), Some(64));
    assert_eq!(run(&["spectrum", "--alpha", "0", "--gamma", "1"]).status.code(), Some(64));
    assert_eq!(run(&["sweep-eps", "--beta", "0.7", "--alpha", "0", "--gamma", "1", "--eps", "1:0:0.1"]).status.code(), Some(64));
    let bad_threads = bin()
        .args(["selftest"])
        .env("WEDGE_HYBRID_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(bad_threads.status.code(), Some(64));
    // domain
    let o = run(&["spectrum", "--beta", "1.2", "--alpha", "0", "--gamma", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("domain"));
    // help is not an error
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    // missing config file is a usage error
    assert_eq!(run(&["spectrum", "--config", "/nonexistent/cfg"]).status.code(), Some(64));
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.cfg");
    std::fs::write(&cfg, "beta=0.7\nalpha=0\ngamma=1\nfoo=3\n").unwrap();
    let o = run(&["spectrum", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(64));
    assert!(String::from_utf8_lossy(&o.stderr).contains("foo"));
    assert!(!Path::new(&cfg).with_extension("out").exists());
}
