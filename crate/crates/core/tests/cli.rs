use std::path::Path;
use std::process::{Command, Output};

use nss_etd::config::{save_config, GridConfig, OutputConfig, RunConfig, Segment, OUTPUT_DIR_ENV};
use nss_etd::series::read_trace;

fn nss(args: &[&str], out_dir: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_nss-etd"));
    cmd.args(args).env_remove(OUTPUT_DIR_ENV);
    if let Some(d) = out_dir {
        cmd.env(OUTPUT_DIR_ENV, d);
    }
    cmd.output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn value(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(key).map(|v| v.trim().parse::<f64>().unwrap()))
        .unwrap_or_else(|| panic!("no {key} in {text}"))
}

#[test]
fn constants_prints_regularization_bound() {
    let o = nss(&["constants", "--kappa", "0.25", "--eps", "0.1"], None);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!((value(&s, "gamma0") - 4.336941160311).abs() < 1e-11);
    assert!((value(&s, "alpha0") - 0.057660284444).abs() < 1e-11);
    assert!((value(&s, "A_min") / 1.0040695851481782e7 - 1.0).abs() < 1e-11);
}

#[test]
fn constants_warns_below_quarter_kappa() {
    let o = nss(&["constants", "--kappa", "0.125", "--eps", "0.5"], None);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(nss(&["frobnicate"], None).status.code(), Some(2));
    assert_eq!(nss(&["constants", "--kappa", "0.25"], None).status.code(), Some(2));
    assert_eq!(nss(&["check", "--suite", "nope"], None).status.code(), Some(2));
    assert_eq!(nss(&["fit", "x.csv", "--kind", "energy", "--window", "5"], None).status.code(), Some(2));
}

#[test]
fn failures_exit_nonzero_with_diagnostic() {
    let o = nss(&["run", "/nonexistent/config.toml"], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
}

#[test]
fn fit_recovers_synthetic_power_law() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("trace.csv");
    let mut text = String::from("t,energy,modified_energy,roughness,slope,char_length,mass_mean\n");
    for i in 1..=60 {
        let t = 10.0 * i as f64;
        text += &format!("{t:.16e},{:.16e},,{:.16e},1,,0\n", -41.0983 * t.ln() - 148.641, 0.4071 * t.powf(0.5001));
    }
    std::fs::write(&csv, text).unwrap();
    let plot = dir.path().join("fit.gp");
    let o = nss(
        &["fit", csv.to_str().unwrap(), "--kind", "roughness", "--window", "10,600", "--plot", plot.to_str().unwrap()],
        None,
    );
    assert!(o.status.success(), "{o:?}");
    let s = stdout(&o);
    assert!((value(&s, "a ") - 0.4071).abs() < 1e-9);
    assert!((value(&s, "b ") - 0.5001).abs() < 1e-9);
    assert!(std::fs::read_to_string(&plot).unwrap().contains("plot '"));

    let o = nss(&["fit", csv.to_str().unwrap(), "--kind", "energy", "--gamma", "-500"], None);
    let s = stdout(&o);
    assert!((value(&s, "a ") + 41.0983).abs() < 1e-9);
    let t_sat = value(&s, "saturation");
    assert!((t_sat / ((-500.0f64 + 148.641) / -41.0983).exp() - 1.0).abs() < 1e-6);
}

#[test]
fn converge_on_two_grids_prints_orders() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::convergence_study();
    let study = cfg.convergence.as_mut().unwrap();
    study.ns = vec![16, 32];
    study.t_final = 0.25;
    let path = dir.path().join("conv.toml");
    save_config(&cfg, &path).unwrap();
    let out = dir.path().join("out");
    let o = nss(&["converge", path.to_str().unwrap()], Some(&out));
    assert!(o.status.success(), "{o:?}");
    let s = stdout(&o);
    let order: f64 = s
        .lines()
        .find_map(|l| l.strip_prefix("order   L2:"))
        .and_then(|v| v.split_whitespace().next())
        .unwrap()
        .parse()
        .unwrap();
    assert!(order > 2.0, "{s}");
    assert!(out.join("convergence.csv").exists());
}

#[test]
fn run_stop_resume_and_refusal() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        grid: Some(GridConfig { n: 16, length: 3.2 }),
        schedule: vec![Segment { t_end: 0.2, dt: 0.01 }],
        output: OutputConfig { sample_interval: 0.05, ..OutputConfig::default() },
        ..RunConfig::desk_coarsening()
    };
    let path = dir.path().join("run.toml");
    save_config(&cfg, &path).unwrap();
    let out = dir.path().join("out");
    let o = nss(&["run", path.to_str().unwrap(), "--max-steps", "10"], Some(&out));
    assert!(o.status.success(), "{o:?}");
    let ck = out.join("checkpoint_0000000010.bin");
    assert!(ck.exists());
    assert_eq!(read_trace(&out.join("trace.csv")).unwrap().len(), 3);

    let o = nss(&["resume", ck.to_str().unwrap(), path.to_str().unwrap()], Some(&out));
    assert!(o.status.success(), "{o:?}");
    let trace = read_trace(&out.join("trace.csv")).unwrap();
    assert_eq!(trace.len(), 5);
    assert!((trace[4].t - 0.2).abs() < 1e-12);

    let other = RunConfig { grid: Some(GridConfig { n: 32, length: 3.2 }), ..cfg };
    let other_path = dir.path().join("other.toml");
    save_config(&other, &other_path).unwrap();
    let o = nss(&["resume", ck.to_str().unwrap(), other_path.to_str().unwrap()], Some(&out));
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("does not match"));
}

#[test]
fn check_suites_pass() {
    for suite in ["operators", "convexity"] {
        let o = nss(&["check", "--suite", suite], None);
        assert!(o.status.success(), "{suite}: {}", stdout(&o));
        assert!(!stdout(&o).contains("FAIL"));
    }
}

#[test]
fn shipped_configs_load() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    for name in ["desk.toml", "full.toml", "convergence.toml"] {
        nss_etd::config::load_config(&dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
    let desk = nss_etd::config::load_config(&dir.join("desk.toml")).unwrap();
    assert_eq!(desk, RunConfig::desk_coarsening());
}
