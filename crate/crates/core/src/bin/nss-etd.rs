use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use nss_etd::checkpoint::read_checkpoint;
use nss_etd::config::{load_config, ExperimentKind, RunConfig};
use nss_etd::experiments::{
    resume_coarsening, run_coarsening, run_convergence, saturation_estimate, fit_scaling, CoarseningTrace,
    FitKind, RunOptions, TRACE_FILE,
};
use nss_etd::model::{energy_lower_bound, stability_constants, ModelParams};
use nss_etd::series::{convergence_plot_script, fit_plot_script, read_trace, write_convergence, Table};
use nss_etd::{suites, Error, Result};

#[derive(Parser)]
#[command(name = "nss-etd", version, about = "ETD solver for the no-slope-selection thin-film equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Manufactured-solution accuracy study; prints the order table.
    Converge { config: PathBuf },
    /// Coarsening run; writes trace and checkpoints to the output directory.
    Run {
        config: PathBuf,
        /// Stop after this many steps (a checkpoint is written).
        #[arg(long)]
        max_steps: Option<u64>,
    },
    /// Continue a coarsening run from a checkpoint.
    Resume {
        checkpoint: PathBuf,
        config: PathBuf,
        #[arg(long)]
        max_steps: Option<u64>,
    },
    /// Fit a scaling law to a trace.
    Fit {
        trace: PathBuf,
        #[arg(long, value_enum)]
        kind: Kind,
        /// Time window `a,b`.
        #[arg(long, value_parser = parse_window, default_value = "10,400")]
        window: (f64, f64),
        /// Also write a gnuplot script here.
        #[arg(long)]
        plot: Option<PathBuf>,
        /// Energy lower bound for a saturation estimate (energy fits only).
        #[arg(long, allow_hyphen_values = true)]
        gamma: Option<f64>,
    },
    /// Stability constants and the minimal regularization A.
    Constants {
        #[arg(long)]
        kappa: f64,
        #[arg(long)]
        eps: f64,
        /// Domain length, for the energy lower bound.
        #[arg(long)]
        length: Option<f64>,
    },
    /// Property suites.
    Check {
        #[arg(long, value_enum)]
        suite: Suite,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Energy,
    Roughness,
    Slope,
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Operators,
    Stability,
    Convexity,
}

fn parse_window(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected a,b")?;
    let a: f64 = a.trim().parse().map_err(|e| format!("{a}: {e}"))?;
    let b: f64 = b.trim().parse().map_err(|e| format!("{b}: {e}"))?;
    if !(a > 0.0 && b > a) {
        return Err(format!("need 0 < a < b, got {a},{b}"));
    }
    Ok((a, b))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn load(path: &Path, expected: ExperimentKind) -> Result<RunConfig> {
    let cfg = load_config(path)?;
    if cfg.experiment != expected {
        return Err(Error::Config {
            path: path.to_path_buf(),
            message: format!("experiment is {:?}, this command needs {expected:?}", cfg.experiment),
        });
    }
    Ok(cfg)
}

fn dispatch(cmd: Command) -> Result<bool> {
    match cmd {
        Command::Converge { config } => {
            let cfg = load(&config, ExperimentKind::Convergence)?;
            let study = cfg.convergence.clone().expect("validated");
            let r = run_convergence(&study, &cfg.model, cfg.scheme, cfg.startup)?;
            println!("{:>5} {:>12} {:>12} {:>12} {:>12}", "N", "dt", "L1", "L2", "Linf");
            for row in &r.rows {
                println!(
                    "{:>5} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e}",
                    row.n, row.dt, row.err_l1, row.err_l2, row.err_linf
                );
            }
            for (name, f) in r.orders() {
                println!("order {name:>4}: {:.4} +- {:.4}", f.order, f.stderr);
            }
            let dir = cfg.output_dir();
            let csv = dir.join("convergence.csv");
            write_convergence(&r.rows, &csv)?;
            std::fs::write(dir.join("convergence.gp"), convergence_plot_script(&csv))?;
            println!("wrote {}", csv.display());
            Ok(true)
        }
        Command::Run { config, max_steps } => {
            let cfg = load(&config, ExperimentKind::Coarsening)?;
            let opts = RunOptions { out_dir: Some(cfg.output_dir()), max_steps, verbose: true };
            summarize(&cfg, &run_coarsening(&cfg, &opts)?)
        }
        Command::Resume { checkpoint, config, max_steps } => {
            let cfg = load(&config, ExperimentKind::Coarsening)?;
            let ck = read_checkpoint(&checkpoint)?;
            let dir = cfg.output_dir();
            let trace_path = dir.join(TRACE_FILE);
            let prior = if trace_path.exists() {
                read_trace(&trace_path)?
            } else {
                eprintln!("no {} found, the trace restarts at t = {}", trace_path.display(), ck.t());
                Vec::new()
            };
            let opts = RunOptions { out_dir: Some(dir), max_steps, verbose: true };
            summarize(&cfg, &resume_coarsening(&cfg, &ck, prior, &opts)?)
        }
        Command::Fit { trace, kind, window, plot, gamma } => {
            let kind = match kind {
                Kind::Energy => FitKind::Energy,
                Kind::Roughness => FitKind::Roughness,
                Kind::Slope => FitKind::Slope,
            };
            let table = Table::read(&trace)?;
            let (t, y) = table.pairs("t", kind.column())?;
            let fit = fit_scaling(&t, &y, kind, window)?;
            println!("kind {}", kind.column());
            println!("window {} {}", window.0, window.1);
            println!("samples {}", fit.samples);
            println!("a {:.10e}", fit.a);
            println!("b {:.10e}", fit.b);
            println!("rms {:.4e}", fit.rms);
            if let Some(g) = gamma {
                println!("saturation {:.6e}", saturation_estimate(&fit, g)?);
            }
            if let Some(path) = plot {
                std::fs::write(&path, fit_plot_script(&trace, kind.column(), &fit))?;
                println!("wrote {}", path.display());
            }
            Ok(true)
        }
        Command::Constants { kappa, eps, length } => {
            let sc = stability_constants(&ModelParams::new(eps, kappa, 0.0))?;
            println!("kappa   {}", sc.kappa);
            println!("eps     {}", sc.eps);
            println!("kappa0  {}", sc.kappa0);
            println!("kappa*  {}", sc.kappa_star);
            println!("C4      {:.12}", sc.c4);
            println!("C5      {:.12}", sc.c5);
            println!("gamma1  {:.12}", sc.gamma1);
            println!("gamma2  {:.12}", sc.gamma2);
            println!("gamma3  {:.12}", sc.gamma3);
            println!("gamma0  {:.12}", sc.gamma0);
            println!("alpha0  {:.12}", sc.alpha0);
            println!("A_min   {:.12e}", sc.a_min);
            if let Some(l) = length {
                println!("E_min   {:.12}", energy_lower_bound(eps, l)?);
            }
            if let Some(w) = sc.warning() {
                eprintln!("warning: {w}");
            }
            Ok(true)
        }
        Command::Check { suite } => {
            let report = match suite {
                Suite::Operators => suites::operators(1)?,
                Suite::Stability => suites::stability(2000, 1)?,
                Suite::Convexity => suites::convexity(),
            };
            print!("{report}");
            Ok(report.passed())
        }
    }
}

fn summarize(cfg: &RunConfig, trace: &CoarseningTrace) -> Result<bool> {
    let last = trace.samples.last();
    println!(
        "{} samples, t = {}, completed {}",
        trace.samples.len(),
        last.map_or(f64::NAN, |o| o.t),
        trace.completed
    );
    if let Some(ck) = &trace.last_checkpoint {
        println!("checkpoint {}", ck.display());
    }
    println!("trace {}", cfg.output_dir().join(TRACE_FILE).display());
    Ok(true)
}
