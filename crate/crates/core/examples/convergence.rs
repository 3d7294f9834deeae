//! Manufactured-solution accuracy study with `U = sin(2 pi x) cos(2 pi y) cos t`.
//!
//! ```text
//! cargo run --release --example convergence -- 64 80 96 112 128
//! ```
//!
//! Prints the error table and the fitted order per norm, and writes
//! `convergence.csv` plus a gnuplot script into the output directory.

use std::path::PathBuf;

use nss_etd::config::{RunConfig, OUTPUT_DIR_ENV};
use nss_etd::experiments::run_convergence;
use nss_etd::series::{convergence_plot_script, write_convergence};

fn main() -> nss_etd::Result<()> {
    let mut cfg = RunConfig::convergence_study();
    let ns: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let study = cfg.convergence.as_mut().expect("preset has a study");
    if !ns.is_empty() {
        study.ns = ns;
    }
    cfg.validate()?;
    let study = cfg.convergence.clone().expect("validated");
    let started = std::time::Instant::now();
    let result = run_convergence(&study, &cfg.model, cfg.scheme, cfg.startup)?;

    println!("{:>5} {:>12} {:>12} {:>12} {:>12}", "N", "dt", "L1", "L2", "Linf");
    for r in &result.rows {
        println!("{:>5} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e}", r.n, r.dt, r.err_l1, r.err_l2, r.err_linf);
    }
    for (name, fit) in result.orders() {
        println!("order {name:>4}: {:.4} +- {:.4}", fit.order, fit.stderr);
    }
    println!("elapsed {:.1?}", started.elapsed());

    let dir = std::env::var_os(OUTPUT_DIR_ENV).map_or_else(|| PathBuf::from("output/convergence"), PathBuf::from);
    let csv = dir.join("convergence.csv");
    write_convergence(&result.rows, &csv)?;
    std::fs::write(dir.join("convergence.gp"), convergence_plot_script(&csv))?;
    println!("wrote {}", csv.display());
    Ok(())
}
