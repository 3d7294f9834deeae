//! Coarsening run with scaling-law fits.
//!
//! ```text
//! cargo run --release --example coarsening            # desk scale, eps = 0.04, N = 128, t <= 400
//! cargo run --release --example coarsening -- full    # eps = 0.02, N = 512, t <= 3e5 (days)
//! ```
//!
//! Writes `trace.csv` and numbered checkpoints, then fits `E ~ a ln t + b`,
//! `h ~ a t^b` and `m ~ a t^b` on `[10, 400]` and extrapolates the time at
//! which the energy fit meets the lower bound of the energy.

use nss_etd::config::RunConfig;
use nss_etd::experiments::{run_coarsening, saturation_estimate, FitKind, RunOptions};
use nss_etd::model::energy_lower_bound;

fn main() -> nss_etd::Result<()> {
    let cfg = match std::env::args().nth(1).as_deref() {
        Some("full") => RunConfig::full_coarsening(),
        _ => RunConfig::desk_coarsening(),
    };
    let grid = cfg.grid_config()?;
    let opts = RunOptions { out_dir: Some(cfg.output_dir()), verbose: true, ..RunOptions::default() };
    let started = std::time::Instant::now();
    let trace = run_coarsening(&cfg, &opts)?;
    println!("{} samples in {:.1?}", trace.samples.len(), started.elapsed());

    let gamma = energy_lower_bound(cfg.model.eps, grid.length)?;
    let min_e = trace.samples.iter().map(|o| o.energy).fold(f64::INFINITY, f64::min);
    println!("energy lower bound {gamma:.6}, smallest sampled energy {min_e:.6}");

    let window = (10.0, 400.0);
    for kind in [FitKind::Energy, FitKind::Roughness, FitKind::Slope] {
        let fit = trace.fit(kind, window)?;
        println!("{:>9}: a = {:.6}, b = {:.6} (rms {:.2e}, {} samples)", kind.column(), fit.a, fit.b, fit.rms, fit.samples);
        if kind == FitKind::Energy {
            match saturation_estimate(&fit, gamma) {
                Ok(t) => println!("           saturation expected near t = {t:.4e}"),
                Err(e) => println!("           no saturation estimate: {e}"),
            }
        }
    }
    Ok(())
}
