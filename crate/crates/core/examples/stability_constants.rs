//! Constants of the energy-stability estimate and the minimal regularization.
//!
//! ```text
//! cargo run --example stability_constants -- 0.25 0.1
//! ```
//!
//! Arguments are `kappa eps [length]`; the length adds the energy lower bound.

use nss_etd::model::{energy_lower_bound, stability_constants, ModelParams};

fn main() -> nss_etd::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let kappa = args.first().copied().unwrap_or(0.25);
    let eps = args.get(1).copied().unwrap_or(0.1);
    let sc = stability_constants(&ModelParams::new(eps, kappa, 0.0))?;
    println!("kappa {kappa}, eps {eps}");
    println!("  kappa0 {}  kappa* {}", sc.kappa0, sc.kappa_star);
    println!("  C4 {:.10}  C5 {:.10}", sc.c4, sc.c5);
    println!("  gamma1 {:.10}  gamma2 {:.10}  gamma3 {:.10}", sc.gamma1, sc.gamma2, sc.gamma3);
    println!("  gamma0 {:.10}  alpha0 {:.10}", sc.gamma0, sc.alpha0);
    println!("  A_min {:.10e}", sc.a_min);
    if let Some(w) = sc.warning() {
        println!("  warning: {w}");
    }
    if let Some(&l) = args.get(2) {
        println!("  energy lower bound on [0, {l}]^2: {:.10}", energy_lower_bound(eps, l)?);
    }

    println!("\nA_min as eps shrinks at kappa = {kappa}:");
    for e in [0.5, 0.2, 0.1, 0.05, 0.02] {
        let sc = stability_constants(&ModelParams::new(e, kappa, 0.0))?;
        println!("  eps {e:<5} A_min {:.6e}", sc.a_min);
    }
    Ok(())
}
