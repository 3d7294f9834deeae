//! Energy behaviour of ETD1 and of the regularized third-order scheme at
//! large time steps.
//!
//! ```text
//! cargo run --release --example energy_stability
//! ```
//!
//! ETD1 decreases the energy itself. The third-order scheme with `A >= A_min`
//! decreases the modified energy, which adds history terms to `E`.

use nss_etd::model::{energy, modified_energy, stability_constants, ModelParams};
use nss_etd::schemes::{Integrator, Scheme, StartupPolicy};
use nss_etd::spectral::SpectralGrid;
use nss_etd::suites::low_mode_field;

fn main() -> nss_etd::Result<()> {
    let grid = SpectralGrid::new(64, 1.0)?;
    let u0 = low_mode_field(&grid, 7, 6, 0.05);
    let steps = 200;

    let mut p = ModelParams::new(0.1, 0.25, 0.0);
    let sc = stability_constants(&p)?;
    p.a = sc.a_min;
    println!("third-order scheme, A = {:.4e}", p.a);
    for dt in [0.01, 0.1, 1.0] {
        let mut it = Integrator::new(grid.clone(), p, Scheme::Etd3)?;
        let mut s = it.init_state(&u0, 0.0, dt, StartupPolicy::CopyInitial)?;
        let e0 = modified_energy(&grid, &u0, &u0, &u0, &sc, &p)?;
        let (mut prev, mut rise) = (e0, f64::NEG_INFINITY);
        for _ in 0..steps {
            it.step(&mut s)?;
            let h = s.history();
            let e = modified_energy(&grid, &h[0], &h[1], &h[2], &sc, &p)?;
            rise = rise.max(e - prev);
            prev = e;
        }
        println!("  dt {dt:<5} modified energy {e0:.8} -> {prev:.8}, largest step change {rise:.3e}");
    }

    let p = ModelParams::new(0.1, 0.125, 0.0);
    println!("ETD1");
    for dt in [0.01, 0.1, 1.0] {
        let mut it = Integrator::new(grid.clone(), p, Scheme::Etd1)?;
        let mut s = it.init_state(&u0, 0.0, dt, StartupPolicy::CopyInitial)?;
        let e0 = energy(&grid, &u0, &p)?;
        let (mut prev, mut rise) = (e0, f64::NEG_INFINITY);
        for _ in 0..steps {
            it.step(&mut s)?;
            let e = energy(&grid, s.u(), &p)?;
            rise = rise.max(e - prev);
            prev = e;
        }
        println!("  dt {dt:<5} energy {e0:.8} -> {prev:.8}, largest step change {rise:.3e}");
    }
    Ok(())
}
