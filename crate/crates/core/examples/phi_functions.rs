//! The `phi` and `g` functions behind the exponential integrators.
//!
//! ```text
//! cargo run --example phi_functions
//! ```
//!
//! Tabulates `g0, g1, g2` across the series/closed-form switch and shows
//! the ratios staying below `1/(1 - e^-2)`.

use nss_etd::etdphi::{eval_g, ratio_bound, SERIES_THRESHOLD};

fn main() -> nss_etd::Result<()> {
    let c = ratio_bound();
    println!("ratio bound {c:.12}, series below x = {SERIES_THRESHOLD}");
    println!("{:>10} {:>20} {:>20} {:>20} {:>10} {:>10}", "x", "g0", "g1", "g2", "g1/g0", "g2/g0");
    let xs = [0.0, 1e-8, 1e-4, 0.1, 0.5, 0.999_999, 1.0, 1.000_001, 2.0, 10.0, 100.0, 1e4, 1e8];
    for x in xs {
        let g = eval_g(x)?;
        println!(
            "{x:>10.3e} {:>20.14e} {:>20.14e} {:>20.14e} {:>10.6} {:>10.6}",
            g.g0,
            g.g1,
            g.g2,
            g.g1 / g.g0,
            g.g2 / g.g0
        );
    }
    let below = eval_g(SERIES_THRESHOLD * (1.0 - 1e-12))?;
    let above = eval_g(SERIES_THRESHOLD)?;
    println!(
        "jump at the switch: {:.2e} {:.2e} {:.2e}",
        (above.g0 - below.g0).abs(),
        (above.g1 - below.g1).abs(),
        (above.g2 - below.g2).abs()
    );
    Ok(())
}
