//! Operator inequalities of the `phi`-function multipliers on random fields.
//!
//! ```text
//! cargo run --example operator_bounds
//! ```

use nss_etd::etdphi::{check_operator_bounds, PhiTables};
use nss_etd::spectral::SpectralGrid;
use nss_etd::suites::low_mode_field;

fn main() -> nss_etd::Result<()> {
    let grid = SpectralGrid::new(32, 1.0)?;
    let mut failures = 0;
    for (i, dt) in [1e-4, 1e-2, 1.0, 10.0].into_iter().enumerate() {
        let tables = PhiTables::build(&grid, 0.1, 0.25, 1.0, dt)?;
        let f = low_mode_field(&grid, i as u64, 12, 1.0);
        let report = check_operator_bounds(&grid, &tables, &f)?;
        println!("dt = {dt}");
        for c in &report.checks {
            println!(
                "  {} {:<28} {:>14.6e} <= {:>14.6e}",
                if c.passed { "ok  " } else { "FAIL" },
                c.name,
                c.lhs,
                c.rhs
            );
        }
        failures += report.violations().count();
    }
    println!("{failures} violations");
    Ok(())
}
