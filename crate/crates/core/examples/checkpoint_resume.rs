//! Stop a small coarsening run part-way, resume it from the checkpoint and
//! compare with an uninterrupted run.
//!
//! ```text
//! cargo run --release --example checkpoint_resume
//! ```

use nss_etd::checkpoint::read_checkpoint;
use nss_etd::config::{GridConfig, OutputConfig, RunConfig, Segment};
use nss_etd::experiments::{resume_coarsening, run_coarsening, RunOptions};

fn main() -> nss_etd::Result<()> {
    let base = std::env::temp_dir().join(format!("nss-etd-resume-{}", std::process::id()));
    let cfg = RunConfig {
        grid: Some(GridConfig { n: 32, length: 3.2 }),
        schedule: vec![Segment { t_end: 1.0, dt: 0.01 }, Segment { t_end: 2.0, dt: 0.02 }],
        output: OutputConfig { sample_interval: 0.1, ..OutputConfig::default() },
        ..RunConfig::desk_coarsening()
    };

    let whole = run_coarsening(&cfg, &RunOptions { out_dir: Some(base.join("whole")), ..RunOptions::default() })?;

    let dir = base.join("split");
    let opts = RunOptions { out_dir: Some(dir.clone()), max_steps: Some(60), ..RunOptions::default() };
    let first = run_coarsening(&cfg, &opts)?;
    let ck_path = first.last_checkpoint.expect("stopping writes a checkpoint");
    let ck = read_checkpoint(&ck_path)?;
    println!("stopped at t = {} after {} steps ({})", ck.t(), ck.step_count, ck_path.display());
    let split = resume_coarsening(&cfg, &ck, first.samples, &RunOptions { max_steps: None, ..opts })?;

    let identical = whole.samples.len() == split.samples.len()
        && whole.samples.iter().zip(&split.samples).all(|(a, b)| a == b);
    println!("{} samples each, identical: {identical}", whole.samples.len());
    for o in split.samples.iter().step_by(5) {
        println!("  t {:>5.2}  energy {:.12}  roughness {:.6e}", o.t, o.energy, o.roughness);
    }
    std::fs::remove_dir_all(&base)?;
    Ok(())
}
