//! A small R-diffusion ensemble with the three long-run verdicts.
//! Uses fewer paths and a shorter horizon than the frozen gates assume, so a
//! verdict may fail here; the point is the workflow.
//!
//! cargo run --release --example ensemble

use rdiff::ensemble::{run_ensemble, test_afunc_divergence, test_space_convergence, test_tdot_to_one};
use rdiff::gates::{r_long_run, R_SHRINK, R_TDOT_BAND};

fn main() -> rdiff::Result<()> {
    let mut cfg = r_long_run(40, 3);
    cfg.step.s_max = 100.0;
    cfg.snapshots = vec![1.0, 10.0, 25.0, 50.0, 75.0, 100.0];
    let stats = run_ensemble(&cfg)?;
    println!("{:>8} {:>6} {:>12} {:>12} {:>12}", "s", "alive", "median tdot", "median a", "median |dx|");
    for s in &stats.snapshots {
        println!("{:>8.1} {:>6} {:>12.5} {:>12.4} {:>12.4}", s.s, s.n_alive, s.tdot.q50, s.a_func.q50, s.displacement.q50);
    }
    for v in [test_tdot_to_one(&stats, R_TDOT_BAND), test_afunc_divergence(&stats), test_space_convergence(&stats, R_SHRINK)] {
        println!("{:<18} {:?}: {}", v.name, v.outcome, v.detail);
    }
    Ok(())
}
