//! The energy diffusion's two regimes: a fast start that explodes and a late,
//! slow start whose hyperbolic angle settles near 1.
//!
//! cargo run --release --example dichotomy [n_paths]

use rdiff::ensemble::{run_ensemble, test_energy_dichotomy};
use rdiff::gates::{dichotomy_explode, dichotomy_gates, dichotomy_settle};

fn main() -> rdiff::Result<()> {
    let n = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(50);
    let explode = run_ensemble(&dichotomy_explode(n, 5))?;
    let settle = run_ensemble(&dichotomy_settle(n, 5))?;
    let e = &explode.explosion;
    println!("fast start: {}/{} exploded, 95% interval [{:.3}, {:.3}]", e.count, n, e.wilson_low, e.wilson_high);
    let median_end = {
        let mut v: Vec<f64> = settle.paths.iter().map(|p| p.terminal_tdot).collect();
        v.sort_by(f64::total_cmp);
        v[v.len() / 2]
    };
    println!("slow start: median terminal tdot {median_end:.6}");
    let verdict = test_energy_dichotomy(&explode, &settle, &dichotomy_gates());
    println!("{:?}: {}", verdict.outcome, verdict.detail);
    Ok(())
}
