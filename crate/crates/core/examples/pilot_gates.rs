//! Recomputes the frozen ensemble gates from the committed pilot seed.
//!
//! cargo run --release --example pilot_gates [n_paths]

use rdiff::gates::{run_pilot, PILOT_PATHS, PILOT_SEED};

fn main() -> rdiff::Result<()> {
    let n = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(PILOT_PATHS);
    let start = std::time::Instant::now();
    let gates = run_pilot(PILOT_SEED, n)?;
    print!("{}", rdiff::io::to_json(&gates));
    eprintln!("pilot with {n} paths took {:.1?}", start.elapsed());
    Ok(())
}
