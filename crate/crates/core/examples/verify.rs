//! Runs one self-check suite (default: all) and prints the table.
//!
//! cargo run --release --example verify -- [suite] [seed]

use clap::ValueEnum;
use rdiff::verify::{run_verify, Suite};

fn main() -> rdiff::Result<()> {
    let mut args = std::env::args().skip(1);
    let suite = args.next().map_or(Suite::All, |s| Suite::from_str(&s, true).expect("unknown suite"));
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(7);
    let report = run_verify(suite, seed)?;
    print!("{}", report.render());
    std::process::exit(if report.passed() { 0 } else { 5 });
}
