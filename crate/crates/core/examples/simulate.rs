//! One R-diffusion path in the c = 0.7 model, written as CSV to stdout with a
//! JSON footer on stderr.
//!
//! cargo run --release --example simulate > path.csv

use rdiff::io::{to_json, write_csv, Footer};
use rdiff::manifold::ModelSpec;
use rdiff::sde::{simulate_path, DiffusionKind, DiffusionSpec, InitSpec, RecordPlan, StepConfig};

fn main() -> rdiff::Result<()> {
    let model = ModelSpec::eds(0.7);
    let spec = DiffusionSpec::checked(DiffusionKind::R, 1.0, &model)?;
    let init = InitSpec::new(&[1.0, 0.0, 0.0, 0.0], 5.0).frame_state(&model)?;
    let seed = 11;
    let series = simulate_path(&model, &spec, &init, &StepConfig::new(1e-2, 100.0), &RecordPlan::every(100), seed)?;
    write_csv(&series, std::io::stdout().lock()).expect("stdout");
    eprint!("{}", to_json(&Footer::of(&series, Some(seed))));
    Ok(())
}
