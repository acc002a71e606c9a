//! Curvature of an Einstein-de Sitter-like model at one point: tensors, the
//! fluid decomposition, and the sign conditions the diffusions rely on.
//!
//! cargo run --example curvature -- [c] [t]

use rdiff::curvature::{chart_curvature, energy_at, perfect_fluid_decompose, sectional_sign_check};
use rdiff::manifold::ModelSpec;
use rdiff::sde::PhaseState;

fn main() -> rdiff::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<f64>().expect("numeric argument"));
    let c = args.next().unwrap_or(2.0 / 3.0);
    let t = args.next().unwrap_or(1.0);
    let model = ModelSpec::eds(c);
    model.validate()?;
    let point = [t, 0.0, 0.0, 0.0];
    let pack = chart_curvature(&model, &point)?;
    let fluid = perfect_fluid_decompose(&pack);

    println!("c = {c}, t = {t}");
    println!("scalar curvature    {:+.6e}  (closed form {:+.6e})", pack.scalar, -6.0 * c * (2.0 * c - 1.0) / (t * t));
    println!("fluid density q     {:+.6e}", fluid.q);
    println!("fluid pressure p    {:+.6e}", fluid.p);
    println!("perfect fluid       {}", fluid.is_perfect);
    println!("sectional sign ok   {}", sectional_sign_check(&model));
    for tdot in [1.0, 2.0, 5.0] {
        let v = PhaseState::from_tdot(&model, &point, tdot, None)?;
        println!("energy at tdot={tdot:<4} {:+.6e}", energy_at(&pack, &v.velocity[..4])?);
    }
    Ok(())
}
