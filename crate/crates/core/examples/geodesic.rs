//! A timelike geodesic in the c = 1/2 model against its closed-form proper time.
//!
//! cargo run --release --example geodesic

use rdiff::manifold::ModelSpec;
use rdiff::sde::{geodesic_integrate, GeodesicConfig, PhaseState};
use rdiff::verify::half_power_proper_time;

fn main() -> rdiff::Result<()> {
    let model = ModelSpec::eds(0.5);
    let init = PhaseState::from_tdot(&model, &[1.0, 0.0, 0.0, 0.0], 2.0, None)?;
    let path = geodesic_integrate(&model, &init, &GeodesicConfig { h: 1e-3, s_max: 100.0, stride: 10_000 })?;
    // a = t^c sqrt(tdot^2 - 1) is constant along the geodesic.
    let a = (init.tdot().powi(2) - 1.0).sqrt();
    let f0 = half_power_proper_time(1.0, a);
    println!("{:>8} {:>14} {:>14} {:>12}", "s", "t", "tdot", "rel err s");
    for smp in &path.samples {
        let s_closed = half_power_proper_time(smp.t(), a) - f0;
        let err = if smp.s > 0.0 { (s_closed - smp.s).abs() / smp.s } else { 0.0 };
        println!("{:>8.1} {:>14.6} {:>14.8} {:>12.2e}", smp.s, smp.t(), smp.tdot(), err);
    }
    Ok(())
}
