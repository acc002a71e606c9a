//! The Lorentz algebra acting on a pseudo-orthonormal frame: brackets, and a
//! boost of a frame at a point of the c = 2/3 model.
//!
//! cargo run --example frame_algebra

use rdiff::algebra::{so_bracket, Bivector};
use rdiff::manifold::ModelSpec;
use rdiff::sde::InitSpec;

fn main() -> rdiff::Result<()> {
    let boost_x = Bivector::basis(4, 0, 1);
    let boost_y = Bivector::basis(4, 0, 2);
    let rot = so_bracket(&boost_x, &boost_y)?;
    println!("[e0^e1, e0^e2] =\n{}", rot.matrix());

    let model = ModelSpec::eds(2.0 / 3.0);
    let state = InitSpec::new(&[1.0, 0.0, 0.0, 0.0], 1.5).frame_state(&model)?;
    let boosted = state.frame.rotated(&boost_x, 0.5)?;
    println!("velocity before {:?}", state.frame.velocity());
    println!("velocity after  {:?}", boosted.velocity());
    println!("orthonormality error {:.2e}", boosted.orthonormality_error());
    Ok(())
}
