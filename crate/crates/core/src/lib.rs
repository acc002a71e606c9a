pub mod algebra;
pub mod cli;
pub mod config;
pub mod curvature;
pub mod ensemble;
pub mod io;
pub mod error;
pub mod gates;
pub mod manifold;
pub mod rng;
pub mod sde;
pub mod tensor;
pub mod verify;

pub use error::{Error, Result};
