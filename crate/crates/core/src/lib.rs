pub mod checks;
pub mod cli_io;
pub mod decay;
pub mod error;
pub mod linearization;
pub mod macroscopics;
pub mod maxwellian;
pub mod momentum_grid;
pub mod rng;
pub mod solver;
pub mod special_fn;
pub mod spectral;

mod quadrature;

pub use error::{Error, Result};
