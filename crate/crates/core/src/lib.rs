pub mod crossval;
pub mod error;
pub mod experiments;
pub mod model;
pub mod rng;
pub mod solver;
pub mod special;
pub mod theory;

pub use error::{Error, Result};
