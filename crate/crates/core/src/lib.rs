pub mod adaptive;
pub mod environments;
pub mod error;
pub mod forecaster;
pub mod harness;
pub mod littlestone;
pub mod multiclass;
pub mod rng;

pub use error::{Error, Result};
