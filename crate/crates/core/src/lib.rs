pub mod adversary;
pub mod analytic;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod protocol;
pub mod sampling;
pub mod simulator;

pub use error::{Error, Result};
