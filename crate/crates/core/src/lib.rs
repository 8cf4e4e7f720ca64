pub mod baselines;
pub mod delay_sources;
pub mod error;
pub mod estimation;
pub mod fec;
pub mod harness;
pub mod priority_engine;
pub mod scheduler;
pub mod simulator;
pub mod workloads;

pub use error::{Error, Result};
