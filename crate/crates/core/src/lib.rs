pub mod cli;
pub mod error;
pub mod harness;
pub mod ldsc;
pub mod ldscores;
pub mod model;
pub mod numeric;
pub mod rng;
pub mod simgen;
pub mod sumstats;
pub mod theory;

pub use error::{Error, ErrorClass, Result};
