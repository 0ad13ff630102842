pub mod cli;
pub mod darwinism;
pub mod envariance;
pub mod error;
pub mod hilbert;
pub mod linalg;
pub mod models;
pub mod repeatability;

pub use error::{Error, Result};
