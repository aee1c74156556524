pub mod cli;
pub mod config;
pub mod construction;
pub mod error;
pub mod geometry;
pub mod numerics;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
