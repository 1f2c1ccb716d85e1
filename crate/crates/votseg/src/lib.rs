pub mod cli;
pub mod data;
pub mod error;
pub mod eval;
pub mod frontend;
pub mod nn;
pub mod seg;
pub mod train;

pub use error::{Error, Result};
