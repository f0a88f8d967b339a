pub mod brute;
pub mod cli;
pub mod codec;
pub mod error;
pub mod imaging;
pub mod milp;
pub mod model;
pub mod solver;

pub use error::{Error, Result};
