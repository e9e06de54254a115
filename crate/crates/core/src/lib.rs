pub mod distributions;
pub mod error;
pub mod forms;
pub mod harness;
pub mod linalg;
pub mod repn;
pub mod solver;
pub mod tensor;

pub use error::{Error, Result};
