pub mod cli;
pub mod closed;
pub mod envelope;
pub mod error;
pub mod fock;
pub mod linalg;
pub mod measures;
pub mod phase_space;
pub mod simulate;

pub use error::{Error, Result};
