//! Irreducible multiparty correlations in n-qutrit states.

pub mod closed_forms;
pub mod error;
pub mod families;
pub mod limits;
pub mod maxent;
pub mod operators;
pub mod spectrum;
pub mod tensor;
pub mod witness;

pub use error::{Error, Result};
