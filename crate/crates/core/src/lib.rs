pub mod cli;
pub mod communities;
pub mod data;
pub mod error;
pub mod lstm;
pub mod model;
pub mod numeric;
pub mod training;

pub use error::{Error, Result};
