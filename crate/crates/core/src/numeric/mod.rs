//! Dense linear algebra, parameter containers, optimizer and gradient
//! checking shared by every model.

pub mod adam;
pub mod gradcheck;
pub mod init;
pub mod matrix;
pub mod params;
pub mod rng;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use gradcheck::{grad_check, GradCheckReport};
pub use matrix::{Matrix, Trans};
pub use params::{Param, ParamSet};
pub use rng::{derive_seed, derived_rng, seeded_rng, SeededRng};
