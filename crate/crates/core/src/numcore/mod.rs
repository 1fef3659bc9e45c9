//! Deterministic numeric kernels: dense matrices, the Adam optimizer,
//! seeded randomness, and a finite-difference gradient oracle.

mod adam;
mod fdiff;
mod matrix;
mod rng;

pub use adam::AdamState;
pub use fdiff::finite_diff_grad;
pub use matrix::Matrix;
pub use rng::Rng;
