//! Feature compression with a discrimination-aware training objective.
//!
//! The crate trains a two-layer linear bottleneck codec on labeled feature
//! vectors under three objectives: reconstruction MSE (`Sim`), a margin-based
//! triplet objective computed on reconstructed features (`Dis`), and their
//! weighted sum (`Combined`). Batches are built by PK sampling and the triplet
//! term is driven by hardest-triplet mining. Reconstructed features are scored
//! with retrieval metrics (rank-1/CMC, mAP), best-threshold verification
//! accuracy, and an inter/intra discriminability ratio.
//!
//! Everything is deterministic: all randomness flows through a seeded,
//! fully specified generator, and numeric kernels use fixed summation orders,
//! so identical inputs produce bit-identical outputs.

pub mod codec;
pub mod corpus;
pub mod error;
pub mod evaluator;
pub mod metrics;
pub mod numcore;
pub mod training;

pub use error::{Error, Result};
