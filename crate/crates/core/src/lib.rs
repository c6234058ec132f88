//! Class-imbalance toolkit for heterogeneous information networks.
//!
//! Minority target nodes are oversampled with synthetic nodes whose
//! neighborhoods are drawn from personalized-PageRank influence candidates,
//! then a compact relation-aware encoder is trained under a combined
//! classification, semantic and prototype objective.
//!
//! The crate is `no_std` (it needs `alloc`); enable the `std` feature to get
//! `std::error::Error` integration and the `serde` feature for
//! (de)serialization of configs, model state and synthetic batches.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod bench;
pub mod encoder;
pub mod error;
pub mod hin;
pub mod influence;
pub mod linalg;
pub mod metrics;
pub mod objective;
pub mod optim;
pub mod rng;
pub mod sparse;
pub mod synthesis;
pub mod train;

pub use error::{Error, Result};
pub use hin::{HinGraph, LabelSpec, MetaPath, NetworkSchema, NodeTypeId, RelationId};
pub use linalg::Matrix;
pub use sparse::SparseAdj;

/// Library version recorded in checkpoints and run directories.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
