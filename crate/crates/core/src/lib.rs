//! Combinatorial market makers over arbitrary set systems.
//!
//! Every market in this crate is a thin wrapper around one
//! [`partition_tree::PartitionTree`], a lazy-propagation range-query /
//! range-update engine generic over a [`algebra::WeightAlgebra`].
//! The [`oracle`] module holds dense reference implementations that share no
//! code with the engine.

pub mod algebra;
pub mod cfmm;
pub mod error;
pub mod msr_markets;
pub mod multires;
pub mod oracle;
pub mod partition_tree;
pub mod set_system;
pub mod snapshot;

pub use error::{Error, Result};
pub use set_system::{Event, Relation, SetSystem};
