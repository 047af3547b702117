//! Ensemble-averaged k-th order out-of-time-order correlators of a
//! system–bottleneck–bath circuit in the infinite-bath limit.
//!
//! The crate is `no_std` with `alloc`. The default `std` feature adds rayon
//! parallelism over independent branches and samples; results do not depend on
//! whether it is enabled.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod channel;
pub mod error;
pub mod freeprob;
pub mod gates;
pub mod linalg;
pub mod markov;
pub mod montecarlo;
pub mod mps;
pub mod multichain;
pub mod ncpart;
pub mod replica;

pub use error::{Error, Result};
pub use linalg::{CMat, C64};
pub use ncpart::{NcLattice, NcPartition};
pub use replica::{Gate, Observable, ReplicaKernel, ReplicaVector};
