//! Time-invariant quantum discord of dephasing qubit pairs and its
//! prolongation by dynamical decoupling.
//!
//! - [`qstate`]: two-qubit matrices, Bell-diagonal states, fidelity.
//! - [`channels`]: local phase damping and the discord transition time.
//! - [`correlations`]: classical correlation, mutual information, discord.
//! - [`ddseq`]: pulse sequences, the schedule DSL, filter functions.
//! - [`engine`]: Monte-Carlo trajectories under noise and pulses.
//! - [`tomography`]: simulated Pauli tomography with physical projection.
//! - [`harness`]: scenarios, sweeps and output files.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod channels;
pub mod correlations;
pub mod ddseq;
pub mod engine;
mod error;
pub mod harness;
pub mod qstate;
pub mod tomography;

pub use error::{Error, Result};
