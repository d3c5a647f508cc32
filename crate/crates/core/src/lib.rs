//! Simulator for the singlet/triplet measurement model of quantum computation.
//!
//! Every protocol runs on dense [`qstate::StateVector`]s and is checked
//! against exact linear-algebra references.

pub mod angles;
pub mod error;
pub mod experiments;
pub mod poststp;
pub mod pqc;
pub mod protocols;
pub mod qstate;
pub mod rng;
pub mod seqcheck;
pub mod verify;

pub use error::{Result, StpError};
pub use qstate::{PairOutcome, Pauli, StateVector};
pub use rng::StreamRng;
