//! H-type foliations: Clifford data, model frames, the Bott connection,
//! privileged coordinates, Popp volume of Korányi balls and heat invariants.

pub mod cli;
pub mod clifford;
pub mod config;
pub mod connection;
pub mod error;
pub mod heat;
pub mod identities;
pub mod jet;
pub mod models;
pub mod ode;
pub mod parallel;
pub mod privileged;
pub mod quad;
pub mod report;
pub mod suite;
pub mod tensor;
pub mod volume;

pub use error::{HtypeError, Result};
