//! Risk-averse algorithmic recourse over factored finite-horizon MDPs.

pub mod cli;
pub mod config;
pub mod datasets;
pub mod error;
pub mod eval;
pub mod mdp;
pub mod model;
pub mod policy_file;
pub mod report;
pub mod schema;
pub mod solver;
pub mod viz;

pub use error::{Error, Result};
