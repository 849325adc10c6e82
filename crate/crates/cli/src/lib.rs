//! Scenario-driven runs of the tippe top model: trajectories, stability
//! tables, Smale diagrams, phase portraits and integral checks.

pub mod commands;
pub mod error;
pub mod output;
pub mod scenario;

pub use error::CliError;
pub use output::{OutDir, Table};
pub use scenario::Scenario;
