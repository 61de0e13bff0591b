//! Convergence studies of the dipole approximation: configuration,
//! presets, orchestration, persistence and the `dipole` command line.

pub mod cli;
pub mod config;
pub mod error;
pub mod output;
pub mod presets;
pub mod study;

pub use config::StudyConfig;
pub use error::{HarnessError, Result};
pub use study::Study;
