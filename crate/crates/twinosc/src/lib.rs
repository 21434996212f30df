//! Command-line front end, file formats and parallel sweeps for
//! [`twinosc_core`].
//!
//! A run is described by a [`config::RunConfig`], either loaded from a
//! JSON/TOML file or taken from [`presets`]. [`experiments::execute`]
//! computes it and [`experiments::write_outputs`] writes a CSV file and a
//! JSON sidecar holding the effective config, seed and run statistics.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod io;
pub mod parallel;
pub mod presets;

pub use config::RunConfig;
pub use error::CliError;
