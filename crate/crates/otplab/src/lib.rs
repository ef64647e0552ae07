//! File formats, reports and the `otplab` command line over `otplab-core`.

pub mod cli;
pub mod error;
pub mod json;
pub mod presets;
pub mod truth_table;

pub use error::CliError;
