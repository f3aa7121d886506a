//! Library half of the `unmix` binary: file formats, configuration,
//! metrics reporting and the synthetic-video pipeline. The binary itself is
//! a thin argument-parsing layer over [`commands`].

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod metrics;
pub mod video;

pub use error::CliError;
