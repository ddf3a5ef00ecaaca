//! Command-line driver and HTTP session service for the aeroroi pipeline.

pub mod commands;
pub mod config;
pub mod error;
pub mod layout;
pub mod server;

pub use commands::{cmd_beamform, cmd_evaluate, cmd_identify, cmd_synth};
pub use config::ConfigArgs;
pub use error::{CliError, CliResult};
pub use layout::{DatasetInfo, Layout};
pub use server::{router, serve, Session};
