//! Command line and HTTP service over a chronomap store.

pub mod api;
pub mod app;
pub mod cli;
pub mod config;
pub mod demo;
pub mod error;

pub use app::App;
pub use config::AppConfig;
pub use error::CliError;
