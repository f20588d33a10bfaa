//! Built-in models, config-driven scenarios and the acceptance suite behind
//! the `doiflow` command.

pub mod config;
pub mod models;
pub mod report;
pub mod runner;
pub mod verify;

pub use config::{parse_config, Command, ConfigError, ScenarioConfig};
pub use report::{Check, Report};
pub use runner::run;
