//! Scenario runner for the cavity-trps simulator: configuration and presets,
//! orchestration of the trajectory → correlation → spectrum pipeline, and
//! emission of CSV files, sidecars, plot scripts and a hashed manifest.

pub mod config;
pub mod error;
pub mod output;
pub mod presets;
pub mod run;

pub use config::{emit, load_config, load_config_str, ConfigError, ScenarioConfig};
pub use error::CliError;
pub use output::{emit_plot_scripts, FileKind, Manifest, ManifestEntry, MANIFEST_FILE};
pub use run::{run_scenario, CheckResult, RunReport};
