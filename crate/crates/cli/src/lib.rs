//! Library side of the `crowdwrite` command: configuration, pipeline stages,
//! provenance manifest and report rendering.

pub mod config;
pub mod error;
pub mod io;
pub mod manifest;
pub mod render;
pub mod stages;

pub use config::{PipelineConfig, ReportFormat};
pub use error::CliError;
pub use manifest::Manifest;
pub use stages::{parse_stages, run_pipeline, Stage};
