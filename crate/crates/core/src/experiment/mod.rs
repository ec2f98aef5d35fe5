//! End-to-end experiments: theory, population dynamics, tree estimates and
//! simulation in one report.

pub mod config;
pub mod pipeline;
pub mod report;

pub use config::{PipelineConfig, RdeConfig, SimulationConfig, SpectralConfig, Tolerances};
pub use pipeline::run_pipeline;
pub use report::{Report, Verdict, SCHEMA_VERSION};
