//! Config-driven runs: bubble generation, criteria, simulation and reports.
//!
//! Every command reads a [`RunConfig`], writes its artifacts into an output
//! directory and merges a section into that directory's `manifest.json`.

mod commands;
mod config;
mod manifest;

pub use commands::{
    cmd_criteria, cmd_generate, cmd_report, cmd_simulate, cmd_whitney, exit_code, CriteriaReport, GenerateSummary,
    OutputFormat, PointSummary, ReportSummary, SimulationReport, StepBin, WhitneySummary, BUBBLES_FILE, REPORT_HEADER,
};
pub use config::{CriteriaSpec, DomainSpec, RunConfig, ShellSpec, SimSpec, FORMAT_VERSION};
pub use manifest::{record_timing, RunManifest, MANIFEST_FILE, TIMING_FILE};
