//! Performance mutation testing.
//!
//! The pipeline: parse Java sources and discover mutation sites
//! ([`source_model`]), derive single-mutation variants ([`operators`]),
//! materialize and validate mutants ([`mutagen`]), run and ingest
//! benchmarks ([`bench_ingest`]), decide kills with a hierarchical bootstrap
//! on the ratio of means ([`stats`]) and aggregate per operator and context
//! ([`reporting`]).

pub mod bench_ingest;
pub mod campaign;
pub mod config;
pub mod mutagen;
pub mod operators;
mod process;
pub mod reporting;
pub mod source_model;
pub mod stats;
mod syntax;

pub use bench_ingest::{BenchSample, Metric, MetricKind, Polarity, ResultFormat};
pub use campaign::{BenchTarget, Campaign, CampaignError};
pub use config::{CampaignConfig, ConfigError};
pub use mutagen::{Mutant, MutantStatus, ValidationResult};
pub use operators::{apply, apply_edits, OperatorConfig, OperatorId, TextEdit};
pub use process::{CommandSpec, CommandSpecError, SpawnError};
pub use reporting::{render_report, CampaignReport, ReportFormat, StratumSummary};
pub use source_model::{
    classify_context, discover_sites, parse_unit, ContextClass, CoverageMap, MutationSite,
    SourceUnit, Span,
};
pub use stats::{compare, mutation_score, BootstrapConfig, Comparison, MutationScore};
