//! Network-based diversity and inclusion analytics for project-credit data.
//!
//! `teamnet` ingests tables of projects and credited team members, builds
//! per-project weighted collaboration graphs from past shared work, and
//! computes team gender-diversity and inclusion metrics, a distinctiveness
//! (creativity) outcome, interaction regression models, and firm-level
//! transfer-entropy sequence analysis. A synthetic-corpus generator with
//! planted effects makes the whole pipeline testable without real data.
//!
//! Start with the runnable examples (`cargo run --example <name>`):
//!
//! - `generate_corpus` - synthesize a corpus and write the input tables
//! - `validate_and_filter` - parse inputs and apply the analysis filters
//! - `team_graphs` - build one project's collaboration graph and inspect it
//! - `inclusion_metrics` - compute the per-project metric table
//! - `interaction_models` - fit the diversity x inclusion regression suite
//! - `firm_sequences` - transfer entropy between firm-level series
//! - `relabeling_robustness` - unknown-gender relabeling experiment
//! - `full_pipeline` - everything end to end into an output directory
//!
//! The thin `teamnet` binary exposes the same stages as subcommands.

pub mod config;
pub mod corpus;
pub mod error;
pub mod graph;
pub mod metrics;
pub mod pipeline;
pub mod rng;
pub mod robustness;
pub mod stats;
pub mod synth;
pub mod timeseries;

pub use error::{Error, Result};
