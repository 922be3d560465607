//! Agent-based Dendritic Cell Algorithm simulator.
//!
//! Labelled numeric records are carried by antigen agents, sampled by a
//! constant population of dendritic cell (DC) agents that fuse the records'
//! signals, and scored by the mature context antigen value (MCAV): the share
//! of sampling DCs that matured and voted the antigen anomalous.
//!
//! The crate is organised by role:
//!
//! - [`data_ingest`]: parse and normalise the Wisconsin breast cancer file.
//! - [`signal_model`]: attributes → (PAMP, danger, safe) → (csm, semi, mat).
//! - [`agents`]: antigen and DC state machines and their decision rules.
//! - [`engine`]: the deterministic tick scheduler and run orchestration.
//! - [`analysis`]: MCAV histogram, confusion counts and accuracy.
//! - [`cli`]: the `dca-lab` command line front end.

pub mod agents;
pub mod analysis;
pub mod cli;
pub mod data_ingest;
pub mod engine;
pub mod signal_model;
pub mod trace;

pub use agents::{AntigenId, Category, Context, DcId, DcState};
pub use analysis::{ClassificationResult, ConfusionCounts, McavHistogram, Metrics};
pub use data_ingest::{AntigenRecord, AttributePolicy, DatasetSummary, MissingValuePolicy};
pub use engine::{run, RunReport, SimConfig, World};
pub use signal_model::{SignalMapping, WeightMatrix};
