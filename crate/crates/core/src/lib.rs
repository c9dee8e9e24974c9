//! Compute-aware evolutionary search over natural-language strategies.
//!
//! A population of candidate strategies for a multi-stakeholder decision is
//! refined over discrete generations. Stakeholders rank the candidates, their
//! rankings are combined with influence-weighted Borda scoring, long outputs
//! are penalized against a token budget, and the fittest candidates are
//! duplicated and specialized before top-k survivor selection.
//!
//! Modules:
//!
//! * [`model`]: scenarios, stakeholders, strategies and per-generation records
//! * [`aggregation`]: Borda scoring, consensus and ranking repair
//! * [`fitness`]: token penalty, duplication probability, efficiency
//! * [`generators`]: provider interface, deterministic mock, HTTP client
//! * [`sim`]: synthetic stakeholders and benchmark scenario generation
//! * [`evolution`]: the generational loop and ablation suite
//! * [`trace`]: append-only run logs and replay auditing
//! * [`stats`]: paired tests, effect sizes and confidence intervals
//! * [`harness`]: blinded judging, benchmarks and report tables

pub mod aggregation;
pub mod error;
pub mod evolution;
pub mod fitness;
pub mod generators;
pub mod harness;
pub mod model;
pub mod sim;
pub mod stats;
pub mod trace;
pub mod util;

pub use error::{LarkError, Result};
