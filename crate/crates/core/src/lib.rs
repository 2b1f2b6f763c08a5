//! Simulated test-collection pooling driven by query performance prediction.
//!
//! The crate reads TREC runs and qrels, estimates per-(query, run) retrieval
//! quality with NQC, turns the estimates into pool depths, builds pools,
//! restricts the judgments to them and compares system rankings under the
//! reduced judgments with the rankings under the full judgments.
//!
//! ```
//! use vardepth_core::pooling::{depth_inverse_linear, depth_linear};
//!
//! assert_eq!(depth_linear(0.5, 10, 50).unwrap(), 30);
//! assert_eq!(depth_inverse_linear(0.5, 10, 50).unwrap(), 30);
//! ```

pub mod error;
pub mod experiment;
pub mod metrics;
pub mod pooling;
pub mod qpp;
pub mod synthetic;
pub mod trec_io;

pub use error::{Error, Result};
pub use experiment::{induce_qrels, run_simulation, ExperimentConfig, ExperimentReport, ReportRow, SimulationInput};
pub use metrics::{PoolQuality, SystemScoreVector};
pub use pooling::{build_pool, DepthPolicy, NamedPolicy, Pool, PolicyKind};
pub use qpp::{DenominatorMode, NormalizationScope, QppConfig, QppEstimate};
pub use trec_io::{JudgmentSet, Provenance, QuerySet, RankedDoc, SystemRun, TermStatistics};
