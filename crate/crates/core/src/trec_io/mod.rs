//! Readers and writers for TREC runs, qrels, query files and term statistics.
//!
//! All parsers are pure functions of their input text. Blank lines are
//! skipped everywhere; line numbers in errors are 1-based and count blanks.

mod qrels;
mod queries;
mod run;
mod term_stats;

pub use qrels::{parse_qrels, write_qrels, JudgmentSet, Provenance};
pub use queries::{parse_queries, tokenize, QuerySet};
pub use run::{parse_run, parse_run_with_diagnostics, write_run, RankedDoc, RunDiagnostics, SystemRun};
pub use term_stats::{parse_term_stats, write_term_stats, TermStatistics};
