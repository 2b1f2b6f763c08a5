//! Shared inputs for the benchmarks.

use vardepth_core::synthetic::{generate, SyntheticConfig, SyntheticDataset};

/// The 20-system, 50-query, 5000-document collection used throughout.
pub fn dataset() -> SyntheticDataset {
    generate(&SyntheticConfig::default()).expect("default synthetic config is valid")
}
