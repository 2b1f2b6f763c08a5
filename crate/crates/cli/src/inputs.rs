use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use log::{info, warn};
use vardepth_core::trec_io::{parse_qrels, parse_queries, parse_run_with_diagnostics, parse_term_stats};
use vardepth_core::{JudgmentSet, QuerySet, SystemRun, TermStatistics};

fn read(path: &Path, what: &str) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {what} {}", path.display()))
}

/// Parses every regular file in `dir` as one run, in path order.
pub fn load_runs(dir: &Path) -> Result<Vec<SystemRun>> {
    let entries = fs::read_dir(dir).with_context(|| format!("cannot read runs directory {}", dir.display()))?;
    let mut paths: Vec<PathBuf> = Vec::new();
    for entry in entries {
        let path = entry.with_context(|| format!("cannot list runs directory {}", dir.display()))?.path();
        if fs::metadata(&path).is_ok_and(|m| m.is_file()) {
            paths.push(path);
        }
    }
    paths.sort();
    if paths.is_empty() {
        bail!("runs directory {} contains no run files", dir.display());
    }
    let mut runs = Vec::with_capacity(paths.len());
    for path in paths {
        let text = read(&path, "run file")?;
        let (run, diag) =
            parse_run_with_diagnostics(&text).with_context(|| format!("run file {}", path.display()))?;
        if !diag.rank_inconsistent_queries.is_empty() {
            warn!(
                "{}: rank column disagrees with score order for {} queries; re-ranked by score",
                path.display(),
                diag.rank_inconsistent_queries.len()
            );
        }
        if diag.mixed_tag_lines > 0 {
            warn!("{}: {} lines carry a different run tag; using {}", path.display(), diag.mixed_tag_lines, run.system_tag());
        }
        runs.push(run);
    }
    info!("loaded {} runs from {}", runs.len(), dir.display());
    Ok(runs)
}

pub fn load_qrels(path: &Path) -> Result<JudgmentSet> {
    let qrels = parse_qrels(&read(path, "qrels file")?).with_context(|| format!("qrels file {}", path.display()))?;
    if qrels.is_empty() {
        warn!("qrels file {} has no judgments", path.display());
    }
    Ok(qrels)
}

pub fn load_queries(path: Option<&Path>) -> Result<Option<QuerySet>> {
    path.map(|p| parse_queries(&read(p, "query file")?).with_context(|| format!("query file {}", p.display())))
        .transpose()
}

pub fn load_term_stats(path: Option<&Path>) -> Result<Option<TermStatistics>> {
    path.map(|p| {
        parse_term_stats(&read(p, "term statistics file")?).with_context(|| format!("term statistics file {}", p.display()))
    })
    .transpose()
}
