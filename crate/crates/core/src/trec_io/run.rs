use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A single retrieved document for one query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedDoc {
    pub doc_id: String,
    /// 1-based position in the canonical order.
    pub rank: u32,
    pub score: f64,
}

impl RankedDoc {
    pub fn new(doc_id: impl Into<String>, rank: u32, score: f64) -> Self {
        Self { doc_id: doc_id.into(), rank, score }
    }
}

/// One retrieval system's ranked lists, keyed by query id.
///
/// Lists are always held in canonical order: score descending, ties broken
/// by ascending doc id, ranks rewritten to `1..=n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemRun {
    system_tag: String,
    rankings: BTreeMap<String, Vec<RankedDoc>>,
}

impl SystemRun {
    /// Builds a run from raw per-query lists and canonicalizes them.
    ///
    /// Fails if a doc id repeats within a query or a score is not finite.
    pub fn new(
        system_tag: impl Into<String>,
        rankings: BTreeMap<String, Vec<RankedDoc>>,
    ) -> Result<Self> {
        let system_tag = system_tag.into();
        for (qid, docs) in &rankings {
            let mut seen = HashSet::with_capacity(docs.len());
            for d in docs {
                if !d.score.is_finite() {
                    return Err(Error::validation(format!(
                        "run {system_tag}: non-finite score for ({qid}, {})",
                        d.doc_id
                    )));
                }
                if !seen.insert(d.doc_id.as_str()) {
                    return Err(Error::validation(format!(
                        "run {system_tag}: duplicate document ({qid}, {})",
                        d.doc_id
                    )));
                }
            }
        }
        let mut run = Self { system_tag, rankings };
        run.canonicalize();
        Ok(run)
    }

    /// Convenience constructor from `(query, [(doc, score)])` pairs.
    pub fn from_scores<Q, D>(system_tag: &str, lists: impl IntoIterator<Item = (Q, Vec<(D, f64)>)>) -> Result<Self>
    where
        Q: Into<String>,
        D: Into<String>,
    {
        let rankings = lists
            .into_iter()
            .map(|(q, docs)| {
                let docs = docs
                    .into_iter()
                    .enumerate()
                    .map(|(i, (d, s))| RankedDoc::new(d, i as u32 + 1, s))
                    .collect();
                (q.into(), docs)
            })
            .collect();
        Self::new(system_tag, rankings)
    }

    pub fn system_tag(&self) -> &str {
        &self.system_tag
    }

    pub fn rankings(&self) -> &BTreeMap<String, Vec<RankedDoc>> {
        &self.rankings
    }

    /// Ranked list for `query_id`, if the system retrieved anything for it.
    pub fn ranking(&self, query_id: &str) -> Option<&[RankedDoc]> {
        self.rankings.get(query_id).map(Vec::as_slice)
    }

    pub fn query_ids(&self) -> impl Iterator<Item = &str> {
        self.rankings.keys().map(String::as_str)
    }

    /// Scores of a query's list in canonical order.
    pub fn scores(&self, query_id: &str) -> Vec<f64> {
        self.ranking(query_id)
            .map(|docs| docs.iter().map(|d| d.score).collect())
            .unwrap_or_default()
    }

    /// Re-sorts every list into canonical order and rewrites ranks.
    pub fn canonicalize(&mut self) {
        for docs in self.rankings.values_mut() {
            docs.sort_by(canonical_cmp);
            for (i, d) in docs.iter_mut().enumerate() {
                d.rank = i as u32 + 1;
            }
        }
    }
}

fn canonical_cmp(a: &RankedDoc, b: &RankedDoc) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| a.doc_id.cmp(&b.doc_id))
}

/// Non-fatal observations made while parsing a run file.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunDiagnostics {
    /// Queries whose file rank field disagrees with the canonical order.
    pub rank_inconsistent_queries: Vec<String>,
    /// Lines whose tag differs from the first line's tag.
    pub mixed_tag_lines: usize,
}

/// Parses a TREC run (`qid Q0 docid rank score tag`).
pub fn parse_run(text: &str) -> Result<SystemRun> {
    parse_run_with_diagnostics(text).map(|(run, _)| run)
}

/// Like [`parse_run`] but also returns the rank/tag consistency report.
pub fn parse_run_with_diagnostics(text: &str) -> Result<(SystemRun, RunDiagnostics)> {
    let mut system_tag: Option<String> = None;
    let mut diagnostics = RunDiagnostics::default();
    let mut rankings: BTreeMap<String, Vec<RankedDoc>> = BTreeMap::new();
    let mut seen: HashSet<(String, String)> = HashSet::new();

    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 6 {
            return Err(Error::parse(
                line_no,
                format!("expected 6 fields `qid Q0 docid rank score tag`, found {}", fields.len()),
            ));
        }
        let (qid, docid, rank, score, tag) = (fields[0], fields[2], fields[3], fields[4], fields[5]);
        let rank: u32 = rank
            .parse()
            .map_err(|_| Error::parse(line_no, format!("rank `{rank}` is not a non-negative integer")))?;
        let score: f64 = score
            .parse()
            .map_err(|_| Error::parse(line_no, format!("score `{score}` is not a number")))?;
        if !score.is_finite() {
            return Err(Error::parse(line_no, format!("score `{score}` is not finite")));
        }
        match &system_tag {
            None => system_tag = Some(tag.to_string()),
            Some(t) if t != tag => diagnostics.mixed_tag_lines += 1,
            Some(_) => {}
        }
        if !seen.insert((qid.to_string(), docid.to_string())) {
            return Err(Error::validation(format!(
                "duplicate document ({qid}, {docid}) at line {line_no}"
            )));
        }
        rankings
            .entry(qid.to_string())
            .or_default()
            .push(RankedDoc::new(docid, rank, score));
    }

    let system_tag = system_tag.ok_or_else(|| Error::validation("run file contains no entries"))?;

    for (qid, docs) in &rankings {
        let mut by_file_rank: Vec<&RankedDoc> = docs.iter().collect();
        by_file_rank.sort_by_key(|d| d.rank);
        let mut canonical: Vec<&RankedDoc> = docs.iter().collect();
        canonical.sort_by(|a, b| canonical_cmp(a, b));
        let consistent = by_file_rank
            .iter()
            .zip(&canonical)
            .all(|(a, b)| a.doc_id == b.doc_id);
        if !consistent {
            diagnostics.rank_inconsistent_queries.push(qid.clone());
        }
    }
    if !diagnostics.rank_inconsistent_queries.is_empty() {
        log::warn!(
            "run {system_tag}: file ranks disagree with score order for {} quer(ies); using score order",
            diagnostics.rank_inconsistent_queries.len()
        );
    }
    if diagnostics.mixed_tag_lines > 0 {
        log::warn!(
            "run {system_tag}: {} line(s) carry a different tag; using the first",
            diagnostics.mixed_tag_lines
        );
    }

    let run = SystemRun::new(system_tag, rankings)?;
    Ok((run, diagnostics))
}

/// Serializes a run in TREC format with canonical ranks.
pub fn write_run(run: &SystemRun) -> String {
    let mut out = String::new();
    for (qid, docs) in run.rankings() {
        for d in docs {
            out.push_str(&format!(
                "{qid} Q0 {} {} {} {}\n",
                d.doc_id,
                d.rank,
                d.score,
                run.system_tag()
            ));
        }
    }
    out
}
