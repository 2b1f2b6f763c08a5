//! Post-retrieval query performance prediction.
//!
//! A predictor maps a query and a system's top-ranked list to a real-valued
//! estimate. NQC is the only estimator shipped: the standard deviation of
//! the top-k retrieval scores divided by a query/collection similarity
//! `P(Q|C)`. Estimates are max-normalized into `[0, 1]` before they are used
//! to pick pool depths.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trec_io::{QuerySet, RankedDoc, SystemRun, TermStatistics};

/// Guard for a zero `P(Q|C)`.
pub const DEFAULT_EPSILON: f64 = 1e-9;

/// df assigned to query terms absent from the term statistics.
pub const UNSEEN_TERM_DF: f64 = 0.5;

/// How `P(Q|C)` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DenominatorMode {
    /// Mean idf of the query terms.
    IdfMean,
    /// Mean absolute top-k retrieval score; needs no collection statistics.
    MeanAbsScore,
}

impl fmt::Display for DenominatorMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DenominatorMode::IdfMean => "idf",
            DenominatorMode::MeanAbsScore => "mean-abs",
        })
    }
}

/// Group over which `max_normalize` takes its maximum.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormalizationScope {
    /// All queries of one system.
    #[default]
    PerSystem,
    /// Every (query, system) pair at once.
    Global,
}

impl fmt::Display for NormalizationScope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NormalizationScope::PerSystem => "per-system",
            NormalizationScope::Global => "global",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QppConfig {
    /// Number of top documents the estimate looks at.
    pub k: usize,
    pub denominator: DenominatorMode,
    pub epsilon: f64,
}

impl QppConfig {
    pub fn new(k: usize) -> Self {
        Self { k, denominator: DenominatorMode::IdfMean, epsilon: DEFAULT_EPSILON }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::precondition("QPP cutoff k must be at least 1"));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::precondition("QPP epsilon must be a positive finite number"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QppEstimate {
    pub query_id: String,
    pub system_tag: String,
    pub raw: f64,
    /// Set by [`max_normalize`].
    pub normalized: Option<f64>,
}

/// Something worth reporting about an individual estimate.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum QppWarning {
    /// The query had no term data so the mean-abs denominator was used.
    DenominatorFallback { query_id: String, system_tag: String },
    /// Fewer than k documents were available; all of them were used.
    ShortWindow { query_id: String, system_tag: String, available: usize },
    /// The ranked list was empty; the estimate is 0.
    EmptyRanking { query_id: String, system_tag: String },
}

/// `(1/|Q|) * sum_t ln(N / df(t))` over the query terms, with unseen terms
/// smoothed to `df = 0.5`.
pub fn collection_score<S: AsRef<str>>(query_terms: &[S], stats: &TermStatistics) -> Result<f64> {
    if query_terms.is_empty() {
        return Err(Error::precondition("collection score needs at least one query term"));
    }
    let n = stats.doc_count() as f64;
    let total: f64 = query_terms
        .iter()
        .map(|t| {
            let df = stats.doc_freq(t.as_ref()).map_or(UNSEEN_TERM_DF, |df| df as f64);
            (n / df).ln()
        })
        .sum();
    Ok(total / query_terms.len() as f64)
}

/// Mean absolute value of the first `min(k, len)` scores; 0 for an empty list.
pub fn mean_abs_score(scores: &[f64], k: usize) -> f64 {
    let top = &scores[..k.min(scores.len())];
    if top.is_empty() {
        return 0.0;
    }
    top.iter().map(|s| s.abs()).sum::<f64>() / top.len() as f64
}

/// Normalized Query Commitment over the first `min(k, len)` scores.
///
/// Population standard deviation divided by `max(p_q_c, epsilon)`.
/// Lists with fewer than two scores give 0.
pub fn nqc(scores: &[f64], k: usize, p_q_c: f64, epsilon: f64) -> f64 {
    let top = &scores[..k.min(scores.len())];
    if top.len() <= 1 {
        return 0.0;
    }
    // Welford
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (i, &s) in top.iter().enumerate() {
        let delta = s - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (s - mean);
    }
    let variance = (m2 / top.len() as f64).max(0.0);
    variance.sqrt() / p_q_c.max(epsilon)
}

/// Output of a predictor for one (query, system) list.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub value: f64,
    pub warnings: Vec<QppWarning>,
}

/// A post-retrieval estimator `phi(Q, M^(k))`.
///
/// Implementations see the query id, its terms when known, and the system's
/// canonical ranked list for that query.
pub trait QppPredictor: Sync {
    fn name(&self) -> &str;

    fn predict(
        &self,
        query_id: &str,
        system_tag: &str,
        terms: Option<&[String]>,
        ranking: &[RankedDoc],
    ) -> Result<Prediction>;
}

/// NQC with a configurable denominator.
#[derive(Debug, Clone)]
pub struct Nqc<'a> {
    config: QppConfig,
    stats: Option<&'a TermStatistics>,
}

impl<'a> Nqc<'a> {
    /// The idf denominator requires term statistics.
    pub fn new(config: QppConfig, stats: Option<&'a TermStatistics>) -> Result<Self> {
        config.validate()?;
        if config.denominator == DenominatorMode::IdfMean && stats.is_none() {
            return Err(Error::precondition(
                "idf denominator requires term statistics (or use the mean-abs denominator)",
            ));
        }
        Ok(Self { config, stats })
    }

    pub fn config(&self) -> &QppConfig {
        &self.config
    }
}

impl QppPredictor for Nqc<'_> {
    fn name(&self) -> &str {
        "nqc"
    }

    fn predict(
        &self,
        query_id: &str,
        system_tag: &str,
        terms: Option<&[String]>,
        ranking: &[RankedDoc],
    ) -> Result<Prediction> {
        let k = self.config.k;
        let scores: Vec<f64> = ranking.iter().take(k).map(|d| d.score).collect();
        let mut warnings = Vec::new();
        if scores.is_empty() {
            warnings.push(QppWarning::EmptyRanking {
                query_id: query_id.to_string(),
                system_tag: system_tag.to_string(),
            });
            return Ok(Prediction { value: 0.0, warnings });
        }
        if scores.len() < k {
            warnings.push(QppWarning::ShortWindow {
                query_id: query_id.to_string(),
                system_tag: system_tag.to_string(),
                available: scores.len(),
            });
        }
        let denominator = match (self.config.denominator, terms, self.stats) {
            (DenominatorMode::IdfMean, Some(terms), Some(stats)) if !terms.is_empty() => {
                collection_score(terms, stats)?
            }
            (DenominatorMode::IdfMean, _, _) => {
                warnings.push(QppWarning::DenominatorFallback {
                    query_id: query_id.to_string(),
                    system_tag: system_tag.to_string(),
                });
                mean_abs_score(&scores, k)
            }
            (DenominatorMode::MeanAbsScore, _, _) => mean_abs_score(&scores, k),
        };
        let value = nqc(&scores, k, denominator, self.config.epsilon);
        Ok(Prediction { value, warnings })
    }
}

/// Raw estimates for every (query, system) pair plus collected warnings.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QppOutcome {
    /// Sorted by system tag, then query id.
    pub estimates: Vec<QppEstimate>,
    pub warnings: Vec<QppWarning>,
}

/// Runs `predictor` over every query each run retrieved for, optionally
/// restricted to `query_ids`.
pub fn estimate_all<P: QppPredictor>(
    predictor: &P,
    runs: &[SystemRun],
    queries: Option<&QuerySet>,
    query_ids: Option<&BTreeSet<String>>,
) -> Result<QppOutcome> {
    let per_run: Vec<Result<QppOutcome>> = runs
        .par_iter()
        .map(|run| {
            let mut out = QppOutcome::default();
            for (qid, ranking) in run.rankings() {
                if query_ids.is_some_and(|ids| !ids.contains(qid)) {
                    continue;
                }
                let terms = queries.and_then(|q| q.terms(qid));
                let p = predictor.predict(qid, run.system_tag(), terms, ranking)?;
                out.estimates.push(QppEstimate {
                    query_id: qid.clone(),
                    system_tag: run.system_tag().to_string(),
                    raw: p.value,
                    normalized: None,
                });
                out.warnings.extend(p.warnings);
            }
            Ok(out)
        })
        .collect();

    let mut merged = QppOutcome::default();
    for r in per_run {
        let r = r?;
        merged.estimates.extend(r.estimates);
        merged.warnings.extend(r.warnings);
    }
    merged
        .estimates
        .sort_by(|a, b| (&a.system_tag, &a.query_id).cmp(&(&b.system_tag, &b.query_id)));
    merged.warnings.sort();
    merged.warnings.dedup();
    let fallbacks = merged
        .warnings
        .iter()
        .filter(|w| matches!(w, QppWarning::DenominatorFallback { .. }))
        .count();
    if fallbacks > 0 {
        log::warn!("{fallbacks} estimate(s) used the mean-abs denominator: query missing from the query set");
    }
    Ok(merged)
}

/// Divides each raw estimate by the maximum raw value of its scope group.
///
/// A group whose maximum is 0 normalizes to all zeros.
pub fn max_normalize(estimates: &[QppEstimate], scope: NormalizationScope) -> Vec<QppEstimate> {
    let group_key = |e: &QppEstimate| -> Option<String> {
        match scope {
            NormalizationScope::PerSystem => Some(e.system_tag.clone()),
            NormalizationScope::Global => None,
        }
    };
    let mut maxima: BTreeMap<Option<String>, f64> = BTreeMap::new();
    for e in estimates {
        let m = maxima.entry(group_key(e)).or_insert(0.0);
        *m = m.max(e.raw);
    }
    estimates
        .iter()
        .map(|e| {
            let max = maxima[&group_key(e)];
            let normalized = if max > 0.0 { (e.raw / max).clamp(0.0, 1.0) } else { 0.0 };
            QppEstimate { normalized: Some(normalized), ..e.clone() }
        })
        .collect()
}

/// CSV dump with header `query_id,system_tag,raw,normalized`.
pub fn write_estimates_csv(estimates: &[QppEstimate]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["query_id", "system_tag", "raw", "normalized"])?;
    for e in estimates {
        let normalized = e.normalized.map(|n| n.to_string()).unwrap_or_default();
        w.write_record([&e.query_id, &e.system_tag, &e.raw.to_string(), &normalized])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
