//! The simulated pooling study.
//!
//! For every configured policy a pool is built over the judged queries, the
//! full judgments are restricted to it, every system is scored by MAP under
//! the reduced judgments, and the resulting system ordering is correlated
//! with the ordering under the full judgments.

use std::collections::{BTreeSet, HashSet};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{self, PoolQuality, SystemScoreVector};
use crate::pooling::{build_pool, NamedPolicy, Pool, PolicyKind};
use crate::qpp::{self, DenominatorMode, NormalizationScope, Nqc, QppConfig, QppEstimate, QppWarning};
use crate::trec_io::{JudgmentSet, Provenance, QuerySet, SystemRun, TermStatistics};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub d_min: u32,
    pub d_max: u32,
    /// Minimum grade counted as relevant.
    pub rel_threshold: u32,
    pub policies: Vec<NamedPolicy>,
    pub qpp: QppConfig,
    pub normalization: NormalizationScope,
}

impl ExperimentConfig {
    /// All five policies over `[d_min, d_max]`, QPP cutoff at `d_max`.
    pub fn new(d_min: u32, d_max: u32, rel_threshold: u32) -> Self {
        Self {
            d_min,
            d_max,
            rel_threshold,
            policies: PolicyKind::ALL.iter().map(|k| k.instantiate(d_min, d_max)).collect(),
            qpp: QppConfig::new(d_max as usize),
            normalization: NormalizationScope::PerSystem,
        }
    }

    /// Depth-100 news collections: `[10, 50]`, grade >= 1 relevant.
    pub fn robust() -> Self {
        Self::new(10, 50, 1)
    }

    /// Depth-10 passage collections: `[1, 5]`, grade >= 2 relevant.
    pub fn deep_learning() -> Self {
        Self::new(1, 5, 2)
    }

    /// Replaces the policy list, keeping the given order.
    pub fn with_policies(mut self, kinds: &[PolicyKind]) -> Self {
        self.policies = kinds.iter().map(|k| k.instantiate(self.d_min, self.d_max)).collect();
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.d_min == 0 {
            return Err(Error::precondition("d_min must be at least 1"));
        }
        if self.d_min > self.d_max {
            return Err(Error::precondition("d_min must not exceed d_max"));
        }
        if self.rel_threshold == 0 {
            return Err(Error::precondition("relevance threshold must be at least 1"));
        }
        if self.policies.is_empty() {
            return Err(Error::precondition("no pooling policy configured"));
        }
        let mut names = HashSet::new();
        for p in &self.policies {
            p.policy.validate()?;
            if !names.insert(p.name.as_str()) {
                return Err(Error::precondition(format!("policy name {} used twice", p.name)));
            }
        }
        self.qpp.validate()
    }
}

/// Restricts `full` to the pooled (query, doc) pairs.
pub fn induce_qrels(pool: &Pool, full: &JudgmentSet) -> JudgmentSet {
    let mut induced = JudgmentSet::new(Provenance::Induced);
    for (qid, docs) in &pool.docs {
        let Some(judged) = full.query(qid) else { continue };
        for doc in docs {
            if let Some(&g) = judged.get(doc) {
                induced.insert(qid, doc, g).expect("source judgments are conflict-free");
            }
        }
    }
    induced
}

/// One line of the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub pool: String,
    pub policy: crate::pooling::DepthPolicy,
    /// Mean depth over (query, run) pairs.
    pub avg_depth: f64,
    pub pearson_r: Option<f64>,
    pub kendall_tau: Option<f64>,
    pub coverage: f64,
    pub avg_pool_size: f64,
    pub pnc: Option<f64>,
    /// Per-system MAP under the induced judgments.
    pub system_map: SystemScoreVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyDiagnostics {
    pub pool: String,
    /// Queries left without a relevant document after reduction.
    pub skipped_queries: Vec<String>,
    /// (query, run) pairs shorter than their pool depth.
    pub short_run_pairs: usize,
    /// Measures that could not be computed, with the reason.
    pub undefined: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QppSummary {
    pub estimates: usize,
    pub denominator_fallbacks: usize,
    pub short_windows: usize,
    pub empty_rankings: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub config: ExperimentConfig,
    pub systems: Vec<String>,
    pub queries: usize,
    /// Queries without a relevant document in the full judgments.
    pub reference_skipped_queries: Vec<String>,
    pub qpp: Option<QppSummary>,
    pub policies: Vec<PolicyDiagnostics>,
    /// Modelling choices in effect for this run.
    pub decisions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub rows: Vec<ReportRow>,
    pub reference: SystemScoreVector,
    pub metadata: ReportMetadata,
}

/// Everything the simulation reads.
#[derive(Debug, Clone, Copy)]
pub struct SimulationInput<'a> {
    pub runs: &'a [SystemRun],
    pub full_judgments: &'a JudgmentSet,
    pub queries: Option<&'a QuerySet>,
    pub term_stats: Option<&'a TermStatistics>,
}

/// Normalized NQC estimates for every judged (query, run) pair.
pub fn normalized_estimates(
    input: &SimulationInput<'_>,
    qpp_config: &QppConfig,
    scope: NormalizationScope,
    query_ids: &BTreeSet<String>,
) -> Result<(Vec<QppEstimate>, Vec<QppWarning>)> {
    if qpp_config.denominator == DenominatorMode::IdfMean && input.queries.is_none() {
        return Err(Error::precondition(
            "idf denominator requires a query file (or use the mean-abs denominator)",
        ));
    }
    let predictor = Nqc::new(*qpp_config, input.term_stats)?;
    let outcome = qpp::estimate_all(&predictor, input.runs, input.queries, Some(query_ids))?;
    Ok((qpp::max_normalize(&outcome.estimates, scope), outcome.warnings))
}

/// Runs every configured policy and assembles the report.
pub fn run_simulation(input: SimulationInput<'_>, config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    if input.runs.len() < 2 {
        return Err(Error::precondition(format!(
            "need at least 2 systems to correlate rankings, got {}",
            input.runs.len()
        )));
    }
    if input.full_judgments.provenance() != Provenance::Full {
        return Err(Error::precondition("reference judgments must have provenance `full`"));
    }
    let mut runs: Vec<&SystemRun> = input.runs.iter().collect();
    runs.sort_by(|a, b| a.system_tag().cmp(b.system_tag()));
    for w in runs.windows(2) {
        if w[0].system_tag() == w[1].system_tag() {
            return Err(Error::validation(format!("system tag {} appears in more than one run", w[0].system_tag())));
        }
    }
    let sorted_runs: Vec<SystemRun> = runs.into_iter().cloned().collect();
    let input = SimulationInput { runs: &sorted_runs, ..input };

    let query_ids: BTreeSet<String> = input.full_judgments.query_ids().map(str::to_string).collect();
    if query_ids.is_empty() {
        return Err(Error::precondition("full judgments contain no queries"));
    }

    let (estimates, qpp_summary) = if config.policies.iter().any(|p| p.policy.is_variable()) {
        let (estimates, warnings) = normalized_estimates(&input, &config.qpp, config.normalization, &query_ids)?;
        let mut summary = QppSummary { estimates: estimates.len(), ..QppSummary::default() };
        for w in &warnings {
            match w {
                QppWarning::DenominatorFallback { .. } => summary.denominator_fallbacks += 1,
                QppWarning::ShortWindow { .. } => summary.short_windows += 1,
                QppWarning::EmptyRanking { .. } => summary.empty_rankings += 1,
            }
        }
        (estimates, Some(summary))
    } else {
        (Vec::new(), None)
    };

    let (reference, reference_skipped) =
        score_systems(input.runs, input.full_judgments, config.rel_threshold, &query_ids)
            .map_err(|e| Error::Policy { policy: "reference".into(), source: Box::new(e) })?;
    let reference_values = reference.values();

    let evaluated: Vec<Result<(ReportRow, PolicyDiagnostics)>> = config
        .policies
        .par_iter()
        .map(|named| {
            evaluate_policy(named, &input, config, &estimates, &query_ids, &reference_values)
                .map_err(|e| Error::Policy { policy: named.name.clone(), source: Box::new(e) })
        })
        .collect();

    let mut rows = Vec::with_capacity(evaluated.len());
    let mut diagnostics = Vec::with_capacity(evaluated.len());
    for r in evaluated {
        let (row, diag) = r?;
        rows.push(row);
        diagnostics.push(diag);
    }

    let metadata = ReportMetadata {
        config: config.clone(),
        systems: input.runs.iter().map(|r| r.system_tag().to_string()).collect(),
        queries: query_ids.len(),
        reference_skipped_queries: reference_skipped,
        qpp: qpp_summary,
        policies: diagnostics,
        decisions: decisions(config),
    };
    Ok(ExperimentReport { rows, reference, metadata })
}

fn score_systems(
    runs: &[SystemRun],
    judgments: &JudgmentSet,
    rel_threshold: u32,
    query_ids: &BTreeSet<String>,
) -> Result<(SystemScoreVector, Vec<String>)> {
    let mut scores = Vec::with_capacity(runs.len());
    let mut skipped = Vec::new();
    for run in runs {
        let m = metrics::mean_average_precision_over(run, judgments, rel_threshold, query_ids)?;
        // skipped queries depend only on the judgments
        skipped = m.skipped;
        scores.push((run.system_tag().to_string(), m.map));
    }
    Ok((SystemScoreVector { provenance: judgments.provenance(), scores }, skipped))
}

fn evaluate_policy(
    named: &NamedPolicy,
    input: &SimulationInput<'_>,
    config: &ExperimentConfig,
    estimates: &[QppEstimate],
    query_ids: &BTreeSet<String>,
    reference: &[f64],
) -> Result<(ReportRow, PolicyDiagnostics)> {
    let pool = build_pool(input.runs, named.policy, estimates, query_ids)?;
    let induced = induce_qrels(&pool, input.full_judgments);
    let (system_map, skipped) = score_systems(input.runs, &induced, config.rel_threshold, query_ids)?;
    let values = system_map.values();

    let mut undefined = Vec::new();
    let pearson_r = metrics::pearson_r(&values, reference)
        .map_err(|e| undefined.push(format!("pearson_r: {e}")))
        .ok();
    let kendall_tau = metrics::kendall_tau(&values, reference)
        .map_err(|e| undefined.push(format!("kendall_tau: {e}")))
        .ok();
    let quality = PoolQuality::measure(&pool, input.full_judgments, config.rel_threshold)?;
    if quality.pnc.is_none() {
        undefined.push(format!("pnc: average pool size {} is not above 1", quality.avg_pool_size));
    }

    let row = ReportRow {
        pool: named.name.clone(),
        policy: named.policy,
        avg_depth: pool.mean_depth(),
        pearson_r,
        kendall_tau,
        coverage: quality.coverage,
        avg_pool_size: quality.avg_pool_size,
        pnc: quality.pnc,
        system_map,
    };
    let diag = PolicyDiagnostics {
        pool: named.name.clone(),
        skipped_queries: skipped,
        short_run_pairs: pool.short_runs,
        undefined,
    };
    Ok((row, diag))
}

fn decisions(config: &ExperimentConfig) -> Vec<String> {
    let denominator = match config.qpp.denominator {
        DenominatorMode::IdfMean => format!(
            "NQC denominator: mean ln(N/df) over query terms, unseen terms at df={}; queries without text fall back to mean |score|",
            qpp::UNSEEN_TERM_DF
        ),
        DenominatorMode::MeanAbsScore => "NQC denominator: mean |score| of the top-k documents".to_string(),
    };
    vec![
        format!("NQC: population standard deviation of the top-{} scores", config.qpp.k),
        denominator,
        format!("NQC denominator guard: epsilon={:e}", config.qpp.epsilon),
        format!("QPP max-normalization scope: {}", config.normalization),
        "CDP-Avg depth: midpoint of [d_min, d_max] rounded half up".to_string(),
        "avg depth: mean over (query, run) pairs where the run retrieved the query".to_string(),
        "coverage: relevant pooled documents over all relevant judged documents (micro-average)".to_string(),
        "PNC: coverage / ln(avg pool size)".to_string(),
        "Kendall tau: tau-b on MAP values".to_string(),
        "MAP: queries without a relevant judgment are skipped; unjudged documents are non-relevant".to_string(),
    ]
}

fn fmt_opt(v: Option<f64>, precision: usize) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.precision$}"))
}

impl ExperimentReport {
    /// Aligned text table: Pool, Avg Depth, P-r, K-τ, C, |P|-bar, PNC.
    pub fn render_table(&self) -> String {
        let header = ["Pool", "Avg Depth", "P-r", "K-τ", "C", "|P|-bar", "PNC"];
        let body: Vec<[String; 7]> = self
            .rows
            .iter()
            .map(|r| {
                [
                    r.pool.clone(),
                    format!("{:.2}", r.avg_depth),
                    fmt_opt(r.pearson_r, 4),
                    fmt_opt(r.kendall_tau, 4),
                    format!("{:.4}", r.coverage),
                    format!("{:.2}", r.avg_pool_size),
                    fmt_opt(r.pnc, 4),
                ]
            })
            .collect();
        let mut widths = header.map(|h| h.chars().count());
        for row in &body {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.chars().count());
            }
        }
        let mut out = String::new();
        let mut line = |cells: &[String]| {
            let mut l = String::new();
            for (i, (cell, w)) in cells.iter().zip(widths).enumerate() {
                if i == 0 {
                    let _ = write!(l, "{cell:<w$}");
                } else {
                    let _ = write!(l, "  {cell:>w$}");
                }
            }
            out.push_str(l.trim_end());
            out.push('\n');
        };
        line(&header.map(String::from));
        for row in &body {
            line(row);
        }
        out
    }

    /// CSV with header `pool,avg_depth,pearson_r,kendall_tau,coverage,avg_pool_size,pnc`.
    pub fn render_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["pool", "avg_depth", "pearson_r", "kendall_tau", "coverage", "avg_pool_size", "pnc"])?;
        let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        for r in &self.rows {
            w.write_record([
                r.pool.clone(),
                r.avg_depth.to_string(),
                opt(r.pearson_r),
                opt(r.kendall_tau),
                r.coverage.to_string(),
                r.avg_pool_size.to_string(),
                opt(r.pnc),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Pretty-printed JSON of the whole report, metadata included.
    pub fn render_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn row(&self, pool: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.pool == pool)
    }
}
