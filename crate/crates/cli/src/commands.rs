use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use log::{info, warn};
use vardepth_core::experiment::{normalized_estimates, ExperimentConfig};
use vardepth_core::pooling::{build_pool, write_depths_csv, write_pool};
use vardepth_core::qpp::{write_estimates_csv, QppConfig};
use vardepth_core::synthetic::{generate, SyntheticConfig};
use vardepth_core::{run_simulation, JudgmentSet, PolicyKind, Provenance, SimulationInput};

use crate::args::{FormatArg, GenArgs, PoolArgs, QppArgs, Settings, SimulateArgs};
use crate::inputs::{load_qrels, load_queries, load_runs, load_term_stats};

fn configure_threads(threads: usize) -> Result<()> {
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("cannot configure the worker pool")?;
    }
    Ok(())
}

/// Writes `contents` to `out/name`, or to stdout without `--out`.
fn emit(out: Option<&Path>, name: &str, contents: &str) -> Result<()> {
    match out {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;
            let path = dir.join(name);
            fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))?;
            info!("wrote {}", path.display());
        }
        None => std::io::stdout().lock().write_all(contents.as_bytes()).context("cannot write to stdout")?,
    }
    Ok(())
}

fn qpp_config(s: &Settings) -> Result<QppConfig> {
    let config = QppConfig { denominator: s.denominator, ..QppConfig::new(s.qpp_k) };
    config.validate()?;
    Ok(config)
}

pub fn qpp(args: &QppArgs) -> Result<()> {
    let s = Settings::for_qpp(args)?;
    let qpp = qpp_config(&s)?;
    configure_threads(s.threads)?;
    let runs = load_runs(s.runs_dir()?)?;
    let queries = load_queries(s.queries.as_deref())?;
    let term_stats = load_term_stats(s.term_stats.as_deref())?;
    let empty = JudgmentSet::new(Provenance::Full);
    let input = SimulationInput { runs: &runs, full_judgments: &empty, queries: queries.as_ref(), term_stats: term_stats.as_ref() };
    let ids: BTreeSet<String> = runs.iter().flat_map(|r| r.query_ids().map(String::from)).collect();
    let (estimates, warnings) = normalized_estimates(&input, &qpp, s.norm_scope, &ids)?;
    if !warnings.is_empty() {
        warn!("{} QPP warnings (fallback denominator, short or empty rankings)", warnings.len());
    }
    emit(s.out.as_deref(), "qpp.csv", &write_estimates_csv(&estimates)?)
}

pub fn pool(args: &PoolArgs) -> Result<()> {
    let s = Settings::for_pool(args)?;
    let name = s.policy.as_deref().context("--policy is required (or set `policy` in the config file)")?;
    let kind: PolicyKind = name.parse()?;
    let policy = kind.instantiate(s.d_min, s.d_max).policy;
    policy.validate()?;
    let qpp = qpp_config(&s)?;
    configure_threads(s.threads)?;
    let runs = load_runs(s.runs_dir()?)?;
    let ids: BTreeSet<String> = match s.qrels.as_deref() {
        Some(path) => load_qrels(path)?.query_ids().map(String::from).collect(),
        None => runs.iter().flat_map(|r| r.query_ids().map(String::from)).collect(),
    };
    let estimates = if policy.is_variable() {
        let queries = load_queries(s.queries.as_deref())?;
        let term_stats = load_term_stats(s.term_stats.as_deref())?;
        let empty = JudgmentSet::new(Provenance::Full);
        let input =
            SimulationInput { runs: &runs, full_judgments: &empty, queries: queries.as_ref(), term_stats: term_stats.as_ref() };
        normalized_estimates(&input, &qpp, s.norm_scope, &ids)?.0
    } else {
        Vec::new()
    };
    let pool = build_pool(&runs, policy, &estimates, &ids)?;
    let judged: usize = pool.docs.values().map(|d| d.len()).sum();
    info!("{}: {judged} documents over {} queries", kind.label(), pool.docs.len());
    emit(s.out.as_deref(), "pool.txt", &write_pool(&pool))?;
    if s.out.is_some() {
        emit(s.out.as_deref(), "depths.csv", &write_depths_csv(&pool)?)?;
    }
    Ok(())
}

pub fn simulate(args: &SimulateArgs) -> Result<()> {
    let s = Settings::for_simulate(args)?;
    let mut config = ExperimentConfig::new(s.d_min, s.d_max, s.rel_threshold);
    if let Some(names) = &s.policies {
        let kinds = names
            .iter()
            .filter(|n| !n.trim().is_empty())
            .map(|n| n.parse::<PolicyKind>())
            .collect::<Result<Vec<_>, _>>()?;
        if kinds.is_empty() {
            bail!("--policies lists no policy");
        }
        config = config.with_policies(&kinds);
    }
    config.qpp = qpp_config(&s)?;
    config.normalization = s.norm_scope;
    config.validate()?;
    configure_threads(s.threads)?;

    let qrels_path = s.qrels.as_deref().context("--qrels is required (or set `qrels` in the config file)")?;
    let runs = load_runs(s.runs_dir()?)?;
    let qrels = load_qrels(qrels_path)?;
    let queries = load_queries(s.queries.as_deref())?;
    let term_stats = load_term_stats(s.term_stats.as_deref())?;
    let input = SimulationInput { runs: &runs, full_judgments: &qrels, queries: queries.as_ref(), term_stats: term_stats.as_ref() };
    let report = run_simulation(input, &config)?;
    for p in &report.metadata.policies {
        for note in &p.undefined {
            warn!("{}: {note}", p.pool);
        }
    }
    let (name, body) = match s.format {
        FormatArg::Table => ("report.txt", report.render_table()),
        FormatArg::Csv => ("report.csv", report.render_csv()?),
        FormatArg::Structured => ("report.json", report.render_json()?),
    };
    emit(s.out.as_deref(), name, &body)
}

pub fn gen_synthetic(args: &GenArgs) -> Result<()> {
    let config = SyntheticConfig {
        systems: args.systems,
        queries: args.num_queries,
        docs: args.docs,
        run_length: args.run_length,
        judge_depth: args.judge_depth,
        easy_fraction: args.easy_fraction,
        seed: args.seed,
        ..SyntheticConfig::default()
    };
    let data = generate(&config)?;
    data.write_to(&args.out)?;
    info!("wrote {} runs and {} judgments to {}", data.runs.len(), data.qrels.len(), args.out.display());
    Ok(())
}
