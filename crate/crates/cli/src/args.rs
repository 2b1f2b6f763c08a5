use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use vardepth_core::{DenominatorMode, NormalizationScope};

#[derive(Debug, Parser)]
#[command(name = "vardepth", version, about = "Simulate QPP-driven variable-depth pooling over TREC runs and qrels")]
pub struct Cli {
    /// Raise log verbosity (-v info, -vv debug, -vvv trace); RUST_LOG overrides.
    #[arg(short, long, action = ArgAction::Count, global = true)]
    pub verbose: u8,

    /// Log errors only.
    #[arg(short, long, global = true, conflicts_with = "verbose")]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write normalized NQC estimates for every (query, run) pair as qpp.csv.
    Qpp(QppArgs),
    /// Build one pool and write pool.txt plus the per-run depths.csv.
    Pool(PoolArgs),
    /// Evaluate every pooling policy against the full judgments and print the report.
    Simulate(SimulateArgs),
    /// Write a seeded synthetic collection (runs/, qrels.txt, queries.tsv, term_stats.txt).
    GenSynthetic(GenArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScopeArg {
    PerSystem,
    Global,
}

impl From<ScopeArg> for NormalizationScope {
    fn from(s: ScopeArg) -> Self {
        match s {
            ScopeArg::PerSystem => NormalizationScope::PerSystem,
            ScopeArg::Global => NormalizationScope::Global,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DenominatorArg {
    Idf,
    MeanAbs,
}

impl From<DenominatorArg> for DenominatorMode {
    fn from(d: DenominatorArg) -> Self {
        match d {
            DenominatorArg::Idf => DenominatorMode::IdfMean,
            DenominatorArg::MeanAbs => DenominatorMode::MeanAbsScore,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormatArg {
    Table,
    Csv,
    Structured,
}

/// Inputs and QPP settings shared by `qpp`, `pool` and `simulate`.
#[derive(Debug, Args)]
pub struct CommonArgs {
    /// TOML file with defaults for any of these flags (keys as flag names); flags win.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Directory of run files; every regular file is parsed as one run.
    #[arg(long, value_name = "DIR")]
    pub runs: Option<PathBuf>,

    /// Query file, one `qid<TAB>text` per line.
    #[arg(long, value_name = "FILE")]
    pub queries: Option<PathBuf>,

    /// Term statistics file (`N <docs>` header, then `term df` lines).
    #[arg(long = "term-stats", value_name = "FILE")]
    pub term_stats: Option<PathBuf>,

    /// Shallowest pooling depth [default: 10, capped at --dmax].
    #[arg(long, value_name = "N")]
    pub dmin: Option<u32>,

    /// Deepest pooling depth [default: 50, raised to --dmin].
    #[arg(long, value_name = "N")]
    pub dmax: Option<u32>,

    /// NQC cutoff k [default: dmax].
    #[arg(long = "qpp-k", value_name = "N")]
    pub qpp_k: Option<usize>,

    /// Max-normalization scope for QPP estimates [default: per-system].
    #[arg(long = "norm-scope", value_enum)]
    pub norm_scope: Option<ScopeArg>,

    /// NQC denominator; idf needs --queries and --term-stats [default: idf].
    #[arg(long, value_enum)]
    pub denominator: Option<DenominatorArg>,

    /// Output directory; created if missing.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,

    /// Worker threads, 0 for one per core [default: 0].
    #[arg(long, value_name = "N")]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct QppArgs {
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct PoolArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    /// Qrels file; restricts the pool to its queries when given.
    #[arg(long, value_name = "FILE")]
    pub qrels: Option<PathBuf>,

    /// Pooling policy: cdp-min, cdp-avg, cdp-max, vdp-l or vdp-il.
    #[arg(long, value_name = "POLICY")]
    pub policy: Option<String>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    /// Full qrels file.
    #[arg(long, value_name = "FILE")]
    pub qrels: Option<PathBuf>,

    /// Minimum grade counted as relevant [default: 1].
    #[arg(long = "rel-threshold", value_name = "N")]
    pub rel_threshold: Option<u32>,

    /// Comma-separated policies to report [default: cdp-min,cdp-avg,vdp-l,vdp-il,cdp-max].
    #[arg(long, value_name = "LIST", value_delimiter = ',')]
    pub policies: Option<Vec<String>>,

    /// Report format; structured is JSON with diagnostics [default: table].
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Output directory; created if missing.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,

    /// RNG seed.
    #[arg(long, value_name = "N", default_value_t = 42)]
    pub seed: u64,

    /// Number of systems.
    #[arg(long, value_name = "N", default_value_t = 20)]
    pub systems: usize,

    /// Number of queries.
    #[arg(long = "num-queries", value_name = "N", default_value_t = 50)]
    pub num_queries: usize,

    /// Collection size in documents.
    #[arg(long, value_name = "N", default_value_t = 5000)]
    pub docs: usize,

    /// Documents retrieved per (query, system).
    #[arg(long = "run-length", value_name = "N", default_value_t = 100)]
    pub run_length: usize,

    /// Depth of the pool the judgments are drawn from.
    #[arg(long = "judge-depth", value_name = "N", default_value_t = 100)]
    pub judge_depth: usize,

    /// Share of easy queries, in [0, 1].
    #[arg(long = "easy-fraction", value_name = "X", default_value_t = 0.5)]
    pub easy_fraction: f64,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum PolicyList {
    Joined(String),
    Items(Vec<String>),
}

/// Keys accepted in a `--config` file.
#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct FileConfig {
    runs: Option<PathBuf>,
    qrels: Option<PathBuf>,
    queries: Option<PathBuf>,
    term_stats: Option<PathBuf>,
    dmin: Option<u32>,
    dmax: Option<u32>,
    rel_threshold: Option<u32>,
    policies: Option<PolicyList>,
    policy: Option<String>,
    qpp_k: Option<usize>,
    norm_scope: Option<ScopeArg>,
    denominator: Option<DenominatorArg>,
    format: Option<FormatArg>,
    out: Option<PathBuf>,
    threads: Option<usize>,
}

impl FileConfig {
    fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        let mut cfg: FileConfig =
            toml::from_str(&text).with_context(|| format!("invalid config file {}", path.display()))?;
        // relative paths resolve against the config file's directory
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.runs, &mut cfg.qrels, &mut cfg.queries, &mut cfg.term_stats, &mut cfg.out]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }
}

/// Flags merged over the config file, with defaults filled in.
#[derive(Debug)]
pub struct Settings {
    pub runs: Option<PathBuf>,
    pub qrels: Option<PathBuf>,
    pub queries: Option<PathBuf>,
    pub term_stats: Option<PathBuf>,
    pub d_min: u32,
    pub d_max: u32,
    pub rel_threshold: u32,
    pub policies: Option<Vec<String>>,
    pub policy: Option<String>,
    pub qpp_k: usize,
    pub norm_scope: NormalizationScope,
    pub denominator: DenominatorMode,
    pub format: FormatArg,
    pub out: Option<PathBuf>,
    pub threads: usize,
}

impl Settings {
    fn merge(common: &CommonArgs, qrels: Option<&PathBuf>) -> Result<(Self, FileConfig)> {
        let mut file = match &common.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        // an unset bound defaults to 10 / 50 but never crosses an explicit one
        let (d_min, d_max) = match (common.dmin.or(file.dmin), common.dmax.or(file.dmax)) {
            (Some(lo), Some(hi)) => (lo, hi),
            (Some(lo), None) => (lo, lo.max(50)),
            (None, Some(hi)) => (hi.min(10), hi),
            (None, None) => (10, 50),
        };
        if d_min > d_max {
            bail!("d_min must not exceed d_max (got {d_min} > {d_max})");
        }
        let settings = Settings {
            runs: common.runs.clone().or(file.runs.take()),
            qrels: qrels.cloned().or(file.qrels.take()),
            queries: common.queries.clone().or(file.queries.take()),
            term_stats: common.term_stats.clone().or(file.term_stats.take()),
            d_min,
            d_max,
            rel_threshold: file.rel_threshold.unwrap_or(1),
            policies: None,
            policy: file.policy.take(),
            qpp_k: common.qpp_k.or(file.qpp_k).unwrap_or(d_max as usize),
            norm_scope: common.norm_scope.or(file.norm_scope).unwrap_or(ScopeArg::PerSystem).into(),
            denominator: common.denominator.or(file.denominator).unwrap_or(DenominatorArg::Idf).into(),
            format: file.format.unwrap_or(FormatArg::Table),
            out: common.out.clone().or(file.out.take()),
            threads: common.threads.or(file.threads).unwrap_or(0),
        };
        Ok((settings, file))
    }

    pub fn for_qpp(args: &QppArgs) -> Result<Self> {
        Ok(Self::merge(&args.common, None)?.0)
    }

    pub fn for_pool(args: &PoolArgs) -> Result<Self> {
        let (mut s, _) = Self::merge(&args.common, args.qrels.as_ref())?;
        s.policy = args.policy.clone().or(s.policy);
        Ok(s)
    }

    pub fn for_simulate(args: &SimulateArgs) -> Result<Self> {
        let (mut s, file) = Self::merge(&args.common, args.qrels.as_ref())?;
        s.rel_threshold = args.rel_threshold.unwrap_or(s.rel_threshold);
        s.format = args.format.unwrap_or(s.format);
        s.policies = args.policies.clone().or(file.policies.map(|p| match p {
            PolicyList::Joined(s) => s.split(',').map(str::to_string).collect(),
            PolicyList::Items(v) => v,
        }));
        Ok(s)
    }

    pub fn runs_dir(&self) -> Result<&Path> {
        self.runs.as_deref().context("--runs is required (or set `runs` in the config file)")
    }
}
