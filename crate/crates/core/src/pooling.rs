//! Pool depths and pool construction.
//!
//! A constant-depth pool takes the top-k documents of every run. A
//! variable-depth pool picks a depth per (query, run) from the normalized
//! QPP estimate, either growing with the estimate (linear) or shrinking
//! with it (inverse linear), and unions the per-run prefixes.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qpp::QppEstimate;
use crate::trec_io::SystemRun;

/// How the depth of a (query, run) pair is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DepthPolicy {
    CdpFixed { k: u32 },
    VdpLinear { d_min: u32, d_max: u32 },
    VdpInverseLinear { d_min: u32, d_max: u32 },
}

impl DepthPolicy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            DepthPolicy::CdpFixed { k: 0 } => {
                Err(Error::precondition("constant pool depth must be at least 1"))
            }
            DepthPolicy::VdpLinear { d_min, d_max } | DepthPolicy::VdpInverseLinear { d_min, d_max } => {
                check_bounds(d_min, d_max)
            }
            _ => Ok(()),
        }
    }

    pub fn is_variable(&self) -> bool {
        !matches!(self, DepthPolicy::CdpFixed { .. })
    }

    /// Depth for a pair whose normalized estimate is `phi`. `phi` is ignored
    /// by constant policies.
    pub fn depth(&self, phi: Option<f64>) -> Result<u32> {
        match *self {
            DepthPolicy::CdpFixed { k } => Ok(k),
            DepthPolicy::VdpLinear { d_min, d_max } => {
                let phi = phi.ok_or_else(|| Error::precondition("variable depth needs a QPP estimate"))?;
                depth_linear(phi, d_min, d_max)
            }
            DepthPolicy::VdpInverseLinear { d_min, d_max } => {
                let phi = phi.ok_or_else(|| Error::precondition("variable depth needs a QPP estimate"))?;
                depth_inverse_linear(phi, d_min, d_max)
            }
        }
    }
}

impl fmt::Display for DepthPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DepthPolicy::CdpFixed { k } => write!(f, "cdp:{k}"),
            DepthPolicy::VdpLinear { d_min, d_max } => write!(f, "vdp-l:{d_min}:{d_max}"),
            DepthPolicy::VdpInverseLinear { d_min, d_max } => write!(f, "vdp-il:{d_min}:{d_max}"),
        }
    }
}

/// A policy with the label it is reported under (`CDP-Min`, `VDP-L`, ...).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NamedPolicy {
    pub name: String,
    pub policy: DepthPolicy,
}

/// The five standard pooling methods for a depth range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    CdpMin,
    CdpAvg,
    CdpMax,
    VdpL,
    VdpIl,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 5] =
        [PolicyKind::CdpMin, PolicyKind::CdpAvg, PolicyKind::VdpL, PolicyKind::VdpIl, PolicyKind::CdpMax];

    pub fn label(&self) -> &'static str {
        match self {
            PolicyKind::CdpMin => "CDP-Min",
            PolicyKind::CdpAvg => "CDP-Avg",
            PolicyKind::CdpMax => "CDP-Max",
            PolicyKind::VdpL => "VDP-L",
            PolicyKind::VdpIl => "VDP-IL",
        }
    }

    /// Instantiates the policy for `[d_min, d_max]`. CDP-Avg uses the
    /// nearest integer to the midpoint, rounding halves up.
    pub fn instantiate(&self, d_min: u32, d_max: u32) -> NamedPolicy {
        let policy = match self {
            PolicyKind::CdpMin => DepthPolicy::CdpFixed { k: d_min },
            PolicyKind::CdpAvg => DepthPolicy::CdpFixed { k: midpoint_depth(d_min, d_max) },
            PolicyKind::CdpMax => DepthPolicy::CdpFixed { k: d_max },
            PolicyKind::VdpL => DepthPolicy::VdpLinear { d_min, d_max },
            PolicyKind::VdpIl => DepthPolicy::VdpInverseLinear { d_min, d_max },
        };
        NamedPolicy { name: self.label().to_string(), policy }
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cdp-min" => Ok(PolicyKind::CdpMin),
            "cdp-avg" => Ok(PolicyKind::CdpAvg),
            "cdp-max" => Ok(PolicyKind::CdpMax),
            "vdp-l" => Ok(PolicyKind::VdpL),
            "vdp-il" => Ok(PolicyKind::VdpIl),
            other => Err(Error::precondition(format!(
                "unknown policy `{other}` (expected cdp-min, cdp-avg, cdp-max, vdp-l or vdp-il)"
            ))),
        }
    }
}

/// `round((d_min + d_max) / 2)`, halves rounded up.
pub fn midpoint_depth(d_min: u32, d_max: u32) -> u32 {
    (u64::from(d_min) + u64::from(d_max)).div_ceil(2) as u32
}

fn check_bounds(d_min: u32, d_max: u32) -> Result<()> {
    if d_min == 0 {
        return Err(Error::precondition("d_min must be at least 1"));
    }
    if d_min > d_max {
        return Err(Error::precondition("d_min must not exceed d_max"));
    }
    Ok(())
}

fn check_phi(phi: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&phi) {
        return Err(Error::precondition(format!("normalized QPP estimate {phi} outside [0, 1]")));
    }
    Ok(())
}

/// `d_min + floor(phi * (d_max - d_min))`.
pub fn depth_linear(phi: f64, d_min: u32, d_max: u32) -> Result<u32> {
    check_phi(phi)?;
    check_bounds(d_min, d_max)?;
    let span = f64::from(d_max - d_min);
    let extra = (phi * span).floor() as u32;
    Ok(d_min + extra.min(d_max - d_min))
}

/// `d_min + floor((1 - phi) * (d_max - d_min))`; equal to `depth_linear(1 - phi)`.
pub fn depth_inverse_linear(phi: f64, d_min: u32, d_max: u32) -> Result<u32> {
    check_phi(phi)?;
    depth_linear(1.0 - phi, d_min, d_max)
}

/// Pooled documents per query and the depth used for every (query, run) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pool {
    pub policy: DepthPolicy,
    /// One entry per configured query, possibly empty.
    pub docs: BTreeMap<String, BTreeSet<String>>,
    /// Keyed by `(query_id, system_tag)`; present for every pair where the
    /// run retrieved at least one document for the query.
    pub depths: BTreeMap<(String, String), u32>,
    /// Pairs whose run had fewer documents than the chosen depth.
    pub short_runs: usize,
}

impl Pool {
    pub fn size(&self, query_id: &str) -> usize {
        self.docs.get(query_id).map_or(0, BTreeSet::len)
    }

    pub fn contains(&self, query_id: &str, doc_id: &str) -> bool {
        self.docs.get(query_id).is_some_and(|d| d.contains(doc_id))
    }

    /// Mean of the recorded depths, 0 when none were recorded.
    pub fn mean_depth(&self) -> f64 {
        if self.depths.is_empty() {
            return 0.0;
        }
        self.depths.values().map(|&d| f64::from(d)).sum::<f64>() / self.depths.len() as f64
    }
}

/// (query, pooled docs, per-run depths, runs shorter than their depth)
type QueryPool = (String, BTreeSet<String>, Vec<(String, u32)>, usize);

/// Builds the pool over `query_ids` as the union of each run's top-`depth`
/// documents.
///
/// `estimates` must carry normalized values; it is only consulted by
/// variable-depth policies, which fail with [`Error::MissingEstimates`]
/// if any pooled pair lacks one.
pub fn build_pool(
    runs: &[SystemRun],
    policy: DepthPolicy,
    estimates: &[QppEstimate],
    query_ids: &BTreeSet<String>,
) -> Result<Pool> {
    policy.validate()?;
    let lookup: HashMap<(&str, &str), f64> = estimates
        .iter()
        .filter_map(|e| e.normalized.map(|n| ((e.query_id.as_str(), e.system_tag.as_str()), n)))
        .collect();

    if policy.is_variable() {
        let mut missing = Vec::new();
        for run in runs {
            for qid in query_ids {
                if run.ranking(qid).is_some_and(|r| !r.is_empty())
                    && !lookup.contains_key(&(qid.as_str(), run.system_tag()))
                {
                    missing.push((qid.clone(), run.system_tag().to_string()));
                }
            }
        }
        if !missing.is_empty() {
            missing.sort();
            return Err(Error::MissingEstimates(missing));
        }
    }

    let per_query: Vec<Result<QueryPool>> = query_ids
        .par_iter()
        .map(|qid| {
            let mut docs = BTreeSet::new();
            let mut depths = Vec::new();
            let mut short = 0;
            for run in runs {
                let Some(ranking) = run.ranking(qid).filter(|r| !r.is_empty()) else {
                    continue;
                };
                let phi = lookup.get(&(qid.as_str(), run.system_tag())).copied();
                let depth = policy.depth(phi)?;
                if ranking.len() < depth as usize {
                    short += 1;
                }
                docs.extend(ranking.iter().take(depth as usize).map(|d| d.doc_id.clone()));
                depths.push((run.system_tag().to_string(), depth));
            }
            Ok((qid.clone(), docs, depths, short))
        })
        .collect();

    let mut pool = Pool { policy, docs: BTreeMap::new(), depths: BTreeMap::new(), short_runs: 0 };
    for r in per_query {
        let (qid, docs, depths, short) = r?;
        for (tag, d) in depths {
            pool.depths.insert((qid.clone(), tag), d);
        }
        pool.docs.insert(qid, docs);
        pool.short_runs += short;
    }
    if pool.short_runs > 0 {
        log::warn!("{}: {} (query, run) pair(s) shorter than their pool depth", policy, pool.short_runs);
    }
    Ok(pool)
}

/// Pool export: `query_id doc_id` per line, sorted.
pub fn write_pool(pool: &Pool) -> String {
    let mut out = String::new();
    for (qid, docs) in &pool.docs {
        for d in docs {
            out.push_str(&format!("{qid} {d}\n"));
        }
    }
    out
}

/// Depth sidecar CSV with header `query_id,system_tag,depth`.
pub fn write_depths_csv(pool: &Pool) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["query_id", "system_tag", "depth"])?;
    for ((qid, tag), depth) in &pool.depths {
        w.write_record([qid.as_str(), tag.as_str(), &depth.to_string()])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
