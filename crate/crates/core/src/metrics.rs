//! Effectiveness and pool-quality measures.
//!
//! AP/MAP follow trec_eval conventions: unjudged documents are non-relevant
//! and a grade threshold decides relevance. Coverage is the micro-averaged
//! fraction of all known relevant documents that a pool captures, and PNC
//! divides it by the natural log of the mean pool size.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pooling::Pool;
use crate::trec_io::{JudgmentSet, Provenance, SystemRun};

/// Average precision of `ranking` for `query_id`.
///
/// Returns 0 when the query has no relevant judgments.
pub fn average_precision<'a, I>(ranking: I, judgments: &JudgmentSet, query_id: &str, rel_threshold: u32) -> f64
where
    I: IntoIterator<Item = &'a str>,
{
    let total_relevant = judgments.relevant_count(query_id, rel_threshold);
    if total_relevant == 0 {
        return 0.0;
    }
    let Some(qrels) = judgments.query(query_id) else {
        return 0.0;
    };
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, doc) in ranking.into_iter().enumerate() {
        if qrels.get(doc).is_some_and(|&g| g >= rel_threshold) {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    sum / total_relevant as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapResult {
    pub map: f64,
    /// Queries averaged over.
    pub evaluated: usize,
    /// Queries without any relevant judgment.
    pub skipped: Vec<String>,
}

/// MAP over the union of the run's queries and the judged queries.
pub fn mean_average_precision(run: &SystemRun, judgments: &JudgmentSet, rel_threshold: u32) -> Result<MapResult> {
    let query_ids: BTreeSet<String> = run
        .query_ids()
        .chain(judgments.query_ids())
        .map(str::to_string)
        .collect();
    mean_average_precision_over(run, judgments, rel_threshold, &query_ids)
}

/// MAP restricted to `query_ids`. Queries with no relevant judgment are
/// skipped; a relevant query the run did not answer scores 0.
pub fn mean_average_precision_over(
    run: &SystemRun,
    judgments: &JudgmentSet,
    rel_threshold: u32,
    query_ids: &BTreeSet<String>,
) -> Result<MapResult> {
    let mut sum = 0.0;
    let mut evaluated = 0;
    let mut skipped = Vec::new();
    for qid in query_ids {
        if judgments.relevant_count(qid, rel_threshold) == 0 {
            skipped.push(qid.clone());
            continue;
        }
        let ranking = run.ranking(qid).unwrap_or_default();
        sum += average_precision(ranking.iter().map(|d| d.doc_id.as_str()), judgments, qid, rel_threshold);
        evaluated += 1;
    }
    if evaluated == 0 {
        return Err(Error::undefined(format!(
            "MAP for {}: no query has a document with grade >= {rel_threshold}",
            run.system_tag()
        )));
    }
    Ok(MapResult { map: sum / evaluated as f64, evaluated, skipped })
}

/// Per-system MAP values used to rank systems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemScoreVector {
    pub provenance: Provenance,
    /// Sorted by system tag.
    pub scores: Vec<(String, f64)>,
}

impl SystemScoreVector {
    pub fn values(&self) -> Vec<f64> {
        self.scores.iter().map(|(_, v)| *v).collect()
    }
}

/// Fraction of all relevant documents in `full_judgments` that the pool contains.
pub fn coverage(pool: &Pool, full_judgments: &JudgmentSet, rel_threshold: u32) -> Result<f64> {
    let r_max = full_judgments.total_relevant(rel_threshold);
    if r_max == 0 {
        return Err(Error::undefined(format!("coverage: no judged document has grade >= {rel_threshold}")));
    }
    let found: usize = pool
        .docs
        .iter()
        .map(|(qid, docs)| {
            docs.iter()
                .filter(|d| full_judgments.is_relevant(qid, d, rel_threshold))
                .count()
        })
        .sum();
    Ok(found as f64 / r_max as f64)
}

/// Mean number of pooled documents per configured query.
pub fn avg_pool_size(pool: &Pool) -> Result<f64> {
    if pool.docs.is_empty() {
        return Err(Error::precondition("average pool size over zero queries"));
    }
    let total: usize = pool.docs.values().map(BTreeSet::len).sum();
    if total == 0 {
        log::warn!("every pool is empty");
    }
    Ok(total as f64 / pool.docs.len() as f64)
}

/// Pool-size normalized coverage: `coverage / ln(avg_pool_size)`.
pub fn pnc(coverage: f64, avg_pool_size: f64) -> Result<f64> {
    if avg_pool_size.is_nan() || avg_pool_size <= 1.0 {
        return Err(Error::precondition(format!(
            "PNC needs an average pool size above 1, got {avg_pool_size}"
        )));
    }
    Ok(coverage / avg_pool_size.ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoolQuality {
    pub coverage: f64,
    pub avg_pool_size: f64,
    /// Undefined when the mean pool size is at most 1.
    pub pnc: Option<f64>,
}

impl PoolQuality {
    pub fn measure(pool: &Pool, full_judgments: &JudgmentSet, rel_threshold: u32) -> Result<Self> {
        let coverage = coverage(pool, full_judgments, rel_threshold)?;
        let avg_pool_size = avg_pool_size(pool)?;
        let pnc = pnc(coverage, avg_pool_size).ok();
        Ok(Self { coverage, avg_pool_size, pnc })
    }
}

fn check_pair(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::precondition(format!("vector lengths differ: {} vs {}", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::precondition("correlation needs at least two observations"));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::precondition("correlation inputs must be finite"));
    }
    Ok(())
}

/// Pearson product-moment correlation.
pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    let n = x.len() as f64;
    let mean_x = x.iter().sum::<f64>() / n;
    let mean_y = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let dx = a - mean_x;
        let dy = b - mean_y;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::undefined("Pearson r of a constant vector"));
    }
    // sqrt(x * x) == x exactly, so identical inputs give exactly 1
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Kendall's tau-b, computed with Knight's O(n log n) merge-sort method.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    let n = x.len();
    // `+ 0.0` folds -0.0 into 0.0 so total_cmp and == agree on ties
    let mut pairs: Vec<(f64, f64)> = x.iter().zip(y).map(|(a, b)| (a + 0.0, b + 0.0)).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.total_cmp(&b.1)));

    let tied_pairs = |run: u64| run * run.saturating_sub(1) / 2;
    let n0 = (n as u64) * (n as u64 - 1) / 2;

    let mut ties_x = 0u64;
    let mut ties_xy = 0u64;
    let (mut run_x, mut run_xy) = (1u64, 1u64);
    for w in pairs.windows(2) {
        if w[0].0 == w[1].0 {
            run_x += 1;
            if w[0].1 == w[1].1 {
                run_xy += 1;
            } else {
                ties_xy += tied_pairs(run_xy);
                run_xy = 1;
            }
        } else {
            ties_x += tied_pairs(run_x);
            ties_xy += tied_pairs(run_xy);
            run_x = 1;
            run_xy = 1;
        }
    }
    ties_x += tied_pairs(run_x);
    ties_xy += tied_pairs(run_xy);

    let mut ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let discordant = count_inversions(&mut ys);

    let mut ties_y = 0u64;
    let mut run_y = 1u64;
    for w in ys.windows(2) {
        if w[0] == w[1] {
            run_y += 1;
        } else {
            ties_y += tied_pairs(run_y);
            run_y = 1;
        }
    }
    ties_y += tied_pairs(run_y);

    if ties_x == n0 || ties_y == n0 {
        return Err(Error::undefined("Kendall tau of an all-tied vector"));
    }
    let numerator = n0 as f64 - ties_x as f64 - ties_y as f64 + ties_xy as f64 - 2.0 * discordant as f64;
    // product in u128 so identical tie structure gives sqrt(a * a) == a
    let denominator = (((n0 - ties_x) as u128 * (n0 - ties_y) as u128) as f64).sqrt();
    Ok((numerator / denominator).clamp(-1.0, 1.0))
}

/// Stable merge sort of `v` returning the number of strict inversions.
fn count_inversions(v: &mut [f64]) -> u64 {
    let mut buf = v.to_vec();
    merge_count(v, &mut buf)
}

fn merge_count(v: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = merge_count(&mut v[..mid], &mut buf[..mid]) + merge_count(&mut v[mid..], &mut buf[mid..]);
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if v[j].total_cmp(&v[i]) == Ordering::Less {
            buf[k] = v[j];
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            buf[k] = v[i];
            i += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&v[i..mid]);
    k += mid - i;
    buf[k..].copy_from_slice(&v[j..]);
    v.copy_from_slice(&buf[..n]);
    swaps
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pooling::DepthPolicy;
    use crate::trec_io::parse_qrels;
    use std::collections::BTreeMap;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn ap_examples() {
        let j = parse_qrels("q 0 dA 1\nq 0 dB 1\nq 0 dX 0").unwrap();
        let single = parse_qrels("q 0 dA 1").unwrap();
        assert_eq!(average_precision(["dA"], &single, "q", 1), 1.0);
        assert_eq!(average_precision(["dX", "dA"], &single, "q", 1), 0.5);
        let v = average_precision(["dA", "dX", "dB"], &j, "q", 1);
        assert!(close(v, (1.0 + 2.0 / 3.0) / 2.0, 1e-15));
        assert!(close(v, 0.8333, 5e-5));
    }

    #[test]
    fn ap_graded_threshold() {
        let j = parse_qrels("q 0 a 1\nq 0 b 2").unwrap();
        assert_eq!(average_precision(["a", "b"], &j, "q", 2), 0.5);
        assert_eq!(average_precision(["a", "b"], &j, "q", 3), 0.0);
        assert_eq!(average_precision(["a", "b"], &j, "missing", 1), 0.0);
    }

    #[test]
    fn map_examples() {
        let run = SystemRun::from_scores("s", [("q1", vec![("x", 2.0), ("a", 1.0)])]).unwrap();
        let j = parse_qrels("q1 0 a 1").unwrap();
        assert_eq!(mean_average_precision(&run, &j, 1).unwrap().map, 0.5);

        let run = SystemRun::from_scores("s", [("q1", vec![("a", 1.0)]), ("q2", vec![("x", 1.0)])]).unwrap();
        let j = parse_qrels("q1 0 a 1\nq2 0 b 1").unwrap();
        assert_eq!(mean_average_precision(&run, &j, 1).unwrap().map, 0.5);
    }

    #[test]
    fn map_skips_queries_without_relevant() {
        let ranked = |ids: &[&str]| ids.iter().enumerate().map(|(i, d)| (d.to_string(), -(i as f64))).collect::<Vec<_>>();
        let run = SystemRun::from_scores(
            "s",
            [
                ("q1", ranked(&["a", "b", "c", "d", "x"])),
                ("q2", ranked(&["x"])),
                ("q3", ranked(&["a", "b", "x"])),
            ],
        )
        .unwrap();
        // q1: four relevant at ranks 1-4 out of five -> 0.8
        // q2: judged but nothing relevant -> skipped
        // q3: two relevant at ranks 1-2 out of five -> 0.4
        let j = parse_qrels(
            "q1 0 a 1\nq1 0 b 1\nq1 0 c 1\nq1 0 d 1\nq1 0 u 1\n\
             q2 0 x 0\n\
             q3 0 a 1\nq3 0 b 1\nq3 0 u 1\nq3 0 v 1\nq3 0 w 1",
        )
        .unwrap();
        let m = mean_average_precision(&run, &j, 1).unwrap();
        assert_eq!(m.evaluated, 2);
        assert_eq!(m.skipped, vec!["q2".to_string()]);
        assert!(close(m.map, 0.6, 1e-15));
    }

    #[test]
    fn map_mean_over_non_skipped() {
        let run = SystemRun::from_scores(
            "s",
            [
                ("a", vec![("r", 9.0), ("n1", 8.0), ("n2", 7.0)]),
                ("b", vec![("n", 1.0)]),
                ("c", vec![("n1", 9.0), ("n2", 8.0), ("n3", 7.0), ("n4", 6.0), ("r", 5.0)]),
            ],
        )
        .unwrap();
        let j = parse_qrels("a 0 r 1\na 0 n2 1\nb 0 n 0\nc 0 r 1\nc 0 n1 1").unwrap();
        // a: (1/1 + 2/3)/2, c: (1/1 + 2/5)/2
        let m = mean_average_precision(&run, &j, 1).unwrap();
        let expected = ((1.0 + 2.0 / 3.0) / 2.0 + (1.0 + 2.0 / 5.0) / 2.0) / 2.0;
        assert!(close(m.map, expected, 1e-15));
        assert_eq!(m.skipped, vec!["b".to_string()]);
    }

    #[test]
    fn map_without_relevant_is_error() {
        let run = SystemRun::from_scores("s", [("q1", vec![("a", 1.0)])]).unwrap();
        let j = parse_qrels("q1 0 a 0").unwrap();
        assert!(matches!(mean_average_precision(&run, &j, 1), Err(Error::Undefined(_))));
    }

    #[test]
    fn unretrieved_relevant_query_scores_zero() {
        let run = SystemRun::from_scores("s", [("q1", vec![("a", 1.0)])]).unwrap();
        let j = parse_qrels("q1 0 a 1\nq2 0 b 1").unwrap();
        let m = mean_average_precision(&run, &j, 1).unwrap();
        assert_eq!((m.map, m.evaluated), (0.5, 2));
    }

    fn pool(entries: &[(&str, &[&str])]) -> Pool {
        let docs: BTreeMap<String, BTreeSet<String>> = entries
            .iter()
            .map(|(q, ds)| (q.to_string(), ds.iter().map(|d| d.to_string()).collect()))
            .collect();
        Pool { policy: DepthPolicy::CdpFixed { k: 1 }, docs, depths: BTreeMap::new(), short_runs: 0 }
    }

    #[test]
    fn coverage_examples() {
        let full = parse_qrels("q1 0 a 1\nq1 0 b 1\nq1 0 n 0\nq2 0 c 2").unwrap();
        assert_eq!(coverage(&pool(&[("q1", &["a", "b", "n"]), ("q2", &["c"])]), &full, 1).unwrap(), 1.0);
        let partial = coverage(&pool(&[("q1", &["a"]), ("q2", &["c"])]), &full, 1).unwrap();
        assert!(close(partial, 2.0 / 3.0, 1e-15));
        assert_eq!(coverage(&pool(&[("q1", &["n", "z"]), ("q2", &[])]), &full, 1).unwrap(), 0.0);
        assert!(matches!(coverage(&pool(&[("q1", &["a"])]), &full, 5), Err(Error::Undefined(_))));
    }

    #[test]
    fn pool_size_examples() {
        assert_eq!(avg_pool_size(&pool(&[("q1", &["a", "b"]), ("q2", &["c"])])).unwrap(), 1.5);
        assert_eq!(avg_pool_size(&pool(&[("q1", &[]), ("q2", &[])])).unwrap(), 0.0);
        assert!(avg_pool_size(&pool(&[])).is_err());
    }

    #[test]
    fn pnc_examples() {
        assert!(close(pnc(0.3988, 187.66).unwrap(), 0.0762, 5e-4));
        assert!(close(pnc(0.4052, 239.54).unwrap(), 0.0740, 5e-4));
        assert!(close(pnc(0.6542, 30.67).unwrap(), 0.1911, 5e-4));
        assert!(matches!(pnc(0.5, 1.0), Err(Error::Precondition(_))));
        assert!(matches!(pnc(0.5, 0.2), Err(Error::Precondition(_))));
    }

    #[test]
    fn pool_quality_pnc_consistency() {
        let full = parse_qrels("q1 0 a 1\nq1 0 b 1\nq2 0 c 1").unwrap();
        let q = PoolQuality::measure(&pool(&[("q1", &["a", "x", "y"]), ("q2", &["c"])]), &full, 1).unwrap();
        assert_eq!(q.pnc, Some(q.coverage / q.avg_pool_size.ln()));
        let q = PoolQuality::measure(&pool(&[("q1", &["a"]), ("q2", &["c"])]), &full, 1).unwrap();
        assert_eq!(q.pnc, None);
    }

    #[test]
    fn pearson_examples() {
        let x = [1.0, 2.0, 3.0];
        assert!(close(pearson_r(&x, &x).unwrap(), 1.0, 1e-12));
        assert!(close(pearson_r(&x, &[-1.0, -2.0, -3.0]).unwrap(), -1.0, 1e-12));
        assert!(close(pearson_r(&x, &[1.0, 3.0, 2.0]).unwrap(), 0.5, 1e-12));
        assert!(matches!(pearson_r(&x, &[2.0, 2.0, 2.0]), Err(Error::Undefined(_))));
        assert!(matches!(pearson_r(&x, &[1.0]), Err(Error::Precondition(_))));
        assert!(matches!(pearson_r(&[1.0], &[1.0]), Err(Error::Precondition(_))));
    }

    #[test]
    fn kendall_examples() {
        let x = [1.0, 2.0, 3.0];
        assert!(close(kendall_tau(&x, &[10.0, 20.0, 30.0]).unwrap(), 1.0, 1e-12));
        assert!(close(kendall_tau(&x, &[3.0, 2.0, 1.0]).unwrap(), -1.0, 1e-12));
        assert!(close(kendall_tau(&x, &[1.0, 3.0, 2.0]).unwrap(), 1.0 / 3.0, 1e-12));
        assert!(matches!(kendall_tau(&x, &[5.0, 5.0, 5.0]), Err(Error::Undefined(_))));
        assert!(matches!(kendall_tau(&[f64::NAN, 1.0], &[1.0, 2.0]), Err(Error::Precondition(_))));
    }

    #[test]
    fn kendall_with_ties() {
        // x ties one pair, y ties another: n0 = 6, n1 = 1, n2 = 1.
        // pairs: (1,2): x tie; (1,3) C; (1,4) C; (2,3) C; (2,4) C; (3,4) y tie -> C=4, D=0
        let t = kendall_tau(&[1.0, 1.0, 2.0, 3.0], &[1.0, 2.0, 3.0, 3.0]).unwrap();
        assert!(close(t, 4.0 / 5.0, 1e-12));
    }
}
