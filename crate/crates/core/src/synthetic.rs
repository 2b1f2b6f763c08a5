//! Seeded synthetic collections for tests, benchmarks and demos.
//!
//! Queries are either *easy* (many relevant documents, sharply decaying
//! retrieval scores) or *hard* (few relevant documents, nearly flat
//! scores). Systems differ in how strongly they push relevant documents to
//! the top. The full judgments are a depth-`judge_depth` pool over all
//! systems, so every judged document sits within that depth of some run.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::trec_io::{
    write_qrels, write_run, write_term_stats, JudgmentSet, Provenance, QuerySet, RankedDoc, SystemRun,
    TermStatistics,
};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub systems: usize,
    pub queries: usize,
    pub docs: usize,
    /// Documents retrieved per (query, system).
    pub run_length: usize,
    /// Depth of the pool that produces the full judgments.
    pub judge_depth: usize,
    /// Share of queries that are easy.
    pub easy_fraction: f64,
    /// Inclusive range of relevant-document counts for easy queries.
    pub easy_relevant: (usize, usize),
    /// Inclusive range of relevant-document counts for hard queries.
    pub hard_relevant: (usize, usize),
    /// Relevant documents get a grade drawn uniformly from `1..=max_grade`.
    pub max_grade: u32,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            systems: 20,
            queries: 50,
            docs: 5000,
            run_length: 100,
            judge_depth: 100,
            easy_fraction: 0.5,
            easy_relevant: (80, 160),
            hard_relevant: (3, 10),
            max_grade: 1,
            seed: 42,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        if self.systems == 0 || self.queries == 0 {
            return Err(Error::precondition("need at least one system and one query"));
        }
        if self.run_length == 0 || self.judge_depth == 0 {
            return Err(Error::precondition("run length and judging depth must be positive"));
        }
        if !(0.0..=1.0).contains(&self.easy_fraction) {
            return Err(Error::precondition("easy fraction must lie in [0, 1]"));
        }
        let max_rel = self.easy_relevant.1.max(self.hard_relevant.1);
        if self.easy_relevant.0 > self.easy_relevant.1 || self.hard_relevant.0 > self.hard_relevant.1 {
            return Err(Error::precondition("relevant-count ranges must be ordered"));
        }
        if self.docs < self.run_length + max_rel {
            return Err(Error::precondition(format!(
                "collection of {} documents too small for run length {} plus {} relevant",
                self.docs, self.run_length, max_rel
            )));
        }
        if self.max_grade == 0 {
            return Err(Error::precondition("max grade must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub runs: Vec<SystemRun>,
    pub qrels: JudgmentSet,
    pub queries: QuerySet,
    pub term_stats: TermStatistics,
    /// Ids of the easy queries.
    pub easy_queries: BTreeSet<String>,
}

fn doc_id(i: usize) -> String {
    format!("D{i:06}")
}

/// Generates a dataset; identical configs give identical datasets.
pub fn generate(config: &SyntheticConfig) -> Result<SyntheticDataset> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let noise = Normal::new(0.0, 1.0).expect("valid normal");

    // System effectiveness and score scale.
    let systems: Vec<(String, f64, f64)> = (0..config.systems)
        .map(|s| (format!("sys{s:02}"), rng.random_range(0.5..3.0), rng.random_range(0.5..20.0)))
        .collect();

    let n_easy = (config.easy_fraction * config.queries as f64).round() as usize;
    let mut kinds: Vec<bool> = (0..config.queries).map(|i| i < n_easy).collect();
    kinds.shuffle(&mut rng);

    let vocabulary = 200usize;
    let mut term_stats = TermStatistics::new(config.docs as u64)?;
    let df_low = (config.docs / 100).max(1) as u64;
    let df_high = (config.docs / 20).max(df_low as usize + 1) as u64;
    for t in 0..vocabulary {
        term_stats.insert(&format!("t{t:03}"), rng.random_range(df_low..=df_high))?;
    }

    let mut queries = QuerySet::new();
    let mut easy_queries = BTreeSet::new();
    let mut rankings: Vec<BTreeMap<String, Vec<RankedDoc>>> = vec![BTreeMap::new(); config.systems];
    let mut relevant_sets: BTreeMap<String, BTreeMap<String, u32>> = BTreeMap::new();

    for (qi, &easy) in kinds.iter().enumerate() {
        let qid = format!("q{:03}", qi + 1);
        let n_terms = rng.random_range(2..=3);
        let text: Vec<String> = (0..n_terms)
            .map(|_| format!("t{:03}", rng.random_range(0..vocabulary)))
            .collect();
        queries.insert(&qid, &text.join(" "))?;
        if easy {
            easy_queries.insert(qid.clone());
        }

        let (lo, hi) = if easy { config.easy_relevant } else { config.hard_relevant };
        let n_rel = rng.random_range(lo..=hi);
        let relevant: Vec<usize> = index::sample(&mut rng, config.docs, n_rel).into_vec();
        let rel_grades: BTreeMap<String, u32> = relevant
            .iter()
            .map(|&d| (doc_id(d), rng.random_range(1..=config.max_grade)))
            .collect();
        let rel_lookup: BTreeSet<usize> = relevant.iter().copied().collect();

        for (si, (_, strength, scale)) in systems.iter().enumerate() {
            // Candidates: every relevant document plus random non-relevant ones.
            let mut candidates: Vec<(usize, f64)> = relevant
                .iter()
                .map(|&d| (d, strength + noise.sample(&mut rng)))
                .collect();
            let wanted = config.run_length * 2;
            let mut picked = BTreeSet::new();
            while picked.len() < wanted.min(config.docs - rel_lookup.len()) {
                let d = rng.random_range(0..config.docs);
                if !rel_lookup.contains(&d) && picked.insert(d) {
                    candidates.push((d, noise.sample(&mut rng)));
                }
            }
            candidates.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            candidates.truncate(config.run_length);

            // Retrieval scores: decreasing in rank, peaked for easy queries.
            let mut score = scale * 10.0;
            let docs: Vec<RankedDoc> = candidates
                .iter()
                .enumerate()
                .map(|(r, &(d, _))| {
                    let gap = if easy {
                        scale * 1.5 * (-(r as f64) / 8.0).exp()
                    } else {
                        scale * 0.002
                    } * rng.random_range(0.5..1.5);
                    let s = score;
                    score -= gap;
                    RankedDoc::new(doc_id(d), r as u32 + 1, s)
                })
                .collect();
            rankings[si].insert(qid.clone(), docs);
        }
        relevant_sets.insert(qid, rel_grades);
    }

    let runs = systems
        .iter()
        .zip(rankings)
        .map(|((tag, _, _), r)| SystemRun::new(tag.clone(), r))
        .collect::<Result<Vec<_>>>()?;

    let mut qrels = JudgmentSet::new(Provenance::Full);
    for (qid, rel) in &relevant_sets {
        for run in &runs {
            for d in run.ranking(qid).unwrap_or_default().iter().take(config.judge_depth) {
                qrels.insert(qid, &d.doc_id, rel.get(&d.doc_id).copied().unwrap_or(0))?;
            }
        }
    }

    Ok(SyntheticDataset { runs, qrels, queries, term_stats, easy_queries })
}

impl SyntheticDataset {
    /// Writes `runs/<tag>.txt`, `qrels.txt`, `queries.tsv` and `term_stats.txt` under `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        let runs_dir = dir.join("runs");
        fs::create_dir_all(&runs_dir)?;
        for run in &self.runs {
            fs::write(runs_dir.join(format!("{}.txt", run.system_tag())), write_run(run))?;
        }
        fs::write(dir.join("qrels.txt"), write_qrels(&self.qrels))?;
        let mut q = String::new();
        for qid in self.queries.query_ids() {
            q.push_str(&format!("{qid}\t{}\n", self.queries.terms(qid).unwrap_or_default().join(" ")));
        }
        fs::write(dir.join("queries.tsv"), q)?;
        fs::write(dir.join("term_stats.txt"), write_term_stats(&self.term_stats))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SyntheticConfig {
        SyntheticConfig { systems: 4, queries: 6, docs: 400, run_length: 30, judge_depth: 20, easy_relevant: (20, 30), ..Default::default() }
    }

    #[test]
    fn deterministic_for_seed() {
        let a = generate(&small()).unwrap();
        let b = generate(&small()).unwrap();
        assert_eq!(a.runs, b.runs);
        assert_eq!(a.qrels, b.qrels);
        let c = generate(&SyntheticConfig { seed: 7, ..small() }).unwrap();
        assert_ne!(a.runs, c.runs);
    }

    #[test]
    fn shape_matches_config() {
        let d = generate(&small()).unwrap();
        assert_eq!(d.runs.len(), 4);
        assert_eq!(d.queries.len(), 6);
        assert_eq!(d.easy_queries.len(), 3);
        for run in &d.runs {
            assert_eq!(run.rankings().len(), 6);
            assert!(run.rankings().values().all(|r| r.len() == 30));
        }
    }

    #[test]
    fn judgments_are_the_judging_pool() {
        let cfg = small();
        let d = generate(&cfg).unwrap();
        let mut pooled = 0;
        for qid in d.queries.query_ids() {
            let docs: BTreeSet<&str> = d
                .runs
                .iter()
                .flat_map(|r| r.ranking(qid).unwrap().iter().take(cfg.judge_depth).map(|x| x.doc_id.as_str()))
                .collect();
            let judged: BTreeSet<&str> = d.qrels.query(qid).unwrap().keys().map(String::as_str).collect();
            assert_eq!(docs, judged);
            pooled += docs.len();
        }
        assert_eq!(pooled, d.qrels.len());
    }

    #[test]
    fn rejects_bad_config() {
        assert!(generate(&SyntheticConfig { docs: 10, ..small() }).is_err());
        assert!(generate(&SyntheticConfig { easy_fraction: 1.5, ..small() }).is_err());
        assert!(generate(&SyntheticConfig { systems: 0, ..small() }).is_err());
    }
}
