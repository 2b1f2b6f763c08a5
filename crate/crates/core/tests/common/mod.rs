#![allow(dead_code)]

pub mod oracles;

use std::fs;
use std::path::{Path, PathBuf};

use vardepth_core::trec_io::{parse_qrels, parse_queries, parse_run, parse_term_stats};
use vardepth_core::{JudgmentSet, QuerySet, SystemRun, TermStatistics};

pub struct Fixture {
    pub runs: Vec<SystemRun>,
    pub qrels: JudgmentSet,
    pub queries: QuerySet,
    pub term_stats: TermStatistics,
}

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/golden")
}

pub fn load_fixture(dir: &Path) -> Fixture {
    let read = |p: PathBuf| fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
    let mut paths: Vec<PathBuf> = fs::read_dir(dir.join("runs"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    paths.sort();
    Fixture {
        runs: paths.into_iter().map(|p| parse_run(&read(p)).unwrap()).collect(),
        qrels: parse_qrels(&read(dir.join("qrels.txt"))).unwrap(),
        queries: parse_queries(&read(dir.join("queries.tsv"))).unwrap(),
        term_stats: parse_term_stats(&read(dir.join("term_stats.txt"))).unwrap(),
    }
}
