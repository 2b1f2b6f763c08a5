use std::collections::BTreeMap;

use proptest::prelude::*;
use vardepth_core::trec_io::{parse_qrels, parse_run, write_qrels, write_run};
use vardepth_core::{JudgmentSet, Provenance, RankedDoc, SystemRun};

fn id() -> impl Strategy<Value = String> {
    "[a-zA-Z0-9_.-]{1,8}"
}

fn judgments() -> impl Strategy<Value = JudgmentSet> {
    prop::collection::btree_map((id(), id()), 0u32..5, 0..40).prop_map(|m| {
        let mut j = JudgmentSet::new(Provenance::Full);
        for ((q, d), g) in m {
            j.insert(&q, &d, g).unwrap();
        }
        j
    })
}

fn run() -> impl Strategy<Value = SystemRun> {
    prop::collection::btree_map(id(), prop::collection::btree_map(id(), -50i32..50, 1..12), 1..5).prop_map(|m| {
        let rankings: BTreeMap<String, Vec<RankedDoc>> = m
            .into_iter()
            .map(|(q, docs)| {
                // integer-valued scores force plenty of ties
                let docs = docs.into_iter().enumerate().map(|(i, (d, s))| RankedDoc::new(d, i as u32 + 1, s as f64 / 4.0)).collect();
                (q, docs)
            })
            .collect();
        SystemRun::new("tag", rankings).unwrap()
    })
}

proptest! {
    #[test]
    fn qrels_round_trip(j in judgments()) {
        prop_assert_eq!(parse_qrels(&write_qrels(&j)).unwrap(), j);
    }

    #[test]
    fn canonicalization_is_idempotent(r in run()) {
        let mut twice = r.clone();
        twice.canonicalize();
        prop_assert_eq!(&twice, &r);
        prop_assert_eq!(parse_run(&write_run(&r)).unwrap(), r);
    }

    #[test]
    fn ranks_are_contiguous_and_ordered(r in run()) {
        for docs in r.rankings().values() {
            let ranks: Vec<u32> = docs.iter().map(|d| d.rank).collect();
            let expected: Vec<u32> = (1..=docs.len() as u32).collect();
            prop_assert_eq!(ranks, expected);
            for w in docs.windows(2) {
                prop_assert!(w[0].score > w[1].score || (w[0].score == w[1].score && w[0].doc_id < w[1].doc_id));
            }
        }
    }
}
