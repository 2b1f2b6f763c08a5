use proptest::prelude::*;
use vardepth_core::qpp::{max_normalize, nqc, NormalizationScope, QppEstimate, DEFAULT_EPSILON};

fn scores() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-100.0f64..100.0, 0..60).prop_map(|mut v| {
        v.sort_by(|a, b| b.total_cmp(a));
        v
    })
}

fn estimates() -> impl Strategy<Value = Vec<QppEstimate>> {
    prop::collection::vec((0usize..4, 0usize..6, 0.0f64..10.0), 1..30).prop_map(|v| {
        let mut seen = std::collections::BTreeMap::new();
        for (s, q, raw) in v {
            seen.insert((format!("s{s}"), format!("q{q}")), raw);
        }
        seen.into_iter()
            .map(|((s, q), raw)| QppEstimate { query_id: q, system_tag: s, raw, normalized: None })
            .collect()
    })
}

proptest! {
    #[test]
    fn nqc_is_finite_and_non_negative(s in scores(), k in 1usize..80, p in 0.0f64..10.0) {
        let v = nqc(&s, k, p, DEFAULT_EPSILON);
        prop_assert!(v.is_finite() && v >= 0.0);
    }

    #[test]
    fn nqc_is_non_increasing_in_denominator(s in scores(), k in 1usize..80, p in 0.0f64..10.0, dp in 0.0f64..10.0) {
        prop_assert!(nqc(&s, k, p + dp, DEFAULT_EPSILON) <= nqc(&s, k, p, DEFAULT_EPSILON));
    }

    #[test]
    fn nqc_cutoff_beyond_length(s in scores(), extra in 0usize..20) {
        let n = s.len().max(1);
        prop_assert_eq!(nqc(&s, n + extra, 1.5, DEFAULT_EPSILON), nqc(&s, n, 1.5, DEFAULT_EPSILON));
    }

    #[test]
    fn normalization_bounds_idempotence_and_argmax(e in estimates(), global in any::<bool>()) {
        let scope = if global { NormalizationScope::Global } else { NormalizationScope::PerSystem };
        let once = max_normalize(&e, scope);
        prop_assert_eq!(&max_normalize(&once, scope), &once);
        let groups: Vec<Option<&str>> = once
            .iter()
            .map(|x| if global { None } else { Some(x.system_tag.as_str()) })
            .collect();
        for g in groups.iter().collect::<std::collections::BTreeSet<_>>() {
            let members: Vec<&QppEstimate> = once.iter().zip(&groups).filter(|(_, h)| *h == g).map(|(x, _)| x).collect();
            let max_raw = members.iter().map(|x| x.raw).fold(0.0, f64::max);
            for m in &members {
                let n = m.normalized.unwrap();
                prop_assert!((0.0..=1.0).contains(&n));
                if max_raw > 0.0 {
                    // argmax by raw is argmax by normalized
                    prop_assert_eq!(m.raw == max_raw, n == 1.0);
                } else {
                    prop_assert_eq!(n, 0.0);
                }
            }
        }
    }
}

mod common;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn nqc_shift_invariant(s in scores(), k in 1usize..80, c in -1000.0f64..1000.0) {
        let shifted: Vec<f64> = s.iter().map(|x| x + c).collect();
        let a = nqc(&s, k, 1.0, DEFAULT_EPSILON);
        let b = nqc(&shifted, k, 1.0, DEFAULT_EPSILON);
        prop_assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
    }

    #[test]
    fn nqc_matches_two_pass_oracle(s in scores(), k in 1usize..80, p in 0.0f64..10.0) {
        let got = nqc(&s, k, p, DEFAULT_EPSILON);
        let want = common::oracles::nqc(&s, k, p, DEFAULT_EPSILON);
        prop_assert!((got - want).abs() <= 1e-12 * want.max(1.0), "{got} vs {want}");
    }
}
