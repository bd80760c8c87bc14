mod common;

use common::*;
use episode_rank::io::{episodes_to_jsonl, parse_episodes};
use episode_rank::report::{parse_report, write_report, ReportRow};
use episode_rank::{Alphabet, CandidateSet};
use proptest::prelude::*;

fn number() -> impl Strategy<Value = f64> {
    prop_oneof![
        8 => any::<f64>().prop_filter("finite", |x| x.is_finite()),
        1 => Just(f64::INFINITY),
        1 => Just(f64::NEG_INFINITY),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn episode_files_round_trip(dags in proptest::collection::vec(raw_dag(6, 4), 1..10), support in any::<Option<u32>>()) {
        let a = alphabet(4);
        let mut set = CandidateSet::new();
        for (i, d) in dags.iter().enumerate() {
            set.insert(format!("e{i}"), d.strict(&a), support.map(u64::from));
        }
        let text = episodes_to_jsonl(set.items(), &a);
        let mut b = Alphabet::new();
        let back = parse_episodes(&text, &mut b, false).unwrap();
        prop_assert!(back.duplicates.is_empty());
        prop_assert_eq!(back.candidates.len(), set.len());
        for (x, y) in set.items().iter().zip(back.candidates.items()) {
            prop_assert_eq!(&x.id, &y.id);
            prop_assert_eq!(x.support, y.support);
            prop_assert_eq!(x.episode.notation(&a), y.episode.notation(&b));
        }
        // re-serializing is stable
        prop_assert_eq!(episodes_to_jsonl(back.candidates.items(), &b), text);
    }

    #[test]
    fn reports_round_trip(nums in proptest::collection::vec((number(), number(), number(), number(), number(), number(), any::<u64>()), 0..20)) {
        let rows: Vec<ReportRow> = nums
            .iter()
            .enumerate()
            .map(|(i, &(a, b, c, d, e, f, s))| ReportRow {
                id: format!("r{i}"),
                support: s,
                mu_ind: a,
                rank_ind: b,
                mu_part: c,
                rank_part: d,
                method: "normal".into(),
                explainer: "independence".into(),
                rho: e,
                eta: f,
            })
            .collect();
        let text = write_report(&rows, &[], &["seed 1".into()], false);
        prop_assert_eq!(parse_report(&text).unwrap(), rows);
    }
}
