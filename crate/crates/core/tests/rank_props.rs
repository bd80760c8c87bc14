mod common;

use common::*;
use episode_rank::rank::{rank_combined, Explainer, PreparedEpisode, RankOptions};
use episode_rank::tail::{log_survival_exact, log_survival_normal};
use episode_rank::{CandidateSet, Dataset, Episode, VertexSet};
use proptest::prelude::*;

fn ranking_instance() -> impl Strategy<Value = (Episode, Dataset)> {
    (raw_dag(4, 3), proptest::collection::vec(sequence(5, 12), 20..60)).prop_map(|(dag, seqs)| {
        let a = alphabet(5);
        (dag.strict(&a), Dataset::from_sequences(a, seqs))
    })
}

/// Candidates holding every same-vertex superepisode of `ep` reachable by
/// adding one edge between incomparable vertices.
fn superepisodes(ep: &Episode, dataset: &Dataset) -> CandidateSet {
    let a = dataset.alphabet();
    let mut set = CandidateSet::new();
    set.insert("self".into(), ep.clone(), None);
    for u in 0..ep.len() {
        for v in 0..ep.len() {
            if u == v || ep.has_edge(u, v) || ep.has_edge(v, u) {
                continue;
            }
            let mut edges = ep.edges();
            edges.push((u, v));
            if let Ok(h) = Episode::new(ep.labels().to_vec(), &edges, a) {
                let id = h.notation(a);
                set.insert(id, h, None);
            }
        }
    }
    set
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn combined_rank_is_the_minimum_and_its_explainer_reproduces_it((ep, ds) in ranking_instance(), exact in any::<bool>()) {
        let candidates = superepisodes(&ep, &ds);
        let opts = RankOptions::<f64> { exact, ..RankOptions::default() };
        let combined = rank_combined(&ep, &ds, &candidates, &opts).unwrap();
        let prep = PreparedEpisode::new(&ep, &ds, opts.limits).unwrap();
        let ind = prep.independence(&opts).unwrap();
        prop_assert_eq!(&combined.independence, &ind.result);
        let specs = prep.partition_specs(&candidates).unwrap();
        prop_assert_eq!(specs.len(), combined.evaluated);
        for (explainer, spec) in specs {
            let ev = prep.evaluate(spec.clone(), explainer, &opts).unwrap();
            prop_assert!(combined.partition.rank <= ev.result.rank);
            if spec.is_independence() {
                // (∅, ∅) is the independence model, bit for bit
                prop_assert_eq!(ev.result.rank.to_bits(), ind.result.rank.to_bits());
                prop_assert_eq!(ev.result.mu.to_bits(), ind.result.mu.to_bits());
            }
        }
        let spec = match combined.partition.explainer {
            Explainer::Independence => None,
            Explainer::Prefix(w) => Some(prep.prefix_spec(w)),
            Explainer::Superepisode(i) => Some(prep.superepisode_spec(&candidates.get(i).episode).unwrap()),
        };
        let standalone = match spec {
            Some(spec) => prep.evaluate(spec, combined.partition.explainer, &opts).unwrap().result,
            None => ind.result.clone(),
        };
        prop_assert_eq!(standalone.rank.to_bits(), combined.partition.rank.to_bits());
        prop_assert_eq!(&standalone, &combined.partition);
    }

    #[test]
    fn exact_survival_is_monotone(
        probs in proptest::collection::vec(0.0..1.0f64, 1..40),
        bump in 0..40usize,
        by in 0.0..1.0f64,
    ) {
        let m = probs.len();
        let sf: Vec<f64> = (0..=m + 1).map(|n| log_survival_exact(&probs, n)).collect();
        prop_assert_eq!(sf[0], 0.0);
        for n in 1..sf.len() {
            prop_assert!(sf[n] <= sf[n - 1] + 1e-12);
        }
        prop_assert_eq!(sf[m + 1], f64::NEG_INFINITY);
        let mut raised = probs.clone();
        let i = bump % m;
        raised[i] += (1.0 - raised[i]) * by;
        for n in 0..=m {
            prop_assert!(log_survival_exact(&raised, n) >= sf[n] - 1e-12);
        }
    }

    #[test]
    fn normal_tail_tracks_the_exact_tail(
        m in 1000..3000usize,
        mu in 10.5..50.0f64,
        spread in proptest::collection::vec(0.0..2.0f64, 1000..3000),
        k in 0.5..2.0f64,
    ) {
        // probabilities with mean mu/m, varied per sequence
        let scale = mu / spread.iter().take(m).cycle().take(m).sum::<f64>();
        let probs: Vec<f64> = spread.iter().cycle().take(m).map(|s| (s * scale).min(1.0)).collect();
        let mu: f64 = probs.iter().sum();
        prop_assume!(mu > 10.0 && mu <= 50.0);
        let s2: f64 = probs.iter().map(|p| p * (1.0 - p)).sum();
        let n = (mu + k * s2.sqrt()).ceil() as u64;
        let exact = log_survival_exact(&probs, n as usize);
        let normal = log_survival_normal(mu, s2, n);
        let ratio = (normal / exact).ln().abs();
        prop_assert!(ratio <= 0.1_f64.ln_1p(), "mu={} n={} exact={} normal={}", mu, n, exact, normal);
    }
}

#[test]
fn normal_tail_is_lighter_far_out_at_small_mu() {
    let probs = vec![10.5 / 2000.0; 2000];
    let s2: f64 = probs.iter().map(|p| p * (1.0 - p)).sum();
    let n = (10.5 + 3.0 * s2.sqrt()).ceil() as u64;
    let exact = log_survival_exact(&probs, n as usize);
    let normal = log_survival_normal(10.5, s2, n);
    assert!(normal < exact);
    assert!((normal / exact).ln() > 0.1_f64.ln_1p());
}

#[test]
fn trivial_prefix_specs_share_the_independence_rank() {
    let ds = Dataset::from_strs(&["abx", "ab", "bax", "xyb", "aab"]);
    let mut a = ds.alphabet().clone();
    let ep = Episode::serial(&mut a, &["a", "b"]);
    let opts = RankOptions::<f64>::default();
    let prep = PreparedEpisode::new(&ep, &ds, opts.limits).unwrap();
    let ind = prep.independence(&opts).unwrap();
    let w = VertexSet::singleton(0);
    let spec = prep.prefix_spec(w);
    assert!(spec.is_independence());
    let ev = prep.evaluate(spec, Explainer::Prefix(w), &opts).unwrap();
    assert_eq!(ev.result.rank.to_bits(), ind.result.rank.to_bits());
    assert_eq!(ev.fit, ind.fit);
}
