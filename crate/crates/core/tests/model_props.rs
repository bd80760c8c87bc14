mod common;

use common::*;
use episode_rank::machine::{block_prefix, EdgeSet, Machine};
use episode_rank::model::{
    collapse_alphabet, conditional_distribution, fit, gradient_hessian, independence_params, log_likelihood,
    state_statistics, FitOptions, LabelClasses, ModelParams, PartitionSpec, StateStats,
};
use episode_rank::rank::{rank, RankOptions};
use episode_rank::reach::{reach_probabilities, Recurrence};
use episode_rank::{Dataset, Episode, Label, VertexSet};
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;

/// Episode over the first three symbols; data over four, so the background
/// class is populated.
#[derive(Clone, Debug)]
struct Instance {
    episode: Episode,
    dataset: Dataset,
}

impl Instance {
    fn machine(&self) -> Machine {
        Machine::build(&self.episode).unwrap()
    }
}

fn instance(max_vertices: usize) -> impl Strategy<Value = Instance> {
    (raw_dag(max_vertices, 3), proptest::collection::vec(sequence(4, 12), 5..40)).prop_map(|(dag, seqs)| {
        let a = alphabet(4);
        Instance { episode: dag.strict(&a), dataset: Dataset::from_sequences(a, seqs) }
    })
}

/// Disjoint edge sets from a per-edge choice in {none, C1, C2}.
fn spec_from(machine: &Machine, choice: &[u8]) -> PartitionSpec {
    let n = machine.num_edges();
    let pick = |k| (0..n).filter(move |&e| choice[e % choice.len()] % 3 == k);
    PartitionSpec::new(machine, EdgeSet::from_indices(n, pick(1)), EdgeSet::from_indices(n, pick(2))).unwrap()
}

fn params_for(classes: &LabelClasses, stats: &StateStats, values: &[f64]) -> ModelParams<f64> {
    random_params(classes.num_classes(), classes.gauge(stats).unwrap_or(0), values)
}

fn values() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-3.0..3.0f64, 8)
}

fn choices() -> impl Strategy<Value = Vec<u8>> {
    proptest::collection::vec(0..3u8, 1..12)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn reach_matches_enumeration(inst in instance(4), choice in choices(), vals in values()) {
        let m = inst.machine();
        let classes = collapse_alphabet(&inst.dataset, &inst.episode);
        let stats = state_statistics(&m, &classes, &inst.dataset);
        let spec = spec_from(&m, &choice);
        let params = params_for(&classes, &stats, &vals);
        let table = reach_probabilities(&Recurrence::partition(&m, &classes, &params, &spec), 5);
        for n in 0..=5 {
            let oracle = enumerate_reach(&m, &classes, &params, &spec, n);
            for s in 0..m.num_states() {
                prop_assert!((table.get(s, n) - oracle[s]).abs() <= 1e-12, "n={} s={}: {} vs {}", n, s, table.get(s, n), oracle[s]);
            }
        }
    }

    #[test]
    fn reach_slices_are_distributions(inst in instance(5), choice in choices(), vals in values()) {
        let m = inst.machine();
        let classes = collapse_alphabet(&inst.dataset, &inst.episode);
        let stats = state_statistics(&m, &classes, &inst.dataset);
        let spec = spec_from(&m, &choice);
        let params = params_for(&classes, &stats, &vals);
        let table = reach_probabilities(&Recurrence::partition(&m, &classes, &params, &spec), 40);
        prop_assert_eq!(table.get(m.source(), 0), &1.0);
        let mut prev = 0.0;
        for n in 0..=40 {
            let sum: f64 = table.slice(n).iter().sum();
            prop_assert!((sum - 1.0).abs() <= 1e-9);
            let sink = *table.get(m.sink(), n);
            prop_assert!(sink >= prev);
            prev = sink;
        }
    }

    #[test]
    fn empty_spec_reproduces_the_independence_recursion(inst in instance(5)) {
        let m = inst.machine();
        let classes = collapse_alphabet(&inst.dataset, &inst.episode);
        let stats = state_statistics(&m, &classes, &inst.dataset);
        prop_assume!(stats.total() > 0);
        let params = independence_params(&stats, &classes, 25.0).unwrap();
        let spec = PartitionSpec::independence(&m);
        let total = stats.total() as f64;
        let totals = stats.class_totals();
        let probs = conditional_distribution(&params, &m, &spec, m.source());
        for (c, p) in probs.iter().enumerate() {
            let freq = totals[c] as f64 / total;
            prop_assert!((p - freq).abs() <= 1e-14 * freq.max(1e-300) || totals[c] == 0);
        }
        for s in 0..m.num_states() {
            prop_assert_eq!(&conditional_distribution(&params, &m, &spec, s), &probs);
        }
        let ind = Recurrence::independence(&m, |l| probs[classes.class_of(l)]);
        let part = Recurrence::partition(&m, &classes, &params, &spec);
        let (a, b) = (ind.sink_probabilities(30), part.sink_probabilities(30));
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-15, "{} vs {}", x, y);
        }
    }

    #[test]
    fn statistics_account_for_every_event(inst in instance(5)) {
        let m = inst.machine();
        let classes = collapse_alphabet(&inst.dataset, &inst.episode);
        let stats = state_statistics(&m, &classes, &inst.dataset);
        for s in 0..m.num_states() {
            prop_assert_eq!(stats.row(s).iter().sum::<u64>(), stats.c(s));
        }
        prop_assert_eq!(stats.total() as usize, inst.dataset.num_events());
        prop_assert_eq!(stats.covered() as usize, m.support(&inst.dataset));
    }

    #[test]
    fn likelihood_sums_over_events(inst in instance(5), choice in choices(), vals in values()) {
        let m = inst.machine();
        let classes = collapse_alphabet(&inst.dataset, &inst.episode);
        let stats = state_statistics(&m, &classes, &inst.dataset);
        let spec = spec_from(&m, &choice);
        let params = params_for(&classes, &stats, &vals);
        let mut expected = 0.0;
        for seq in inst.dataset.sequences() {
            let mut w = VertexSet::EMPTY;
            for &l in seq {
                let s = m.state_id(w).unwrap();
                expected += oracle_distribution(&m, &classes, &params, &spec, s)[classes.class_of(l)].ln();
                w = oracle_step(&inst.episode, w, l);
            }
        }
        let ll = log_likelihood(&stats, &params, &m, &spec);
        prop_assert!((ll - expected).abs() <= 1e-10 * expected.abs().max(1.0), "{} vs {}", ll, expected);
    }

    #[test]
    fn gradient_and_hessian_match_finite_differences(inst in instance(5), choice in choices(), vals in values()) {
        let m = inst.machine();
        let classes = collapse_alphabet(&inst.dataset, &inst.episode);
        let stats = state_statistics(&m, &classes, &inst.dataset);
        let spec = spec_from(&m, &choice);
        let params = params_for(&classes, &stats, &vals);
        let (g, h) = gradient_hessian(&stats, &params, &m, &spec);
        let x = params.to_free();
        let d = x.len();
        let step = 1e-5;
        let at = |x: &[f64]| log_likelihood(&stats, &params.with_free(x), &m, &spec);
        let grad_at = |x: &[f64]| gradient_hessian(&stats, &params.with_free(x), &m, &spec).0;
        for i in 0..d {
            let (mut lo, mut hi) = (x.clone(), x.clone());
            lo[i] -= step;
            hi[i] += step;
            let fd = (at(&hi) - at(&lo)) / (2.0 * step);
            prop_assert!((g[i] - fd).abs() <= 1e-5 * g[i].abs().max(1.0), "grad {}: {} vs {}", i, g[i], fd);
            let (gl, gh) = (grad_at(&lo), grad_at(&hi));
            for j in 0..d {
                let fd = (gh[j] - gl[j]) / (2.0 * step);
                prop_assert!((h[i * d + j] - fd).abs() <= 1e-5 * h[i * d + j].abs().max(1.0));
            }
        }
        let eig = SymmetricEigen::new(DMatrix::from_row_slice(d, d, &h)).eigenvalues;
        for e in eig.iter() {
            prop_assert!(*e <= 1e-8, "eigenvalue {}", e);
        }
    }

    #[test]
    fn likelihood_is_concave_along_segments(inst in instance(5), choice in choices(), a in values(), b in values()) {
        let m = inst.machine();
        let classes = collapse_alphabet(&inst.dataset, &inst.episode);
        let stats = state_statistics(&m, &classes, &inst.dataset);
        let spec = spec_from(&m, &choice);
        let (pa, pb) = (params_for(&classes, &stats, &a), params_for(&classes, &stats, &b));
        let (xa, xb) = (pa.to_free(), pb.to_free());
        let ll = |x: &[f64]| log_likelihood(&stats, &pa.with_free(x), &m, &spec);
        for lambda in [0.25, 0.5, 0.75] {
            let mid: Vec<f64> = xa.iter().zip(&xb).map(|(p, q)| lambda * p + (1.0 - lambda) * q).collect();
            let chord = lambda * ll(&xa) + (1.0 - lambda) * ll(&xb);
            prop_assert!(ll(&mid) >= chord - 1e-9 * chord.abs().max(1.0));
        }
    }

    #[test]
    fn fits_are_deterministic(inst in instance(5), choice in choices()) {
        let m = inst.machine();
        let classes = collapse_alphabet(&inst.dataset, &inst.episode);
        let stats = state_statistics(&m, &classes, &inst.dataset);
        let spec = spec_from(&m, &choice);
        let opts = FitOptions::default();
        let a = fit(&m, &spec, &stats, &classes, &opts);
        let b = fit(&m, &spec, &stats, &classes, &opts);
        prop_assert_eq!(&a, &b);
        if let Ok(f) = a {
            let bits = |p: &ModelParams<f64>| p.to_free().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            prop_assert_eq!(bits(&f.params), bits(&b.unwrap().params));
            // the fit never ends below its starting point
            let start = independence_params(&stats, &classes, 25.0).unwrap();
            prop_assert!(f.log_likelihood >= log_likelihood(&stats, &start, &m, &spec) - 1e-9);
        }
    }
}

#[test]
fn boosting_the_inner_edges_raises_the_cover_probability() {
    let mut a = alphabet(4);
    let ep = Episode::serial(&mut a, &["a", "b", "c"]);
    let m = Machine::build(&ep).unwrap();
    let ds = Dataset::from_sequences(a.clone(), vec![(0..4).map(Label).collect()]);
    let classes = collapse_alphabet(&ds, &ep);
    let c1 = block_prefix(&m, ep.vertices());
    assert_eq!(c1.len(), 2);
    let spec = PartitionSpec::new(&m, c1, EdgeSet::new(m.num_edges())).unwrap();
    for u in [[0.0, 0.0, 0.0, 0.0], [-1.0, 0.5, 2.0, 0.0], [1.0, -2.0, -0.3, 0.0]] {
        for n in [3, 5, 10, 20] {
            let mut prev = -1.0;
            for i in 0..=40 {
                let t1 = -10.0 + 0.5 * i as f64;
                let params = ModelParams { u: u.to_vec(), t1, t2: 0.0, pinned: 3 };
                let p = Recurrence::partition(&m, &classes, &params, &spec).sink_probabilities(n)[n];
                assert!(p >= prev, "t1={t1} n={n}: {p} < {prev}");
                prev = p;
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn pooling_background_symbols_keeps_ranks(
        dag in raw_dag(4, 3),
        seqs in proptest::collection::vec(sequence(6, 15), 30..60),
        pick in any::<usize>(),
    ) {
        let a = alphabet(6);
        let ep = dag.strict(&a);
        let ds = Dataset::from_sequences(a.clone(), seqs);
        let m = Machine::build(&ep).unwrap();
        let full = ep.vertices();
        let prefixes: Vec<VertexSet> = m.states().iter().copied().filter(|&w| !w.is_empty() && w != full).collect();
        prop_assume!(!prefixes.is_empty());
        let w = prefixes[pick % prefixes.len()];
        let spec = PartitionSpec::new(&m, block_prefix(&m, w), block_prefix(&m, full.difference(w))).unwrap();
        let opts = RankOptions::default();
        let support = m.support(&ds) as u64;
        let mut ranks: Vec<(f64, episode_rank::RankResult)> = Vec::new();
        for classes in [LabelClasses::collapsed(&a, &ep), LabelClasses::identity(&a, &ep)] {
            let stats = state_statistics(&m, &classes, &ds);
            let f = fit(&m, &spec, &stats, &classes, &opts.fit).unwrap();
            ranks.push((f.log_likelihood, rank(&m, &classes, &f.params, &spec, &ds, support, &opts)));
        }
        let (ll_c, r_c) = &ranks[0];
        let (ll_i, r_i) = &ranks[1];
        // the identity model adds the multinomial term of the background symbols
        let stats = state_statistics(&m, &LabelClasses::identity(&a, &ep), &ds);
        let k = LabelClasses::identity(&a, &ep).num_episode_classes();
        let totals = stats.class_totals();
        let bg: u64 = totals[k..].iter().sum();
        let extra: f64 = totals[k..].iter().filter(|&&n| n > 0).map(|&n| n as f64 * (n as f64 / bg as f64).ln()).sum();
        prop_assert!((ll_c + extra - ll_i).abs() <= 1e-7 * ll_i.abs().max(1.0), "{} + {} vs {}", ll_c, extra, ll_i);
        prop_assert!((r_c.mu - r_i.mu).abs() <= 1e-9 * r_c.mu.max(1.0), "mu {} vs {}", r_c.mu, r_i.mu);
        prop_assert!((r_c.rank - r_i.rank).abs() <= 1e-9 * r_c.rank.max(1.0), "rank {} vs {}", r_c.rank, r_i.rank);
    }
}
