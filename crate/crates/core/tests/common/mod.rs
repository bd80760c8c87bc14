#![allow(dead_code)]

use episode_rank::machine::Machine;
use episode_rank::model::{LabelClasses, ModelParams, PartitionSpec};
use episode_rank::{Alphabet, Dataset, Episode, Label, VertexSet};
use proptest::prelude::*;

pub const SYMBOLS: [&str; 6] = ["a", "b", "c", "d", "e", "f"];

pub fn alphabet(k: usize) -> Alphabet {
    let mut a = Alphabet::new();
    for s in &SYMBOLS[..k] {
        a.intern(s);
    }
    a
}

/// Raw DAG description: labels, and edges `i -> j` with `i < j`.
#[derive(Clone, Debug)]
pub struct RawDag {
    pub labels: Vec<usize>,
    pub edges: Vec<(usize, usize)>,
}

impl RawDag {
    pub fn closed(&self) -> Episode {
        Episode::closed(self.labels.iter().map(|&l| Label(l as u32)).collect(), &self.edges).unwrap()
    }

    /// Strictified and canonical.
    pub fn strict(&self, alphabet: &Alphabet) -> Episode {
        self.closed().strictify().canonical(alphabet)
    }
}

pub fn raw_dag(max_vertices: usize, num_labels: usize) -> impl Strategy<Value = RawDag> {
    (1..=max_vertices).prop_flat_map(move |n| {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let m = pairs.len();
        (proptest::collection::vec(0..num_labels, n), proptest::collection::vec(any::<bool>(), m), Just(pairs))
            .prop_map(|(labels, mask, pairs)| RawDag {
                labels,
                edges: pairs.into_iter().zip(mask).filter(|&(_, b)| b).map(|(p, _)| p).collect(),
            })
    })
}

pub fn sequence(num_labels: usize, max_len: usize) -> impl Strategy<Value = Vec<Label>> {
    proptest::collection::vec((0..num_labels as u32).prop_map(Label), 0..=max_len)
}

/// Every sequence over `num_labels` symbols of length exactly `len`.
pub fn sequences_of_len(num_labels: usize, len: usize) -> Vec<Vec<Label>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|s| {
                (0..num_labels as u32).map(move |l| {
                    let mut t = s.clone();
                    t.push(Label(l));
                    t
                })
            })
            .collect();
    }
    out
}

pub fn sequences_up_to(num_labels: usize, max_len: usize) -> Vec<Vec<Label>> {
    (0..=max_len).flat_map(|n| sequences_of_len(num_labels, n)).collect()
}

/// Every strict canonical episode with at most `max_vertices` vertices whose
/// labels come from the first `num_labels` symbols, up to isomorphism.
pub fn all_strict_episodes(max_vertices: usize, num_labels: usize, alphabet: &Alphabet) -> Vec<Episode> {
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for n in 1..=max_vertices {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        for labels in sequences_of_len(num_labels, n) {
            for mask in 0u32..(1 << pairs.len()) {
                let edges: Vec<_> =
                    pairs.iter().enumerate().filter(|&(i, _)| mask >> i & 1 == 1).map(|(_, &p)| p).collect();
                // vertices in all orders are generated, so i < j covers every DAG
                if let Ok(ep) = Episode::new(labels.clone(), &edges, alphabet) {
                    if seen.insert(ep.clone()) {
                        out.push(ep);
                    }
                }
            }
        }
    }
    out
}

/// Coverage by trying every injective placement, straight from the
/// definition and the given (not necessarily closed) edges.
pub fn embeds(labels: &[Label], edges: &[(usize, usize)], seq: &[Label]) -> bool {
    fn go(labels: &[Label], edges: &[(usize, usize)], seq: &[Label], pos: &mut Vec<usize>) -> bool {
        let v = pos.len();
        if v == labels.len() {
            return edges.iter().all(|&(a, b)| pos[a] < pos[b]);
        }
        for i in 0..seq.len() {
            if seq[i] == labels[v] && !pos.contains(&i) {
                pos.push(i);
                if go(labels, edges, seq, pos) {
                    return true;
                }
                pos.pop();
            }
        }
        false
    }
    go(labels, edges, seq, &mut Vec::new())
}

/// Greedy step computed from the episode rather than the machine tables.
pub fn oracle_step(ep: &Episode, state: VertexSet, label: Label) -> VertexSet {
    let enabled: Vec<usize> =
        (0..ep.len()).filter(|&v| !state.contains(v) && ep.label(v) == label && ep.pred(v).is_subset(state)).collect();
    assert!(enabled.len() <= 1, "strict episodes enable at most one vertex per label");
    enabled.first().map_or(state, |&v| state.with(v))
}

/// `p(class | state)` written out from the model definition.
pub fn oracle_distribution(
    machine: &Machine,
    classes: &LabelClasses,
    params: &ModelParams<f64>,
    spec: &PartitionSpec,
    state: usize,
) -> Vec<f64> {
    let ep = machine.episode();
    let w = machine.state(state);
    let logits: Vec<f64> = (0..classes.num_classes())
        .map(|c| {
            let mut x = params.u[c];
            if c < classes.num_episode_classes() {
                let label = classes.episode_labels()[c];
                let next = oracle_step(ep, w, label);
                if next != w {
                    let e = machine
                        .out_edges(state)
                        .iter()
                        .copied()
                        .find(|&e| machine.edges()[e].vertex == next.difference(w).iter().next().unwrap())
                        .unwrap();
                    if spec.c1.contains(e) {
                        x += params.t1;
                    }
                    if spec.c2.contains(e) {
                        x += params.t2;
                    }
                }
            }
            x
        })
        .collect();
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = logits.iter().map(|x| (x - max).exp()).sum();
    logits.iter().map(|x| (x - max).exp() / z).collect()
}

/// Probability of ending in each state after `n` events, by summing over all
/// `num_classes^n` class sequences.
pub fn enumerate_reach(
    machine: &Machine,
    classes: &LabelClasses,
    params: &ModelParams<f64>,
    spec: &PartitionSpec,
    n: usize,
) -> Vec<f64> {
    let ep = machine.episode();
    let dists: Vec<Vec<f64>> =
        (0..machine.num_states()).map(|s| oracle_distribution(machine, classes, params, spec, s)).collect();
    let mut out = vec![0.0; machine.num_states()];
    for seq in sequences_of_len(classes.num_classes(), n) {
        let mut w = VertexSet::EMPTY;
        let mut p = 1.0;
        for c in seq {
            let c = c.index();
            let s = machine.state_id(w).unwrap();
            p *= dists[s][c];
            if c < classes.num_episode_classes() {
                w = oracle_step(ep, w, classes.episode_labels()[c]);
            }
        }
        out[machine.state_id(w).unwrap()] += p;
    }
    out
}

pub fn random_dataset(num_labels: usize, seqs: &[Vec<Label>]) -> Dataset {
    Dataset::from_sequences(alphabet(num_labels), seqs.to_vec())
}

pub fn random_params(classes: usize, pinned: usize, values: &[f64]) -> ModelParams<f64> {
    let mut u: Vec<f64> = (0..classes).map(|c| values[c % values.len()]).collect();
    u[pinned] = 0.0;
    ModelParams { u, t1: values[classes % values.len()], t2: values[(classes + 1) % values.len()], pinned }
}
