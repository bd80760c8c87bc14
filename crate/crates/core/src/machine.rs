//! The prefix-graph automaton of an episode.
//!
//! States are the ancestor-closed vertex sets of the episode; an edge adds one
//! vertex whose ancestors are already present and carries that vertex's label.
//! For strict episodes labels are unique among the outgoing (and among the
//! incoming) edges of every state, so greedy traversal is deterministic, and a
//! sequence covers the episode iff greedy traversal from the source ends in
//! the sink. Self-loops for non-matching events are implicit.

use std::collections::HashMap;
use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::alphabet::Label;
use crate::dataset::Dataset;
use crate::episode::{is_proper_superepisode_same_vertices, Episode, EpisodeError, VertexSet};

pub type StateId = usize;

pub const DEFAULT_STATE_CAP: usize = 65_536;

const NO_EDGE: u32 = u32::MAX;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MachineError {
    #[error(transparent)]
    Episode(#[from] EpisodeError),
    #[error("machine would have {found} states, above the cap of {cap}")]
    TooManyStates { found: usize, cap: usize },
    #[error("episode is not strict; greedy traversal is undefined")]
    NotStrict,
    #[error("superepisode must share the vertices and strictly extend the edges")]
    NotSuperepisode,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    pub vertex_cap: usize,
    pub state_cap: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { vertex_cap: crate::episode::DEFAULT_VERTEX_CAP, state_cap: DEFAULT_STATE_CAP }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Edge {
    pub from: StateId,
    pub to: StateId,
    pub label: Label,
    /// Episode vertex added by this transition.
    pub vertex: usize,
}

#[derive(Clone, Debug)]
pub struct Machine {
    episode: Episode,
    states: Vec<VertexSet>,
    index: HashMap<VertexSet, StateId>,
    edges: Vec<Edge>,
    out_edges: Vec<Vec<usize>>,
    in_edges: Vec<Vec<usize>>,
    /// Distinct episode labels, ascending by id; position = local label.
    labels: Vec<Label>,
    /// `states x labels` table of outgoing edge indices.
    out_by_label: Vec<u32>,
    source: StateId,
    sink: StateId,
}

impl Machine {
    pub fn build(episode: &Episode) -> Result<Machine, MachineError> {
        Self::build_with(episode, Limits::default())
    }

    pub fn build_with(episode: &Episode, limits: Limits) -> Result<Machine, MachineError> {
        if !episode.is_strict() {
            return Err(MachineError::NotStrict);
        }
        let states = episode.prefix_graphs(limits.vertex_cap)?;
        if states.len() > limits.state_cap {
            return Err(MachineError::TooManyStates { found: states.len(), cap: limits.state_cap });
        }
        let index: HashMap<VertexSet, StateId> = states.iter().enumerate().map(|(i, &s)| (s, i)).collect();

        let mut labels: Vec<Label> = episode.labels().to_vec();
        labels.sort();
        labels.dedup();

        let mut edges = Vec::new();
        let mut out_edges = vec![Vec::new(); states.len()];
        let mut in_edges = vec![Vec::new(); states.len()];
        let mut out_by_label = vec![NO_EDGE; states.len() * labels.len()];
        for (from, &s) in states.iter().enumerate() {
            for v in episode.vertices().difference(s).iter() {
                if !episode.pred(v).is_subset(s) {
                    continue;
                }
                let to = index[&s.with(v)];
                let label = episode.label(v);
                let e = edges.len();
                edges.push(Edge { from, to, label, vertex: v });
                out_edges[from].push(e);
                in_edges[to].push(e);
                let local = labels.binary_search(&label).expect("episode label");
                debug_assert_eq!(out_by_label[from * labels.len() + local], NO_EDGE);
                out_by_label[from * labels.len() + local] = e as u32;
            }
        }
        let source = index[&VertexSet::EMPTY];
        let sink = index[&episode.vertices()];
        Ok(Machine {
            episode: episode.clone(),
            states,
            index,
            edges,
            out_edges,
            in_edges,
            labels,
            out_by_label,
            source,
            sink,
        })
    }

    pub fn episode(&self) -> &Episode {
        &self.episode
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[VertexSet] {
        &self.states
    }

    pub fn state(&self, id: StateId) -> VertexSet {
        self.states[id]
    }

    pub fn state_id(&self, vertices: VertexSet) -> Option<StateId> {
        self.index.get(&vertices).copied()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn out_edges(&self, state: StateId) -> &[usize] {
        &self.out_edges[state]
    }

    pub fn in_edges(&self, state: StateId) -> &[usize] {
        &self.in_edges[state]
    }

    pub fn source(&self) -> StateId {
        self.source
    }

    pub fn sink(&self) -> StateId {
        self.sink
    }

    /// Distinct labels of the episode, ascending by id.
    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    /// Position of `label` in [`Machine::labels`].
    #[inline]
    pub fn local_label(&self, label: Label) -> Option<usize> {
        self.labels.binary_search(&label).ok()
    }

    /// Outgoing edge of `state` labelled with local label `local`.
    #[inline]
    pub fn out_edge_local(&self, state: StateId, local: usize) -> Option<usize> {
        match self.out_by_label[state * self.labels.len() + local] {
            NO_EDGE => None,
            e => Some(e as usize),
        }
    }

    #[inline]
    pub fn out_edge(&self, state: StateId, label: Label) -> Option<usize> {
        self.local_label(label).and_then(|l| self.out_edge_local(state, l))
    }

    /// One greedy step; stays put when no outgoing edge carries `label`.
    #[inline]
    pub fn step(&self, state: StateId, label: Label) -> StateId {
        match self.out_edge(state, label) {
            Some(e) => self.edges[e].to,
            None => state,
        }
    }

    pub fn greedy(&self, sequence: &[Label], start: StateId) -> StateId {
        sequence.iter().fold(start, |s, &l| self.step(s, l))
    }

    pub fn covers(&self, sequence: &[Label]) -> bool {
        let mut s = self.source;
        for &l in sequence {
            if s == self.sink {
                return true;
            }
            s = self.step(s, l);
        }
        s == self.sink
    }

    /// Number of sequences covering the episode.
    pub fn support(&self, dataset: &Dataset) -> usize {
        dataset.sequences().par_iter().filter(|s| self.covers(s)).count()
    }
}

/// Bitset over machine edge indices.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct EdgeSet {
    words: Vec<u64>,
    capacity: usize,
}

impl EdgeSet {
    pub fn new(capacity: usize) -> Self {
        EdgeSet { words: vec![0; capacity.div_ceil(64)], capacity }
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(capacity: usize, idx: I) -> Self {
        let mut s = Self::new(capacity);
        for i in idx {
            s.insert(i);
        }
        s
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn insert(&mut self, i: usize) {
        assert!(i < self.capacity, "edge index {i} out of range");
        self.words[i / 64] |= 1 << (i % 64);
    }

    #[inline]
    pub fn contains(&self, i: usize) -> bool {
        i < self.capacity && self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn is_disjoint(&self, other: &EdgeSet) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & b == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.capacity).filter(move |&i| self.contains(i))
    }
}

impl fmt::Debug for EdgeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// Edges `(H, F)` where `H` already meets `w` and the added vertex lies in
/// `w`. Edges leaving the source never qualify.
pub fn block_prefix(machine: &Machine, w: VertexSet) -> EdgeSet {
    EdgeSet::from_indices(
        machine.num_edges(),
        machine.edges().iter().enumerate().filter_map(|(i, e)| {
            let from = machine.state(e.from);
            (!from.intersection(w).is_empty() && w.contains(e.vertex)).then_some(i)
        }),
    )
}

/// Edges of `M(g)` that also appear in `M(h)` for a same-vertex proper
/// superepisode `h`, excluding edges leaving the source.
///
/// Every prefix graph of `h` is a prefix graph of `g` on the same vertex set,
/// so each edge of `M(h)` translates directly.
pub fn block_super(machine: &Machine, h: &Episode) -> Result<EdgeSet, MachineError> {
    let g = machine.episode();
    if !is_proper_superepisode_same_vertices(g, h) {
        return Err(MachineError::NotSuperepisode);
    }
    let mut out = EdgeSet::new(machine.num_edges());
    let h_states = h.prefix_graphs(g.len().max(1))?;
    for s in h_states {
        if s.is_empty() {
            continue;
        }
        let from = machine.state_id(s).expect("prefix of h is a prefix of g");
        for v in h.vertices().difference(s).iter() {
            if h.pred(v).is_subset(s) {
                let e = machine
                    .out_edges(from)
                    .iter()
                    .copied()
                    .find(|&e| machine.edges()[e].vertex == v)
                    .expect("edge of M(h) exists in M(g)");
                out.insert(e);
            }
        }
    }
    Ok(out)
}

/// Reference coverage test by backtracking over injective, order-respecting,
/// label-preserving embeddings. Exponential; meant for small instances.
pub fn brute_force_covers(episode: &Episode, sequence: &[Label]) -> bool {
    // Vertices in a linear extension so predecessors are placed first.
    let mut order = Vec::with_capacity(episode.len());
    let mut placed = VertexSet::EMPTY;
    while order.len() < episode.len() {
        let v = (0..episode.len()).find(|&v| !placed.contains(v) && episode.pred(v).is_subset(placed)).expect("DAG");
        placed = placed.with(v);
        order.push(v);
    }
    let mut pos = vec![usize::MAX; episode.len()];
    let mut used = vec![false; sequence.len()];

    fn search(
        k: usize,
        order: &[usize],
        episode: &Episode,
        seq: &[Label],
        pos: &mut [usize],
        used: &mut [bool],
    ) -> bool {
        if k == order.len() {
            return true;
        }
        let v = order[k];
        let lower = episode.pred(v).iter().map(|u| pos[u] + 1).max().unwrap_or(0);
        for p in lower..seq.len() {
            if used[p] || seq[p] != episode.label(v) {
                continue;
            }
            used[p] = true;
            pos[v] = p;
            if search(k + 1, order, episode, seq, pos, used) {
                return true;
            }
            used[p] = false;
        }
        false
    }

    search(0, &order, episode, sequence, &mut pos, &mut used)
}
