//! Episodes: labelled DAG patterns over event sequences.
//!
//! An [`Episode`] is always stored transitively closed. Most constructors also
//! check strictness (equal-label vertices are ordered) and put the vertices in
//! canonical order, which is what every downstream module assumes.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use thiserror::Error;

use crate::alphabet::{Alphabet, Label};

/// Default limit on episode size. Prefix-graph enumeration is exponential in
/// the width of the episode.
pub const DEFAULT_VERTEX_CAP: usize = 16;

/// Hard limit imposed by the bitset representation.
pub const MAX_VERTICES: usize = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EpisodeError {
    #[error("edge ({from}, {to}) references a vertex outside 0..{len}")]
    VertexOutOfRange { from: usize, to: usize, len: usize },
    #[error("edges contain a directed cycle through vertices {0:?}")]
    Cycle(Vec<usize>),
    #[error("episode has {found} vertices, above the cap of {cap}")]
    TooLarge { found: usize, cap: usize },
    #[error("vertices {0} and {1} share a label but are not ordered")]
    NotStrict(usize, usize),
}

/// Set of vertex ids of a host episode.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct VertexSet(u64);

impl VertexSet {
    pub const EMPTY: VertexSet = VertexSet(0);

    pub fn from_bits(bits: u64) -> Self {
        VertexSet(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn full(n: usize) -> Self {
        if n >= 64 {
            VertexSet(u64::MAX)
        } else {
            VertexSet((1u64 << n) - 1)
        }
    }

    pub fn singleton(v: usize) -> Self {
        VertexSet(1u64 << v)
    }

    pub fn from_vertices<I: IntoIterator<Item = usize>>(vs: I) -> Self {
        vs.into_iter().fold(Self::EMPTY, |s, v| s.with(v))
    }

    #[inline]
    pub fn contains(self, v: usize) -> bool {
        self.0 >> v & 1 == 1
    }

    #[inline]
    pub fn with(self, v: usize) -> Self {
        VertexSet(self.0 | 1u64 << v)
    }

    #[inline]
    pub fn without(self, v: usize) -> Self {
        VertexSet(self.0 & !(1u64 << v))
    }

    #[inline]
    pub fn union(self, o: Self) -> Self {
        VertexSet(self.0 | o.0)
    }

    #[inline]
    pub fn intersection(self, o: Self) -> Self {
        VertexSet(self.0 & o.0)
    }

    #[inline]
    pub fn difference(self, o: Self) -> Self {
        VertexSet(self.0 & !o.0)
    }

    #[inline]
    pub fn is_subset(self, o: Self) -> bool {
        self.0 & !o.0 == 0
    }

    #[inline]
    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    #[inline]
    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let v = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(v)
            }
        })
    }
}

impl fmt::Debug for VertexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// Labelled DAG, stored transitively closed.
///
/// `succ[v]` holds every descendant of `v` and `pred[v]` every ancestor, so
/// `(u, v)` is an edge iff `succ[u]` contains `v`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Episode {
    labels: Vec<Label>,
    succ: Vec<VertexSet>,
    pred: Vec<VertexSet>,
}

impl Episode {
    /// Closes `edges` transitively. Does not check strictness or reorder
    /// vertices.
    pub fn closed(labels: Vec<Label>, edges: &[(usize, usize)]) -> Result<Self, EpisodeError> {
        let n = labels.len();
        if n > MAX_VERTICES {
            return Err(EpisodeError::TooLarge { found: n, cap: MAX_VERTICES });
        }
        let mut direct = vec![VertexSet::EMPTY; n];
        for &(from, to) in edges {
            if from >= n || to >= n {
                return Err(EpisodeError::VertexOutOfRange { from, to, len: n });
            }
            if from == to {
                return Err(EpisodeError::Cycle(vec![from]));
            }
            direct[from] = direct[from].with(to);
        }
        let order = topological_order(&direct).map_err(EpisodeError::Cycle)?;
        let mut succ = vec![VertexSet::EMPTY; n];
        for &v in order.iter().rev() {
            let mut reach = direct[v];
            for w in direct[v].iter() {
                reach = reach.union(succ[w]);
            }
            succ[v] = reach;
        }
        let mut pred = vec![VertexSet::EMPTY; n];
        for (v, s) in succ.iter().enumerate() {
            for w in s.iter() {
                pred[w] = pred[w].with(v);
            }
        }
        Ok(Episode { labels, succ, pred })
    }

    /// Closes, checks strictness, and canonicalizes.
    pub fn new(labels: Vec<Label>, edges: &[(usize, usize)], alphabet: &Alphabet) -> Result<Self, EpisodeError> {
        let ep = Self::closed(labels, edges)?;
        if let Some((u, v)) = ep.strictness_violation() {
            return Err(EpisodeError::NotStrict(u, v));
        }
        Ok(ep.canonical(alphabet))
    }

    /// Interns `symbols` and builds a canonical strict episode.
    pub fn from_symbols(
        alphabet: &mut Alphabet,
        symbols: &[&str],
        edges: &[(usize, usize)],
    ) -> Result<Self, EpisodeError> {
        let labels = symbols.iter().map(|s| alphabet.intern(s)).collect();
        Self::new(labels, edges, alphabet)
    }

    /// Total order `symbols[0] -> symbols[1] -> ...`.
    pub fn serial(alphabet: &mut Alphabet, symbols: &[&str]) -> Self {
        let edges: Vec<_> = (1..symbols.len()).map(|i| (i - 1, i)).collect();
        Self::from_symbols(alphabet, symbols, &edges).expect("a chain is a strict DAG")
    }

    /// Edgeless episode, strictified so that repeated symbols are chained.
    pub fn parallel(alphabet: &mut Alphabet, symbols: &[&str]) -> Self {
        let labels = symbols.iter().map(|s| alphabet.intern(s)).collect();
        Self::closed(labels, &[]).expect("edgeless").strictify().canonical(alphabet)
    }

    pub fn empty() -> Self {
        Episode { labels: Vec::new(), succ: Vec::new(), pred: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn label(&self, v: usize) -> Label {
        self.labels[v]
    }

    pub fn vertices(&self) -> VertexSet {
        VertexSet::full(self.len())
    }

    /// Descendants of `v`.
    pub fn succ(&self, v: usize) -> VertexSet {
        self.succ[v]
    }

    /// Ancestors of `v`.
    pub fn pred(&self, v: usize) -> VertexSet {
        self.pred[v]
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.succ[from].contains(to)
    }

    /// Closed edge list in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.len()).flat_map(|u| self.succ[u].iter().map(move |v| (u, v))).collect()
    }

    pub fn num_edges(&self) -> usize {
        self.succ.iter().map(|s| s.len()).sum()
    }

    pub fn is_parallel(&self) -> bool {
        self.succ.iter().all(|s| s.is_empty())
    }

    pub fn is_serial(&self) -> bool {
        let n = self.len();
        self.num_edges() == n * n.saturating_sub(1) / 2
    }

    /// Minimal edge set with the same closure, for display.
    pub fn transitive_reduction(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for u in 0..self.len() {
            for v in self.succ[u].iter() {
                let implied = self.succ[u].iter().any(|w| self.succ[w].contains(v));
                if !implied {
                    out.push((u, v));
                }
            }
        }
        out
    }

    fn strictness_violation(&self) -> Option<(usize, usize)> {
        for u in 0..self.len() {
            for v in u + 1..self.len() {
                if self.labels[u] == self.labels[v] && !self.has_edge(u, v) && !self.has_edge(v, u) {
                    return Some((u, v));
                }
            }
        }
        None
    }

    /// Every pair of equal-label vertices is connected.
    pub fn is_strict(&self) -> bool {
        self.strictness_violation().is_none()
    }

    /// Chains equal-label vertices along a linear extension of the existing
    /// order, then closes. The result is covered by exactly the sequences that
    /// cover `self`.
    ///
    /// Chaining along a linear extension never introduces a cycle, so this
    /// cannot fail.
    pub fn strictify(&self) -> Episode {
        if self.is_strict() {
            return self.clone();
        }
        let order = self.linear_extension();
        let mut edges = self.edges();
        for (i, &u) in order.iter().enumerate() {
            if let Some(&v) = order[i + 1..].iter().find(|&&v| self.labels[v] == self.labels[u]) {
                edges.push((u, v));
            }
        }
        Episode::closed(self.labels.clone(), &edges).expect("linear extension is acyclic")
    }

    /// Topological order, smallest vertex id first among ready vertices.
    fn linear_extension(&self) -> Vec<usize> {
        let mut placed = VertexSet::EMPTY;
        let mut order = Vec::with_capacity(self.len());
        while order.len() < self.len() {
            let v = (0..self.len())
                .find(|&v| !placed.contains(v) && self.pred[v].is_subset(placed))
                .expect("closed DAG always has a ready vertex");
            placed = placed.with(v);
            order.push(v);
        }
        order
    }

    /// Induced sub-episode on `w`; vertices keep their relative order.
    pub fn induced(&self, w: VertexSet) -> Episode {
        let keep: Vec<usize> = w.iter().filter(|&v| v < self.len()).collect();
        let mut new_id = vec![usize::MAX; self.len()];
        for (i, &v) in keep.iter().enumerate() {
            new_id[v] = i;
        }
        let remap =
            |s: VertexSet| VertexSet::from_vertices(s.iter().filter(|&x| new_id[x] != usize::MAX).map(|x| new_id[x]));
        Episode {
            labels: keep.iter().map(|&v| self.labels[v]).collect(),
            succ: keep.iter().map(|&v| remap(self.succ[v])).collect(),
            pred: keep.iter().map(|&v| remap(self.pred[v])).collect(),
        }
    }

    /// Whether `w` is closed under ancestors.
    pub fn is_prefix(&self, w: VertexSet) -> bool {
        w.iter().all(|v| self.pred[v].is_subset(w))
    }

    /// All ancestor-closed vertex sets, ordered by size then bit value.
    pub fn prefix_graphs(&self, cap: usize) -> Result<Vec<VertexSet>, EpisodeError> {
        if self.len() > cap {
            return Err(EpisodeError::TooLarge { found: self.len(), cap });
        }
        let mut seen: HashSet<VertexSet> = HashSet::new();
        let mut frontier = vec![VertexSet::EMPTY];
        seen.insert(VertexSet::EMPTY);
        while let Some(s) = frontier.pop() {
            for v in self.vertices().difference(s).iter() {
                if self.pred[v].is_subset(s) {
                    let t = s.with(v);
                    if seen.insert(t) {
                        frontier.push(t);
                    }
                }
            }
        }
        let mut out: Vec<VertexSet> = seen.into_iter().collect();
        out.sort_by_key(|s| (s.len(), s.bits()));
        Ok(out)
    }

    /// Reorders vertices by symbol string; equal-symbol vertices follow the
    /// order their edges impose (for strict episodes that order is total).
    pub fn canonical(&self, alphabet: &Alphabet) -> Episode {
        let mut order: Vec<usize> = (0..self.len()).collect();
        let same_label_ancestors = |v: usize| self.pred[v].iter().filter(|&u| self.labels[u] == self.labels[v]).count();
        order.sort_by(|&a, &b| {
            alphabet
                .cmp(self.labels[a], self.labels[b])
                .then_with(|| same_label_ancestors(a).cmp(&same_label_ancestors(b)))
                .then_with(|| a.cmp(&b))
        });
        self.permuted(&order)
    }

    /// Vertex `i` of the result is vertex `order[i]` of `self`.
    pub fn permuted(&self, order: &[usize]) -> Episode {
        let mut new_id = vec![0; self.len()];
        for (i, &v) in order.iter().enumerate() {
            new_id[v] = i;
        }
        let remap = |s: VertexSet| VertexSet::from_vertices(s.iter().map(|x| new_id[x]));
        Episode {
            labels: order.iter().map(|&v| self.labels[v]).collect(),
            succ: order.iter().map(|&v| remap(self.succ[v])).collect(),
            pred: order.iter().map(|&v| remap(self.pred[v])).collect(),
        }
    }

    /// Label multiset in canonical (symbol) order; equal for episodes over the
    /// same vertices.
    pub fn label_key(&self) -> Vec<Label> {
        self.labels.clone()
    }

    /// Human-readable form: `a>b>c` for serial, `{a,b}` for parallel, and
    /// `labels/edges` using the reduction otherwise.
    pub fn notation(&self, alphabet: &Alphabet) -> String {
        let names: Vec<&str> = self.labels.iter().map(|&l| alphabet.name(l)).collect();
        if self.len() <= 1 {
            return names.join("");
        }
        if self.is_parallel() {
            return format!("{{{}}}", names.join(","));
        }
        if self.is_serial() {
            let order = self.linear_extension();
            return order.iter().map(|&v| names[v]).collect::<Vec<_>>().join(">");
        }
        let edges: Vec<String> = self.transitive_reduction().iter().map(|(u, v)| format!("{u}>{v}")).collect();
        format!("{}/{}", names.join(","), edges.join(","))
    }
}

/// Kahn's algorithm; on failure returns a cycle witness.
fn topological_order(direct: &[VertexSet]) -> Result<Vec<usize>, Vec<usize>> {
    let n = direct.len();
    let mut indeg = vec![0usize; n];
    for s in direct {
        for w in s.iter() {
            indeg[w] += 1;
        }
    }
    let mut ready: BTreeSet<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(v) = ready.pop_first() {
        order.push(v);
        for w in direct[v].iter() {
            indeg[w] -= 1;
            if indeg[w] == 0 {
                ready.insert(w);
            }
        }
    }
    if order.len() == n {
        return Ok(order);
    }
    // Every remaining vertex has a remaining predecessor; walk backwards
    // until a vertex repeats.
    let remaining: Vec<bool> = (0..n).map(|v| indeg[v] > 0).collect();
    let start = (0..n).find(|&v| remaining[v]).expect("some vertex is on a cycle");
    let mut path = vec![start];
    let mut cur = start;
    loop {
        let prev = (0..n)
            .find(|&u| remaining[u] && direct[u].contains(cur))
            .expect("remaining vertices have remaining predecessors");
        if let Some(pos) = path.iter().position(|&x| x == prev) {
            let mut cycle: Vec<usize> = path[pos..].to_vec();
            cycle.reverse();
            return Err(cycle);
        }
        path.push(prev);
        cur = prev;
    }
}

/// Same-vertex proper superepisode test on canonical episodes: equal labels
/// index-wise and the edges of `g` a strict subset of the edges of `h`.
pub fn is_proper_superepisode_same_vertices(g: &Episode, h: &Episode) -> bool {
    if g.labels != h.labels {
        return false;
    }
    let subset = (0..g.len()).all(|v| g.succ[v].is_subset(h.succ[v]));
    subset && g.num_edges() < h.num_edges()
}

/// `g` is a subepisode of `h`: some injective label-preserving map of the
/// vertices of `g` into `h` keeps every edge of `g`. Backtracking search.
pub fn is_subepisode(g: &Episode, h: &Episode) -> bool {
    fn extend(g: &Episode, h: &Episode, v: usize, map: &mut Vec<usize>, used: VertexSet) -> bool {
        if v == g.len() {
            return true;
        }
        for w in 0..h.len() {
            if used.contains(w) || h.labels[w] != g.labels[v] {
                continue;
            }
            let ok = (0..v)
                .all(|u| (!g.has_edge(u, v) || h.has_edge(map[u], w)) && (!g.has_edge(v, u) || h.has_edge(w, map[u])));
            if ok {
                map.push(w);
                if extend(g, h, v + 1, map, used.with(w)) {
                    return true;
                }
                map.pop();
            }
        }
        false
    }
    g.len() <= h.len() && extend(g, h, 0, &mut Vec::with_capacity(g.len()), VertexSet::EMPTY)
}
