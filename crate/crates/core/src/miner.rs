//! Candidate generation: frequent serial episodes (DFS over projected
//! occurrence lists), frequent parallel episodes (label multisets), and
//! general DAGs obtained by intersecting serial episodes over the same labels.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::alphabet::{Alphabet, Label};
use crate::candidates::{Candidate, CandidateSet};
use crate::dataset::Dataset;
use crate::episode::Episode;
use crate::machine::{Limits, Machine, MachineError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MineOptions {
    pub min_support: u64,
    /// Longest serial episode; 0 disables serial mining.
    pub max_len: usize,
    /// Largest parallel episode; 0 disables parallel mining.
    pub max_size: usize,
    pub merge_intersections: bool,
}

impl Default for MineOptions {
    fn default() -> Self {
        MineOptions { min_support: 10, max_len: 5, max_size: 3, merge_intersections: true }
    }
}

fn serial_episode(labels: &[Label], alphabet: &Alphabet) -> Episode {
    let edges: Vec<(usize, usize)> = (1..labels.len()).map(|i| (i - 1, i)).collect();
    Episode::new(labels.to_vec(), &edges, alphabet).expect("chains are strict DAGs")
}

fn parallel_episode(labels: &[Label], alphabet: &Alphabet) -> Episode {
    Episode::closed(labels.to_vec(), &[]).expect("edgeless graphs are DAGs").strictify().canonical(alphabet)
}

fn sort_candidates(mut found: Vec<Candidate>) -> Vec<Candidate> {
    found.sort_by(|a, b| a.episode.len().cmp(&b.episode.len()).then_with(|| a.id.cmp(&b.id)));
    found
}

/// Projected occurrence: sequence index and the position of the last matched
/// event of the leftmost match.
type Projection = Vec<(usize, usize)>;

/// Next occurrence of each symbol after each projected end. Returns
/// `label -> projection`, keyed in label order.
fn extensions(dataset: &Dataset, proj: &[(usize, Option<usize>)]) -> BTreeMap<Label, Projection> {
    let mut out: BTreeMap<Label, Projection> = BTreeMap::new();
    let mut seen: Vec<Label> = Vec::new();
    for &(s, end) in proj {
        seen.clear();
        let seq = &dataset.sequences()[s];
        let start = end.map_or(0, |e| e + 1);
        for (pos, &l) in seq.iter().enumerate().skip(start) {
            if !seen.contains(&l) {
                seen.push(l);
                out.entry(l).or_default().push((s, pos));
            }
        }
    }
    out
}

/// All serial episodes with at most `max_len` vertices and support at least
/// `min_support`, sorted by size then notation.
pub fn mine_serial(dataset: &Dataset, min_support: u64, max_len: usize) -> CandidateSet {
    let min_support = min_support.max(1);
    if max_len == 0 {
        return CandidateSet::new();
    }
    let roots: Vec<(usize, Option<usize>)> = (0..dataset.len()).map(|s| (s, None)).collect();
    let first: Vec<(Label, Projection)> =
        extensions(dataset, &roots).into_iter().filter(|(_, p)| p.len() as u64 >= min_support).collect();

    fn grow(
        dataset: &Dataset,
        prefix: &mut Vec<Label>,
        proj: &Projection,
        min_support: u64,
        max_len: usize,
        out: &mut Vec<Candidate>,
    ) {
        let ep = serial_episode(prefix, dataset.alphabet());
        out.push(Candidate { id: ep.notation(dataset.alphabet()), episode: ep, support: Some(proj.len() as u64) });
        if prefix.len() == max_len {
            return;
        }
        let p: Vec<(usize, Option<usize>)> = proj.iter().map(|&(s, e)| (s, Some(e))).collect();
        for (l, next) in extensions(dataset, &p) {
            if next.len() as u64 >= min_support {
                prefix.push(l);
                grow(dataset, prefix, &next, min_support, max_len, out);
                prefix.pop();
            }
        }
    }

    let found: Vec<Candidate> = first
        .par_iter()
        .flat_map_iter(|(l, proj)| {
            let mut out = Vec::new();
            grow(dataset, &mut vec![*l], proj, min_support, max_len, &mut out);
            out
        })
        .collect();
    sort_candidates(found).into_iter().collect()
}

/// Frequent label multisets of size at most `max_size`, as strictified
/// parallel episodes. A sequence supports a multiset iff it holds every label
/// at least as often.
pub fn mine_parallel(dataset: &Dataset, min_support: u64, max_size: usize) -> CandidateSet {
    let min_support = min_support.max(1);
    if max_size == 0 {
        return CandidateSet::new();
    }
    let counts: Vec<Vec<(Label, u32)>> = dataset
        .sequences()
        .par_iter()
        .map(|seq| {
            let mut m: BTreeMap<Label, u32> = BTreeMap::new();
            for &l in seq {
                *m.entry(l).or_default() += 1;
            }
            m.into_iter().collect()
        })
        .collect();
    let count = |s: usize, l: Label| -> u32 {
        let row = &counts[s];
        row.binary_search_by_key(&l, |&(x, _)| x).map_or(0, |i| row[i].1)
    };
    let mut singles: BTreeMap<Label, Vec<usize>> = BTreeMap::new();
    for (s, row) in counts.iter().enumerate() {
        for &(l, _) in row {
            singles.entry(l).or_default().push(s);
        }
    }
    let frequent: Vec<(Label, Vec<usize>)> =
        singles.into_iter().filter(|(_, t)| t.len() as u64 >= min_support).collect();
    let labels: Vec<Label> = frequent.iter().map(|(l, _)| *l).collect();

    // Multisets as non-decreasing label lists; extend with labels >= the last.
    fn grow(
        dataset: &Dataset,
        labels: &[Label],
        from: usize,
        items: &mut Vec<Label>,
        tids: &[usize],
        count: &(dyn Fn(usize, Label) -> u32 + Sync),
        min_support: u64,
        max_size: usize,
        out: &mut Vec<Candidate>,
    ) {
        let ep = parallel_episode(items, dataset.alphabet());
        out.push(Candidate { id: ep.notation(dataset.alphabet()), episode: ep, support: Some(tids.len() as u64) });
        if items.len() == max_size {
            return;
        }
        for (k, &l) in labels.iter().enumerate().skip(from) {
            let need = items.iter().filter(|&&x| x == l).count() as u32 + 1;
            let next: Vec<usize> = tids.iter().copied().filter(|&s| count(s, l) >= need).collect();
            if next.len() as u64 >= min_support {
                items.push(l);
                grow(dataset, labels, k, items, &next, count, min_support, max_size, out);
                items.pop();
            }
        }
    }

    let found: Vec<Candidate> = frequent
        .par_iter()
        .enumerate()
        .flat_map_iter(|(k, (l, tids))| {
            let mut out = Vec::new();
            grow(dataset, &labels, k, &mut vec![*l], tids, &count, min_support, max_size, &mut out);
            out
        })
        .collect();
    sort_candidates(found).into_iter().collect()
}

/// For every pair of serial candidates over the same label multiset, the
/// intersection of their (closed) edge sets under the canonical vertex
/// correspondence. Returns the frequent ones not already present, sorted.
pub fn merge_serial_intersections(candidates: &CandidateSet, dataset: &Dataset, min_support: u64) -> Vec<Candidate> {
    let mut groups: BTreeMap<Vec<Label>, Vec<&Episode>> = BTreeMap::new();
    for c in candidates.items() {
        if c.episode.len() >= 2 && c.episode.is_serial() {
            groups.entry(c.episode.label_key()).or_default().push(&c.episode);
        }
    }
    let mut merged: Vec<Episode> = Vec::new();
    for (labels, eps) in &groups {
        for i in 0..eps.len() {
            for j in i + 1..eps.len() {
                let edges: Vec<(usize, usize)> =
                    eps[i].edges().into_iter().filter(|&(u, v)| eps[j].has_edge(u, v)).collect();
                let Ok(ep) = Episode::new(labels.clone(), &edges, dataset.alphabet()) else {
                    continue;
                };
                if !candidates.contains(&ep) && !merged.contains(&ep) {
                    merged.push(ep);
                }
            }
        }
    }
    let supports = count_supports(&merged, dataset, Limits::default());
    let found = merged
        .into_iter()
        .zip(supports)
        .filter_map(|(ep, s)| match s {
            Ok(s) if s >= min_support => {
                Some(Candidate { id: ep.notation(dataset.alphabet()), episode: ep, support: Some(s) })
            }
            _ => None,
        })
        .collect();
    sort_candidates(found)
}

/// Machine-based support of each episode, in parallel. Episodes over the cap
/// get an error without affecting the rest.
pub fn count_supports(episodes: &[Episode], dataset: &Dataset, limits: Limits) -> Vec<Result<u64, MachineError>> {
    episodes.par_iter().map(|ep| Machine::build_with(ep, limits).map(|m| m.support(dataset) as u64)).collect()
}

/// Serial, then parallel, then merged candidates; duplicates keep the first
/// occurrence.
pub fn mine(dataset: &Dataset, options: &MineOptions) -> CandidateSet {
    let mut set = mine_serial(dataset, options.min_support, options.max_len);
    for c in mine_parallel(dataset, options.min_support, options.max_size).items() {
        set.insert(c.id.clone(), c.episode.clone(), c.support);
    }
    if options.merge_intersections {
        for c in merge_serial_intersections(&set, dataset, options.min_support) {
            set.insert(c.id, c.episode, c.support);
        }
    }
    set
}
