//! Independence and partition models over the states of a machine.
//!
//! The partition model draws each event from `p(l | H)` where `H` is the
//! greedy state reached so far:
//!
//! ```text
//! p(l | H) ∝ exp(u_l + t_i)   if the outgoing edge of H labelled l is in C_i
//! p(l | H) ∝ exp(u_l)         otherwise
//! ```
//!
//! With `C1 = C2 = ∅` this is the independence model. The log-likelihood is a
//! sum of per-state log-linear terms, hence concave, and only depends on the
//! data through per-state counts ([`StateStats`]). Symbols that do not occur
//! in the episode are pooled into one background class, which leaves every
//! cover probability unchanged.

use std::collections::HashMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::alphabet::{Alphabet, Label};
use crate::dataset::Dataset;
use crate::episode::Episode;
use crate::linalg::cholesky_solve;
use crate::machine::{EdgeSet, Machine, StateId};
use crate::num::Real;

pub const DEFAULT_T_CAP: f64 = 25.0;

/// Mapping from dataset symbols to model classes. Classes `0..k` are the
/// distinct episode labels in machine order; the rest are background.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelClasses {
    episode: Vec<Label>,
    /// Episode classes sorted by symbol string.
    by_name: Vec<usize>,
    star: Option<usize>,
    background: HashMap<Label, usize>,
    num_classes: usize,
}

impl LabelClasses {
    fn episode_part(alphabet: &Alphabet, episode: &Episode) -> (Vec<Label>, Vec<usize>) {
        let mut labels = episode.labels().to_vec();
        labels.sort();
        labels.dedup();
        let mut by_name: Vec<usize> = (0..labels.len()).collect();
        by_name.sort_by(|&a, &b| alphabet.cmp(labels[a], labels[b]));
        (labels, by_name)
    }

    /// Every symbol outside the episode maps to one pseudo-label. The
    /// pseudo-label is omitted when the episode uses the whole alphabet.
    pub fn collapsed(alphabet: &Alphabet, episode: &Episode) -> Self {
        let (episode_labels, by_name) = Self::episode_part(alphabet, episode);
        let k = episode_labels.len();
        let has_other = alphabet.len() > k;
        LabelClasses {
            episode: episode_labels,
            by_name,
            star: has_other.then_some(k),
            background: HashMap::new(),
            num_classes: k + usize::from(has_other),
        }
    }

    /// One class per symbol; the uncollapsed model.
    pub fn identity(alphabet: &Alphabet, episode: &Episode) -> Self {
        let (episode_labels, by_name) = Self::episode_part(alphabet, episode);
        let mut background = HashMap::new();
        let mut next = episode_labels.len();
        for l in alphabet.labels() {
            if episode_labels.binary_search(&l).is_err() {
                background.insert(l, next);
                next += 1;
            }
        }
        LabelClasses { episode: episode_labels, by_name, star: None, background, num_classes: next }
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    /// Number of episode classes.
    pub fn num_episode_classes(&self) -> usize {
        self.episode.len()
    }

    pub fn star(&self) -> Option<usize> {
        self.star
    }

    pub fn episode_labels(&self) -> &[Label] {
        &self.episode
    }

    pub fn is_background(&self, class: usize) -> bool {
        class >= self.episode.len()
    }

    #[inline]
    pub fn class_of(&self, label: Label) -> usize {
        match self.episode.binary_search(&label) {
            Ok(i) => i,
            Err(_) => match self.star {
                Some(s) => s,
                None => *self.background.get(&label).expect("symbol outside the model's alphabet"),
            },
        }
    }

    pub fn class_name(&self, class: usize, alphabet: &Alphabet) -> String {
        if class < self.episode.len() {
            return alphabet.name(self.episode[class]).to_owned();
        }
        if Some(class) == self.star {
            return "*".to_owned();
        }
        self.background
            .iter()
            .find(|(_, &c)| c == class)
            .map(|(&l, _)| alphabet.name(l).to_owned())
            .unwrap_or_else(|| format!("class{class}"))
    }

    /// Class whose weight is pinned to zero: the first background class that
    /// occurs, else the lexicographically smallest episode label that occurs.
    /// `None` if no events were counted.
    pub fn gauge(&self, stats: &StateStats) -> Option<usize> {
        let totals = stats.class_totals();
        (self.episode.len()..self.num_classes)
            .find(|&c| totals[c] > 0)
            .or_else(|| self.by_name.iter().copied().find(|&c| totals[c] > 0))
    }
}

/// Collapsed class mapping for `episode` over the dataset's alphabet.
pub fn collapse_alphabet(dataset: &Dataset, episode: &Episode) -> LabelClasses {
    LabelClasses::collapsed(dataset.alphabet(), episode)
}

/// Per-state event counts: `c[H]` events read while in `H`, and `n[H][l]` of
/// those carrying class `l`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateStats {
    num_states: usize,
    num_classes: usize,
    c: Vec<u64>,
    n: Vec<u64>,
    covered: u64,
}

impl StateStats {
    pub fn zeros(num_states: usize, num_classes: usize) -> Self {
        StateStats { num_states, num_classes, c: vec![0; num_states], n: vec![0; num_states * num_classes], covered: 0 }
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn c(&self, state: StateId) -> u64 {
        self.c[state]
    }

    pub fn n(&self, state: StateId, class: usize) -> u64 {
        self.n[state * self.num_classes + class]
    }

    pub fn row(&self, state: StateId) -> &[u64] {
        &self.n[state * self.num_classes..(state + 1) * self.num_classes]
    }

    pub fn total(&self) -> u64 {
        self.c.iter().sum()
    }

    pub fn class_totals(&self) -> Vec<u64> {
        let mut t = vec![0; self.num_classes];
        for row in self.n.chunks(self.num_classes.max(1)) {
            for (a, b) in t.iter_mut().zip(row) {
                *a += b;
            }
        }
        t
    }

    /// Sequences whose greedy traversal ended in the sink (the support).
    pub fn covered(&self) -> u64 {
        self.covered
    }

    pub fn merge(mut self, other: &StateStats) -> StateStats {
        for (a, b) in self.c.iter_mut().zip(&other.c) {
            *a += b;
        }
        for (a, b) in self.n.iter_mut().zip(&other.n) {
            *a += b;
        }
        self.covered += other.covered;
        self
    }

    fn record(&mut self, machine: &Machine, classes: &LabelClasses, seq: &[Label]) {
        let mut state = machine.source();
        for &l in seq {
            let class = classes.class_of(l);
            self.c[state] += 1;
            self.n[state * self.num_classes + class] += 1;
            if class < classes.num_episode_classes() {
                if let Some(e) = machine.out_edge_local(state, class) {
                    state = machine.edges()[e].to;
                }
            }
        }
        if state == machine.sink() {
            self.covered += 1;
        }
    }
}

/// One greedy pass per sequence, recording the state occupied when each event
/// is read.
pub fn state_statistics(machine: &Machine, classes: &LabelClasses, dataset: &Dataset) -> StateStats {
    debug_assert_eq!(classes.episode_labels(), machine.labels());
    let zero = || StateStats::zeros(machine.num_states(), classes.num_classes());
    dataset
        .sequences()
        .par_iter()
        .fold(zero, |mut acc, seq| {
            acc.record(machine, classes, seq);
            acc
        })
        .reduce(zero, |a, b| a.merge(&b))
}

/// The two disjoint boosted edge sets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionSpec {
    pub c1: EdgeSet,
    pub c2: EdgeSet,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SpecError {
    #[error("C1 and C2 overlap")]
    Overlap,
    #[error("edge sets do not match the machine's edge count")]
    WrongMachine,
}

impl PartitionSpec {
    pub fn new(machine: &Machine, c1: EdgeSet, c2: EdgeSet) -> Result<Self, SpecError> {
        if c1.capacity() != machine.num_edges() || c2.capacity() != machine.num_edges() {
            return Err(SpecError::WrongMachine);
        }
        if !c1.is_disjoint(&c2) {
            return Err(SpecError::Overlap);
        }
        Ok(PartitionSpec { c1, c2 })
    }

    /// `C1 = C2 = ∅`: the independence model.
    pub fn independence(machine: &Machine) -> Self {
        PartitionSpec { c1: EdgeSet::new(machine.num_edges()), c2: EdgeSet::new(machine.num_edges()) }
    }

    pub fn is_independence(&self) -> bool {
        self.c1.is_empty() && self.c2.is_empty()
    }
}

/// Label weights `u` (one per class) and transition boosts `t1`, `t2`.
/// `u[pinned]` is held at zero.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams<T> {
    pub u: Vec<T>,
    pub t1: T,
    pub t2: T,
    pub pinned: usize,
}

impl<T: Real> ModelParams<T> {
    /// Free coordinates: `u` without the pinned entry, then `t1`, `t2`.
    pub fn to_free(&self) -> Vec<T> {
        let mut x: Vec<T> = self.u.iter().enumerate().filter(|&(i, _)| i != self.pinned).map(|(_, &v)| v).collect();
        x.push(self.t1);
        x.push(self.t2);
        x
    }

    pub fn with_free(&self, x: &[T]) -> Self {
        let k = self.u.len();
        debug_assert_eq!(x.len(), k + 1);
        let mut u = Vec::with_capacity(k);
        let mut it = x.iter();
        for i in 0..k {
            u.push(if i == self.pinned { T::zero() } else { *it.next().unwrap() });
        }
        ModelParams { u, t1: x[k - 1], t2: x[k], pinned: self.pinned }
    }

    pub fn free_dim(&self) -> usize {
        self.u.len() + 1
    }
}

/// Per-state boost assignment: 0 none, 1 in C1, 2 in C2, for every episode
/// class.
struct Objective<'a> {
    machine: &'a Machine,
    stats: &'a StateStats,
    boosts: Vec<u8>,
    k: usize,
}

impl<'a> Objective<'a> {
    fn new(machine: &'a Machine, spec: &PartitionSpec, stats: &'a StateStats) -> Self {
        Objective { machine, stats, boosts: boost_table(machine, spec), k: machine.labels().len() }
    }

    fn boosts(&self, state: StateId) -> &[u8] {
        &self.boosts[state * self.k..(state + 1) * self.k]
    }

    fn log_likelihood<T: Real>(&self, params: &ModelParams<T>) -> T {
        let mut total = T::zero();
        let mut logits = vec![T::zero(); params.u.len()];
        for state in 0..self.machine.num_states() {
            if self.stats.c(state) == 0 {
                continue;
            }
            fill_logits(params, self.boosts(state), &mut logits);
            let lz = log_sum_exp(&logits);
            for (j, &cnt) in self.stats.row(state).iter().enumerate() {
                if cnt > 0 {
                    total = total + T::count(cnt) * (logits[j] - lz);
                }
            }
        }
        total
    }

    /// Gradient and Hessian of the log-likelihood in full coordinates
    /// (`u` for every class, then `t1`, `t2`).
    fn full_gradient_hessian<T: Real>(&self, params: &ModelParams<T>) -> (Vec<T>, Vec<T>) {
        let nc = params.u.len();
        let dim = nc + 2;
        let mut grad = vec![T::zero(); dim];
        let mut hess = vec![T::zero(); dim * dim];
        let mut logits = vec![T::zero(); nc];
        let mut p = vec![T::zero(); nc];
        for state in 0..self.machine.num_states() {
            let c = self.stats.c(state);
            if c == 0 {
                continue;
            }
            let c = T::count(c);
            let boosts = self.boosts(state);
            fill_logits(params, boosts, &mut logits);
            softmax(&logits, &mut p);
            let row = self.stats.row(state);
            let mut w = [T::zero(); 2];
            for (j, &b) in boosts.iter().enumerate() {
                if b > 0 {
                    w[b as usize - 1] = w[b as usize - 1] + p[j];
                }
            }
            for j in 0..nc {
                let r = T::count(row[j]) - c * p[j];
                grad[j] = grad[j] + r;
                if let Some(&b) = boosts.get(j) {
                    if b > 0 {
                        let t = nc + b as usize - 1;
                        grad[t] = grad[t] + r;
                    }
                }
            }
            // Hessian = -c * Cov(T) under p(. | H).
            for j in 0..nc {
                for l in 0..=j {
                    let mut cov = -p[j] * p[l];
                    if j == l {
                        cov = cov + p[j];
                    }
                    let v = hess[j * dim + l] - c * cov;
                    hess[j * dim + l] = v;
                    hess[l * dim + j] = v;
                }
                for i in 0..2 {
                    let in_set = boosts.get(j).is_some_and(|&b| b as usize == i + 1);
                    let mut cov = -p[j] * w[i];
                    if in_set {
                        cov = cov + p[j];
                    }
                    let t = nc + i;
                    let v = hess[j * dim + t] - c * cov;
                    hess[j * dim + t] = v;
                    hess[t * dim + j] = v;
                }
            }
            for i in 0..2 {
                for i2 in 0..2 {
                    let mut cov = -w[i] * w[i2];
                    if i == i2 {
                        cov = cov + w[i];
                    }
                    let (a, b) = (nc + i, nc + i2);
                    hess[a * dim + b] = hess[a * dim + b] - c * cov;
                }
            }
        }
        (grad, hess)
    }

    /// Gradient and Hessian over the free coordinates.
    fn gradient_hessian<T: Real>(&self, params: &ModelParams<T>) -> (Vec<T>, Vec<T>) {
        let (g, h) = self.full_gradient_hessian(params);
        let dim = g.len();
        let keep: Vec<usize> = (0..dim).filter(|&i| i != params.pinned).collect();
        let gf = keep.iter().map(|&i| g[i]).collect();
        let mut hf = Vec::with_capacity(keep.len() * keep.len());
        for &i in &keep {
            for &j in &keep {
                hf.push(h[i * dim + j]);
            }
        }
        (gf, hf)
    }
}

fn boost_table(machine: &Machine, spec: &PartitionSpec) -> Vec<u8> {
    let k = machine.labels().len();
    let mut out = vec![0u8; machine.num_states() * k];
    for state in 0..machine.num_states() {
        for local in 0..k {
            if let Some(e) = machine.out_edge_local(state, local) {
                out[state * k + local] = if spec.c1.contains(e) {
                    1
                } else if spec.c2.contains(e) {
                    2
                } else {
                    0
                };
            }
        }
    }
    out
}

fn fill_logits<T: Real>(params: &ModelParams<T>, boosts: &[u8], out: &mut [T]) {
    for (j, o) in out.iter_mut().enumerate() {
        *o = params.u[j]
            + match boosts.get(j) {
                Some(1) => params.t1,
                Some(2) => params.t2,
                _ => T::zero(),
            };
    }
}

fn log_sum_exp<T: Real>(xs: &[T]) -> T {
    let m = xs.iter().copied().fold(T::neg_infinity(), T::max);
    if m == T::neg_infinity() {
        return m;
    }
    let s = xs.iter().fold(T::zero(), |acc, &x| acc + (x - m).exp());
    m + s.ln()
}

fn softmax<T: Real>(logits: &[T], out: &mut [T]) {
    let m = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let mut z = T::zero();
    for (o, &x) in out.iter_mut().zip(logits) {
        *o = (x - m).exp();
        z = z + *o;
    }
    for o in out.iter_mut() {
        *o = *o / z;
    }
}

/// Distribution over classes at `state`.
pub fn conditional_distribution<T: Real>(
    params: &ModelParams<T>,
    machine: &Machine,
    spec: &PartitionSpec,
    state: StateId,
) -> Vec<T> {
    let k = machine.labels().len();
    let boosts: Vec<u8> = (0..k)
        .map(|local| match machine.out_edge_local(state, local) {
            Some(e) if spec.c1.contains(e) => 1,
            Some(e) if spec.c2.contains(e) => 2,
            _ => 0,
        })
        .collect();
    let mut logits = vec![T::zero(); params.u.len()];
    fill_logits(params, &boosts, &mut logits);
    let mut p = vec![T::zero(); logits.len()];
    softmax(&logits, &mut p);
    p
}

/// `p(class | state)`.
pub fn conditional_label_prob<T: Real>(
    params: &ModelParams<T>,
    machine: &Machine,
    spec: &PartitionSpec,
    state: StateId,
    class: usize,
) -> T {
    conditional_distribution(params, machine, spec, state)[class]
}

/// `Σ_H Σ_l n_H[l] log p(l | H)`.
pub fn log_likelihood<T: Real>(
    stats: &StateStats,
    params: &ModelParams<T>,
    machine: &Machine,
    spec: &PartitionSpec,
) -> T {
    Objective::new(machine, spec, stats).log_likelihood(params)
}

/// Gradient and (negative semidefinite) Hessian of the log-likelihood over the
/// free coordinates, i.e. `u` without the pinned class, then `t1`, `t2`.
/// The Hessian is row-major.
pub fn gradient_hessian<T: Real>(
    stats: &StateStats,
    params: &ModelParams<T>,
    machine: &Machine,
    spec: &PartitionSpec,
) -> (Vec<T>, Vec<T>) {
    Objective::new(machine, spec, stats).gradient_hessian(params)
}

/// Maximum-likelihood independence model: log empirical class frequencies
/// relative to the gauge class, floored at `-t_cap`.
pub fn independence_params<T: Real>(stats: &StateStats, classes: &LabelClasses, t_cap: T) -> Option<ModelParams<T>> {
    let pinned = classes.gauge(stats)?;
    let totals = stats.class_totals();
    let base = T::count(totals[pinned]).ln();
    let u = totals.iter().map(|&n| if n == 0 { -t_cap } else { (T::count(n).ln() - base).max(-t_cap) }).collect();
    Some(ModelParams { u, t1: T::zero(), t2: T::zero(), pinned })
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitOptions<T> {
    /// Box bound on `|t1|`, `|t2|`, and floor for every `u`.
    pub t_cap: T,
    pub ridge: T,
    /// Stop when the projected gradient's max-norm falls below this.
    pub grad_tol: T,
    pub max_iter: usize,
}

impl<T: Real> Default for FitOptions<T> {
    fn default() -> Self {
        FitOptions { t_cap: T::c(DEFAULT_T_CAP), ridge: T::c(1e-9), grad_tol: T::c(1e-8), max_iter: 200 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Fit<T> {
    pub params: ModelParams<T>,
    pub log_likelihood: T,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("no events to fit")]
    NoEvents,
    #[error("non-finite log-likelihood {log_likelihood} at iteration {iteration} (params {params:?})")]
    NonFinite { iteration: usize, log_likelihood: f64, params: Vec<f64> },
}

/// Maximises the log-likelihood over the gauge-fixed parameters inside the
/// box, starting from the independence solution. Damped projected Newton:
/// coordinates sitting on a bound with the gradient pointing outward are
/// frozen, the rest take a ridge-regularised Newton step that is halved until
/// the likelihood does not decrease.
///
/// With `C1 = C2 = ∅` the closed-form independence solution is returned as is.
pub fn fit<T: Real>(
    machine: &Machine,
    spec: &PartitionSpec,
    stats: &StateStats,
    classes: &LabelClasses,
    options: &FitOptions<T>,
) -> Result<Fit<T>, FitError> {
    let start = independence_params(stats, classes, options.t_cap).ok_or(FitError::NoEvents)?;
    let objective = Objective::new(machine, spec, stats);
    let mut ll = objective.log_likelihood(&start);
    let non_finite = |iteration, ll: T, params: &ModelParams<T>| FitError::NonFinite {
        iteration,
        log_likelihood: ll.to_f64().unwrap_or(f64::NAN),
        params: params.to_free().iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect(),
    };
    if !ll.is_finite() {
        return Err(non_finite(0, ll, &start));
    }
    if spec.is_independence() {
        return Ok(Fit { params: start, log_likelihood: ll, iterations: 0, converged: true });
    }

    let dim = start.free_dim();
    let cap = options.t_cap;
    let lower = vec![-cap; dim];
    let upper: Vec<T> = (0..dim).map(|i| if i + 2 < dim { T::infinity() } else { cap }).collect();
    let project = |x: &mut [T]| {
        for i in 0..x.len() {
            x[i] = x[i].max(lower[i]).min(upper[i]);
        }
    };

    let mut params = start;
    let mut x = params.to_free();
    project(&mut x);
    params = params.with_free(&x);
    let mut converged = false;
    let mut iterations = 0;
    while iterations < options.max_iter {
        iterations += 1;
        let (g, h) = objective.gradient_hessian(&params);
        let free: Vec<usize> = (0..dim)
            .filter(|&i| {
                let at_lower = x[i] <= lower[i] && g[i] <= T::zero();
                let at_upper = x[i] >= upper[i] && g[i] >= T::zero();
                !(at_lower || at_upper)
            })
            .collect();
        let pg = free.iter().map(|&i| g[i].abs()).fold(T::zero(), T::max);
        // Inside the tolerance, one more Newton step still lands close to
        // working precision, so equivalent problems end at the same point.
        let finishing = pg < options.grad_tol;
        if pg == T::zero() {
            converged = true;
            break;
        }
        let nf = free.len();
        let mut step = vec![T::zero(); nf];
        let mut ridge = options.ridge;
        loop {
            let mut a = vec![T::zero(); nf * nf];
            for (r, &i) in free.iter().enumerate() {
                for (s, &j) in free.iter().enumerate() {
                    a[r * nf + s] = -h[i * dim + j];
                }
                a[r * nf + r] = a[r * nf + r] + ridge;
                step[r] = g[i];
            }
            if cholesky_solve(&mut a, nf, &mut step) {
                break;
            }
            ridge = ridge * T::c(10.0);
            if !ridge.is_finite() {
                return Err(non_finite(iterations, ll, &params));
            }
        }

        // Near the optimum the gain drops below the rounding of `ll`; a step
        // that loses no more than a few ulps still counts as non-decreasing.
        let slack = T::c(4.0) * T::epsilon() * ll.abs().max(T::one());
        let mut alpha = T::one();
        let mut accepted = None;
        for _ in 0..60 {
            let mut cand = x.clone();
            for (r, &i) in free.iter().enumerate() {
                cand[i] = cand[i] + alpha * step[r];
            }
            project(&mut cand);
            let cp = params.with_free(&cand);
            let cll = objective.log_likelihood(&cp);
            if cll.is_finite() && cll >= ll - slack {
                accepted = Some((cand, cp, cll));
                break;
            }
            alpha = alpha * T::c(0.5);
        }
        let Some((cand, cp, cll)) = accepted else {
            // No ascent direction at working precision.
            converged = true;
            break;
        };
        if finishing {
            params = cp;
            ll = cll;
            converged = true;
            break;
        }
        let moved = cand.iter().zip(&x).any(|(a, b)| a != b);
        x = cand;
        params = cp;
        ll = cll;
        if !moved {
            converged = true;
            break;
        }
    }
    Ok(Fit { params, log_likelihood: ll, iterations, converged })
}
