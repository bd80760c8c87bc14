//! Probability that a random sequence of length `n` leads the machine to a
//! given state:
//!
//! ```text
//! p(H, n) = q_H p(H, n-1) + Σ_{(F,H)} p(λ(F,H) | F) p(F, n-1)
//! ```
//!
//! where `q_H` is the probability of staying in `H`. The coefficients are kept
//! generic over [`Field`] so the recursion can be checked symbolically.

use crate::alphabet::Label;
use crate::machine::{Machine, StateId};
use crate::model::{conditional_distribution, LabelClasses, ModelParams, PartitionSpec};
use crate::num::{Field, Real};

/// Coefficients of the reach recursion.
#[derive(Clone, Debug, PartialEq)]
pub struct Recurrence<T> {
    stay: Vec<T>,
    /// Per target state: `(origin, p(label | origin))`.
    incoming: Vec<Vec<(StateId, T)>>,
    source: StateId,
    sink: StateId,
}

impl<T: Field> Recurrence<T> {
    /// State-independent label probabilities; symbols outside the episode only
    /// matter through `1 - Σ`.
    pub fn independence(machine: &Machine, prob: impl Fn(Label) -> T) -> Self {
        let mut stay = Vec::with_capacity(machine.num_states());
        let mut incoming = vec![Vec::new(); machine.num_states()];
        for s in 0..machine.num_states() {
            let mut q = T::one();
            for &e in machine.out_edges(s) {
                let edge = &machine.edges()[e];
                let p = prob(edge.label);
                q = q - p.clone();
                incoming[edge.to].push((s, p));
            }
            stay.push(q);
        }
        Recurrence { stay, incoming, source: machine.source(), sink: machine.sink() }
    }

    pub fn stay(&self, state: StateId) -> &T {
        &self.stay[state]
    }

    pub fn incoming(&self, state: StateId) -> &[(StateId, T)] {
        &self.incoming[state]
    }

    pub fn num_states(&self) -> usize {
        self.stay.len()
    }

    fn step(&self, prev: &[T], next: &mut [T]) {
        for h in 0..self.stay.len() {
            let mut v = self.stay[h].clone() * prev[h].clone();
            for (f, p) in &self.incoming[h] {
                v = v + p.clone() * prev[*f].clone();
            }
            next[h] = v;
        }
    }

    fn initial(&self) -> Vec<T> {
        let mut v = vec![T::zero(); self.stay.len()];
        v[self.source] = T::one();
        v
    }

    /// Sink probability for every length `0..=max_length`, without keeping the
    /// full table.
    pub fn sink_probabilities(&self, max_length: usize) -> Vec<T> {
        let mut cur = self.initial();
        let mut next = cur.clone();
        let mut out = Vec::with_capacity(max_length + 1);
        out.push(cur[self.sink].clone());
        for _ in 0..max_length {
            self.step(&cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
            out.push(cur[self.sink].clone());
        }
        out
    }
}

impl<T: Real> Recurrence<T> {
    /// Coefficients under a fitted model. The stay probability is the sum of
    /// the classes with no outgoing edge, not `1 - Σ`, to keep it accurate
    /// when boosts saturate.
    pub fn partition(machine: &Machine, classes: &LabelClasses, params: &ModelParams<T>, spec: &PartitionSpec) -> Self {
        if spec.is_independence() {
            // no boosts: every state shares the source distribution
            let p = conditional_distribution(params, machine, spec, machine.source());
            return Self::independence(machine, |l| p[classes.class_of(l)]);
        }
        let k = classes.num_episode_classes();
        let mut stay = Vec::with_capacity(machine.num_states());
        let mut incoming = vec![Vec::new(); machine.num_states()];
        for s in 0..machine.num_states() {
            let p = conditional_distribution(params, machine, spec, s);
            let mut q = T::zero();
            for (class, &pc) in p.iter().enumerate() {
                match (class < k).then(|| machine.out_edge_local(s, class)).flatten() {
                    Some(e) => incoming[machine.edges()[e].to].push((s, pc)),
                    None => q = q + pc,
                }
            }
            // with nowhere to go the state is absorbing; the softmax sum is 1
            // only up to rounding
            stay.push(if machine.out_edges(s).is_empty() { T::one() } else { q });
        }
        Recurrence { stay, incoming, source: machine.source(), sink: machine.sink() }
    }
}

/// `p(H, n)` for `n = 0..=K`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReachTable<T> {
    slices: Vec<Vec<T>>,
}

impl<T: Field> ReachTable<T> {
    pub fn max_length(&self) -> usize {
        self.slices.len() - 1
    }

    pub fn slice(&self, n: usize) -> &[T] {
        &self.slices[n]
    }

    pub fn get(&self, state: StateId, n: usize) -> &T {
        &self.slices[n][state]
    }
}

pub fn reach_probabilities<T: Field>(recurrence: &Recurrence<T>, max_length: usize) -> ReachTable<T> {
    let mut slices = Vec::with_capacity(max_length + 1);
    slices.push(recurrence.initial());
    for n in 1..=max_length {
        let mut next = vec![T::zero(); recurrence.num_states()];
        recurrence.step(&slices[n - 1], &mut next);
        slices.push(next);
    }
    ReachTable { slices }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::Alphabet;
    use crate::episode::Episode;
    use crate::num::Rational;

    #[test]
    fn zero_length_is_point_mass() {
        let mut a = Alphabet::new();
        let g = Episode::serial(&mut a, &["a", "b"]);
        let m = Machine::build(&g).unwrap();
        let r = Recurrence::independence(&m, |_| 0.5f64);
        let t = reach_probabilities(&r, 0);
        assert_eq!(t.slice(0), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn single_vertex_closed_form() {
        let mut a = Alphabet::new();
        let g = Episode::serial(&mut a, &["a"]);
        let m = Machine::build(&g).unwrap();
        let q = 0.37f64;
        let r = Recurrence::independence(&m, |_| q);
        let p = r.sink_probabilities(40);
        for (k, pk) in p.iter().enumerate() {
            assert!((pk - (1.0 - (1.0 - q).powi(k as i32))).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_rational_slices_sum_to_one() {
        let mut a = Alphabet::new();
        let g = Episode::parallel(&mut a, &["a", "b", "c"]);
        let m = Machine::build(&g).unwrap();
        let r = Recurrence::independence(&m, |_| Rational::new(1, 5));
        let t = reach_probabilities(&r, 6);
        for n in 0..=6 {
            let s: Rational = t.slice(n).iter().copied().sum();
            assert_eq!(s, Rational::new(1, 1));
        }
    }
}
