//! Ranks: `r(G | M) = -ln P(supp(G) >= observed | M)`.
//!
//! The combined partition rank of an episode is the smallest rank over its
//! prefix partitions and the same-vertex superepisodes found in the candidate
//! set.

use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::alphabet::Alphabet;
use crate::candidates::CandidateSet;
use crate::dataset::Dataset;
use crate::episode::{Episode, VertexSet};
use crate::machine::{block_prefix, block_super, EdgeSet, Limits, Machine, MachineError};
use crate::model::{
    collapse_alphabet, fit, state_statistics, Fit, FitError, FitOptions, LabelClasses, ModelParams, PartitionSpec,
    StateStats,
};
use crate::num::Real;
use crate::reach::Recurrence;
use crate::tail::{log_survival_exact, log_survival_normal, log_survival_poisson, normal_z};

pub const DEFAULT_EXACT_LIMIT: usize = 5_000;
pub const DEFAULT_POISSON_MAX_MU: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Exact,
    Normal,
    Poisson,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Exact => "exact",
            Method::Normal => "normal",
            Method::Poisson => "poisson",
        })
    }
}

/// The submodel a rank came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Explainer {
    Independence,
    Prefix(VertexSet),
    /// Index into the candidate set.
    Superepisode(usize),
}

impl Explainer {
    pub fn describe(&self, episode: &Episode, alphabet: &Alphabet, candidates: &CandidateSet) -> String {
        match *self {
            Explainer::Independence => "independence".to_owned(),
            Explainer::Prefix(w) => format!("prefix:{}", episode.induced(w).notation(alphabet)),
            Explainer::Superepisode(i) => format!("super:{}", candidates.get(i).id),
        }
    }
}

/// Cover probability `p_k` for every sequence length present in the data.
#[derive(Clone, Debug, PartialEq)]
pub struct CoverProbabilities<T> {
    /// `(length, number of sequences, p_length)`, ascending by length.
    pub by_length: Vec<(usize, usize, T)>,
}

impl<T: Real> CoverProbabilities<T> {
    pub fn mu(&self) -> T {
        self.by_length.iter().fold(T::zero(), |a, &(_, c, p)| a + T::count(c as u64) * p)
    }

    pub fn sigma2(&self) -> T {
        self.by_length.iter().fold(T::zero(), |a, &(_, c, p)| a + T::count(c as u64) * p * (T::one() - p))
    }

    pub fn num_sequences(&self) -> usize {
        self.by_length.iter().map(|&(_, c, _)| c).sum()
    }

    /// One probability per sequence.
    pub fn per_sequence(&self) -> Vec<T> {
        self.by_length.iter().flat_map(|&(_, c, p)| std::iter::repeat(p).take(c)).collect()
    }
}

pub fn cover_probabilities<T: Real>(
    machine: &Machine,
    classes: &LabelClasses,
    params: &ModelParams<T>,
    spec: &PartitionSpec,
    dataset: &Dataset,
) -> CoverProbabilities<T> {
    let rec = Recurrence::partition(machine, classes, params, spec);
    let sink = rec.sink_probabilities(dataset.max_length());
    let by_length = dataset.length_counts().iter().map(|(&len, &c)| (len, c, sink[len])).collect();
    CoverProbabilities { by_length }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RankOptions<T> {
    /// Use the exact Poisson-binomial tail when the dataset has at most
    /// `exact_limit` sequences.
    pub exact: bool,
    pub exact_limit: usize,
    pub poisson_max_mu: T,
    pub fit: FitOptions<T>,
    pub limits: Limits,
}

impl<T: Real> Default for RankOptions<T> {
    fn default() -> Self {
        RankOptions {
            exact: false,
            exact_limit: DEFAULT_EXACT_LIMIT,
            poisson_max_mu: T::c(DEFAULT_POISSON_MAX_MU),
            fit: FitOptions::default(),
            limits: Limits::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RankResult<T> {
    pub mu: T,
    pub sigma2: T,
    pub observed: u64,
    /// `-ln` survival; `+inf` when the observed support is impossible.
    pub rank: T,
    /// Continuity-corrected z-score, for the normal method.
    pub z: Option<T>,
    pub method: Method,
    pub explainer: Explainer,
}

/// Rank of `observed` given cover probabilities: Poisson tail for
/// `μ <= poisson_max_mu`, normal otherwise, exact on request.
pub fn rank_from_cover<T: Real>(
    cover: &CoverProbabilities<T>,
    observed: u64,
    options: &RankOptions<T>,
) -> RankResult<T> {
    let mu = cover.mu();
    let sigma2 = cover.sigma2();
    let m = cover.num_sequences();
    let (method, log_sf, z) = if options.exact && m <= options.exact_limit {
        (Method::Exact, log_survival_exact(&cover.per_sequence(), observed as usize), None)
    } else if mu <= options.poisson_max_mu {
        (Method::Poisson, log_survival_poisson(mu, observed), None)
    } else {
        let z = (sigma2 > T::zero()).then(|| normal_z(mu, sigma2, observed));
        (Method::Normal, log_survival_normal(mu, sigma2, observed), z)
    };
    let rank = (T::zero() - log_sf).max(T::zero());
    RankResult { mu, sigma2, observed, rank, z, method, explainer: Explainer::Independence }
}

pub fn rank<T: Real>(
    machine: &Machine,
    classes: &LabelClasses,
    params: &ModelParams<T>,
    spec: &PartitionSpec,
    dataset: &Dataset,
    observed: u64,
    options: &RankOptions<T>,
) -> RankResult<T> {
    rank_from_cover(&cover_probabilities(machine, classes, params, spec, dataset), observed, options)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RankError {
    #[error(transparent)]
    Machine(#[from] MachineError),
    #[error("fitting {explainer:?}: {source}")]
    Fit { explainer: Explainer, source: FitError },
}

/// Machine, collapsed classes, and statistics of one episode on one dataset.
/// Statistics do not depend on the partition spec, so they are shared by
/// every fit.
#[derive(Clone, Debug)]
pub struct PreparedEpisode<'a> {
    pub episode: &'a Episode,
    pub machine: Machine,
    pub classes: LabelClasses,
    pub stats: StateStats,
    pub dataset: &'a Dataset,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation<T> {
    pub spec: PartitionSpec,
    /// `None` when the dataset has no events.
    pub fit: Option<Fit<T>>,
    pub result: RankResult<T>,
}

impl<'a> PreparedEpisode<'a> {
    pub fn new(episode: &'a Episode, dataset: &'a Dataset, limits: Limits) -> Result<Self, MachineError> {
        let machine = Machine::build_with(episode, limits)?;
        let classes = collapse_alphabet(dataset, episode);
        let stats = state_statistics(&machine, &classes, dataset);
        Ok(PreparedEpisode { episode, machine, classes, stats, dataset })
    }

    pub fn support(&self) -> u64 {
        self.stats.covered()
    }

    pub fn prefix_spec(&self, w: VertexSet) -> PartitionSpec {
        let rest = self.episode.vertices().difference(w);
        PartitionSpec { c1: block_prefix(&self.machine, w), c2: block_prefix(&self.machine, rest) }
    }

    pub fn superepisode_spec(&self, h: &Episode) -> Result<PartitionSpec, MachineError> {
        Ok(PartitionSpec { c1: block_super(&self.machine, h)?, c2: EdgeSet::new(self.machine.num_edges()) })
    }

    /// Fits `spec` and ranks the observed support under it.
    pub fn evaluate<T: Real>(
        &self,
        spec: PartitionSpec,
        explainer: Explainer,
        options: &RankOptions<T>,
    ) -> Result<Evaluation<T>, RankError> {
        let observed = self.support();
        if self.stats.total() == 0 {
            let result = RankResult {
                mu: T::zero(),
                sigma2: T::zero(),
                observed,
                rank: if observed == 0 { T::zero() } else { T::infinity() },
                z: None,
                method: Method::Poisson,
                explainer,
            };
            return Ok(Evaluation { spec, fit: None, result });
        }
        let fitted = fit(&self.machine, &spec, &self.stats, &self.classes, &options.fit)
            .map_err(|source| RankError::Fit { explainer, source })?;
        let mut result = rank(&self.machine, &self.classes, &fitted.params, &spec, self.dataset, observed, options);
        result.explainer = explainer;
        Ok(Evaluation { spec, fit: Some(fitted), result })
    }

    pub fn independence<T: Real>(&self, options: &RankOptions<T>) -> Result<Evaluation<T>, RankError> {
        self.evaluate(PartitionSpec::independence(&self.machine), Explainer::Independence, options)
    }

    /// Every spec the combined rank considers, in evaluation order: prefix
    /// partitions by prefix order, then superepisodes by candidate order.
    pub fn partition_specs(&self, candidates: &CandidateSet) -> Result<Vec<(Explainer, PartitionSpec)>, MachineError> {
        let full = self.episode.vertices();
        let mut out = Vec::new();
        // machine states are exactly the prefix graphs, in prefix order
        for &w in self.machine.states() {
            if w.is_empty() || w == full {
                continue;
            }
            out.push((Explainer::Prefix(w), self.prefix_spec(w)));
        }
        for i in candidates.superepisodes_of(self.episode) {
            out.push((Explainer::Superepisode(i), self.superepisode_spec(&candidates.get(i).episode)?));
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Combined<T> {
    pub support: u64,
    pub independence: RankResult<T>,
    /// Smallest rank over the partition models, with its explainer.
    pub partition: RankResult<T>,
    /// Number of partition specs considered.
    pub evaluated: usize,
}

/// Independence rank and combined partition rank of `episode`. Specs with
/// both edge sets empty are the independence model and reuse its result.
pub fn rank_combined<T: Real>(
    episode: &Episode,
    dataset: &Dataset,
    candidates: &CandidateSet,
    options: &RankOptions<T>,
) -> Result<Combined<T>, RankError> {
    let prep = PreparedEpisode::new(episode, dataset, options.limits)?;
    let ind = prep.independence(options)?.result;
    let specs = prep.partition_specs(candidates)?;
    let evaluated = specs.len();
    let mut best: Option<RankResult<T>> = None;
    for (explainer, spec) in specs {
        let r = if spec.is_independence() { ind.clone() } else { prep.evaluate(spec, explainer, options)?.result };
        if best.as_ref().map_or(true, |b| r.rank < b.rank) {
            best = Some(r);
        }
    }
    Ok(Combined {
        support: prep.support(),
        partition: best.unwrap_or_else(|| ind.clone()),
        independence: ind,
        evaluated,
    })
}

/// [`rank_combined`] for every candidate, in candidate order. Parallel over
/// episodes; results do not depend on the thread count.
pub fn rank_all<T: Real>(
    candidates: &CandidateSet,
    dataset: &Dataset,
    options: &RankOptions<T>,
) -> Vec<Result<Combined<T>, RankError>> {
    candidates.items().par_iter().map(|c| rank_combined(&c.episode, dataset, candidates, options)).collect()
}

/// `ρ = (r_ind - r_part) / r_part` and `η = (r_part - r_ind) / r_ind`. Equal
/// ranks give `(0, 0)`; a zero denominator gives an infinite score.
pub fn rho_eta<T: Real>(r_ind: T, r_part: T) -> (T, T) {
    if r_ind == r_part {
        return (T::zero(), T::zero());
    }
    let rho = if r_part.is_infinite() { -T::one() } else { (r_ind - r_part) / r_part };
    let eta = if r_ind.is_infinite() { -T::one() } else { (r_part - r_ind) / r_ind };
    (rho, eta)
}

/// Kendall's τ-b between paired scores. `None` for fewer than two pairs;
/// zero when either side is entirely tied.
pub fn kendall_tau_b<T: Real>(a: &[T], b: &[T]) -> Option<T> {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    if n < 2 {
        return None;
    }
    let (mut concordant, mut discordant, mut ties_a, mut ties_b) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..n {
        for j in i + 1..n {
            let da = a[i].partial_cmp(&a[j]).expect("scores are not NaN");
            let db = b[i].partial_cmp(&b[j]).expect("scores are not NaN");
            use std::cmp::Ordering::Equal;
            match (da, db) {
                (Equal, Equal) => {}
                (Equal, _) => ties_a += 1,
                (_, Equal) => ties_b += 1,
                _ if da == db => concordant += 1,
                _ => discordant += 1,
            }
        }
    }
    let n0 = concordant + discordant;
    let denom = ((n0 + ties_a) as f64 * (n0 + ties_b) as f64).sqrt();
    if denom == 0.0 {
        return Some(T::zero());
    }
    Some(T::c((concordant - discordant) as f64 / denom))
}
