//! Seeded synthetic corpora with planted episodes (Plant, Plant2, Gap).
//!
//! Noise events are i.i.d. uniform over `x0, x1, …`. Each plant occurrence
//! picks a sequence uniformly, draws its gaps, picks a start uniformly among
//! the positions where it fits, and overwrites events left to right. An
//! occurrence that would overlap an earlier one is re-drawn; one that does
//! not fit is abandoned. Randomness comes from `ChaCha8Rng`.

use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::alphabet::Alphabet;
use crate::dataset::Dataset;

const MAX_REDRAWS: usize = 1_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GeneratorKind {
    Plant,
    Plant2,
    Gap,
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GeneratorKind::Plant => "plant",
            GeneratorKind::Plant2 => "plant2",
            GeneratorKind::Gap => "gap",
        })
    }
}

/// A planted pattern: groups are written in order, the symbols inside a group
/// in a uniformly random order. `a>b>c` is `[[a],[b],[c]]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Plant {
    pub groups: Vec<Vec<String>>,
    pub count: usize,
    /// Probability that the next event is noise; gaps are Geometric with mean
    /// `p / (1 - p)`.
    pub gap_p: f64,
}

impl Plant {
    pub fn serial(symbols: &[&str], count: usize, gap_p: f64) -> Self {
        Plant { groups: symbols.iter().map(|s| vec![s.to_string()]).collect(), count, gap_p }
    }

    pub fn len(&self) -> usize {
        self.groups.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorConfig {
    pub kind: GeneratorKind,
    pub seed: u64,
    pub num_sequences: usize,
    pub min_len: usize,
    pub max_len: usize,
    pub noise_symbols: usize,
    pub plants: Vec<Plant>,
}

impl GeneratorConfig {
    /// 10,000 sequences of length 20..=30 over 990 noise symbols; `a>b>c>d`
    /// 200 times, `e>f` 20 times, and `k>{m,n}>l` 10 times.
    pub fn plant(seed: u64) -> Self {
        GeneratorConfig {
            kind: GeneratorKind::Plant,
            seed,
            num_sequences: 10_000,
            min_len: 20,
            max_len: 30,
            noise_symbols: 990,
            plants: vec![
                Plant::serial(&["a", "b", "c", "d"], 200, 0.0),
                Plant::serial(&["e", "f"], 20, 0.0),
                Plant {
                    groups: vec![vec!["k".into()], vec!["m".into(), "n".into()], vec!["l".into()]],
                    count: 10,
                    gap_p: 0.0,
                },
            ],
        }
    }

    /// Two 3-event serial episodes, 400 times each, over 994 noise symbols.
    pub fn plant2(seed: u64) -> Self {
        GeneratorConfig {
            kind: GeneratorKind::Plant2,
            noise_symbols: 994,
            plants: vec![Plant::serial(&["a", "b", "c"], 400, 0.0), Plant::serial(&["d", "e", "f"], 400, 0.0)],
            ..Self::plant(seed)
        }
    }

    /// `a>b>c>d` 200 times with gap probability `p`, over 996 noise symbols.
    pub fn gap(seed: u64, p: f64) -> Self {
        GeneratorConfig {
            kind: GeneratorKind::Gap,
            noise_symbols: 996,
            plants: vec![Plant::serial(&["a", "b", "c", "d"], 200, p)],
            ..Self::plant(seed)
        }
    }

    pub fn defaults(kind: GeneratorKind, seed: u64) -> Self {
        match kind {
            GeneratorKind::Plant => Self::plant(seed),
            GeneratorKind::Plant2 => Self::plant2(seed),
            GeneratorKind::Gap => Self::gap(seed, 0.0),
        }
    }

    pub fn validate(&self) -> Result<(), GeneratorError> {
        if self.min_len > self.max_len {
            return Err(GeneratorError::LengthRange { min: self.min_len, max: self.max_len });
        }
        if self.noise_symbols == 0 && self.max_len > 0 {
            return Err(GeneratorError::NoNoise);
        }
        for p in &self.plants {
            if !(0.0..1.0).contains(&p.gap_p) {
                return Err(GeneratorError::GapProbability(p.gap_p));
            }
            if p.count > 0 && p.len() > self.max_len {
                return Err(GeneratorError::PatternTooLong { len: p.len(), max_len: self.max_len });
            }
            for s in p.groups.iter().flatten() {
                if noise_index(s).is_some_and(|i| i < self.noise_symbols) {
                    return Err(GeneratorError::OverlapsNoise(s.clone()));
                }
            }
        }
        Ok(())
    }
}

fn noise_index(symbol: &str) -> Option<usize> {
    symbol.strip_prefix('x')?.parse().ok()
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeneratorError {
    #[error("length range {min}..={max} is empty")]
    LengthRange { min: usize, max: usize },
    #[error("noise alphabet is empty")]
    NoNoise,
    #[error("gap probability {0} is outside [0, 1)")]
    GapProbability(f64),
    #[error("planted pattern of {len} events cannot fit sequences of at most {max_len}")]
    PatternTooLong { len: usize, max_len: usize },
    #[error("planted symbol {0} is also a noise symbol")]
    OverlapsNoise(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Generated {
    pub dataset: Dataset,
    /// Occurrences actually written, per plant.
    pub placed: Vec<usize>,
    /// Distinct sequences holding at least one occurrence, per plant.
    pub sequences_with_plant: Vec<usize>,
}

pub fn generate(config: &GeneratorConfig) -> Result<Generated, GeneratorError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let noise = config.noise_symbols;

    // Symbol ids: noise 0..noise, then planted symbols in order of listing.
    let mut names: Vec<String> = (0..noise).map(|i| format!("x{i}")).collect();
    let id_of = |s: &str, names: &mut Vec<String>| match names[noise..].iter().position(|n| n == s) {
        Some(i) => noise + i,
        None => {
            names.push(s.to_owned());
            names.len() - 1
        }
    };
    let plant_ids: Vec<Vec<Vec<usize>>> = config
        .plants
        .iter()
        .map(|p| p.groups.iter().map(|g| g.iter().map(|s| id_of(s, &mut names)).collect()).collect())
        .collect();

    let mut seqs: Vec<Vec<usize>> = (0..config.num_sequences)
        .map(|_| {
            let len = rng.gen_range(config.min_len..=config.max_len);
            (0..len).map(|_| rng.gen_range(0..noise)).collect()
        })
        .collect();
    let mut taken: Vec<Vec<bool>> = seqs.iter().map(|s| vec![false; s.len()]).collect();

    let mut placed = Vec::with_capacity(config.plants.len());
    let mut with_plant = Vec::with_capacity(config.plants.len());
    for (plant, ids) in config.plants.iter().zip(&plant_ids) {
        let mut ok = 0;
        let mut hit = vec![false; seqs.len()];
        for _ in 0..plant.count {
            if seqs.is_empty() {
                break;
            }
            for _ in 0..MAX_REDRAWS {
                let s = rng.gen_range(0..seqs.len());
                let mut events: Vec<usize> = Vec::with_capacity(plant.len());
                for g in ids {
                    let mut g = g.clone();
                    g.shuffle(&mut rng);
                    events.extend(g);
                }
                let mut offsets = Vec::with_capacity(events.len());
                let mut span = 0;
                for i in 0..events.len() {
                    if i > 0 {
                        while rng.gen::<f64>() < plant.gap_p {
                            span += 1;
                        }
                    }
                    offsets.push(span);
                    span += 1;
                }
                let len = seqs[s].len();
                if span > len {
                    // does not fit: abandoned
                    break;
                }
                let start = rng.gen_range(0..=len - span);
                if offsets.iter().any(|&o| taken[s][start + o]) {
                    continue;
                }
                for (&o, &e) in offsets.iter().zip(&events) {
                    seqs[s][start + o] = e;
                    taken[s][start + o] = true;
                }
                ok += 1;
                hit[s] = true;
                break;
            }
        }
        placed.push(ok);
        with_plant.push(hit.iter().filter(|&&h| h).count());
    }

    // Intern in order of first appearance so a save/load round trip is exact.
    let mut alphabet = Alphabet::new();
    let mut label = vec![None; names.len()];
    let mut dataset_seqs = Vec::with_capacity(seqs.len());
    for seq in &seqs {
        dataset_seqs.push(seq.iter().map(|&i| *label[i].get_or_insert_with(|| alphabet.intern(&names[i]))).collect());
    }
    Ok(Generated { dataset: Dataset::from_sequences(alphabet, dataset_seqs), placed, sequences_with_plant: with_plant })
}
