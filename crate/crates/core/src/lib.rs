//! Ranking episodes (sequential patterns shaped as labelled DAGs) by how
//! surprising their support is, first under an independence model and then
//! under partition models built from prefix subepisodes and superepisodes.
//!
//! The numerical layers are generic over the scalar type ([`num::Real`] for
//! `f32`/`f64`, [`num::Field`] for exact rationals in the reach recursion);
//! the aliases below fix `f64` for everyday use.

pub mod alphabet;
pub mod candidates;
pub mod dataset;
pub mod episode;
pub mod explain;
pub mod generate;
pub mod io;
mod linalg;
pub mod machine;
pub mod miner;
pub mod model;
pub mod num;
pub mod rank;
pub mod reach;
pub mod report;
pub mod tail;

pub use alphabet::{Alphabet, Label};
pub use candidates::{Candidate, CandidateSet};
pub use dataset::Dataset;
pub use episode::{Episode, VertexSet};
pub use machine::{EdgeSet, Machine};
pub use model::PartitionSpec;
pub use num::Rational;

pub type ModelParams = model::ModelParams<f64>;
pub type Fit = model::Fit<f64>;
pub type FitOptions = model::FitOptions<f64>;
pub type ReachTable = reach::ReachTable<f64>;
pub type Recurrence = reach::Recurrence<f64>;
pub type CoverProbabilities = rank::CoverProbabilities<f64>;
pub type RankResult = rank::RankResult<f64>;
pub type RankOptions = rank::RankOptions<f64>;
pub type Combined = rank::Combined<f64>;
