//! Sampling and exact minimization of binary objectives, one-hot decoding
//! and selection of the best unfolded conformation among low-energy samples.

mod anneal;
mod exact;
mod select;

use thiserror::Error;

use crate::geometry::GeometryError;
use crate::hubo::{BinaryVar, HuboError};

pub use anneal::{anneal_dense, simulated_anneal, AnnealParams, Sample, SampleSet};
pub use exact::{brute_force, MAX_BRUTE_FORCE_VARS};
pub(crate) use select::gain_or_zero;
pub use select::{decode, one_hot_feasible, select_best, UnfoldResult};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("invalid annealing parameters: {0}")]
    InvalidParams(String),
    #[error("{0} variables exceed the exhaustive limit of {MAX_BRUTE_FORCE_VARS}")]
    TooManyVariables(usize),
    #[error("torsion groups {0:?} are not one-hot")]
    Infeasible(Vec<usize>),
    #[error("variable {0} has no value in the assignment")]
    Unbound(BinaryVar),
    #[error("no feasible sample among {0}")]
    NoFeasibleSample(usize),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Hubo(#[from] HuboError),
}
