//! Molecular unfolding as binary optimization: torsion discovery, symbolic
//! objective construction over one-hot angle variables, degree reduction,
//! annealing and a greedy reference search.

pub mod baseline;
pub mod cli;
pub mod geometry;
pub mod hubo;
pub mod molio;
pub mod quadratize;
pub mod solver;
