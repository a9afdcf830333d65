//! Higher-order binary objective for torsion selection: discretized angle
//! tables, the one-hot penalty, symbolic coordinates over one-hot variables
//! and the assembled, pruned objective.

mod build;
mod poly;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::GeometryError;

pub use build::{
    assemble_hubo, build_distance_constraint, build_hard_constraint, build_hubo, default_a_const, symbolic_coordinates,
    symbolic_rotation, HuboModel, HuboParams, SymbolicCoordinate, SymbolicFrames, SymbolicMat,
};
pub use poly::{merge_monomials, Assignment, BinaryPolynomial, BinaryVar, Monomial};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HuboError {
    #[error("angle discretization needs d >= 2, got {0}")]
    InvalidDiscretization(usize),
    #[error("variable {0} has no value in the assignment")]
    UnboundVariable(BinaryVar),
    #[error("threshold {0} outside [0, 1)")]
    InvalidThreshold(f64),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// `d` equally spaced torsion angles starting at zero, with their sines and
/// cosines. Values within 1e-15 of 0 or ±1 are snapped so that exact zeros
/// never appear as polynomial coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleTable {
    angles: Vec<f64>,
    sin_values: Vec<f64>,
    cos_values: Vec<f64>,
}

fn snap(v: f64) -> f64 {
    for target in [0.0, 1.0, -1.0] {
        if (v - target).abs() < 1e-15 {
            return target;
        }
    }
    v
}

impl AngleTable {
    pub fn new(d: usize) -> Result<Self, HuboError> {
        if d < 2 {
            return Err(HuboError::InvalidDiscretization(d));
        }
        let angles: Vec<f64> = (0..d).map(|k| 2.0 * PI * k as f64 / d as f64).collect();
        let sin_values = angles.iter().map(|a| snap(a.sin())).collect();
        let cos_values = angles.iter().map(|a| snap(a.cos())).collect();
        Ok(Self { angles, sin_values, cos_values })
    }

    pub fn d(&self) -> usize {
        self.angles.len()
    }

    /// Angle for 1-based index `k`.
    pub fn angle(&self, k: usize) -> f64 {
        self.angles[k - 1]
    }

    pub fn sin(&self, k: usize) -> f64 {
        self.sin_values[k - 1]
    }

    pub fn cos(&self, k: usize) -> f64 {
        self.cos_values[k - 1]
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }
}

pub fn make_angle_table(d: usize) -> Result<AngleTable, HuboError> {
    AngleTable::new(d)
}
