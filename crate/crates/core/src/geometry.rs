//! Torsion geometry: rotation about a bond axis in homogeneous coordinates,
//! ordered composition along a torsion chain, whole-molecule coordinate
//! updates and the summed squared-distance objective.
//!
//! Angles are radians throughout. The fragment holding atom 0 never moves;
//! torsion `i` rotates the fragments on its far side (away from that root) by
//! `+theta_i` about the directed line `a1 -> a2`. Rotation matrices are always
//! built from the original, unrotated bond coordinates.

use std::collections::BTreeSet;
use std::ops::Mul;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hubo::AngleTable;
use crate::molio::{ChainStep, Molecule, TorsionGraph, Vec3};

pub const AXIS_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("rotation axis endpoints coincide")]
    DegenerateAxis,
    #[error("cannot compose an empty rotation chain")]
    EmptyChain,
    #[error("torsion assignment out of range: {0}")]
    IndexOutOfRange(String),
    #[error("initial objective is zero; volume gain undefined")]
    ZeroBaseline,
}

/// Row-major homogeneous 4x4 transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat4(pub [[f64; 4]; 4]);

impl Mat4 {
    pub fn identity() -> Self {
        let mut m = [[0.0; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        Mat4(m)
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.0[r][c]
    }

    pub fn transform_point(&self, p: Vec3) -> Vec3 {
        let m = &self.0;
        let mut out = [0.0; 3];
        for (r, slot) in out.iter_mut().enumerate() {
            *slot = m[r][0] * p[0] + m[r][1] * p[1] + m[r][2] * p[2] + m[r][3];
        }
        out
    }

    pub fn det3(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Largest entry of `|R^T R - I|` over the 3x3 block.
    pub fn orthonormality_error(&self) -> f64 {
        let m = &self.0;
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = (0..3).map(|k| m[k][i] * m[k][j]).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &Mat4) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..4 {
            for c in 0..4 {
                worst = worst.max((self.0[r][c] - other.0[r][c]).abs());
            }
        }
        worst
    }
}

impl Mul for Mat4 {
    type Output = Mat4;

    fn mul(self, rhs: Mat4) -> Mat4 {
        let mut out = [[0.0; 4]; 4];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, slot) in row.iter_mut().enumerate() {
                *slot = (0..4).map(|k| self.0[r][k] * rhs.0[k][c]).sum();
            }
        }
        Mat4(out)
    }
}

/// Rotation by `theta` about the line through `a1` with direction `a2 - a1`.
pub fn rotation_matrix(a1: Vec3, a2: Vec3, theta: f64) -> Result<Mat4, GeometryError> {
    let [x1, y1, z1] = a1;
    let (lx, ly, lz) = (a2[0] - x1, a2[1] - y1, a2[2] - z1);
    let l2 = lx * lx + ly * ly + lz * lz;
    let l = l2.sqrt();
    if l <= AXIS_TOLERANCE {
        return Err(GeometryError::DegenerateAxis);
    }
    let (s, c) = theta.sin_cos();
    let omc = 1.0 - c;
    Ok(Mat4([
        [
            (lx * lx + (ly * ly + lz * lz) * c) / l2,
            (lx * ly * omc - lz * l * s) / l2,
            (lx * lz * omc + ly * l * s) / l2,
            ((x1 * (ly * ly + lz * lz) - lx * (y1 * ly + z1 * lz)) * omc + (y1 * lz - z1 * ly) * l * s) / l2,
        ],
        [
            (lx * ly * omc + lz * l * s) / l2,
            (ly * ly + (lx * lx + lz * lz) * c) / l2,
            (ly * lz * omc - lx * l * s) / l2,
            ((y1 * (lx * lx + lz * lz) - ly * (x1 * lx + z1 * lz)) * omc + (z1 * lx - x1 * lz) * l * s) / l2,
        ],
        [
            (lx * lz * omc - ly * l * s) / l2,
            (ly * lz * omc + lx * l * s) / l2,
            (lz * lz + (lx * lx + ly * ly) * c) / l2,
            ((z1 * (lx * lx + ly * ly) - lz * (x1 * lx + y1 * ly)) * omc + (x1 * ly - y1 * lx) * l * s) / l2,
        ],
        [0.0, 0.0, 0.0, 1.0],
    ]))
}

/// Left-to-right product `M1 * M2 * ... * Mk`.
pub fn compose_chain(mats: &[Mat4]) -> Result<Mat4, GeometryError> {
    let (first, rest) = mats.split_first().ok_or(GeometryError::EmptyChain)?;
    Ok(rest.iter().fold(*first, |acc, m| acc * *m))
}

pub fn pair_distance_sq(u_pos: Vec3, v0: Vec3, r: &Mat4) -> f64 {
    let v = r.transform_point(v0);
    (0..3).map(|k| (u_pos[k] - v[k]).powi(2)).sum()
}

/// Chosen discrete angle per torsion; entries are 1-based indices into an
/// [`AngleTable`] with `d` angles.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TorsionAssignment {
    pub angle_index: Vec<usize>,
    pub d: usize,
}

impl TorsionAssignment {
    pub fn new(angle_index: Vec<usize>, d: usize) -> Result<Self, GeometryError> {
        if let Some((i, k)) = angle_index.iter().enumerate().find(|(_, &k)| k == 0 || k > d) {
            return Err(GeometryError::IndexOutOfRange(format!(
                "torsion {} has angle index {k}, expected 1..={d}",
                i + 1
            )));
        }
        Ok(Self { angle_index, d })
    }

    /// The folded reference state: every torsion at angle index 1 (zero).
    pub fn folded(n: usize, d: usize) -> Self {
        Self { angle_index: vec![1; n], d }
    }

    pub fn n(&self) -> usize {
        self.angle_index.len()
    }

    /// Angle of torsion `i` (1-based) in radians.
    pub fn angle(&self, i: usize, table: &AngleTable) -> f64 {
        table.angle(self.angle_index[i - 1])
    }

    pub fn degrees(&self, table: &AngleTable) -> Vec<f64> {
        self.angle_index.iter().map(|&k| table.angle(k).to_degrees()).collect()
    }

    /// Iterates all `d^n` assignments in lexicographic order.
    pub fn enumerate(n: usize, d: usize) -> impl Iterator<Item = TorsionAssignment> {
        let total = (d as u128).pow(n as u32);
        (0..total).map(move |mut code| {
            let mut idx = vec![1; n];
            for slot in idx.iter_mut().rev() {
                *slot = (code % d as u128) as usize + 1;
                code /= d as u128;
            }
            TorsionAssignment { angle_index: idx, d }
        })
    }
}

fn check_assignment(g: &TorsionGraph, theta: &TorsionAssignment, table: &AngleTable) -> Result<(), GeometryError> {
    if theta.n() != g.n() {
        return Err(GeometryError::IndexOutOfRange(format!(
            "assignment has {} entries for {} torsions",
            theta.n(),
            g.n()
        )));
    }
    if theta.d != table.d() {
        return Err(GeometryError::IndexOutOfRange(format!(
            "assignment uses d = {} but the angle table has {}",
            theta.d,
            table.d()
        )));
    }
    TorsionAssignment::new(theta.angle_index.clone(), theta.d).map(|_| ())
}

/// Numeric torsion matrix for every torsion, with the angle sign applied.
fn torsion_matrices(
    m: &Molecule,
    g: &TorsionGraph,
    theta: &TorsionAssignment,
    table: &AngleTable,
    sign: f64,
) -> Result<Vec<Mat4>, GeometryError> {
    g.torsions
        .iter()
        .map(|t| rotation_matrix(m.position(t.a1), m.position(t.a2), sign * theta.angle(t.index, table)))
        .collect()
}

/// Composed transform of a chain given per-torsion matrices for `+theta`
/// and `-theta`.
fn chain_transform(chain: &[ChainStep], forward: &[Mat4], backward: &[Mat4]) -> Result<Mat4, GeometryError> {
    let mats: Vec<Mat4> = chain
        .iter()
        .map(|s| match s.direction {
            crate::molio::Direction::AwayFromRoot => forward[s.torsion - 1],
            crate::molio::Direction::TowardRoot => backward[s.torsion - 1],
        })
        .collect();
    compose_chain(&mats)
}

/// New coordinates of every atom under `theta`, root fragment fixed.
pub fn apply_torsions(
    m: &Molecule,
    g: &TorsionGraph,
    theta: &TorsionAssignment,
    table: &AngleTable,
) -> Result<Vec<Vec3>, GeometryError> {
    check_assignment(g, theta, table)?;
    let forward = torsion_matrices(m, g, theta, table, 1.0)?;
    let n_frag = g.fragments.len();
    let mut transform: Vec<Option<Mat4>> = vec![None; n_frag];
    if n_frag > 0 {
        transform[g.root_fragment()] = Some(Mat4::identity());
    }
    // Parents are resolved before children by repeated passes over the tree.
    let mut pending: Vec<usize> = (0..n_frag).filter(|&f| transform[f].is_none()).collect();
    while !pending.is_empty() {
        let before = pending.len();
        pending.retain(|&f| match g.parent_of(f) {
            Some((p, t)) => match transform[p] {
                Some(tp) => {
                    transform[f] = Some(tp * forward[t - 1]);
                    false
                }
                None => true,
            },
            None => {
                // Disconnected fragment: nothing rotates it.
                transform[f] = Some(Mat4::identity());
                false
            }
        });
        if pending.len() == before {
            break;
        }
    }
    Ok(m.atoms
        .iter()
        .map(|a| {
            let t = transform[g.fragment_of(a.id)].unwrap_or_else(Mat4::identity);
            t.transform_point(a.position)
        })
        .collect())
}

/// Sum of squared distances over eligible pairs inside `atom_subset`, each
/// pair evaluated with its first atom fixed and the second moved by the
/// ordered product of its chain's torsion matrices.
pub fn objective_volume(
    m: &Molecule,
    g: &TorsionGraph,
    theta: &TorsionAssignment,
    table: &AngleTable,
    atom_subset: &BTreeSet<usize>,
) -> Result<f64, GeometryError> {
    check_assignment(g, theta, table)?;
    let forward = torsion_matrices(m, g, theta, table, 1.0)?;
    let backward = torsion_matrices(m, g, theta, table, -1.0)?;
    let mut total = 0.0;
    for (u, v, chain) in g.eligible_pairs(atom_subset) {
        let r = chain_transform(chain, &forward, &backward)?;
        total += pair_distance_sq(m.position(u), m.position(v), &r);
    }
    Ok(total)
}

pub fn volume_gain_percent(d_initial: f64, d_final: f64) -> Result<f64, GeometryError> {
    if d_initial <= 0.0 {
        return Err(GeometryError::ZeroBaseline);
    }
    Ok(100.0 * (d_final - d_initial) / d_initial)
}

/// Objective evaluator for search loops: places all atoms once per
/// assignment and sums over a precomputed pair list. Agrees with
/// [`objective_volume`] because every pair distance is invariant under the
/// rigid motion relating the two frames.
#[derive(Debug, Clone)]
pub struct VolumeEvaluator {
    pairs: Vec<(usize, usize)>,
}

impl VolumeEvaluator {
    pub fn new(g: &TorsionGraph, atom_subset: &BTreeSet<usize>) -> Self {
        Self { pairs: g.eligible_pairs(atom_subset).map(|(u, v, _)| (u, v)).collect() }
    }

    pub fn pair_count(&self) -> usize {
        self.pairs.len()
    }

    pub fn evaluate(
        &self,
        m: &Molecule,
        g: &TorsionGraph,
        theta: &TorsionAssignment,
        table: &AngleTable,
    ) -> Result<f64, GeometryError> {
        let pos = apply_torsions(m, g, theta, table)?;
        Ok(self.pairs.iter().map(|&(u, v)| (0..3).map(|k| (pos[u][k] - pos[v][k]).powi(2)).sum::<f64>()).sum())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn zero_angle_is_identity() {
        let r = rotation_matrix([0.3, -1.0, 2.0], [1.0, 4.0, -2.0], 0.0).unwrap();
        assert!(r.max_abs_diff(&Mat4::identity()) < 1e-15);
    }

    #[test]
    fn coincident_axis_is_rejected() {
        assert_eq!(rotation_matrix([1.0, 1.0, 1.0], [1.0, 1.0, 1.0], 0.5), Err(GeometryError::DegenerateAxis));
    }

    #[test]
    fn empty_chain() {
        assert_eq!(compose_chain(&[]), Err(GeometryError::EmptyChain));
        assert_eq!(compose_chain(&[Mat4::identity()]).unwrap(), Mat4::identity());
    }

    #[test]
    fn inverse_pair_composes_to_identity() {
        let a = rotation_matrix([0.1, 0.2, 0.3], [1.0, -2.0, 0.5], 1.1).unwrap();
        let b = rotation_matrix([0.1, 0.2, 0.3], [1.0, -2.0, 0.5], -1.1).unwrap();
        assert!(compose_chain(&[a, b]).unwrap().max_abs_diff(&Mat4::identity()) < 1e-9);
    }

    #[test]
    fn pair_distance_examples() {
        assert_eq!(pair_distance_sq([0.0; 3], [3.0, 4.0, 0.0], &Mat4::identity()), 25.0);
        assert_eq!(pair_distance_sq([1.0, 2.0, 3.0], [1.0, 2.0, 3.0], &Mat4::identity()), 0.0);
    }

    #[test]
    fn gain_percent() {
        assert_eq!(volume_gain_percent(100.0, 100.0).unwrap(), 0.0);
        assert_eq!(volume_gain_percent(100.0, 150.0).unwrap(), 50.0);
        assert_eq!(volume_gain_percent(0.0, 1.0), Err(GeometryError::ZeroBaseline));
    }

    #[test]
    fn period_three_rotation() {
        let r = rotation_matrix([1.0, 1.0, 1.0], [2.0, 1.0, 1.0], 2.0 * PI / 3.0).unwrap();
        let p = [0.4, -2.5, 3.3];
        let back = r.transform_point(r.transform_point(r.transform_point(p)));
        for k in 0..3 {
            assert!((back[k] - p[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn assignment_enumeration_order() {
        let all: Vec<_> = TorsionAssignment::enumerate(2, 3).map(|t| t.angle_index).collect();
        assert_eq!(all.len(), 9);
        assert_eq!(all[0], vec![1, 1]);
        assert_eq!(all[1], vec![1, 2]);
        assert_eq!(all[8], vec![3, 3]);
        assert!(TorsionAssignment::new(vec![0], 4).is_err());
        assert!(TorsionAssignment::new(vec![5], 4).is_err());
    }
}
