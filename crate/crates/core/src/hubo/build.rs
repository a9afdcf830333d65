use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use rustc_hash::FxHashSet;
use serde::{Deserialize, Serialize};

use super::{AngleTable, BinaryPolynomial, BinaryVar, HuboError, Monomial};
use crate::geometry::{GeometryError, AXIS_TOLERANCE};
use crate::molio::{ChainStep, Direction, Molecule, TorsionBond, TorsionGraph, Vec3};

/// `sum_i (sum_k x_ik - 1)^2`, expanded with `x^2 = x`.
pub fn build_hard_constraint(n: usize, d: usize) -> BinaryPolynomial {
    let mut p = BinaryPolynomial::constant(n as f64);
    for i in 1..=n {
        for k in 1..=d {
            p.add_term(&[BinaryVar::one_hot(i, k)], -1.0);
            for l in (k + 1)..=d {
                p.add_term(&[BinaryVar::one_hot(i, k), BinaryVar::one_hot(i, l)], 2.0);
            }
        }
    }
    p
}

pub type SymbolicMat = [[BinaryPolynomial; 4]; 4];

/// Rotation matrix of torsion `t` with `cos θ` replaced by `Σ_k x_ik cos θ^k`
/// and `sin θ` by `sign · Σ_k x_ik sin θ^k`.
pub fn symbolic_rotation(
    t: &TorsionBond,
    table: &AngleTable,
    m: &Molecule,
    direction: Direction,
) -> Result<SymbolicMat, HuboError> {
    let [x1, y1, z1] = m.position(t.a1);
    let a2 = m.position(t.a2);
    let (lx, ly, lz) = (a2[0] - x1, a2[1] - y1, a2[2] - z1);
    let l2 = lx * lx + ly * ly + lz * lz;
    let l = l2.sqrt();
    if l <= AXIS_TOLERANCE {
        return Err(GeometryError::DegenerateAxis.into());
    }
    let tx = (x1 * (ly * ly + lz * lz) - lx * (y1 * ly + z1 * lz)) / l2;
    let ty = (y1 * (lx * lx + lz * lz) - ly * (x1 * lx + z1 * lz)) / l2;
    let tz = (z1 * (lx * lx + ly * ly) - lz * (x1 * lx + y1 * ly)) / l2;
    // Each entry is K + C·cos + S·sin.
    let parts: [[(f64, f64, f64); 4]; 3] = [
        [
            (lx * lx / l2, (ly * ly + lz * lz) / l2, 0.0),
            (lx * ly / l2, -lx * ly / l2, -lz / l),
            (lx * lz / l2, -lx * lz / l2, ly / l),
            (tx, -tx, (y1 * lz - z1 * ly) / l),
        ],
        [
            (lx * ly / l2, -lx * ly / l2, lz / l),
            (ly * ly / l2, (lx * lx + lz * lz) / l2, 0.0),
            (ly * lz / l2, -ly * lz / l2, -lx / l),
            (ty, -ty, (z1 * lx - x1 * lz) / l),
        ],
        [
            (lx * lz / l2, -lx * lz / l2, -ly / l),
            (ly * lz / l2, -ly * lz / l2, lx / l),
            (lz * lz / l2, (lx * lx + ly * ly) / l2, 0.0),
            (tz, -tz, (x1 * ly - y1 * lx) / l),
        ],
    ];
    let sign = direction.sign();
    let mut out: SymbolicMat = Default::default();
    for (r, row) in parts.iter().enumerate() {
        for (c, &(k0, kc, ks)) in row.iter().enumerate() {
            let mut p = BinaryPolynomial::constant(k0);
            for k in 1..=table.d() {
                p.add_term(&[BinaryVar::one_hot(t.index, k)], kc * table.cos(k) + sign * ks * table.sin(k));
            }
            out[r][c] = p;
        }
    }
    out[3][3] = BinaryPolynomial::constant(1.0);
    Ok(out)
}

/// Atom position as three polynomials over one-hot variables.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolicCoordinate {
    pub x: BinaryPolynomial,
    pub y: BinaryPolynomial,
    pub z: BinaryPolynomial,
}

impl SymbolicCoordinate {
    pub fn fixed(p: Vec3) -> Self {
        Self {
            x: BinaryPolynomial::constant(p[0]),
            y: BinaryPolynomial::constant(p[1]),
            z: BinaryPolynomial::constant(p[2]),
        }
    }

    pub fn components(&self) -> [&BinaryPolynomial; 3] {
        [&self.x, &self.y, &self.z]
    }

    pub fn term_count(&self) -> usize {
        self.x.len() + self.y.len() + self.z.len()
    }

    pub fn evaluate_with(&self, value: impl Fn(BinaryVar) -> bool + Copy) -> Vec3 {
        [self.x.evaluate_with(value), self.y.evaluate_with(value), self.z.evaluate_with(value)]
    }

    /// `M · (x, y, z, 1)` followed by pruning of each component.
    fn transformed(&self, mat: &SymbolicMat, threshold: f64) -> SymbolicCoordinate {
        let comps = self.components();
        let row = |r: usize| {
            let mut acc = mat[r][3].clone();
            for (c, comp) in comps.iter().enumerate() {
                acc.add_scaled(&mat[r][c].mul(comp), 1.0);
            }
            acc.prune(threshold)
        };
        SymbolicCoordinate { x: row(0), y: row(1), z: row(2) }
    }
}

fn check_threshold(t: f64) -> Result<(), HuboError> {
    if (0.0..1.0).contains(&t) {
        Ok(())
    } else {
        Err(HuboError::InvalidThreshold(t))
    }
}

struct TorsionMats {
    forward: Vec<SymbolicMat>,
    backward: Vec<SymbolicMat>,
}

impl TorsionMats {
    fn new(g: &TorsionGraph, m: &Molecule, table: &AngleTable) -> Result<Self, HuboError> {
        let build = |dir| -> Result<Vec<SymbolicMat>, HuboError> {
            g.torsions.iter().map(|t| symbolic_rotation(t, table, m, dir)).collect()
        };
        Ok(Self { forward: build(Direction::AwayFromRoot)?, backward: build(Direction::TowardRoot)? })
    }

    fn get(&self, step: &ChainStep) -> &SymbolicMat {
        match step.direction {
            Direction::AwayFromRoot => &self.forward[step.torsion - 1],
            Direction::TowardRoot => &self.backward[step.torsion - 1],
        }
    }

    /// Position of `v0` after the chain, innermost (last) rotation first,
    /// pruning after every step.
    fn apply_chain(&self, chain: &[ChainStep], v0: Vec3, threshold: f64) -> SymbolicCoordinate {
        chain.iter().rev().fold(SymbolicCoordinate::fixed(v0), |acc, step| acc.transformed(self.get(step), threshold))
    }
}

/// Symbolic coordinates of `atom_subset` in the frame where the root fragment
/// is fixed.
pub fn symbolic_coordinates(
    g: &TorsionGraph,
    m: &Molecule,
    table: &AngleTable,
    atom_subset: &BTreeSet<usize>,
    prune_threshold: f64,
) -> Result<BTreeMap<usize, SymbolicCoordinate>, HuboError> {
    check_threshold(prune_threshold)?;
    let mats = TorsionMats::new(g, m, table)?;
    let root = g.root_fragment();
    Ok(atom_subset
        .iter()
        .map(|&a| {
            let chain = g.fragment_path(root, g.fragment_of(a));
            (a, mats.apply_chain(&chain, m.position(a), prune_threshold))
        })
        .collect())
}

/// Symbolic coordinates of atoms in the frames pinned by other fragments,
/// keyed by `(anchor fragment, atom)`. For an eligible pair `(u, v)` the
/// entry `(fragment(u), v)` places `v` relative to a fixed `u`.
#[derive(Debug, Clone, Default)]
pub struct SymbolicFrames {
    coords: BTreeMap<(usize, usize), SymbolicCoordinate>,
}

impl SymbolicFrames {
    pub fn build(
        g: &TorsionGraph,
        m: &Molecule,
        table: &AngleTable,
        atom_subset: &BTreeSet<usize>,
        prune_threshold: f64,
    ) -> Result<Self, HuboError> {
        check_threshold(prune_threshold)?;
        let mats = TorsionMats::new(g, m, table)?;
        let keys: BTreeSet<(usize, usize)> =
            g.eligible_pairs(atom_subset).map(|(u, v, _)| (g.fragment_of(u), v)).collect();
        let coords = keys
            .into_par_iter()
            .map(|(anchor, v)| {
                let chain = g.fragment_path(anchor, g.fragment_of(v));
                ((anchor, v), mats.apply_chain(&chain, m.position(v), prune_threshold))
            })
            .collect::<Vec<_>>()
            .into_iter()
            .collect();
        Ok(Self { coords })
    }

    pub fn get(&self, anchor_fragment: usize, atom: usize) -> Option<&SymbolicCoordinate> {
        self.coords.get(&(anchor_fragment, atom))
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn term_count(&self) -> usize {
        self.coords.values().map(SymbolicCoordinate::term_count).sum()
    }
}

/// `Σ ||u0 - v(x)||²` over eligible pairs in `atom_subset`, with `u` fixed at
/// its original position and `v` taken from its frame relative to `u`.
/// Products of two angles of one torsion are dropped while squaring: they
/// vanish on every one-hot assignment and would otherwise dominate the
/// term count. The result equals the sum of `square_one_hot` of the
/// coordinate differences.
pub fn build_distance_constraint(
    frames: &SymbolicFrames,
    g: &TorsionGraph,
    m: &Molecule,
    atom_subset: &BTreeSet<usize>,
) -> BinaryPolynomial {
    let pairs: Vec<(usize, usize)> = g.eligible_pairs(atom_subset).map(|(u, v, _)| (u, v)).collect();
    let parts: Vec<BinaryPolynomial> = pairs
        .par_iter()
        .map(|&(u, v)| {
            let coord = frames.get(g.fragment_of(u), v).expect("frames cover every eligible pair of the subset");
            squared_distance(m.position(u), coord)
        })
        .collect();
    let mut total = BinaryPolynomial::zero();
    for p in &parts {
        total.add_scaled(p, 1.0);
    }
    total
}

/// Dense table over the states of a few torsions, each either unset (digit
/// 0) or set to angle `k` (digit `k`).
///
/// Per torsion, the span of `{1, x_1, .., x_d}` under `x_k x_l = 0` (k != l)
/// is isomorphic to pointwise arithmetic on its `d + 1` states, so products
/// reduce to pointwise products after [`into_values`](Self::into_values).
const ROUNDOFF_FACTOR: f64 = 16.0;

struct OneHotGrid {
    torsions: Vec<usize>,
    base: usize,
    cells: Vec<f64>,
}

impl OneHotGrid {
    fn new(torsions: Vec<usize>, d: usize) -> Self {
        let size = (d + 1).pow(torsions.len() as u32);
        Self { torsions, base: d + 1, cells: vec![0.0; size] }
    }

    fn from_poly(p: &BinaryPolynomial, torsions: &[usize], d: usize) -> Self {
        let mut grid = Self::new(torsions.to_vec(), d);
        grid.cells[0] = p.constant_term();
        for (mono, c) in p.terms() {
            let mut index = 0;
            for v in mono.iter() {
                let (i, k) = v.one_hot_parts().expect("coordinates use one-hot variables only");
                let pos = grid.torsions.binary_search(&i).expect("torsion listed");
                index += k * grid.base.pow(pos as u32);
            }
            grid.cells[index] += c;
        }
        grid
    }

    /// Along each torsion: `value[k] = coef[0] + coef[k]` (or the inverse).
    fn transform(&mut self, inverse: bool) {
        let sign = if inverse { -1.0 } else { 1.0 };
        let mut stride = 1;
        for _ in 0..self.torsions.len() {
            let block = stride * self.base;
            for start in (0..self.cells.len()).step_by(block) {
                for offset in 0..stride {
                    let zero = self.cells[start + offset];
                    for k in 1..self.base {
                        self.cells[start + k * stride + offset] += sign * zero;
                    }
                }
            }
            stride = block;
        }
    }

    fn into_values(mut self) -> Self {
        self.transform(false);
        self
    }

    /// Coefficients below the roundoff of the inverse transform are dropped;
    /// they stand for products that cancel exactly.
    fn into_poly(mut self) -> BinaryPolynomial {
        let scale = self.cells.iter().fold(0.0f64, |a, c| a.max(c.abs()));
        let noise = ROUNDOFF_FACTOR * f64::EPSILON * scale * (1 << self.torsions.len()) as f64;
        self.transform(true);
        let mut out = BinaryPolynomial::constant(self.cells[0]);
        for (index, &c) in self.cells.iter().enumerate().skip(1) {
            if c.abs() <= noise {
                continue;
            }
            let mut rest = index;
            let mut mono = Monomial::new();
            for &i in &self.torsions {
                let k = rest % self.base;
                rest /= self.base;
                if k > 0 {
                    mono.push(BinaryVar::one_hot(i, k));
                }
            }
            out.add_monomial(mono, c);
        }
        out
    }
}

/// `||u0 - v(x)||²` with one-hot reduction, computed pointwise on the
/// states of the torsions that `v` depends on.
fn squared_distance(u0: Vec3, v: &SymbolicCoordinate) -> BinaryPolynomial {
    let mut torsions = BTreeSet::new();
    let mut d = 0;
    for comp in v.components() {
        for var in comp.variables() {
            let (i, k) = var.one_hot_parts().expect("coordinates use one-hot variables only");
            torsions.insert(i);
            d = d.max(k);
        }
    }
    let torsions: Vec<usize> = torsions.into_iter().collect();
    let values: Vec<OneHotGrid> =
        v.components().into_iter().map(|comp| OneHotGrid::from_poly(comp, &torsions, d).into_values()).collect();
    let mut out = OneHotGrid::new(torsions, d);
    for (k, grid) in values.iter().enumerate() {
        for (cell, &value) in out.cells.iter_mut().zip(&grid.cells) {
            *cell += (u0[k] - value).powi(2);
        }
    }
    out.into_poly()
}

/// Penalty weight: `factor` times the largest distance coefficient
/// magnitude, the constant term included. The constant is the objective at
/// the state with no angle selected anywhere, which sets the scale of what a
/// group with several angles switched on can gain.
pub fn default_a_const(dist: &BinaryPolynomial, factor: f64) -> f64 {
    let m = dist.max_abs_coefficient().max(dist.constant_term().abs());
    if m > 0.0 {
        factor * m
    } else {
        factor
    }
}

/// `a_const · hard - dist`, with the distance part pruned at
/// `final_threshold`. Monomials of the hard constraint are never pruned.
pub fn assemble_hubo(
    hard: &BinaryPolynomial,
    dist: &BinaryPolynomial,
    a_const: f64,
    final_threshold: f64,
) -> Result<BinaryPolynomial, HuboError> {
    check_threshold(final_threshold)?;
    let keep: FxHashSet<Monomial> = hard.terms().map(|(m, _)| m.clone()).collect();
    let mut out = dist.scaled(-1.0).prune_except(final_threshold, &keep);
    out.add_scaled(hard, a_const);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HuboParams {
    pub intermediate_threshold: f64,
    pub final_threshold: f64,
    pub a_const_factor: f64,
}

impl Default for HuboParams {
    fn default() -> Self {
        Self { intermediate_threshold: 0.5, final_threshold: 0.5, a_const_factor: 1.1 }
    }
}

/// The assembled objective and the intermediate pieces it came from.
#[derive(Debug, Clone)]
pub struct HuboModel {
    pub n: usize,
    pub d: usize,
    pub hard: BinaryPolynomial,
    pub distance: BinaryPolynomial,
    pub a_const: f64,
    pub poly: BinaryPolynomial,
    /// Terms of `a_const · hard - distance` before the final prune.
    pub terms_before_prune: usize,
    pub coordinate_terms: usize,
}

pub fn build_hubo(
    m: &Molecule,
    g: &TorsionGraph,
    table: &AngleTable,
    atom_subset: &BTreeSet<usize>,
    params: &HuboParams,
) -> Result<HuboModel, HuboError> {
    let hard = build_hard_constraint(g.n(), table.d());
    let frames = SymbolicFrames::build(g, m, table, atom_subset, params.intermediate_threshold)?;
    let distance = build_distance_constraint(&frames, g, m, atom_subset);
    let a_const = default_a_const(&distance, params.a_const_factor);
    let terms_before_prune = assemble_hubo(&hard, &distance, a_const, 0.0)?.len();
    let poly = assemble_hubo(&hard, &distance, a_const, params.final_threshold)?;
    Ok(HuboModel {
        n: g.n(),
        d: table.d(),
        hard,
        distance,
        a_const,
        poly,
        terms_before_prune,
        coordinate_terms: frames.term_count(),
    })
}
