use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::anneal::SampleSet;
use super::SolverError;
use crate::geometry::{objective_volume, volume_gain_percent, TorsionAssignment};
use crate::hubo::{AngleTable, Assignment, BinaryVar};
use crate::molio::{Molecule, TorsionGraph};

/// Every torsion group present in `assignment` has exactly one variable set.
pub fn one_hot_feasible(assignment: &Assignment) -> bool {
    let mut ones: BTreeMap<usize, usize> = BTreeMap::new();
    for (v, &b) in assignment {
        if let Some((i, _)) = v.one_hot_parts() {
            *ones.entry(i).or_default() += b as usize;
        }
    }
    ones.values().all(|&c| c == 1)
}

/// Angle indices from a one-hot assignment over `n` torsions and `d`
/// angles. Violating groups are reported, never repaired.
pub fn decode(assignment: &Assignment, n: usize, d: usize) -> Result<TorsionAssignment, SolverError> {
    let mut angle_index = Vec::with_capacity(n);
    let mut bad = Vec::new();
    for i in 1..=n {
        let mut chosen = Vec::new();
        for k in 1..=d {
            let v = BinaryVar::one_hot(i, k);
            match assignment.get(&v) {
                Some(true) => chosen.push(k),
                Some(false) => {}
                None => return Err(SolverError::Unbound(v)),
            }
        }
        if chosen.len() == 1 {
            angle_index.push(chosen[0]);
        } else {
            bad.push(i);
        }
    }
    if !bad.is_empty() {
        return Err(SolverError::Infeasible(bad));
    }
    Ok(TorsionAssignment::new(angle_index, d)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnfoldResult {
    pub theta: TorsionAssignment,
    /// Objective over all atoms at the folded state, Å².
    pub volume_initial: f64,
    pub volume_final: f64,
    pub gain_percent: f64,
    pub energy: f64,
    pub feasible_count: usize,
}

/// Rescores the `k` lowest-energy distinct feasible conformations on the
/// full atom set and returns the one with the largest objective; among equal
/// objectives the lower-energy sample wins.
pub fn select_best(
    samples: &SampleSet,
    k: usize,
    m: &Molecule,
    g: &TorsionGraph,
    table: &AngleTable,
) -> Result<UnfoldResult, SolverError> {
    if k == 0 {
        return Err(SolverError::InvalidParams("top-k needs k >= 1".into()));
    }
    let all_atoms = m.all_atom_ids();
    let volume_initial = objective_volume(m, g, &TorsionAssignment::folded(g.n(), table.d()), table, &all_atoms)?;
    let mut seen = BTreeSet::new();
    let mut best: Option<(TorsionAssignment, f64, f64)> = None;
    for s in samples.samples.iter().filter(|s| s.feasible) {
        if seen.len() == k {
            break;
        }
        let assignment: Assignment = samples.variables.iter().copied().zip(s.bits.iter().copied()).collect();
        let theta = decode(&assignment, g.n(), table.d())?;
        if !seen.insert(theta.angle_index.clone()) {
            continue;
        }
        let volume = objective_volume(m, g, &theta, table, &all_atoms)?;
        if best.as_ref().is_none_or(|b| volume > b.1) {
            best = Some((theta, volume, s.energy));
        }
    }
    let (theta, volume_final, energy) = best.ok_or(SolverError::NoFeasibleSample(samples.len()))?;
    Ok(UnfoldResult {
        gain_percent: gain_or_zero(volume_initial, volume_final)?,
        theta,
        volume_initial,
        volume_final,
        energy,
        feasible_count: samples.feasible_count(),
    })
}

/// Percent gain; a molecule without eligible pairs has zero gain.
pub(crate) fn gain_or_zero(initial: f64, final_: f64) -> Result<f64, SolverError> {
    if initial == 0.0 && final_ == 0.0 {
        return Ok(0.0);
    }
    Ok(volume_gain_percent(initial, final_)?)
}
