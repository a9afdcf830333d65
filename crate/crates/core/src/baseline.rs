//! Greedy coordinate ascent over the discrete torsion grid, used as the
//! classical reference for the sampled solutions.

use serde::{Deserialize, Serialize};

use crate::geometry::{objective_volume, GeometryError, TorsionAssignment};
use crate::hubo::AngleTable;
use crate::molio::{Molecule, TorsionGraph};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreedyStep {
    pub torsion: usize,
    pub angle: usize,
    /// Objective after the step, Å².
    pub objective: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GreedyTrace {
    /// Objective at the folded start.
    pub initial: f64,
    pub steps: Vec<GreedyStep>,
    pub passes_run: usize,
}

impl GreedyTrace {
    pub fn is_monotone(&self) -> bool {
        let mut prev = self.initial;
        self.steps.iter().all(|s| {
            let ok = s.objective >= prev;
            prev = s.objective;
            ok
        })
    }

    /// CSV with columns `step,torsion,angle,objective`.
    pub fn to_csv(&self) -> Result<String, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["step", "torsion", "angle", "objective"])?;
        for (i, s) in self.steps.iter().enumerate() {
            w.write_record([(i + 1).to_string(), s.torsion.to_string(), s.angle.to_string(), s.objective.to_string()])?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Starting from all angles at zero, sets each torsion in turn to the angle
/// maximizing the full-molecule objective with the others held fixed (ties
/// to the lowest index). Stops after `passes` sweeps or the first sweep that
/// changes nothing.
pub fn greedy_unfold(
    m: &Molecule,
    g: &TorsionGraph,
    table: &AngleTable,
    passes: usize,
) -> Result<(TorsionAssignment, GreedyTrace), GeometryError> {
    let atoms = m.all_atom_ids();
    let mut theta = TorsionAssignment::folded(g.n(), table.d());
    let mut trace = GreedyTrace { initial: objective_volume(m, g, &theta, table, &atoms)?, ..Default::default() };
    if g.n() == 0 {
        return Ok((theta, trace));
    }
    let mut current = trace.initial;
    for _ in 0..passes.max(1) {
        trace.passes_run += 1;
        let mut changed = false;
        for i in 0..g.n() {
            let mut best = (theta.angle_index[i], current);
            for k in 1..=table.d() {
                if k == theta.angle_index[i] {
                    continue;
                }
                let mut candidate = theta.clone();
                candidate.angle_index[i] = k;
                let value = objective_volume(m, g, &candidate, table, &atoms)?;
                if value > best.1 || (value == best.1 && k < best.0) {
                    best = (k, value);
                }
            }
            if best.0 != theta.angle_index[i] {
                theta.angle_index[i] = best.0;
                changed = true;
            }
            current = best.1;
            trace.steps.push(GreedyStep { torsion: i + 1, angle: best.0, objective: current });
        }
        if !changed {
            break;
        }
    }
    Ok((theta, trace))
}
