//! End-to-end runs: configuration, the phase-by-phase pipeline, threshold
//! sweeps and report output.

mod report;
mod sweep;

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::baseline::{greedy_unfold, GreedyTrace};
use crate::geometry::{objective_volume, TorsionAssignment, VolumeEvaluator};
use crate::hubo::{build_hubo, make_angle_table, AngleTable, BinaryPolynomial, HuboParams};
use crate::molio::{
    build_torsion_graph, find_rotatable_bonds, parse_mol, parse_mol2, select_median_atoms, strip_terminal_hydrogens,
    Molecule, TorsionGraph,
};
use crate::quadratize::{to_qubo, DenseQubo};
use crate::solver::{select_best, simulated_anneal, AnnealParams, SampleSet};

pub use report::{MethodResult, PhaseTimings, RunReport};
pub use sweep::{sweep_csv, sweep_seed, threshold_sweep, SweepRow, SWEEP_CSV_HEADER};

/// Largest grid scanned by the exhaustive geometric search.
pub const MAX_GRID_POINTS: u128 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Mode {
    QuantumPipeline,
    GreedyBaseline,
    Both,
    BruteForce,
}

impl Mode {
    fn runs_sampler(self) -> bool {
        matches!(self, Mode::QuantumPipeline | Mode::Both)
    }

    fn runs_greedy(self) -> bool {
        matches!(self, Mode::GreedyBaseline | Mode::Both)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnealConfig {
    pub sweeps: usize,
    pub reads: usize,
    pub seed: u64,
    /// `(beta_start, beta_end)`; derived from the QUBO coefficients when unset.
    pub beta_range: Option<(f64, f64)>,
}

impl Default for AnnealConfig {
    fn default() -> Self {
        Self { sweeps: 1000, reads: 100, seed: 0, beta_range: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub input: PathBuf,
    pub d: usize,
    pub intermediate_threshold: f64,
    pub final_threshold: f64,
    pub a_const_factor: f64,
    pub anneal: AnnealConfig,
    pub top_k: usize,
    pub mode: Mode,
    /// Greedy sweeps; one per torsion when unset.
    pub greedy_passes: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            input: PathBuf::new(),
            d: 8,
            intermediate_threshold: 0.5,
            final_threshold: 0.5,
            a_const_factor: 1.1,
            anneal: AnnealConfig::default(),
            top_k: 10,
            mode: Mode::QuantumPipeline,
            greedy_passes: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |msg: String| Err(PipelineError::new(Phase::Config, msg));
        for (name, t) in
            [("intermediate_threshold", self.intermediate_threshold), ("final_threshold", self.final_threshold)]
        {
            if !(0.0..1.0).contains(&t) {
                return bad(format!("{name} = {t} outside [0, 1)"));
            }
        }
        if self.d < 2 {
            return bad(format!("d = {} but at least 2 angles are needed", self.d));
        }
        if self.top_k == 0 {
            return bad("top_k must be at least 1".into());
        }
        if self.anneal.sweeps == 0 || self.anneal.reads == 0 {
            return bad("sweeps and reads must be at least 1".into());
        }
        if self.a_const_factor.is_nan() || self.a_const_factor <= 0.0 {
            return bad(format!("a_const_factor = {} must be positive", self.a_const_factor));
        }
        Ok(())
    }

    fn hubo_params(&self) -> HuboParams {
        HuboParams {
            intermediate_threshold: self.intermediate_threshold,
            final_threshold: self.final_threshold,
            a_const_factor: self.a_const_factor,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Config,
    Parse,
    Hubo,
    Quadratize,
    Sample,
    Baseline,
    BruteForce,
    Output,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default();
        f.write_str(&s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, thiserror::Error)]
#[error("{phase}: {message}")]
pub struct PipelineError {
    pub phase: Phase,
    pub message: String,
}

impl PipelineError {
    pub fn new(phase: Phase, message: impl Into<String>) -> Self {
        Self { phase, message: message.into() }
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": { "phase": self.phase, "message": self.message } }).to_string()
    }
}

fn at<E: fmt::Display>(phase: Phase) -> impl Fn(E) -> PipelineError {
    move |e| PipelineError::new(phase, e.to_string())
}

/// Reads a molecule, choosing the format from the extension or, failing
/// that, from the presence of TRIPOS record markers.
pub fn read_molecule(path: &Path) -> Result<Molecule, PipelineError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| PipelineError::new(Phase::Parse, format!("{}: {e}", path.display())))?;
    let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
    let is_mol2 = match ext.as_deref() {
        Some("mol2") => true,
        Some("mol") | Some("sdf") => false,
        _ => text.contains("@<TRIPOS>"),
    };
    let parsed = if is_mol2 { parse_mol2(&text) } else { parse_mol(&text) };
    parsed.map_err(at(Phase::Parse))
}

/// Heavy-atom molecule with its torsion structure; shared by every run of a
/// sweep.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub molecule: Molecule,
    pub original_ids: Vec<usize>,
    pub graph: TorsionGraph,
    pub median_atoms: BTreeSet<usize>,
    pub parse_seconds: f64,
}

pub fn prepare(molecule: &Molecule) -> Result<Prepared, PipelineError> {
    let start = Instant::now();
    let (stripped, original_ids) = strip_terminal_hydrogens(molecule);
    if !stripped.is_connected() {
        return Err(PipelineError::new(Phase::Parse, "bond graph is not connected after removing hydrogens"));
    }
    let torsions = find_rotatable_bonds(&stripped);
    let graph = build_torsion_graph(&stripped, &torsions);
    let median_atoms = select_median_atoms(&graph, &stripped);
    Ok(Prepared { molecule: stripped, original_ids, graph, median_atoms, parse_seconds: start.elapsed().as_secs_f64() })
}

pub fn prepare_file(path: &Path) -> Result<Prepared, PipelineError> {
    let start = Instant::now();
    let molecule = read_molecule(path)?;
    let mut prepared = prepare(&molecule)?;
    prepared.parse_seconds = start.elapsed().as_secs_f64();
    Ok(prepared)
}

/// Artifacts of a run that are too large for the report itself.
#[derive(Debug, Clone, Default)]
pub struct RunArtifacts {
    pub hubo: Option<BinaryPolynomial>,
    pub qubo: Option<DenseQubo>,
    pub samples: Option<SampleSet>,
    pub greedy_trace: Option<GreedyTrace>,
}

pub fn run_pipeline(cfg: &RunConfig) -> Result<RunReport, PipelineError> {
    cfg.validate()?;
    let prepared = prepare_file(&cfg.input)?;
    run_prepared(cfg, &prepared).map(|(report, _)| report)
}

/// Every phase after parsing, in order.
pub fn run_prepared(cfg: &RunConfig, p: &Prepared) -> Result<(RunReport, RunArtifacts), PipelineError> {
    match run_prepared_partial(cfg, p) {
        (report, artifacts, None) => Ok((report, artifacts)),
        (_, _, Some(e)) => Err(e),
    }
}

/// Like [`run_prepared`], but a failing phase still returns the report
/// filled in by the phases before it.
pub fn run_prepared_partial(cfg: &RunConfig, p: &Prepared) -> (RunReport, RunArtifacts, Option<PipelineError>) {
    let mut report = RunReport::new(cfg, p);
    let mut artifacts = RunArtifacts::default();
    let error = run_phases(cfg, p, &mut report, &mut artifacts).err();
    (report, artifacts, error)
}

fn run_phases(
    cfg: &RunConfig,
    p: &Prepared,
    report: &mut RunReport,
    artifacts: &mut RunArtifacts,
) -> Result<(), PipelineError> {
    cfg.validate()?;
    let (m, g) = (&p.molecule, &p.graph);
    let table = make_angle_table(cfg.d).map_err(at(Phase::Config))?;
    log::info!("{}: {} heavy atoms, {} torsions, {} median atoms", m.name, m.atom_count(), g.n(), p.median_atoms.len());

    if cfg.mode.runs_sampler() {
        let start = Instant::now();
        let model = build_hubo(m, g, &table, &p.median_atoms, &cfg.hubo_params()).map_err(at(Phase::Hubo))?;
        report.timings.hubo = start.elapsed().as_secs_f64();
        report.hubo_terms_before_prune = Some(model.terms_before_prune);
        report.hubo_terms = Some(model.poly.len());
        report.hubo_degree = Some(model.poly.degree());
        report.a_const = Some(model.a_const);
        log::info!(
            "objective: {} terms ({} before pruning), degree {}",
            model.poly.len(),
            model.terms_before_prune,
            model.poly.degree()
        );

        let start = Instant::now();
        let qubo = to_qubo(&model.poly);
        let dense = qubo.to_dense();
        report.timings.quadratize = start.elapsed().as_secs_f64();
        report.qubo_terms = Some(qubo.poly.len());
        report.qubo_vars = Some(qubo.num_vars());
        report.aux_vars = Some(qubo.aux_defs.len());
        log::info!(
            "qubo: {} variables ({} auxiliary), {} terms",
            qubo.num_vars(),
            qubo.aux_defs.len(),
            qubo.poly.len()
        );

        let start = Instant::now();
        let a = &cfg.anneal;
        let params = match a.beta_range {
            Some((beta_start, beta_end)) => {
                AnnealParams { sweeps: a.sweeps, reads: a.reads, beta_start, beta_end, seed: a.seed }
            }
            None => AnnealParams::auto(&dense, a.sweeps, a.reads, a.seed),
        };
        let samples = simulated_anneal(&qubo, &params).map_err(at(Phase::Sample))?;
        report.feasible_samples = Some(samples.feasible_count());
        let best = select_best(&samples, cfg.top_k, m, g, &table).map_err(at(Phase::Sample))?;
        report.timings.sample = start.elapsed().as_secs_f64();
        report.best_energy = Some(best.energy);
        report.methods.push(MethodResult::new(
            Mode::QuantumPipeline,
            &best.theta,
            &table,
            best.volume_initial,
            best.volume_final,
        ));
        artifacts.hubo = Some(model.poly);
        artifacts.qubo = Some(dense);
        artifacts.samples = Some(samples);
    }

    if cfg.mode.runs_greedy() {
        let start = Instant::now();
        let passes = cfg.greedy_passes.unwrap_or(g.n()).max(1);
        let (theta, trace) = greedy_unfold(m, g, &table, passes).map_err(at(Phase::Baseline))?;
        report.timings.baseline = start.elapsed().as_secs_f64();
        let last = trace.steps.last().map_or(trace.initial, |s| s.objective);
        report.methods.push(MethodResult::new(Mode::GreedyBaseline, &theta, &table, trace.initial, last));
        artifacts.greedy_trace = Some(trace);
    }

    if cfg.mode == Mode::BruteForce {
        let start = Instant::now();
        let (theta, initial, best) = grid_search(m, g, &table).map_err(at(Phase::BruteForce))?;
        report.timings.brute_force = start.elapsed().as_secs_f64();
        report.methods.push(MethodResult::new(Mode::BruteForce, &theta, &table, initial, best));
    }

    Ok(())
}

/// Exhaustive search of the full `d^n` grid on all atoms; first maximum in
/// lexicographic order. Returns the optimum with the folded and optimal
/// objectives.
pub fn grid_search(
    m: &Molecule,
    g: &TorsionGraph,
    table: &AngleTable,
) -> Result<(TorsionAssignment, f64, f64), String> {
    let points = (table.d() as u128).checked_pow(g.n() as u32).unwrap_or(u128::MAX);
    if points > MAX_GRID_POINTS {
        return Err(format!("{points} grid points exceed the limit of {MAX_GRID_POINTS}"));
    }
    let atoms = m.all_atom_ids();
    let evaluator = VolumeEvaluator::new(g, &atoms);
    let mut best: Option<(TorsionAssignment, f64)> = None;
    for theta in TorsionAssignment::enumerate(g.n(), table.d()) {
        let v = evaluator.evaluate(m, g, &theta, table).map_err(|e| e.to_string())?;
        if best.as_ref().is_none_or(|b| v > b.1) {
            best = Some((theta, v));
        }
    }
    let (theta, _) = best.expect("grid has at least one point");
    let initial = objective_volume(m, g, &TorsionAssignment::folded(g.n(), table.d()), table, &atoms)
        .map_err(|e| e.to_string())?;
    let value = objective_volume(m, g, &theta, table, &atoms).map_err(|e| e.to_string())?;
    Ok((theta, initial, value))
}
