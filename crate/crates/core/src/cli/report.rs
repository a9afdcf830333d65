use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Mode, Phase, PipelineError, Prepared, RunArtifacts, RunConfig};
use crate::geometry::TorsionAssignment;
use crate::hubo::AngleTable;
use crate::solver::gain_or_zero;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimings {
    pub parse: f64,
    pub hubo: f64,
    pub quadratize: f64,
    pub sample: f64,
    pub baseline: f64,
    pub brute_force: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: Mode,
    /// 1-based angle index per torsion.
    pub theta: Vec<usize>,
    pub theta_degrees: Vec<f64>,
    pub volume_initial: f64,
    pub volume_final: f64,
    pub gain_percent: f64,
}

impl MethodResult {
    pub fn new(method: Mode, theta: &TorsionAssignment, table: &AngleTable, initial: f64, final_: f64) -> Self {
        Self {
            method,
            theta: theta.angle_index.clone(),
            theta_degrees: theta.degrees(table),
            volume_initial: initial,
            volume_final: final_,
            gain_percent: gain_or_zero(initial, final_).unwrap_or(f64::NAN),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: RunConfig,
    pub molecule: String,
    pub n_torsions: usize,
    /// Heavy atoms after hydrogen removal.
    pub atom_count: usize,
    pub median_atom_count: usize,
    pub hubo_terms_before_prune: Option<usize>,
    pub hubo_terms: Option<usize>,
    pub hubo_degree: Option<usize>,
    pub a_const: Option<f64>,
    pub qubo_terms: Option<usize>,
    pub qubo_vars: Option<usize>,
    pub aux_vars: Option<usize>,
    pub feasible_samples: Option<usize>,
    pub best_energy: Option<f64>,
    pub timings: PhaseTimings,
    pub methods: Vec<MethodResult>,
}

impl RunReport {
    pub(super) fn new(cfg: &RunConfig, p: &Prepared) -> Self {
        Self {
            config: cfg.clone(),
            molecule: p.molecule.name.clone(),
            n_torsions: p.graph.n(),
            atom_count: p.molecule.atom_count(),
            median_atom_count: p.median_atoms.len(),
            hubo_terms_before_prune: None,
            hubo_terms: None,
            hubo_degree: None,
            a_const: None,
            qubo_terms: None,
            qubo_vars: None,
            aux_vars: None,
            feasible_samples: None,
            best_energy: None,
            timings: PhaseTimings { parse: p.parse_seconds, ..Default::default() },
            methods: Vec::new(),
        }
    }

    pub fn method(&self, mode: Mode) -> Option<&MethodResult> {
        self.methods.iter().find(|r| r.method == mode)
    }

    /// Gain of the sampled solution when present, otherwise of the first
    /// method run.
    pub fn primary_gain(&self) -> Option<f64> {
        self.method(Mode::QuantumPipeline).or(self.methods.first()).map(|r| r.gain_percent)
    }

    /// Seconds spent building symbolic coordinates and the objective.
    pub fn construction_seconds(&self) -> f64 {
        self.timings.hubo
    }

    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let opt = |v: Option<usize>| v.map_or("-".to_string(), |v| v.to_string());
        let _ = writeln!(s, "molecule            {}", self.molecule);
        let _ = writeln!(s, "heavy atoms         {}", self.atom_count);
        let _ = writeln!(s, "torsions            {}", self.n_torsions);
        let _ = writeln!(s, "median atoms        {}", self.median_atom_count);
        let _ = writeln!(s, "angles per torsion  {}", self.config.d);
        let _ = writeln!(
            s,
            "thresholds          {} (intermediate), {} (final)",
            self.config.intermediate_threshold, self.config.final_threshold
        );
        let _ = writeln!(s, "hubo terms          {} -> {}", opt(self.hubo_terms_before_prune), opt(self.hubo_terms));
        let _ = writeln!(
            s,
            "qubo                {} vars ({} aux), {} terms",
            opt(self.qubo_vars),
            opt(self.aux_vars),
            opt(self.qubo_terms)
        );
        if let Some(f) = self.feasible_samples {
            let _ = writeln!(s, "feasible samples    {f} / {}", self.config.anneal.reads);
        }
        let t = &self.timings;
        let _ = writeln!(
            s,
            "seconds             parse {:.3}  hubo {:.3}  quadratize {:.3}  sample {:.3}  baseline {:.3}  brute force {:.3}",
            t.parse, t.hubo, t.quadratize, t.sample, t.baseline, t.brute_force
        );
        let _ = writeln!(s);
        let _ = writeln!(s, "{:<18} {:>12} {:>12} {:>9}  angles (deg)", "method", "D folded", "D final", "gain %");
        for r in &self.methods {
            let method =
                serde_json::to_value(r.method).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default();
            let degrees: Vec<String> = r.theta_degrees.iter().map(|a| format!("{a:.0}")).collect();
            let _ = writeln!(
                s,
                "{:<18} {:>12.3} {:>12.3} {:>9.3}  [{}]",
                method,
                r.volume_initial,
                r.volume_final,
                r.gain_percent,
                degrees.join(", ")
            );
        }
        s
    }

    /// Writes `report.json` plus whichever artifacts exist.
    pub fn write_outputs(&self, dir: &Path, artifacts: &RunArtifacts) -> Result<(), PipelineError> {
        let io = |e: std::io::Error| PipelineError::new(Phase::Output, format!("{}: {e}", dir.display()));
        fs::create_dir_all(dir).map_err(io)?;
        let json = serde_json::to_string_pretty(self).map_err(|e| PipelineError::new(Phase::Output, e.to_string()))?;
        fs::write(dir.join("report.json"), json).map_err(io)?;
        if let Some(h) = &artifacts.hubo {
            fs::write(dir.join("hubo.txt"), h.to_text()).map_err(io)?;
        }
        if let Some(q) = &artifacts.qubo {
            fs::write(dir.join("qubo.txt"), q.to_text()).map_err(io)?;
        }
        if let Some(samples) = &artifacts.samples {
            fs::write(dir.join("samples.jsonl"), samples.to_json_lines()).map_err(io)?;
        }
        if let Some(trace) = &artifacts.greedy_trace {
            let csv = trace.to_csv().map_err(|e| PipelineError::new(Phase::Output, e.to_string()))?;
            fs::write(dir.join("greedy_trace.csv"), csv).map_err(io)?;
        }
        Ok(())
    }
}
