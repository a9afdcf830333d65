use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use unfolder::cli::{
    prepare_file, run_prepared, sweep_csv, threshold_sweep, AnnealConfig, Mode, Phase, PipelineError, RunConfig,
};

/// Unfold a ligand by choosing discrete torsion angles that maximize the sum
/// of squared inter-fragment atom distances.
#[derive(Debug, Parser)]
#[command(version, about)]
struct Args {
    /// Molecule file (.mol2 or .mol).
    #[arg(long)]
    input: PathBuf,
    /// Discrete angles per torsion.
    #[arg(long, default_value_t = 8)]
    d: usize,
    /// Relative cutoff for the final prune of the objective.
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    /// Relative cutoff applied while building symbolic coordinates.
    #[arg(long, default_value_t = 0.5)]
    intermediate_threshold: f64,
    /// Penalty weight as a multiple of the largest distance coefficient.
    #[arg(long, default_value_t = 1.1)]
    a_const_factor: f64,
    #[arg(long, value_enum, default_value_t = Mode::QuantumPipeline)]
    mode: Mode,
    /// Low-energy feasible samples rescored on the full molecule.
    #[arg(long, default_value_t = 10)]
    top_k: usize,
    #[arg(long, env = "UNFOLDER_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    sweeps: usize,
    #[arg(long, default_value_t = 100)]
    reads: usize,
    /// Greedy baseline passes; one per torsion by default.
    #[arg(long)]
    greedy_passes: Option<usize>,
    /// Directory for report.json and run artifacts.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the QUBO in `i j coeff` text form.
    #[arg(long)]
    export_qubo: Option<PathBuf>,
    /// Comma-separated thresholds; runs one pipeline per value.
    #[arg(long, value_delimiter = ',')]
    sweep: Option<Vec<f64>>,
    /// Concurrent sweep entries.
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

impl Args {
    fn config(&self) -> RunConfig {
        RunConfig {
            input: self.input.clone(),
            d: self.d,
            intermediate_threshold: self.intermediate_threshold,
            final_threshold: self.threshold,
            a_const_factor: self.a_const_factor,
            anneal: AnnealConfig { sweeps: self.sweeps, reads: self.reads, seed: self.seed, beta_range: None },
            top_k: self.top_k,
            mode: self.mode,
            greedy_passes: self.greedy_passes,
        }
    }
}

fn write(path: &std::path::Path, contents: &str) -> Result<(), PipelineError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| PipelineError::new(Phase::Output, e.to_string()))?;
    }
    fs::write(path, contents).map_err(|e| PipelineError::new(Phase::Output, format!("{}: {e}", path.display())))
}

fn run(args: &Args) -> Result<(), PipelineError> {
    let cfg = args.config();
    cfg.validate()?;
    let prepared = prepare_file(&cfg.input)?;

    if let Some(thresholds) = &args.sweep {
        let rows = threshold_sweep(&cfg, &prepared, thresholds, args.workers)?;
        let csv = sweep_csv(&rows).map_err(|e| PipelineError::new(Phase::Output, e.to_string()))?;
        print!("{csv}");
        if let Some(dir) = &args.out {
            write(&dir.join("sweep.csv"), &csv)?;
            let json =
                serde_json::to_string_pretty(&rows).map_err(|e| PipelineError::new(Phase::Output, e.to_string()))?;
            write(&dir.join("sweep.json"), &json)?;
        }
        return Ok(());
    }

    let (report, artifacts) = run_prepared(&cfg, &prepared)?;
    print!("{}", report.to_table());
    if let Some(dir) = &args.out {
        report.write_outputs(dir, &artifacts)?;
    }
    if let Some(path) = &args.export_qubo {
        let qubo =
            artifacts.qubo.as_ref().ok_or_else(|| PipelineError::new(Phase::Output, "mode does not build a QUBO"))?;
        write(path, &qubo.to_text())?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(1)
        }
    }
}
