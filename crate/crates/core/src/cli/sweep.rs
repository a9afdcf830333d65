use rayon::prelude::*;
use serde::Serialize;

use super::{run_prepared_partial, Phase, PipelineError, Prepared, RunConfig, RunReport};

pub const SWEEP_CSV_HEADER: &str = "threshold,gain_percent,hubo_terms,construction_seconds";

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub threshold: f64,
    /// Filled in as far as the run got; complete when `error` is `None`.
    pub report: RunReport,
    pub error: Option<PipelineError>,
}

impl SweepRow {
    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }

    /// Gain of a completed run.
    pub fn gain(&self) -> Option<f64> {
        self.error.is_none().then(|| self.report.primary_gain()).flatten()
    }
}

/// Seed for the `index`-th sweep entry; entry 0 keeps the base seed.
pub fn sweep_seed(base: u64, index: usize) -> u64 {
    base.wrapping_add((index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// One full run per threshold, used for both the intermediate and the final
/// prune. Rows come back in ascending threshold order; a failing entry is
/// recorded in its row and does not stop the others.
pub fn threshold_sweep(
    cfg: &RunConfig,
    prepared: &Prepared,
    thresholds: &[f64],
    workers: usize,
) -> Result<Vec<SweepRow>, PipelineError> {
    if thresholds.is_empty() {
        return Err(PipelineError::new(Phase::Config, "threshold list is empty"));
    }
    if let Some(t) = thresholds.iter().find(|t| !(0.0..1.0).contains(*t)) {
        return Err(PipelineError::new(Phase::Config, format!("threshold {t} outside [0, 1)")));
    }
    let mut sorted = thresholds.to_vec();
    sorted.sort_by(f64::total_cmp);
    let run_one = |(i, &t): (usize, &f64)| {
        let mut c = cfg.clone();
        c.intermediate_threshold = t;
        c.final_threshold = t;
        c.anneal.seed = sweep_seed(cfg.anneal.seed, i);
        let (report, _, error) = run_prepared_partial(&c, prepared);
        if let Some(e) = &error {
            log::warn!("threshold {t}: {e}");
        }
        SweepRow { threshold: t, report, error }
    };
    if workers <= 1 {
        return Ok(sorted.iter().enumerate().map(run_one).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| PipelineError::new(Phase::Config, e.to_string()))?;
    Ok(pool.install(|| sorted.par_iter().enumerate().map(run_one).collect()))
}

/// CSV with [`SWEEP_CSV_HEADER`]. A failed entry leaves the gain empty and
/// keeps whatever the phases before the failure measured.
pub fn sweep_csv(rows: &[SweepRow]) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SWEEP_CSV_HEADER.split(','))?;
    for row in rows {
        let r = &row.report;
        let built = r.hubo_terms.is_some();
        w.write_record([
            row.threshold.to_string(),
            row.gain().map_or(String::new(), |g| g.to_string()),
            r.hubo_terms.map_or(String::new(), |n| n.to_string()),
            if built { r.construction_seconds().to_string() } else { String::new() },
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
