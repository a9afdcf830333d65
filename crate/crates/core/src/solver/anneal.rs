use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::select::one_hot_feasible;
use super::SolverError;
use crate::hubo::BinaryVar;
use crate::quadratize::{project_solution, DenseQubo, QuboModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealParams {
    pub sweeps: usize,
    pub reads: usize,
    pub beta_start: f64,
    pub beta_end: f64,
    pub seed: u64,
}

impl AnnealParams {
    pub fn validate(&self) -> Result<(), SolverError> {
        if self.sweeps == 0 || self.reads == 0 {
            return Err(SolverError::InvalidParams("sweeps and reads must be at least 1".into()));
        }
        if !(self.beta_start > 0.0 && self.beta_start < self.beta_end && self.beta_end.is_finite()) {
            return Err(SolverError::InvalidParams(format!(
                "need 0 < beta_start < beta_end, got {} and {}",
                self.beta_start, self.beta_end
            )));
        }
        Ok(())
    }

    /// Inverse temperatures from the coefficient scale: the hot end accepts
    /// the largest single-flip uphill move with probability 1/2, the cold end
    /// accepts the smallest nonzero one with probability 1/100.
    pub fn auto(q: &DenseQubo, sweeps: usize, reads: usize, seed: u64) -> Self {
        let mut max_delta: f64 = 0.0;
        let mut min_coef = f64::INFINITY;
        for i in 0..q.num_vars {
            let mut delta = q.linear[i].abs();
            for &(_, c) in q.neighbors(i) {
                delta += c.abs();
            }
            max_delta = max_delta.max(delta);
        }
        for c in q.linear.iter().copied().chain(q.quadratic.iter().map(|t| t.2)) {
            if c != 0.0 {
                min_coef = min_coef.min(c.abs());
            }
        }
        let (beta_start, beta_end) = if max_delta > 0.0 && min_coef.is_finite() {
            let hot = 2f64.ln() / max_delta;
            let cold = 100f64.ln() / min_coef;
            (hot, cold.max(hot * 10.0))
        } else {
            (0.1, 1.0)
        };
        Self { sweeps, reads, beta_start, beta_end, seed }
    }

    fn beta(&self, sweep: usize) -> f64 {
        if self.sweeps == 1 {
            return self.beta_end;
        }
        let frac = sweep as f64 / (self.sweeps - 1) as f64;
        self.beta_start * (self.beta_end / self.beta_start).powf(frac)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    /// Values in dense variable order.
    pub bits: Vec<bool>,
    pub energy: f64,
    /// Every torsion group is one-hot.
    pub feasible: bool,
    /// Some auxiliary variable disagrees with its defining pair.
    pub penalty_violated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    /// Variable at each bit position.
    pub variables: Vec<BinaryVar>,
    /// Ascending energy; stable with respect to read order.
    pub samples: Vec<Sample>,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn feasible_count(&self) -> usize {
        self.samples.iter().filter(|s| s.feasible).count()
    }

    pub fn lowest(&self) -> Option<&Sample> {
        self.samples.first()
    }

    /// One JSON object per sample: bitstring, energy, feasibility.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for s in &self.samples {
            let bits: String = s.bits.iter().map(|&b| if b { '1' } else { '0' }).collect();
            let line = serde_json::json!({ "bits": bits, "energy": s.energy, "feasible": s.feasible });
            out.push_str(&line.to_string());
            out.push('\n');
        }
        out
    }
}

fn anneal_read(q: &DenseQubo, p: &AnnealParams, seed: u64) -> Vec<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = q.num_vars;
    let mut x: Vec<bool> = (0..n).map(|_| rng.random::<bool>()).collect();
    // field[i] = h_i + sum_j J_ij x_j; flipping i changes energy by
    // (1 - 2 x_i) * field[i].
    let mut field = q.linear.clone();
    for &(i, j, c) in &q.quadratic {
        if x[j] {
            field[i] += c;
        }
        if x[i] {
            field[j] += c;
        }
    }
    for sweep in 0..p.sweeps {
        let beta = p.beta(sweep);
        for i in 0..n {
            let delta = if x[i] { -field[i] } else { field[i] };
            let accept = delta <= 0.0 || rng.random::<f64>() < (-beta * delta).exp();
            if accept {
                x[i] = !x[i];
                let step = if x[i] { 1.0 } else { -1.0 };
                for &(j, c) in q.neighbors(i) {
                    field[j] += step * c;
                }
            }
        }
    }
    x
}

/// Final states of `reads` independent chains, read `r` seeded with
/// `seed + r`, in read order.
pub fn anneal_dense(q: &DenseQubo, p: &AnnealParams) -> Result<Vec<(Vec<bool>, f64)>, SolverError> {
    p.validate()?;
    Ok((0..p.reads as u64)
        .into_par_iter()
        .map(|r| {
            let bits = anneal_read(q, p, p.seed.wrapping_add(r));
            let energy = q.energy(&bits);
            (bits, energy)
        })
        .collect())
}

pub fn simulated_anneal(q: &QuboModel, p: &AnnealParams) -> Result<SampleSet, SolverError> {
    let dense = q.to_dense();
    let raw = anneal_dense(&dense, p)?;
    let variables = q.variables();
    let mut samples: Vec<Sample> = raw
        .into_iter()
        .map(|(bits, energy)| {
            let full = q.assignment_from_bits(&bits);
            let projection = project_solution(q, &full);
            Sample {
                feasible: one_hot_feasible(&projection.assignment),
                penalty_violated: projection.penalty_violated,
                bits,
                energy,
            }
        })
        .collect();
    samples.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    Ok(SampleSet { variables, samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hubo::BinaryPolynomial;
    use crate::quadratize::to_qubo;

    fn params(seed: u64) -> AnnealParams {
        AnnealParams { sweeps: 100, reads: 8, beta_start: 0.1, beta_end: 10.0, seed }
    }

    #[test]
    fn single_linear_term_goes_to_zero() {
        let p = BinaryPolynomial::from_terms(0.0, vec![(vec![BinaryVar::one_hot(1, 1)], 1.0)]);
        let set = simulated_anneal(&to_qubo(&p), &params(3)).unwrap();
        assert_eq!(set.len(), 8);
        for s in &set.samples {
            assert_eq!(s.bits, vec![false]);
            assert_eq!(s.energy, 0.0);
        }
    }

    #[test]
    fn same_seed_same_samples() {
        let x = |i| BinaryVar::one_hot(1, i);
        let p = BinaryPolynomial::from_terms(
            1.0,
            vec![(vec![x(1), x(2), x(3)], -3.0), (vec![x(1), x(4)], 2.0), (vec![x(2)], 0.5)],
        );
        let q = to_qubo(&p);
        let a = simulated_anneal(&q, &params(11)).unwrap();
        let b = simulated_anneal(&q, &params(11)).unwrap();
        assert_eq!(a, b);
        assert!(a.samples.windows(2).all(|w| w[0].energy <= w[1].energy));
    }

    #[test]
    fn rejects_bad_params() {
        let mut p = params(0);
        p.reads = 0;
        assert!(p.validate().is_err());
        let mut p = params(0);
        p.beta_start = 20.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn auto_betas_are_ordered() {
        let q = DenseQubo::new(2, 0.0, vec![1.0, -0.5], vec![(0, 1, 4.0)]);
        let p = AnnealParams::auto(&q, 10, 1, 0);
        p.validate().unwrap();
        assert!((p.beta_start - 2f64.ln() / 5.0).abs() < 1e-15);
        assert!((p.beta_end - 100f64.ln() / 0.5).abs() < 1e-15);
    }

    #[test]
    fn json_lines_have_one_row_per_sample() {
        let p = BinaryPolynomial::from_terms(0.0, vec![(vec![BinaryVar::one_hot(1, 1)], -1.0)]);
        let set = simulated_anneal(&to_qubo(&p), &params(1)).unwrap();
        let text = set.to_json_lines();
        assert_eq!(text.lines().count(), 8);
        let row: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(row["bits"], "1");
        assert_eq!(row["feasible"], true);
    }
}
