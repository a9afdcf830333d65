use rayon::prelude::*;

use super::SolverError;
use crate::hubo::{Assignment, BinaryPolynomial};

pub const MAX_BRUTE_FORCE_VARS: usize = 26;

/// Codes per parallel block; each block starts from a direct evaluation so
/// incremental rounding cannot drift across more than this many steps.
const BLOCK_BITS: usize = 14;

struct Compiled {
    constant: f64,
    masks: Vec<u32>,
    coefs: Vec<f64>,
    /// Term indices containing each variable.
    by_var: Vec<Vec<usize>>,
}

impl Compiled {
    fn value(&self, code: u32) -> f64 {
        self.constant + self.masks.iter().zip(&self.coefs).filter(|(&m, _)| m & code == m).map(|(_, c)| c).sum::<f64>()
    }

    /// Energy change from setting bit `i` (currently clear in `code`).
    fn gain(&self, code: u32, i: usize) -> f64 {
        let bit = 1u32 << i;
        self.by_var[i].iter().filter(|&&t| (self.masks[t] & !bit) & !code == 0).map(|&t| self.coefs[t]).sum()
    }
}

fn tied(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

/// Scans codes `start..end` in ascending order; ties keep the smaller code.
fn scan(c: &Compiled, start: u32, end: u32) -> (u32, f64) {
    let mut code = start;
    let mut e = c.value(code);
    let mut best = (code, e);
    while code + 1 < end {
        let next = code + 1;
        // Bits that flip from 1 to 0, then the single bit that becomes 1.
        let cleared = code & !next;
        let mut rest = cleared;
        while rest != 0 {
            let i = rest.trailing_zeros() as usize;
            code &= !(1 << i);
            e -= c.gain(code, i);
            rest &= rest - 1;
        }
        let set = (next & !code).trailing_zeros() as usize;
        e += c.gain(code, set);
        code = next;
        if e < best.1 && !tied(e, best.1) {
            best = (code, e);
        }
    }
    best
}

/// Exact minimum by enumeration. Variables are indexed in canonical order
/// and ties resolve to the smallest integer code with the first variable as
/// the least significant bit.
pub fn brute_force(p: &BinaryPolynomial) -> Result<(Assignment, f64), SolverError> {
    let vars: Vec<_> = p.variables().into_iter().collect();
    let n = vars.len();
    if n > MAX_BRUTE_FORCE_VARS {
        return Err(SolverError::TooManyVariables(n));
    }
    let index = |v| vars.binary_search(&v).expect("variable listed");
    let mut compiled =
        Compiled { constant: p.constant_term(), masks: Vec::new(), coefs: Vec::new(), by_var: vec![Vec::new(); n] };
    for (m, c) in p.sorted_terms() {
        let t = compiled.masks.len();
        let mut mask = 0u32;
        for &v in m.iter() {
            let i = index(v);
            mask |= 1 << i;
            compiled.by_var[i].push(t);
        }
        compiled.masks.push(mask);
        compiled.coefs.push(c);
    }
    let total: u64 = 1 << n;
    let block: u64 = 1 << BLOCK_BITS.min(n);
    let blocks: Vec<(u32, f64)> = (0..total / block)
        .into_par_iter()
        .map(|b| scan(&compiled, (b * block) as u32, ((b + 1) * block) as u32))
        .collect();
    let mut best = blocks[0];
    for &(code, e) in &blocks[1..] {
        if e < best.1 && !tied(e, best.1) {
            best = (code, e);
        }
    }
    let assignment: Assignment = vars.iter().enumerate().map(|(i, &v)| (v, best.0 >> i & 1 == 1)).collect();
    let energy = p.evaluate(&assignment)?;
    Ok((assignment, energy))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hubo::{build_hard_constraint, BinaryVar};

    #[test]
    fn constant_polynomial() {
        let (a, e) = brute_force(&BinaryPolynomial::constant(2.5)).unwrap();
        assert!(a.is_empty());
        assert_eq!(e, 2.5);
    }

    #[test]
    fn one_hot_tie_breaks_to_first_variable() {
        let (a, e) = brute_force(&build_hard_constraint(1, 2)).unwrap();
        assert_eq!(e, 0.0);
        assert!(a[&BinaryVar::one_hot(1, 1)]);
        assert!(!a[&BinaryVar::one_hot(1, 2)]);
    }

    #[test]
    fn matches_naive_enumeration() {
        let x = |i| BinaryVar::one_hot(1, i);
        let p = BinaryPolynomial::from_terms(
            0.5,
            vec![
                (vec![x(1), x(2), x(3)], -3.0),
                (vec![x(1), x(4)], 2.0),
                (vec![x(2)], 0.5),
                (vec![x(3), x(4), x(5)], -1.25),
                (vec![x(5)], 0.75),
            ],
        );
        let vars: Vec<_> = p.variables().into_iter().collect();
        let mut naive = f64::INFINITY;
        for code in 0u32..32 {
            let a: Assignment = vars.iter().enumerate().map(|(i, &v)| (v, code >> i & 1 == 1)).collect();
            naive = naive.min(p.evaluate(&a).unwrap());
        }
        assert_eq!(brute_force(&p).unwrap().1, naive);
    }

    #[test]
    fn too_many_variables() {
        let mut p = BinaryPolynomial::zero();
        for k in 1..=27 {
            p.add_term(&[BinaryVar::one_hot(1, k)], 1.0);
        }
        assert_eq!(brute_force(&p), Err(SolverError::TooManyVariables(27)));
    }
}
