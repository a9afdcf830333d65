use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rustc_hash::{FxHashMap, FxHashSet};
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use super::HuboError;

const AUX_FLAG: u32 = 0x8000_0000;

/// A binary variable: either the one-hot indicator `x_ik` (torsion `i`
/// takes angle `k`, both 1-based) or an auxiliary product variable.
///
/// The packed ordering sorts one-hot variables by `(i, k)` and places every
/// auxiliary variable after them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BinaryVar(u32);

impl BinaryVar {
    pub fn one_hot(torsion: usize, angle: usize) -> Self {
        assert!(
            (1..0x8000).contains(&torsion) && (1..0x1_0000).contains(&angle),
            "one-hot index ({torsion}, {angle}) out of range"
        );
        BinaryVar(((torsion as u32) << 16) | angle as u32)
    }

    pub fn aux(index: usize) -> Self {
        assert!(index < AUX_FLAG as usize, "aux index out of range");
        BinaryVar(AUX_FLAG | index as u32)
    }

    pub fn is_aux(self) -> bool {
        self.0 & AUX_FLAG != 0
    }

    /// `(torsion, angle)` for one-hot variables.
    pub fn one_hot_parts(self) -> Option<(usize, usize)> {
        (!self.is_aux()).then_some(((self.0 >> 16) as usize, (self.0 & 0xFFFF) as usize))
    }

    pub fn aux_index(self) -> Option<usize> {
        self.is_aux().then_some((self.0 & !AUX_FLAG) as usize)
    }
}

impl fmt::Display for BinaryVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.one_hot_parts() {
            Some((i, k)) => write!(f, "t{i}_a{k}"),
            None => write!(f, "y{}", self.aux_index().unwrap_or_default()),
        }
    }
}

impl FromStr for BinaryVar {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(rest) = s.strip_prefix('y') {
            let j: usize = rest.parse().map_err(|_| format!("bad aux variable '{s}'"))?;
            return Ok(BinaryVar::aux(j));
        }
        let rest = s.strip_prefix('t').ok_or_else(|| format!("bad variable '{s}'"))?;
        let (i, k) = rest.split_once("_a").ok_or_else(|| format!("bad variable '{s}'"))?;
        let i: usize = i.parse().map_err(|_| format!("bad torsion index in '{s}'"))?;
        let k: usize = k.parse().map_err(|_| format!("bad angle index in '{s}'"))?;
        if i == 0 || k == 0 || i >= 0x8000 || k >= 0x1_0000 {
            return Err(format!("index out of range in '{s}'"));
        }
        Ok(BinaryVar::one_hot(i, k))
    }
}

/// Sorted, duplicate-free variable list.
pub type Monomial = SmallVec<[BinaryVar; 8]>;

pub type Assignment = BTreeMap<BinaryVar, bool>;

/// Product of two monomials under `x * x = x`.
pub fn merge_monomials(a: &[BinaryVar], b: &[BinaryVar]) -> Monomial {
    let mut out = Monomial::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Two one-hot variables of the same torsion; sorted input keeps them adjacent.
fn has_torsion_clash(m: &[BinaryVar]) -> bool {
    m.windows(2).any(|w| match (w[0].one_hot_parts(), w[1].one_hot_parts()) {
        (Some((i, _)), Some((j, _))) => i == j,
        _ => false,
    })
}

fn canonical(vars: impl IntoIterator<Item = BinaryVar>) -> Monomial {
    let mut m: Monomial = vars.into_iter().collect();
    m.sort_unstable();
    m.dedup();
    m
}

/// Multilinear polynomial over binary variables with real coefficients.
///
/// The constant term lives outside the term map; the map never holds the
/// empty monomial or a zero coefficient.
#[derive(Debug, Clone, Default)]
pub struct BinaryPolynomial {
    terms: FxHashMap<Monomial, f64>,
    constant: f64,
}

impl PartialEq for BinaryPolynomial {
    fn eq(&self, other: &Self) -> bool {
        self.constant == other.constant && self.terms == other.terms
    }
}

impl BinaryPolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self { terms: FxHashMap::default(), constant: c }
    }

    pub fn var(v: BinaryVar) -> Self {
        let mut p = Self::zero();
        p.add_term(&[v], 1.0);
        p
    }

    pub fn from_terms<I, V>(constant: f64, terms: I) -> Self
    where
        I: IntoIterator<Item = (V, f64)>,
        V: IntoIterator<Item = BinaryVar>,
    {
        let mut p = Self::constant(constant);
        for (vars, c) in terms {
            p.add_monomial(canonical(vars), c);
        }
        p
    }

    pub fn constant_term(&self) -> f64 {
        self.constant
    }

    pub fn set_constant(&mut self, c: f64) {
        self.constant = c;
    }

    /// Number of non-constant terms.
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty() && self.constant == 0.0
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(|m| m.len()).max().unwrap_or(0)
    }

    pub fn coefficient(&self, vars: &[BinaryVar]) -> f64 {
        let m = canonical(vars.iter().copied());
        if m.is_empty() {
            self.constant
        } else {
            self.terms.get(&m).copied().unwrap_or(0.0)
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, f64)> {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    /// Terms ordered by degree, then lexicographically by variable.
    pub fn sorted_terms(&self) -> Vec<(&Monomial, f64)> {
        let mut out: Vec<_> = self.terms().collect();
        out.sort_unstable_by(|a, b| a.0.len().cmp(&b.0.len()).then_with(|| a.0.cmp(b.0)));
        out
    }

    pub fn variables(&self) -> BTreeSet<BinaryVar> {
        self.terms.keys().flat_map(|m| m.iter().copied()).collect()
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.terms.values().fold(0.0, |acc: f64, c| acc.max(c.abs()))
    }

    /// Adds `coef` times the product of `vars` (any order, repeats allowed).
    pub fn add_term(&mut self, vars: &[BinaryVar], coef: f64) {
        self.add_monomial(canonical(vars.iter().copied()), coef);
    }

    /// Adds a term whose monomial is already canonical.
    pub fn add_monomial(&mut self, mono: Monomial, coef: f64) {
        if coef == 0.0 {
            return;
        }
        if mono.is_empty() {
            self.constant += coef;
            return;
        }
        match self.terms.entry(mono) {
            std::collections::hash_map::Entry::Occupied(mut e) => {
                let sum = *e.get() + coef;
                if sum == 0.0 {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
            std::collections::hash_map::Entry::Vacant(e) => {
                e.insert(coef);
            }
        }
    }

    pub fn add_scaled(&mut self, other: &BinaryPolynomial, factor: f64) {
        if factor == 0.0 {
            return;
        }
        self.constant += factor * other.constant;
        for (m, c) in other.terms() {
            self.add_monomial(m.clone(), factor * c);
        }
    }

    pub fn add(&self, other: &BinaryPolynomial) -> BinaryPolynomial {
        let mut out = self.clone();
        out.add_scaled(other, 1.0);
        out
    }

    pub fn sub(&self, other: &BinaryPolynomial) -> BinaryPolynomial {
        let mut out = self.clone();
        out.add_scaled(other, -1.0);
        out
    }

    pub fn scaled(&self, factor: f64) -> BinaryPolynomial {
        let mut out = BinaryPolynomial::zero();
        out.add_scaled(self, factor);
        out
    }

    pub fn mul(&self, other: &BinaryPolynomial) -> BinaryPolynomial {
        let mut out = BinaryPolynomial::constant(self.constant * other.constant);
        if other.constant != 0.0 {
            for (m, c) in self.terms() {
                out.add_monomial(m.clone(), c * other.constant);
            }
        }
        if self.constant != 0.0 {
            for (m, c) in other.terms() {
                out.add_monomial(m.clone(), c * self.constant);
            }
        }
        for (ma, ca) in self.terms() {
            for (mb, cb) in other.terms() {
                out.add_monomial(merge_monomials(ma, mb), ca * cb);
            }
        }
        out
    }

    /// `self * self`, visiting each unordered pair of terms once.
    pub fn square(&self) -> BinaryPolynomial {
        let terms: Vec<(&Monomial, f64)> = self.terms().collect();
        let c0 = self.constant;
        let mut out = BinaryPolynomial::constant(c0 * c0);
        for (i, &(mi, ci)) in terms.iter().enumerate() {
            // x^2 = x folds the diagonal into the monomial itself.
            out.add_monomial(mi.clone(), ci * ci + 2.0 * c0 * ci);
            for &(mj, cj) in &terms[i + 1..] {
                out.add_monomial(merge_monomials(mi, mj), 2.0 * ci * cj);
            }
        }
        out
    }

    /// `self * self` with every product of two different angles of one
    /// torsion dropped. Agrees with [`square`](Self::square) on assignments
    /// where each torsion has at most one angle set.
    pub fn square_one_hot(&self) -> BinaryPolynomial {
        let terms: Vec<(&Monomial, f64)> = self.terms().collect();
        let c0 = self.constant;
        let mut out = BinaryPolynomial::constant(c0 * c0);
        for (i, &(mi, ci)) in terms.iter().enumerate() {
            out.add_monomial(mi.clone(), ci * ci + 2.0 * c0 * ci);
            for &(mj, cj) in &terms[i + 1..] {
                let merged = merge_monomials(mi, mj);
                if !has_torsion_clash(&merged) {
                    out.add_monomial(merged, 2.0 * ci * cj);
                }
            }
        }
        out
    }

    /// Drops non-constant terms with `|c| < threshold * max|c|`.
    pub fn prune(&self, threshold: f64) -> BinaryPolynomial {
        self.prune_except(threshold, &FxHashSet::default())
    }

    /// Like [`prune`](Self::prune) but never drops monomials in `keep`.
    /// The reference magnitude is taken over all non-constant terms.
    pub fn prune_except(&self, threshold: f64, keep: &FxHashSet<Monomial>) -> BinaryPolynomial {
        if threshold <= 0.0 {
            return self.clone();
        }
        let cutoff = threshold * self.max_abs_coefficient();
        let mut out = BinaryPolynomial::constant(self.constant);
        for (m, c) in self.terms() {
            if c.abs() >= cutoff || keep.contains(m) {
                out.terms.insert(m.clone(), c);
            }
        }
        out
    }

    pub fn evaluate(&self, assignment: &Assignment) -> Result<f64, HuboError> {
        let mut total = self.constant;
        for (m, c) in self.sorted_terms() {
            let mut on = true;
            for v in m.iter() {
                match assignment.get(v) {
                    Some(true) => {}
                    Some(false) => on = false,
                    None => return Err(HuboError::UnboundVariable(*v)),
                }
            }
            if on {
                total += c;
            }
        }
        Ok(total)
    }

    /// Evaluation through a lookup closure; unbound variables read as 0.
    pub fn evaluate_with(&self, value: impl Fn(BinaryVar) -> bool) -> f64 {
        self.constant
            + self.sorted_terms().into_iter().filter(|(m, _)| m.iter().all(|&v| value(v))).map(|(_, c)| c).sum::<f64>()
    }

    /// One line per term: `coeff var var ...`; the constant is a bare
    /// `coeff` line written first.
    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.constant);
        for (m, c) in self.sorted_terms() {
            out.push_str(&c.to_string());
            for v in m.iter() {
                out.push(' ');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<BinaryPolynomial, HuboError> {
        let mut p = BinaryPolynomial::zero();
        for (i, line) in text.lines().enumerate() {
            let mut fields = line.split_whitespace();
            let Some(coef) = fields.next() else { continue };
            let coef: f64 = coef
                .parse()
                .map_err(|_| HuboError::Parse { line: i + 1, reason: format!("bad coefficient '{coef}'") })?;
            let vars: Vec<BinaryVar> = fields
                .map(|f| f.parse::<BinaryVar>())
                .collect::<Result<_, _>>()
                .map_err(|reason| HuboError::Parse { line: i + 1, reason })?;
            p.add_term(&vars, coef);
        }
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(i: usize, k: usize) -> BinaryVar {
        BinaryVar::one_hot(i, k)
    }

    #[test]
    fn var_ordering_puts_aux_last() {
        assert!(x(1, 2) < x(1, 3));
        assert!(x(1, 9) < x(2, 1));
        assert!(x(200, 8) < BinaryVar::aux(0));
        assert!(BinaryVar::aux(0) < BinaryVar::aux(1));
        assert_eq!(x(3, 7).to_string(), "t3_a7");
        assert_eq!("t3_a7".parse::<BinaryVar>().unwrap(), x(3, 7));
        assert_eq!("y12".parse::<BinaryVar>().unwrap(), BinaryVar::aux(12));
        assert!("t0_a1".parse::<BinaryVar>().is_err());
    }

    #[test]
    fn idempotent_square_of_a_variable() {
        let p = BinaryPolynomial::var(x(1, 1));
        assert_eq!(p.mul(&p), p);
        assert_eq!(p.square(), p);
    }

    #[test]
    fn square_matches_mul() {
        let p = BinaryPolynomial::from_terms(
            1.5,
            vec![(vec![x(1, 1)], 2.0), (vec![x(1, 2), x(2, 1)], -0.5), (vec![x(2, 3)], 0.25)],
        );
        let a = p.square();
        let b = p.mul(&p);
        assert_eq!(a.len(), b.len());
        for (m, c) in a.terms() {
            assert!((b.coefficient(m) - c).abs() < 1e-12);
        }
        assert!((a.constant_term() - 2.25).abs() < 1e-12);
    }

    #[test]
    fn cancellation_removes_terms() {
        let mut p = BinaryPolynomial::var(x(1, 1));
        p.add_term(&[x(1, 1)], -1.0);
        assert!(p.is_zero());
    }

    #[test]
    fn prune_examples() {
        let a = x(1, 1);
        let b = x(1, 2);
        let p = BinaryPolynomial::from_terms(3.0, vec![(vec![a], 1.0), (vec![b], 0.05)]);
        assert_eq!(p.prune(0.0), p);
        let q = p.prune(0.1);
        assert_eq!(q.len(), 1);
        assert_eq!(q.coefficient(&[a]), 1.0);
        assert_eq!(q.constant_term(), 3.0);
    }

    #[test]
    fn evaluate_requires_bound_variables() {
        let p = BinaryPolynomial::from_terms(5.0, vec![(vec![x(1, 1), x(1, 2)], 2.0)]);
        let mut asg = Assignment::new();
        asg.insert(x(1, 1), true);
        assert_eq!(p.evaluate(&asg), Err(HuboError::UnboundVariable(x(1, 2))));
        asg.insert(x(1, 2), true);
        assert_eq!(p.evaluate(&asg).unwrap(), 7.0);
        assert_eq!(BinaryPolynomial::zero().evaluate(&Assignment::new()).unwrap(), 0.0);
        assert_eq!(BinaryPolynomial::constant(5.0).evaluate(&asg).unwrap(), 5.0);
    }

    #[test]
    fn text_round_trip() {
        let p = BinaryPolynomial::from_terms(
            -0.125,
            vec![(vec![x(1, 1)], 2.0), (vec![x(2, 4), x(1, 3), BinaryVar::aux(3)], 1.0 / 3.0)],
        );
        let text = p.to_text();
        assert!(text.starts_with("-0.125\n2 t1_a1\n"));
        assert_eq!(BinaryPolynomial::from_text(&text).unwrap(), p);
    }
}
