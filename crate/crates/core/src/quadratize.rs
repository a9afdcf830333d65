//! Degree reduction of a HUBO to a QUBO by pair substitution.
//!
//! Each round picks the variable pair shared by the most monomials of degree
//! three or more (ties: smallest pair in canonical order), replaces it with a
//! fresh auxiliary `y`, and adds the gadget
//! `P (x_a x_b - 2 x_a y - 2 x_b y + 3 y)`, which is zero exactly when
//! `y = x_a x_b` and at least `P` otherwise. `P` is twice the absolute
//! coefficient mass of the rewritten monomials plus one, so any assignment
//! with an inconsistent `y` can be improved by fixing it; the QUBO minimum
//! over all variables therefore equals the HUBO minimum over the originals.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet};

use rustc_hash::{FxHashMap, FxHashSet};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hubo::{Assignment, BinaryPolynomial, BinaryVar, Monomial};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuboError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("assignment has {got} bits, model has {expected} variables")]
    Width { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuxDef {
    pub aux: BinaryVar,
    pub pair: (BinaryVar, BinaryVar),
    pub penalty: f64,
}

#[derive(Debug, Clone)]
pub struct QuboModel {
    pub poly: BinaryPolynomial,
    /// Dense index of every variable, in canonical variable order.
    pub var_map: BTreeMap<BinaryVar, usize>,
    pub aux_defs: Vec<AuxDef>,
    /// Largest gadget weight used; zero when no substitution was needed.
    pub penalty: f64,
}

type Pair = (BinaryVar, BinaryVar);

struct Reducer {
    high: Vec<Option<(Monomial, f64)>>,
    pair_terms: FxHashMap<Pair, FxHashSet<usize>>,
    queue: BTreeSet<(Reverse<usize>, Pair)>,
}

impl Reducer {
    fn pairs_of(m: &Monomial) -> impl Iterator<Item = Pair> + '_ {
        m.iter().enumerate().flat_map(move |(i, &a)| m[i + 1..].iter().map(move |&b| (a, b)))
    }

    fn set_count(&mut self, pair: Pair, old: usize, new: usize) {
        if old > 0 {
            self.queue.remove(&(Reverse(old), pair));
        }
        if new > 0 {
            self.queue.insert((Reverse(new), pair));
        }
    }

    fn register(&mut self, id: usize) {
        let mono = self.high[id].as_ref().expect("live term").0.clone();
        for pair in Self::pairs_of(&mono) {
            let set = self.pair_terms.entry(pair).or_default();
            let old = set.len();
            set.insert(id);
            let new = set.len();
            self.set_count(pair, old, new);
        }
    }

    fn unregister(&mut self, id: usize) {
        let mono = self.high[id].as_ref().expect("live term").0.clone();
        for pair in Self::pairs_of(&mono) {
            let set = self.pair_terms.get_mut(&pair).expect("registered pair");
            let old = set.len();
            set.remove(&id);
            let new = set.len();
            if new == 0 {
                self.pair_terms.remove(&pair);
            }
            self.set_count(pair, old, new);
        }
    }
}

pub fn to_qubo(hubo: &BinaryPolynomial) -> QuboModel {
    let mut low = BinaryPolynomial::constant(hubo.constant_term());
    let mut reducer = Reducer { high: Vec::new(), pair_terms: FxHashMap::default(), queue: BTreeSet::new() };
    for (m, c) in hubo.sorted_terms() {
        if m.len() <= 2 {
            low.add_monomial(m.clone(), c);
        } else {
            reducer.high.push(Some((m.clone(), c)));
            let id = reducer.high.len() - 1;
            reducer.register(id);
        }
    }

    let mut next_aux = hubo.variables().iter().filter_map(|v| v.aux_index()).max().map_or(0, |j| j + 1);
    let mut aux_defs = Vec::new();

    while let Some(&(_, (a, b))) = reducer.queue.first() {
        let y = BinaryVar::aux(next_aux);
        next_aux += 1;
        let mut ids: Vec<usize> = reducer.pair_terms[&(a, b)].iter().copied().collect();
        ids.sort_unstable();
        let mut mass = 0.0;
        for id in ids {
            reducer.unregister(id);
            let (mono, c) = reducer.high[id].take().expect("live term");
            mass += c.abs();
            let mut rewritten: Monomial = mono.iter().copied().filter(|&v| v != a && v != b).collect();
            // y is the largest variable so far, so pushing keeps the order.
            rewritten.push(y);
            if rewritten.len() >= 3 {
                reducer.high[id] = Some((rewritten, c));
                reducer.register(id);
            } else {
                low.add_monomial(rewritten, c);
            }
        }
        let penalty = 2.0 * mass + 1.0;
        low.add_term(&[a, b], penalty);
        low.add_term(&[a, y], -2.0 * penalty);
        low.add_term(&[b, y], -2.0 * penalty);
        low.add_term(&[y], 3.0 * penalty);
        aux_defs.push(AuxDef { aux: y, pair: (a, b), penalty });
    }

    let mut vars: BTreeSet<BinaryVar> = hubo.variables();
    vars.extend(aux_defs.iter().map(|d| d.aux));
    let var_map = vars.into_iter().enumerate().map(|(i, v)| (v, i)).collect();
    let penalty = aux_defs.iter().map(|d| d.penalty).fold(0.0, f64::max);
    QuboModel { poly: low, var_map, aux_defs, penalty }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub assignment: Assignment,
    /// Some auxiliary variable differs from the product of its pair.
    pub penalty_violated: bool,
}

/// Drops auxiliary variables, flagging any that disagree with their pair.
pub fn project_solution(q: &QuboModel, full_assignment: &Assignment) -> Projection {
    let get = |v: &BinaryVar| full_assignment.get(v).copied().unwrap_or(false);
    let penalty_violated = q.aux_defs.iter().any(|d| get(&d.aux) != (get(&d.pair.0) && get(&d.pair.1)));
    let aux: BTreeSet<BinaryVar> = q.aux_defs.iter().map(|d| d.aux).collect();
    let assignment = full_assignment.iter().filter(|(v, _)| !aux.contains(v)).map(|(&v, &b)| (v, b)).collect();
    Projection { assignment, penalty_violated }
}

impl QuboModel {
    pub fn num_vars(&self) -> usize {
        self.var_map.len()
    }

    pub fn variables(&self) -> Vec<BinaryVar> {
        self.var_map.keys().copied().collect()
    }

    /// Original assignment extended with each auxiliary set to its pair product.
    pub fn lift(&self, original: &Assignment) -> Assignment {
        let mut full = original.clone();
        for d in &self.aux_defs {
            let value = full.get(&d.pair.0).copied().unwrap_or(false) && full.get(&d.pair.1).copied().unwrap_or(false);
            full.insert(d.aux, value);
        }
        full
    }

    pub fn assignment_from_bits(&self, bits: &[bool]) -> Assignment {
        self.var_map.iter().map(|(&v, &i)| (v, bits[i])).collect()
    }

    pub fn to_dense(&self) -> DenseQubo {
        let n = self.num_vars();
        let mut linear = vec![0.0; n];
        let mut quadratic = Vec::new();
        for (m, c) in self.poly.sorted_terms() {
            match m.as_slice() {
                [a] => linear[self.var_map[a]] += c,
                [a, b] => {
                    let (i, j) = (self.var_map[a], self.var_map[b]);
                    quadratic.push((i.min(j), i.max(j), c));
                }
                _ => unreachable!("quadratized polynomial has degree <= 2"),
            }
        }
        DenseQubo::new(n, self.poly.constant_term(), linear, quadratic)
    }
}

/// Index-based QUBO used by samplers and for file exchange.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseQubo {
    pub num_vars: usize,
    pub offset: f64,
    pub linear: Vec<f64>,
    /// `(i, j, c)` with `i < j`, sorted.
    pub quadratic: Vec<(usize, usize, f64)>,
    neighbors: Vec<Vec<(usize, f64)>>,
}

impl DenseQubo {
    pub fn new(num_vars: usize, offset: f64, linear: Vec<f64>, quadratic: Vec<(usize, usize, f64)>) -> Self {
        let mut merged: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        let mut linear = linear;
        linear.resize(num_vars, 0.0);
        for (i, j, c) in quadratic {
            if i == j {
                linear[i] += c;
            } else {
                *merged.entry((i.min(j), i.max(j))).or_default() += c;
            }
        }
        let quadratic: Vec<(usize, usize, f64)> =
            merged.into_iter().filter(|(_, c)| *c != 0.0).map(|((i, j), c)| (i, j, c)).collect();
        let mut neighbors = vec![Vec::new(); num_vars];
        for &(i, j, c) in &quadratic {
            neighbors[i].push((j, c));
            neighbors[j].push((i, c));
        }
        Self { num_vars, offset, linear, quadratic, neighbors }
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.neighbors[i]
    }

    pub fn energy(&self, bits: &[bool]) -> f64 {
        let mut e = self.offset;
        for (i, &c) in self.linear.iter().enumerate() {
            if bits[i] {
                e += c;
            }
        }
        for &(i, j, c) in &self.quadratic {
            if bits[i] && bits[j] {
                e += c;
            }
        }
        e
    }

    /// `vars <n>`, `offset <c>`, then `i j coeff` lines with `i <= j`
    /// (`i == j` for linear terms), sorted by `(i, j)`.
    pub fn to_text(&self) -> String {
        let mut rows: Vec<(usize, usize, f64)> =
            self.linear.iter().enumerate().filter(|(_, c)| **c != 0.0).map(|(i, &c)| (i, i, c)).collect();
        rows.extend(self.quadratic.iter().copied());
        rows.sort_by_key(|r| (r.0, r.1));
        let mut out = format!("vars {}\noffset {}\n", self.num_vars, self.offset);
        for (i, j, c) in rows {
            out.push_str(&format!("{i} {j} {c}\n"));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<DenseQubo, QuboError> {
        let err = |line: usize, reason: &str| QuboError::Parse { line, reason: reason.to_string() };
        let mut num_vars = None;
        let mut offset = 0.0;
        let mut linear = Vec::new();
        let mut quadratic = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let fields: Vec<&str> = raw.split_whitespace().collect();
            match fields.as_slice() {
                [] => continue,
                ["vars", n] => {
                    let n: usize = n.parse().map_err(|_| err(line_no, "bad variable count"))?;
                    num_vars = Some(n);
                    linear = vec![0.0; n];
                }
                ["offset", c] => offset = c.parse().map_err(|_| err(line_no, "bad offset"))?,
                [i, j, c] => {
                    let n = num_vars.ok_or_else(|| err(line_no, "term before 'vars' header"))?;
                    let i: usize = i.parse().map_err(|_| err(line_no, "bad index"))?;
                    let j: usize = j.parse().map_err(|_| err(line_no, "bad index"))?;
                    let c: f64 = c.parse().map_err(|_| err(line_no, "bad coefficient"))?;
                    if i > j || j >= n {
                        return Err(err(line_no, "index out of range or i > j"));
                    }
                    if i == j {
                        linear[i] += c;
                    } else {
                        quadratic.push((i, j, c));
                    }
                }
                _ => return Err(err(line_no, "expected 'i j coeff'")),
            }
        }
        let n = num_vars.ok_or_else(|| err(1, "missing 'vars' header"))?;
        Ok(DenseQubo::new(n, offset, linear, quadratic))
    }
}
