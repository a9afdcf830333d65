//! Molecule input: TRIPOS mol2 and MDL V2000 parsing, hydrogen stripping,
//! rotatable-bond detection and rigid-fragment decomposition.

mod graph;
mod mol2;
mod molfile;
mod torsion;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use graph::BondGraph;
pub use mol2::parse_mol2;
pub use molfile::parse_mol;
pub use torsion::{
    build_torsion_graph, find_rotatable_bonds, select_median_atoms, ChainStep, Direction, TorsionBond, TorsionGraph,
};

pub type Vec3 = [f64; 3];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MolError {
    #[error("line {line}: malformed record: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("missing section: {0}")]
    MissingSection(String),
    #[error("line {line}: bond references unknown atom id {atom}")]
    DanglingBond { line: usize, atom: i64 },
    #[error("invalid structure: {0}")]
    InvalidStructure(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
    Amide,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub id: usize,
    pub element: String,
    pub position: Vec3,
}

impl Atom {
    pub fn is_hydrogen(&self) -> bool {
        self.element.eq_ignore_ascii_case("H")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub order: BondOrder,
    /// Set by [`Molecule::new`]: true when the bond lies on a cycle.
    pub in_ring: bool,
}

impl Bond {
    pub fn new(a: usize, b: usize, order: BondOrder) -> Self {
        Self { a, b, order, in_ring: false }
    }

    /// Endpoints with the lower id first.
    pub fn key(&self) -> (usize, usize) {
        (self.a.min(self.b), self.a.max(self.b))
    }

    pub fn other(&self, atom: usize) -> Option<usize> {
        if self.a == atom {
            Some(self.b)
        } else if self.b == atom {
            Some(self.a)
        } else {
            None
        }
    }
}

/// A ligand: atoms with Ångström coordinates and a bond list.
///
/// Atom ids always equal their index in `atoms`. Ring flags on bonds are
/// derived from the bond graph at construction time, so callers never set
/// them by hand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Molecule {
    pub name: String,
    pub atoms: Vec<Atom>,
    pub bonds: Vec<Bond>,
}

impl Molecule {
    pub fn new(name: impl Into<String>, atoms: Vec<Atom>, mut bonds: Vec<Bond>) -> Result<Self, MolError> {
        for (i, atom) in atoms.iter().enumerate() {
            if atom.id != i {
                return Err(MolError::InvalidStructure(format!("atom at index {i} carries id {}", atom.id)));
            }
            if atom.position.iter().any(|c| !c.is_finite()) {
                return Err(MolError::InvalidStructure(format!("atom {i} has a non-finite coordinate")));
            }
        }
        let mut seen = BTreeSet::new();
        for bond in &bonds {
            if bond.a == bond.b {
                return Err(MolError::InvalidStructure(format!("self bond on atom {}", bond.a)));
            }
            if bond.a >= atoms.len() || bond.b >= atoms.len() {
                return Err(MolError::InvalidStructure(format!(
                    "bond {}-{} references a missing atom",
                    bond.a, bond.b
                )));
            }
            if !seen.insert(bond.key()) {
                return Err(MolError::InvalidStructure(format!("duplicate bond {}-{}", bond.a, bond.b)));
            }
        }
        let graph = BondGraph::new(atoms.len(), &bonds);
        let bridges = graph.bridges();
        for (i, bond) in bonds.iter_mut().enumerate() {
            bond.in_ring = !bridges.contains(&i);
        }
        Ok(Self { name: name.into(), atoms, bonds })
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn position(&self, id: usize) -> Vec3 {
        self.atoms[id].position
    }

    pub fn all_atom_ids(&self) -> BTreeSet<usize> {
        (0..self.atoms.len()).collect()
    }

    pub fn graph(&self) -> BondGraph {
        BondGraph::new(self.atoms.len(), &self.bonds)
    }

    pub fn is_connected(&self) -> bool {
        self.graph().component_count(None) <= 1
    }
}

/// Removes every hydrogen with exactly one bond, together with that bond.
///
/// Returns the stripped molecule and, for each new atom id, the id it had in
/// the input.
pub fn strip_terminal_hydrogens(m: &Molecule) -> (Molecule, Vec<usize>) {
    let mut degree = vec![0usize; m.atoms.len()];
    for bond in &m.bonds {
        degree[bond.a] += 1;
        degree[bond.b] += 1;
    }
    let keep: Vec<bool> = m.atoms.iter().map(|a| !(a.is_hydrogen() && degree[a.id] == 1)).collect();

    let mut new_id = vec![usize::MAX; m.atoms.len()];
    let mut original_ids = Vec::new();
    let mut atoms = Vec::new();
    for atom in m.atoms.iter().filter(|a| keep[a.id]) {
        new_id[atom.id] = atoms.len();
        original_ids.push(atom.id);
        atoms.push(Atom { id: atoms.len(), ..atom.clone() });
    }
    let bonds = m
        .bonds
        .iter()
        .filter(|b| keep[b.a] && keep[b.b])
        .map(|b| Bond::new(new_id[b.a], new_id[b.b], b.order))
        .collect();
    let stripped =
        Molecule::new(m.name.clone(), atoms, bonds).expect("removing terminal atoms preserves structural validity");
    (stripped, original_ids)
}

/// Element symbol from a mol2 atom type (`C.ar` -> `C`) or a bare symbol.
pub(crate) fn normalize_element(raw: &str) -> String {
    let base = raw.split('.').next().unwrap_or(raw);
    let mut chars = base.chars();
    match chars.next() {
        Some(first) => {
            let mut s = first.to_ascii_uppercase().to_string();
            s.extend(chars.map(|c| c.to_ascii_lowercase()));
            s
        }
        None => String::new(),
    }
}
