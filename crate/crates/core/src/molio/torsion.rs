use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::{BondOrder, Molecule};

/// A rotatable bond. `index` is 1-based; `a1 < a2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TorsionBond {
    pub index: usize,
    pub a1: usize,
    pub a2: usize,
}

/// Which way a pair path crosses a torsion bond, relative to the root fragment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    AwayFromRoot,
    TowardRoot,
}

impl Direction {
    /// Sign applied to the torsion angle when the rotation is expressed in the
    /// frame of the fragment the path starts from.
    pub fn sign(self) -> f64 {
        match self {
            Direction::AwayFromRoot => 1.0,
            Direction::TowardRoot => -1.0,
        }
    }

    pub fn reversed(self) -> Self {
        match self {
            Direction::AwayFromRoot => Direction::TowardRoot,
            Direction::TowardRoot => Direction::AwayFromRoot,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChainStep {
    /// 1-based torsion index.
    pub torsion: usize,
    pub direction: Direction,
}

/// Returns the bonds that are single, acyclic, bridges, and leave at least two
/// atoms on each side. Indexed 1..n by ascending `(a1, a2)`.
pub fn find_rotatable_bonds(m: &Molecule) -> Vec<TorsionBond> {
    let graph = m.graph();
    let bridges = graph.bridges();
    let mut keys: Vec<(usize, usize)> = Vec::new();
    for (i, bond) in m.bonds.iter().enumerate() {
        if bond.order != BondOrder::Single || bond.in_ring || !bridges.contains(&i) {
            continue;
        }
        let removed = BTreeSet::from([i]);
        let labels = graph.components(Some(&removed));
        let side_a = labels.iter().filter(|&&l| l == labels[bond.a]).count();
        let side_b = labels.iter().filter(|&&l| l == labels[bond.b]).count();
        if side_a >= 2 && side_b >= 2 {
            keys.push(bond.key());
        }
    }
    keys.sort_unstable();
    keys.into_iter().enumerate().map(|(i, (a1, a2))| TorsionBond { index: i + 1, a1, a2 }).collect()
}

/// Rigid fragments, the fragment tree rooted at the fragment holding atom 0,
/// and the torsion chain of every atom pair whose distance can change.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TorsionGraph {
    pub torsions: Vec<TorsionBond>,
    pub fragments: Vec<BTreeSet<usize>>,
    fragment_of: Vec<usize>,
    root_fragment: usize,
    /// Parent fragment and the connecting torsion index, `None` at the root.
    parent: Vec<Option<(usize, usize)>>,
    depth: Vec<usize>,
    /// Keyed by `(u, v)` with `u < v`; steps listed in path order from `u`.
    pub pair_chains: BTreeMap<(usize, usize), Vec<ChainStep>>,
}

impl TorsionGraph {
    pub fn n(&self) -> usize {
        self.torsions.len()
    }

    pub fn torsion(&self, index: usize) -> &TorsionBond {
        &self.torsions[index - 1]
    }

    pub fn fragment_of(&self, atom: usize) -> usize {
        self.fragment_of[atom]
    }

    pub fn root_fragment(&self) -> usize {
        self.root_fragment
    }

    pub fn parent_of(&self, fragment: usize) -> Option<(usize, usize)> {
        self.parent[fragment]
    }

    /// Torsion steps from fragment `from` to fragment `to`, in path order.
    pub fn fragment_path(&self, from: usize, to: usize) -> Vec<ChainStep> {
        let (mut a, mut b) = (from, to);
        let mut up = Vec::new();
        let mut down = Vec::new();
        while self.depth[a] > self.depth[b] {
            let (p, t) = self.parent[a].expect("non-root fragment has a parent");
            up.push(ChainStep { torsion: t, direction: Direction::TowardRoot });
            a = p;
        }
        while self.depth[b] > self.depth[a] {
            let (p, t) = self.parent[b].expect("non-root fragment has a parent");
            down.push(ChainStep { torsion: t, direction: Direction::AwayFromRoot });
            b = p;
        }
        while a != b {
            let (pa, ta) = self.parent[a].expect("distinct fragments below the root");
            let (pb, tb) = self.parent[b].expect("distinct fragments below the root");
            up.push(ChainStep { torsion: ta, direction: Direction::TowardRoot });
            down.push(ChainStep { torsion: tb, direction: Direction::AwayFromRoot });
            a = pa;
            b = pb;
        }
        down.reverse();
        up.extend(down);
        up
    }

    /// Chain for an unordered pair, oriented so that `u` is the fixed atom.
    pub fn chain(&self, u: usize, v: usize) -> Option<Vec<ChainStep>> {
        if u < v {
            self.pair_chains.get(&(u, v)).cloned()
        } else {
            self.pair_chains.get(&(v, u)).map(|steps| {
                steps
                    .iter()
                    .rev()
                    .map(|s| ChainStep { torsion: s.torsion, direction: s.direction.reversed() })
                    .collect()
            })
        }
    }

    pub fn is_eligible(&self, u: usize, v: usize) -> bool {
        self.pair_chains.contains_key(&(u.min(v), u.max(v)))
    }

    /// Eligible pairs with both atoms in `subset`.
    pub fn eligible_pairs<'a>(
        &'a self,
        subset: &'a BTreeSet<usize>,
    ) -> impl Iterator<Item = (usize, usize, &'a [ChainStep])> + 'a {
        self.pair_chains
            .iter()
            .filter(move |((u, v), _)| subset.contains(u) && subset.contains(v))
            .map(|(&(u, v), chain)| (u, v, chain.as_slice()))
    }

    pub fn max_chain_len(&self) -> usize {
        self.pair_chains.values().map(Vec::len).max().unwrap_or(0)
    }
}

pub fn build_torsion_graph(m: &Molecule, torsions: &[TorsionBond]) -> TorsionGraph {
    let graph = m.graph();
    let torsion_keys: BTreeMap<(usize, usize), usize> = torsions.iter().map(|t| ((t.a1, t.a2), t.index)).collect();
    let removed: BTreeSet<usize> =
        m.bonds.iter().enumerate().filter(|(_, b)| torsion_keys.contains_key(&b.key())).map(|(i, _)| i).collect();
    let fragment_of = graph.components(Some(&removed));
    let n_frag = fragment_of.iter().max().map_or(0, |m| m + 1);
    let mut fragments = vec![BTreeSet::new(); n_frag];
    for (atom, &f) in fragment_of.iter().enumerate() {
        fragments[f].insert(atom);
    }
    let root_fragment = fragment_of.first().copied().unwrap_or(0);

    let mut frag_adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n_frag];
    for t in torsions {
        let (fa, fb) = (fragment_of[t.a1], fragment_of[t.a2]);
        frag_adj[fa].push((fb, t.index));
        frag_adj[fb].push((fa, t.index));
    }
    let mut parent = vec![None; n_frag];
    let mut depth = vec![0usize; n_frag];
    let mut visited = vec![false; n_frag];
    if n_frag > 0 {
        visited[root_fragment] = true;
        let mut queue = VecDeque::from([root_fragment]);
        while let Some(f) = queue.pop_front() {
            for &(g, t) in &frag_adj[f] {
                if !visited[g] {
                    visited[g] = true;
                    parent[g] = Some((f, t));
                    depth[g] = depth[f] + 1;
                    queue.push_back(g);
                }
            }
        }
    }

    let mut tg = TorsionGraph {
        torsions: torsions.to_vec(),
        fragments,
        fragment_of,
        root_fragment,
        parent,
        depth,
        pair_chains: BTreeMap::new(),
    };

    let n = m.atom_count();
    for u in 0..n {
        let dist = graph.distances_from(u);
        for (v, &dv) in dist.iter().enumerate().skip(u + 1) {
            let (fu, fv) = (tg.fragment_of[u], tg.fragment_of[v]);
            if fu == fv || dv == usize::MAX || dv < 3 {
                continue;
            }
            if !visited[fu] || !visited[fv] {
                continue;
            }
            let chain = tg.fragment_path(fu, fv);
            if !chain.is_empty() {
                tg.pair_chains.insert((u, v), chain);
            }
        }
    }
    tg
}

/// At most two representative atoms per rigid fragment: those closest (by
/// intra-fragment hops, then by id) to the fragment's torsion attachment atoms.
pub fn select_median_atoms(g: &TorsionGraph, m: &Molecule) -> BTreeSet<usize> {
    let graph = m.graph();
    let mut attachments: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); g.fragments.len()];
    for t in &g.torsions {
        attachments[g.fragment_of(t.a1)].insert(t.a1);
        attachments[g.fragment_of(t.a2)].insert(t.a2);
    }
    let mut out = BTreeSet::new();
    for (f, atoms) in g.fragments.iter().enumerate() {
        if atoms.len() <= 2 {
            out.extend(atoms.iter().copied());
            continue;
        }
        let sources = &attachments[f];
        if sources.is_empty() {
            out.extend(atoms.iter().take(2).copied());
            continue;
        }
        let mut dist: BTreeMap<usize, usize> = sources.iter().map(|&a| (a, 0)).collect();
        let mut queue: VecDeque<usize> = sources.iter().copied().collect();
        while let Some(v) = queue.pop_front() {
            let d = dist[&v];
            for (w, _) in graph.neighbors(v) {
                if atoms.contains(&w) && !dist.contains_key(&w) {
                    dist.insert(w, d + 1);
                    queue.push_back(w);
                }
            }
        }
        let mut ranked: Vec<(usize, usize)> = dist.into_iter().map(|(a, d)| (d, a)).collect();
        ranked.sort_unstable();
        out.extend(ranked.into_iter().take(2).map(|(_, a)| a));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::molio::{Atom, Bond};

    fn mol(n: usize, edges: &[(usize, usize, BondOrder)]) -> Molecule {
        let atoms =
            (0..n).map(|i| Atom { id: i, element: "C".into(), position: [i as f64, (i % 2) as f64, 0.0] }).collect();
        let bonds = edges.iter().map(|&(a, b, o)| Bond::new(a, b, o)).collect();
        Molecule::new("t", atoms, bonds).unwrap()
    }

    fn chain(n: usize) -> Molecule {
        let edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1, BondOrder::Single)).collect();
        mol(n, &edges)
    }

    #[test]
    fn butane_has_one_middle_torsion() {
        let m = chain(4);
        let t = find_rotatable_bonds(&m);
        assert_eq!(t, vec![TorsionBond { index: 1, a1: 1, a2: 2 }]);
        let g = build_torsion_graph(&m, &t);
        assert_eq!(g.fragments.len(), 2);
        assert_eq!(g.pair_chains.len(), 1);
        let steps = &g.pair_chains[&(0, 3)];
        assert_eq!(steps, &vec![ChainStep { torsion: 1, direction: Direction::AwayFromRoot }]);
    }

    #[test]
    fn benzene_has_no_torsions() {
        let edges: Vec<_> = (0..6).map(|i| (i, (i + 1) % 6, BondOrder::Aromatic)).collect();
        assert!(find_rotatable_bonds(&mol(6, &edges)).is_empty());
    }

    #[test]
    fn double_and_amide_bonds_are_rigid() {
        let m = mol(4, &[(0, 1, BondOrder::Single), (1, 2, BondOrder::Double), (2, 3, BondOrder::Single)]);
        assert!(find_rotatable_bonds(&m).is_empty());
        let m = mol(4, &[(0, 1, BondOrder::Single), (1, 2, BondOrder::Amide), (2, 3, BondOrder::Single)]);
        assert!(find_rotatable_bonds(&m).is_empty());
    }

    #[test]
    fn seven_chain_far_ends_cross_both_torsions_in_order() {
        // 0-1-2-3-4-5-6: torsions at 1-2, 2-3, 3-4, 4-5
        let m = chain(7);
        let t = find_rotatable_bonds(&m);
        assert_eq!(t.len(), 4);
        let g = build_torsion_graph(&m, &t);
        let idx: Vec<usize> = g.pair_chains[&(0, 6)].iter().map(|s| s.torsion).collect();
        assert_eq!(idx, vec![1, 2, 3, 4]);
    }

    #[test]
    fn seven_atoms_two_torsions_chain_order() {
        // 0-1-2-3-4 backbone with ring 2-5-6 fused at atom 2 so 1-2 is rotatable,
        // and ring on the right so that only bonds 1-2 and 3-4... keep it simple:
        // ring A: 0-1-5 ; bond 1-2 ; 2-3 bond ; ring B: 3-4-6
        let m = mol(
            7,
            &[
                (0, 1, BondOrder::Single),
                (1, 5, BondOrder::Single),
                (5, 0, BondOrder::Single),
                (1, 2, BondOrder::Single),
                (2, 3, BondOrder::Single),
                (3, 4, BondOrder::Single),
                (4, 6, BondOrder::Single),
                (6, 3, BondOrder::Single),
            ],
        );
        let t = find_rotatable_bonds(&m);
        assert_eq!(t.iter().map(|t| (t.a1, t.a2)).collect::<Vec<_>>(), vec![(1, 2), (2, 3)]);
        let g = build_torsion_graph(&m, &t);
        let idx: Vec<usize> = g.pair_chains[&(0, 4)].iter().map(|s| s.torsion).collect();
        assert_eq!(idx, vec![1, 2]);
        let rev: Vec<usize> = g.chain(4, 0).unwrap().iter().map(|s| s.torsion).collect();
        assert_eq!(rev, vec![2, 1]);
    }

    #[test]
    fn same_fragment_pairs_are_absent() {
        let m = chain(4);
        let t = find_rotatable_bonds(&m);
        let g = build_torsion_graph(&m, &t);
        assert!(!g.is_eligible(0, 1));
        assert!(!g.is_eligible(2, 3));
        assert!(!g.is_eligible(1, 3), "two-bond path is never eligible");
    }

    #[test]
    fn branch_paths_climb_then_descend() {
        // root ring 0-1-2, two arms: 1-3-4 and 2-5-6 (bonds 1-3 and 2-5 rotatable)
        let m = mol(
            7,
            &[
                (0, 1, BondOrder::Single),
                (1, 2, BondOrder::Single),
                (2, 0, BondOrder::Single),
                (1, 3, BondOrder::Single),
                (3, 4, BondOrder::Double),
                (2, 5, BondOrder::Single),
                (5, 6, BondOrder::Double),
            ],
        );
        let t = find_rotatable_bonds(&m);
        assert_eq!(t.len(), 2);
        let g = build_torsion_graph(&m, &t);
        let c = &g.pair_chains[&(4, 6)];
        assert_eq!(
            c,
            &vec![
                ChainStep { torsion: 1, direction: Direction::TowardRoot },
                ChainStep { torsion: 2, direction: Direction::AwayFromRoot },
            ]
        );
    }

    #[test]
    fn median_atoms_star_fragment() {
        // star hub 2 with leaves 0,1,3,4 (fragment of 5), torsion 2-5, then 5-6 (6 terminal pair)
        let m = mol(
            8,
            &[
                (2, 0, BondOrder::Single),
                (2, 1, BondOrder::Single),
                (2, 3, BondOrder::Single),
                (2, 4, BondOrder::Single),
                (2, 5, BondOrder::Single),
                (5, 6, BondOrder::Double),
                (6, 7, BondOrder::Double),
            ],
        );
        let t = find_rotatable_bonds(&m);
        assert_eq!(t, vec![TorsionBond { index: 1, a1: 2, a2: 5 }]);
        let g = build_torsion_graph(&m, &t);
        let med = select_median_atoms(&g, &m);
        // hub 2 plus lowest-id neighbour 0; second fragment {5,6,7}: 5 and 6
        assert_eq!(med, BTreeSet::from([0, 2, 5, 6]));
    }

    #[test]
    fn median_atoms_small_fragments_kept_whole() {
        let m = chain(5);
        let t = find_rotatable_bonds(&m);
        let g = build_torsion_graph(&m, &t);
        // fragments {0,1}, {2}, {3,4}
        assert_eq!(g.fragments.len(), 3);
        assert_eq!(select_median_atoms(&g, &m), m.all_atom_ids());
    }
}
