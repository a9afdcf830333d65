//! Synthetic molecules for integration tests: perturbed zigzag chains with
//! optional methyl-like branches, built from internal coordinates.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use unfolder::molio::{
    build_torsion_graph, find_rotatable_bonds, parse_mol2, Atom, Bond, BondOrder, Molecule, TorsionGraph, Vec3,
};

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

pub fn lumateperone() -> Molecule {
    parse_mol2(&std::fs::read_to_string(data_path("lumateperone.mol2")).unwrap()).unwrap()
}

fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn unit(a: Vec3) -> Vec3 {
    let n = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
    [a[0] / n, a[1] / n, a[2] / n]
}

/// Position of `d` given `a`, `b`, `c`, bond length |cd|, angle bcd and
/// dihedral abcd (radians).
pub fn place(a: Vec3, b: Vec3, c: Vec3, length: f64, angle: f64, dihedral: f64) -> Vec3 {
    let bc = unit(sub(c, b));
    let n = unit(cross(sub(b, a), bc));
    let m = cross(n, bc);
    let local = [-length * angle.cos(), length * angle.sin() * dihedral.cos(), length * angle.sin() * dihedral.sin()];
    [
        c[0] + local[0] * bc[0] + local[1] * m[0] + local[2] * n[0],
        c[1] + local[0] * bc[1] + local[1] * m[1] + local[2] * n[1],
        c[2] + local[0] * bc[2] + local[1] * m[2] + local[2] * n[2],
    ]
}

/// Chain with `n` rotatable bonds (`n + 3` backbone atoms), random dihedrals
/// and bond-angle jitter; with `branches`, interior backbone atoms get one
/// extra substituent each.
pub fn zigzag(n: usize, seed: u64, branches: bool) -> Molecule {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = n + 3;
    let mut pos: Vec<Vec3> = vec![[0.0, 0.0, 0.0], [1.53, 0.0, 0.0]];
    let a2: f64 = 1.95 + rng.random_range(-0.1..0.1);
    pos.push([1.53 - 1.53 * a2.cos(), 1.53 * a2.sin(), 0.0]);
    while pos.len() < len {
        let k = pos.len();
        let angle = 1.92 + rng.random_range(-0.12..0.12);
        let dihedral = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
        let p = place(pos[k - 3], pos[k - 2], pos[k - 1], 1.53 + rng.random_range(-0.05..0.05), angle, dihedral);
        pos.push(p);
    }
    let mut bonds: Vec<Bond> = (1..len).map(|i| Bond::new(i - 1, i, BondOrder::Single)).collect();
    if branches {
        for i in 1..len - 1 {
            let dihedral = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
            let p = place(pos[i + 1], pos[i - 1], pos[i], 1.51, 1.9, dihedral);
            bonds.push(Bond::new(i, pos.len(), BondOrder::Single));
            pos.push(p);
        }
    }
    let atoms = pos.iter().enumerate().map(|(id, &position)| Atom { id, element: "C".into(), position }).collect();
    Molecule::new(format!("zigzag-{n}-{seed}"), atoms, bonds).unwrap()
}

pub fn torsion_graph(m: &Molecule) -> TorsionGraph {
    build_torsion_graph(m, &find_rotatable_bonds(m))
}

/// Oracle suite: at least five molecules with one to three torsions.
pub fn oracle_molecules() -> Vec<Molecule> {
    let mut out = Vec::new();
    for n in 1..=3 {
        out.push(zigzag(n, 100 + n as u64, false));
        out.push(zigzag(n, 200 + n as u64, true));
    }
    out
}

pub fn all_atoms(m: &Molecule) -> BTreeSet<usize> {
    m.all_atom_ids()
}

/// Rotation of `p` by `angle` about the line through `a` with direction
/// `a -> b`, via unit quaternions.
pub fn quaternion_rotate(p: Vec3, a: Vec3, b: Vec3, angle: f64) -> Vec3 {
    let axis = unit(sub(b, a));
    let (s, c) = (angle / 2.0).sin_cos();
    let q = [c, axis[0] * s, axis[1] * s, axis[2] * s];
    let v = sub(p, a);
    // q v q*, expanded.
    let qv = [q[1], q[2], q[3]];
    let t = cross(qv, v);
    let t = [2.0 * t[0], 2.0 * t[1], 2.0 * t[2]];
    let u = cross(qv, t);
    [a[0] + v[0] + q[0] * t[0] + u[0], a[1] + v[1] + q[0] * t[1] + u[1], a[2] + v[2] + q[0] * t[2] + u[2]]
}

fn adjacency(m: &Molecule, skip: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); m.atom_count()];
    for b in &m.bonds {
        let key = (b.a.min(b.b), b.a.max(b.b));
        if !skip.contains(&key) {
            adj[b.a].push(b.b);
            adj[b.b].push(b.a);
        }
    }
    adj
}

fn bfs(adj: &[Vec<usize>], start: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; adj.len()];
    let mut queue = std::collections::VecDeque::from([start]);
    dist[start] = 0;
    while let Some(a) = queue.pop_front() {
        for &b in &adj[a] {
            if dist[b] == usize::MAX {
                dist[b] = dist[a] + 1;
                queue.push_back(b);
            }
        }
    }
    dist
}

/// Independent objective: torsions applied one at a time to the current
/// coordinates, root side (atom 0) fixed, nearest-to-root torsions first;
/// then squared distances summed over atom pairs of `subset` that lie in
/// different rigid fragments and are at least three bonds apart.
pub fn oracle_volume(m: &Molecule, torsions: &[(usize, usize)], angles: &[f64], subset: &BTreeSet<usize>) -> f64 {
    let keys: Vec<(usize, usize)> = torsions.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
    let full = adjacency(m, &[]);
    let root_dist = bfs(&full, 0);
    let mut order: Vec<usize> = (0..torsions.len()).collect();
    order.sort_by_key(|&i| root_dist[torsions[i].0].min(root_dist[torsions[i].1]));
    let mut pos: Vec<Vec3> = m.atoms.iter().map(|a| a.position).collect();
    for i in order {
        let (a1, a2) = torsions[i];
        // Far side: atoms reached from a2 without crossing this bond.
        let cut = adjacency(m, &[keys[i]]);
        let reach = bfs(&cut, a2);
        let a2_far = reach[0] == usize::MAX;
        let (fixed, moving) = if a2_far { (a1, a2) } else { (a2, a1) };
        let side = bfs(&cut, moving);
        let angle = if a2_far { angles[i] } else { -angles[i] };
        let (pa, pb) = (pos[fixed], pos[moving]);
        let axis_from = if a2_far { pa } else { pb };
        let axis_to = if a2_far { pb } else { pa };
        for (atom, d) in side.iter().enumerate() {
            if *d != usize::MAX {
                pos[atom] = quaternion_rotate(pos[atom], axis_from, axis_to, angle);
            }
        }
    }
    let rigid = adjacency(m, &keys);
    let ids: Vec<usize> = subset.iter().copied().collect();
    let mut total = 0.0;
    for (x, &u) in ids.iter().enumerate() {
        let same_fragment = bfs(&rigid, u);
        let path = bfs(&full, u);
        for &v in &ids[x + 1..] {
            if same_fragment[v] == usize::MAX && path[v] >= 3 {
                total += (0..3).map(|k| (pos[u][k] - pos[v][k]).powi(2)).sum::<f64>();
            }
        }
    }
    total
}

pub fn torsion_pairs(g: &TorsionGraph) -> Vec<(usize, usize)> {
    g.torsions.iter().map(|t| (t.a1, t.a2)).collect()
}

/// TRIPOS mol2 text for `m`; every bond is written as single.
pub fn to_mol2(m: &Molecule) -> String {
    let mut s = format!(
        "@<TRIPOS>MOLECULE\n{}\n{} {} 1 0 0\nSMALL\nNO_CHARGES\n\n@<TRIPOS>ATOM\n",
        m.name,
        m.atom_count(),
        m.bonds.len()
    );
    for a in &m.atoms {
        let [x, y, z] = a.position;
        s += &format!(
            "{:>7} {}{:<4} {x:>10.4} {y:>10.4} {z:>10.4} {}.3 1 LIG1 0.0000\n",
            a.id + 1,
            a.element,
            a.id + 1,
            a.element
        );
    }
    s += "@<TRIPOS>BOND\n";
    for (i, b) in m.bonds.iter().enumerate() {
        s += &format!("{:>6} {:>4} {:>4} 1\n", i + 1, b.a + 1, b.b + 1);
    }
    s
}

/// Writes `m` as mol2 into `dir` and returns the path.
pub fn write_mol2(dir: &std::path::Path, m: &Molecule) -> PathBuf {
    let path = dir.join(format!("{}.mol2", m.name));
    std::fs::write(&path, to_mol2(m)).unwrap();
    path
}
