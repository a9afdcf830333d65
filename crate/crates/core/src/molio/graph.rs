use std::collections::{BTreeSet, VecDeque};

use super::Bond;

/// Adjacency view of a bond list. Edges carry the index of their bond.
#[derive(Debug, Clone)]
pub struct BondGraph {
    adj: Vec<Vec<(usize, usize)>>,
    edges: Vec<(usize, usize)>,
}

impl BondGraph {
    pub fn new(atom_count: usize, bonds: &[Bond]) -> Self {
        let mut adj = vec![Vec::new(); atom_count];
        let mut edges = Vec::with_capacity(bonds.len());
        for (i, b) in bonds.iter().enumerate() {
            adj[b.a].push((b.b, i));
            adj[b.b].push((b.a, i));
            edges.push((b.a, b.b));
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Self { adj, edges }
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn neighbors(&self, atom: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj[atom].iter().copied()
    }

    pub fn degree(&self, atom: usize) -> usize {
        self.adj[atom].len()
    }

    /// Indices of bridge edges (Tarjan low-link).
    pub fn bridges(&self) -> BTreeSet<usize> {
        let n = self.adj.len();
        let mut disc = vec![usize::MAX; n];
        let mut low = vec![0usize; n];
        let mut timer = 0;
        let mut out = BTreeSet::new();
        for start in 0..n {
            if disc[start] != usize::MAX {
                continue;
            }
            // (vertex, edge used to enter it, next neighbor slot)
            let mut stack: Vec<(usize, usize, usize)> = vec![(start, usize::MAX, 0)];
            disc[start] = timer;
            low[start] = timer;
            timer += 1;
            while let Some(frame) = stack.last_mut() {
                let (v, via, slot) = *frame;
                if slot < self.adj[v].len() {
                    frame.2 += 1;
                    let (w, e) = self.adj[v][slot];
                    if e == via {
                        continue;
                    }
                    if disc[w] == usize::MAX {
                        disc[w] = timer;
                        low[w] = timer;
                        timer += 1;
                        stack.push((w, e, 0));
                    } else {
                        low[v] = low[v].min(disc[w]);
                    }
                } else {
                    stack.pop();
                    if let Some(&(parent, _, _)) = stack.last() {
                        low[parent] = low[parent].min(low[v]);
                        if low[v] > disc[parent] {
                            out.insert(via);
                        }
                    }
                }
            }
        }
        out
    }

    /// Connected-component label per atom, ignoring the `removed` edges.
    /// Labels are assigned in order of each component's lowest atom id.
    pub fn components(&self, removed: Option<&BTreeSet<usize>>) -> Vec<usize> {
        let n = self.adj.len();
        let mut label = vec![usize::MAX; n];
        let mut next = 0;
        for start in 0..n {
            if label[start] != usize::MAX {
                continue;
            }
            label[start] = next;
            let mut queue = VecDeque::from([start]);
            while let Some(v) = queue.pop_front() {
                for &(w, e) in &self.adj[v] {
                    if removed.is_some_and(|r| r.contains(&e)) || label[w] != usize::MAX {
                        continue;
                    }
                    label[w] = next;
                    queue.push_back(w);
                }
            }
            next += 1;
        }
        label
    }

    pub fn component_count(&self, removed: Option<&BTreeSet<usize>>) -> usize {
        self.components(removed).into_iter().max().map_or(0, |m| m + 1)
    }

    /// Breadth-first hop counts from `source`; `usize::MAX` when unreachable.
    pub fn distances_from(&self, source: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.adj.len()];
        dist[source] = 0;
        let mut queue = VecDeque::from([source]);
        while let Some(v) = queue.pop_front() {
            for &(w, _) in &self.adj[v] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    pub fn edge(&self, index: usize) -> (usize, usize) {
        self.edges[index]
    }
}
