//! Finite site sets with graph metrics.
//!
//! Site `k` carries a label `(i, v)`: `i` is the coordinate along the
//! translation direction and `v` indexes the transverse part. Sites are
//! numbered `k = i * m + v` where `m` is the transverse size.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Finite undirected graph given by vertex count and edge list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    pub vertices: usize,
    pub edges: Vec<(usize, usize)>,
}

impl Graph {
    pub fn path(n: usize) -> Self {
        Graph { vertices: n, edges: (1..n).map(|i| (i - 1, i)).collect() }
    }

    pub fn cycle(n: usize) -> Self {
        let mut edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        if n > 2 {
            edges.push((n - 1, 0));
        }
        Graph { vertices: n, edges }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LatticeKind {
    Cycle { l: usize },
    Torus { lx: usize, ly: usize },
    Cartesian { l: usize, graph: Graph },
    /// An arbitrary graph without translation symmetry.
    Graph { graph: Graph },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    kind: LatticeKind,
    coords: Vec<(usize, usize)>,
    transverse: usize,
    dist: Vec<usize>,
    cycle_period: Option<usize>,
    second_period: Option<usize>,
    local_dims: Vec<usize>,
}

impl Lattice {
    /// Builds the lattice. `local_dims` holds one entry per site, one entry per
    /// transverse index, or a single entry broadcast to every site.
    pub fn new(kind: LatticeKind, local_dims: &[usize]) -> Result<Self> {
        let (l, m, edges, cycle_period, second_period) = match &kind {
            LatticeKind::Cycle { l } => {
                if *l < 2 {
                    return Err(Error::invalid(format!("cycle length must be at least 2, got {l}")));
                }
                (*l, 1, product_edges(&Graph::cycle(*l), &Graph::path(1)), Some(*l), None)
            }
            LatticeKind::Torus { lx, ly } => {
                if *lx < 2 || *ly < 2 {
                    return Err(Error::invalid(format!("torus sides must be at least 2, got {lx}x{ly}")));
                }
                (*lx, *ly, product_edges(&Graph::cycle(*lx), &Graph::cycle(*ly)), Some(*lx), Some(*ly))
            }
            LatticeKind::Cartesian { l, graph } => {
                if *l < 2 || graph.vertices == 0 {
                    return Err(Error::invalid("cartesian product needs cycle length >= 2 and a nonempty graph"));
                }
                (*l, graph.vertices, product_edges(&Graph::cycle(*l), graph), Some(*l), None)
            }
            LatticeKind::Graph { graph } => {
                if graph.vertices == 0 {
                    return Err(Error::invalid("graph must have at least one vertex"));
                }
                (1, graph.vertices, graph.edges.clone(), None, None)
            }
        };
        let n = l * m;
        for &(a, b) in &edges {
            if a >= n || b >= n {
                return Err(Error::invalid(format!("edge ({a}, {b}) references a missing vertex")));
            }
        }
        let dims = match local_dims.len() {
            1 => vec![local_dims[0]; n],
            len if len == m => (0..n).map(|k| local_dims[k % m]).collect(),
            len if len == n => local_dims.to_vec(),
            len => {
                return Err(Error::invalid(format!("{len} local dimensions given for {n} sites")));
            }
        };
        if dims.contains(&0) {
            return Err(Error::invalid("local dimensions must be positive"));
        }
        if cycle_period.is_some() && (0..n).any(|k| dims[k] != dims[k % m]) {
            return Err(Error::invalid("local dimensions must not vary along the translation direction"));
        }
        let dist = all_pairs(n, &edges)?;
        let coords = (0..n).map(|k| (k / m, k % m)).collect();
        Ok(Lattice { kind, coords, transverse: m, dist, cycle_period, second_period, local_dims: dims })
    }

    pub fn cycle(l: usize, local_dim: usize) -> Result<Self> {
        Lattice::new(LatticeKind::Cycle { l }, &[local_dim])
    }

    pub fn torus(lx: usize, ly: usize, local_dim: usize) -> Result<Self> {
        Lattice::new(LatticeKind::Torus { lx, ly }, &[local_dim])
    }

    pub fn kind(&self) -> &LatticeKind {
        &self.kind
    }

    pub fn n_sites(&self) -> usize {
        self.coords.len()
    }

    pub fn dist(&self, a: usize, b: usize) -> usize {
        self.dist[a * self.n_sites() + b]
    }

    /// Label `(i, v)` of site `k`.
    pub fn coord(&self, k: usize) -> (usize, usize) {
        self.coords[k]
    }

    pub fn site(&self, i: usize, v: usize) -> usize {
        i * self.transverse + v
    }

    pub fn transverse_size(&self) -> usize {
        self.transverse
    }

    pub fn cycle_period(&self) -> Option<usize> {
        self.cycle_period
    }

    /// Period of the second torus direction, if any.
    pub fn second_period(&self) -> Option<usize> {
        self.second_period
    }

    pub fn local_dim(&self, k: usize) -> usize {
        self.local_dims[k]
    }

    pub fn local_dims(&self) -> &[usize] {
        &self.local_dims
    }

    /// Largest pairwise distance inside `sites`.
    pub fn diameter(&self, sites: &[usize]) -> usize {
        let mut d = 0;
        for (n, &a) in sites.iter().enumerate() {
            for &b in &sites[n + 1..] {
                d = d.max(self.dist(a, b));
            }
        }
        d
    }

    /// Distance from site `a` to the nearest site of `set`.
    pub fn dist_to_set(&self, a: usize, set: &[usize]) -> usize {
        set.iter().map(|&b| self.dist(a, b)).min().unwrap_or(usize::MAX)
    }

    pub fn set_distance(&self, x: &[usize], y: &[usize]) -> usize {
        x.iter().map(|&a| self.dist_to_set(a, y)).min().unwrap_or(usize::MAX)
    }

    /// Image of site `k` under one step of translation.
    pub fn translate(&self, k: usize) -> Result<usize> {
        let l = self.cycle_period.ok_or_else(|| Error::unsupported("lattice has no translation symmetry"))?;
        let (i, v) = self.coords[k];
        Ok(self.site((i + 1) % l, v))
    }
}

fn product_edges(a: &Graph, b: &Graph) -> Vec<(usize, usize)> {
    let m = b.vertices;
    let mut edges = Vec::new();
    for &(x, y) in &a.edges {
        for v in 0..m {
            edges.push((x * m + v, y * m + v));
        }
    }
    for i in 0..a.vertices {
        for &(u, w) in &b.edges {
            edges.push((i * m + u, i * m + w));
        }
    }
    edges
}

fn all_pairs(n: usize, edges: &[(usize, usize)]) -> Result<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        if a != b {
            adj[a].push(b);
            adj[b].push(a);
        }
    }
    let mut dist = vec![usize::MAX; n * n];
    let mut queue = VecDeque::new();
    for s in 0..n {
        let row = &mut dist[s * n..(s + 1) * n];
        row[s] = 0;
        queue.push_back(s);
        while let Some(a) = queue.pop_front() {
            for &b in &adj[a] {
                if row[b] == usize::MAX {
                    row[b] = row[a] + 1;
                    queue.push_back(b);
                }
            }
        }
    }
    if dist.contains(&usize::MAX) {
        return Err(Error::invalid("lattice graph is not connected"));
    }
    Ok(dist)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cycle_metric() {
        let lat = Lattice::cycle(4, 2).unwrap();
        assert_eq!(lat.dist(0, 2), 2);
        assert_eq!(lat.dist(0, 3), 1);
        assert_eq!(lat.cycle_period(), Some(4));
    }

    #[test]
    fn two_site_cycle_has_single_bond() {
        let lat = Lattice::cycle(2, 2).unwrap();
        assert_eq!(lat.dist(0, 1), 1);
    }

    #[test]
    fn torus_metric_is_periodic_taxicab() {
        let lat = Lattice::torus(3, 3, 2).unwrap();
        assert_eq!(lat.dist(lat.site(0, 0), lat.site(2, 2)), 2);
        assert_eq!(lat.second_period(), Some(3));
    }

    #[test]
    fn cartesian_product_counts_sites() {
        let lat = Lattice::new(LatticeKind::Cartesian { l: 6, graph: Graph::path(2) }, &[2]).unwrap();
        assert_eq!(lat.n_sites(), 12);
        assert_eq!(lat.cycle_period(), Some(6));
        assert_eq!(lat.dist(lat.site(0, 0), lat.site(3, 1)), 4);
    }

    #[test]
    fn metric_axioms_hold() {
        let lat = Lattice::new(LatticeKind::Cartesian { l: 5, graph: Graph::path(3) }, &[2]).unwrap();
        let n = lat.n_sites();
        for a in 0..n {
            for b in 0..n {
                assert_eq!(lat.dist(a, b), lat.dist(b, a));
                assert_eq!(lat.dist(a, b) == 0, a == b);
                for c in 0..n {
                    assert!(lat.dist(a, c) <= lat.dist(a, b) + lat.dist(b, c));
                }
            }
        }
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(matches!(Lattice::cycle(1, 2), Err(Error::InvalidArgument { .. })));
        assert!(matches!(Lattice::torus(3, 0, 2), Err(Error::InvalidArgument { .. })));
        assert!(matches!(Lattice::cycle(4, 0), Err(Error::InvalidArgument { .. })));
    }

    #[test]
    fn translation_requires_period() {
        let lat = Lattice::new(LatticeKind::Graph { graph: Graph::path(3) }, &[2]).unwrap();
        assert!(matches!(lat.translate(0), Err(Error::Unsupported { .. })));
        let cyc = Lattice::cycle(3, 2).unwrap();
        assert_eq!(cyc.translate(2).unwrap(), 0);
    }
}
