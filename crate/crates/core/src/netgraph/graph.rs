use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use crate::error::{Error, Result};

/// Directed graph over vertices `0..n` with explicit out-edge sets.
///
/// Undirected graphs are stored with both orientations of every edge. When
/// `has_self_loops` is set every vertex carries `(i, i)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectedGraph {
    out_edges: Vec<BTreeSet<usize>>,
    has_self_loops: bool,
}

impl DirectedGraph {
    pub fn new(n_vertices: usize, self_loops: bool) -> Result<Self> {
        if n_vertices == 0 {
            return Err(Error::arg("graph must have at least one vertex"));
        }
        let mut out_edges = vec![BTreeSet::new(); n_vertices];
        if self_loops {
            for (i, set) in out_edges.iter_mut().enumerate() {
                set.insert(i);
            }
        }
        Ok(Self {
            out_edges,
            has_self_loops: self_loops,
        })
    }

    pub fn from_edges(n_vertices: usize, self_loops: bool, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Self::new(n_vertices, self_loops)?;
        for &(a, b) in edges {
            g.add_edge(a, b)?;
        }
        Ok(g)
    }

    pub fn from_undirected_edges(
        n_vertices: usize,
        self_loops: bool,
        edges: &[(usize, usize)],
    ) -> Result<Self> {
        let mut g = Self::new(n_vertices, self_loops)?;
        for &(a, b) in edges {
            g.add_undirected_edge(a, b)?;
        }
        Ok(g)
    }

    /// Every ordered pair, self-loops included.
    pub fn complete(n_vertices: usize) -> Result<Self> {
        let mut g = Self::new(n_vertices, true)?;
        for set in g.out_edges.iter_mut() {
            set.extend(0..n_vertices);
        }
        Ok(g)
    }

    /// Undirected path `0 - 1 - ... - n-1`.
    pub fn undirected_chain(n_vertices: usize, self_loops: bool) -> Result<Self> {
        let edges: Vec<_> = (1..n_vertices).map(|i| (i - 1, i)).collect();
        Self::from_undirected_edges(n_vertices, self_loops, &edges)
    }

    /// Directed path `0 -> 1 -> ... -> n-1`.
    pub fn directed_chain(n_vertices: usize, self_loops: bool) -> Result<Self> {
        let edges: Vec<_> = (1..n_vertices).map(|i| (i - 1, i)).collect();
        Self::from_edges(n_vertices, self_loops, &edges)
    }

    /// Directed cycle `0 -> 1 -> ... -> n-1 -> 0`.
    pub fn directed_cycle(n_vertices: usize, self_loops: bool) -> Result<Self> {
        let edges: Vec<_> = (0..n_vertices).map(|i| (i, (i + 1) % n_vertices)).collect();
        Self::from_edges(n_vertices, self_loops, &edges)
    }

    /// Undirected ring `0 - 1 - ... - n-1 - 0`.
    pub fn undirected_ring(n_vertices: usize, self_loops: bool) -> Result<Self> {
        let edges: Vec<_> = (0..n_vertices).map(|i| (i, (i + 1) % n_vertices)).collect();
        Self::from_undirected_edges(n_vertices, self_loops, &edges)
    }

    pub fn n_vertices(&self) -> usize {
        self.out_edges.len()
    }

    pub fn has_self_loops(&self) -> bool {
        self.has_self_loops
    }

    fn check_vertex(&self, v: usize) -> Result<()> {
        if v >= self.n_vertices() {
            Err(Error::arg(format!(
                "vertex {} out of range for graph with {} vertices",
                v + 1,
                self.n_vertices()
            )))
        } else {
            Ok(())
        }
    }

    pub fn add_edge(&mut self, from: usize, to: usize) -> Result<()> {
        self.check_vertex(from)?;
        self.check_vertex(to)?;
        self.out_edges[from].insert(to);
        Ok(())
    }

    pub fn add_undirected_edge(&mut self, a: usize, b: usize) -> Result<()> {
        self.add_edge(a, b)?;
        self.add_edge(b, a)
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.out_edges
            .get(from)
            .is_some_and(|set| set.contains(&to))
    }

    pub fn out_neighbors(&self, v: usize) -> &BTreeSet<usize> {
        &self.out_edges[v]
    }

    /// `{ j : (j, v) in E }`, ascending.
    pub fn in_neighbors(&self, v: usize) -> Vec<usize> {
        (0..self.n_vertices())
            .filter(|&j| self.out_edges[j].contains(&v))
            .collect()
    }

    /// Neighbors of `v` in the symmetrized graph, `v` itself included.
    pub fn symmetric_neighbors(&self, v: usize) -> BTreeSet<usize> {
        let mut set: BTreeSet<usize> = self.out_edges[v].clone();
        set.extend(self.in_neighbors(v));
        set.insert(v);
        set
    }

    /// Both orientations of every edge are present.
    pub fn is_symmetric(&self) -> bool {
        self.edges().all(|(a, b)| self.has_edge(b, a))
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.out_edges
            .iter()
            .enumerate()
            .flat_map(|(a, set)| set.iter().map(move |&b| (a, b)))
    }

    pub fn n_edges(&self) -> usize {
        self.out_edges.iter().map(BTreeSet::len).sum()
    }

    /// Whether `a` and `b` are distinct and linked in either direction.
    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        a != b && (self.has_edge(a, b) || self.has_edge(b, a))
    }

    /// Vertices reachable from `source` along directed edges, `source` included.
    pub fn reachable_from(&self, source: usize) -> Result<BTreeSet<usize>> {
        self.check_vertex(source)?;
        let mut seen = BTreeSet::from([source]);
        let mut queue = VecDeque::from([source]);
        while let Some(v) = queue.pop_front() {
            for &w in &self.out_edges[v] {
                if seen.insert(w) {
                    queue.push_back(w);
                }
            }
        }
        Ok(seen)
    }

    pub fn is_strongly_connected(&self) -> bool {
        (0..self.n_vertices()).all(|v| {
            self.reachable_from(v)
                .map(|r| r.len() == self.n_vertices())
                .unwrap_or(false)
        })
    }
}

impl fmt::Display for DirectedGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", super::io::format_graph(self))
    }
}

/// Vertices reachable from `i` in the sensing graph (the set of agents whose
/// trajectories are influenced by agent `i`'s gain).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReachSet {
    pub source: usize,
    pub members: BTreeSet<usize>,
}

pub fn reachable_set(sensing: &DirectedGraph, i: usize) -> Result<ReachSet> {
    Ok(ReachSet {
        source: i,
        members: sensing.reachable_from(i)?,
    })
}

/// Learning graph: `(k, i)` is an edge iff `k` is a cost-graph neighbor of some
/// agent reachable from `i` in the sensing graph.
pub fn build_learning_graph(cost: &DirectedGraph, sensing: &DirectedGraph) -> Result<DirectedGraph> {
    let n = cost.n_vertices();
    if sensing.n_vertices() != n {
        return Err(Error::arg(format!(
            "cost graph has {} vertices but sensing graph has {}",
            n,
            sensing.n_vertices()
        )));
    }
    let mut learning = DirectedGraph::new(n, true)?;
    for i in 0..n {
        for &j in &reachable_set(sensing, i)?.members {
            for &k in cost.out_neighbors(j) {
                learning.add_edge(k, i)?;
            }
            learning.add_edge(j, i)?;
        }
    }
    Ok(learning)
}
