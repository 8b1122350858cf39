use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::graph::DirectedGraph;

/// Partition of the agents into clusters whose members are pairwise
/// non-adjacent in a reference graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clustering {
    clusters: Vec<Vec<usize>>,
}

impl Clustering {
    /// Clusters are kept as given; each cluster's members are sorted.
    pub fn new(clusters: Vec<Vec<usize>>) -> Self {
        let clusters = clusters
            .into_iter()
            .map(|mut c| {
                c.sort_unstable();
                c
            })
            .collect();
        Self { clusters }
    }

    /// One cluster per agent.
    pub fn singletons(n: usize) -> Self {
        Self::new((0..n).map(|i| vec![i]).collect())
    }

    /// One cluster holding every agent.
    pub fn single(n: usize) -> Self {
        Self::new(vec![(0..n).collect()])
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn clusters(&self) -> &[Vec<usize>] {
        &self.clusters
    }

    pub fn cluster(&self, index: usize) -> &[usize] {
        &self.clusters[index]
    }

    /// Largest cluster size.
    pub fn max_cluster_size(&self) -> usize {
        self.clusters.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Index of the cluster containing `agent`.
    pub fn cluster_of(&self, agent: usize) -> Option<usize> {
        self.clusters.iter().position(|c| c.contains(&agent))
    }

    /// Size of the cluster containing `agent`.
    pub fn size_of_cluster_containing(&self, agent: usize) -> usize {
        self.cluster_of(agent)
            .map(|c| self.clusters[c].len())
            .unwrap_or(0)
    }

    /// Clusters with 1-based agent ids, for display and files.
    pub fn one_based(&self) -> Vec<Vec<usize>> {
        self.clusters
            .iter()
            .map(|c| c.iter().map(|v| v + 1).collect())
            .collect()
    }

    /// Canonical form (clusters sorted by their smallest member) for comparing
    /// partitions irrespective of cluster order.
    pub fn canonical(&self) -> Vec<Vec<usize>> {
        let mut c = self.clusters.clone();
        c.sort();
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ClusterMode {
    /// Pick uniformly among the remaining candidates.
    #[default]
    Random,
    /// Always pick the smallest remaining vertex id.
    LowestIndex,
}

/// Greedy non-adjacent clustering.
///
/// Repeatedly opens a new cluster and fills it by picking a candidate that is
/// neither already clustered nor adjacent to a member picked in this round;
/// the picked vertex and its (symmetrized) neighborhood are then blocked for
/// the rest of the round.
pub fn cluster_non_adjacent<R: Rng + ?Sized>(
    graph: &DirectedGraph,
    rng: &mut R,
    mode: ClusterMode,
) -> Clustering {
    let n = graph.n_vertices();
    let neighbors: Vec<BTreeSet<usize>> = (0..n).map(|v| graph.symmetric_neighbors(v)).collect();

    let mut clustered = vec![false; n];
    let mut n_clustered = 0;
    let mut clusters = Vec::new();
    while n_clustered < n {
        let mut blocked = clustered.clone();
        let mut current = Vec::new();
        loop {
            let candidates: Vec<usize> = (0..n).filter(|&v| !blocked[v]).collect();
            if candidates.is_empty() {
                break;
            }
            let pick = match mode {
                ClusterMode::LowestIndex => candidates[0],
                ClusterMode::Random => candidates[rng.random_range(0..candidates.len())],
            };
            current.push(pick);
            for &w in &neighbors[pick] {
                blocked[w] = true;
            }
        }
        for &v in &current {
            clustered[v] = true;
        }
        n_clustered += current.len();
        clusters.push(current);
    }
    Clustering::new(clusters)
}

/// Best of `trials` randomized clusterings, by fewest clusters (ties keep the
/// earliest). The lowest-index clustering is evaluated as an additional
/// candidate before the random trials.
pub fn min_cluster_trials<R: Rng + ?Sized>(
    graph: &DirectedGraph,
    trials: usize,
    rng: &mut R,
) -> Clustering {
    let mut best = cluster_non_adjacent(graph, rng, ClusterMode::LowestIndex);
    for _ in 0..trials.max(1) {
        let c = cluster_non_adjacent(graph, rng, ClusterMode::Random);
        if c.len() < best.len() {
            best = c;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClusteringReport {
    pub disjoint: bool,
    pub covers_all: bool,
    pub independent: bool,
    /// 1-based `(a, b)` pairs found adjacent inside one cluster.
    pub conflicts: Vec<(usize, usize)>,
    /// 1-based ids appearing in more than one cluster or out of range.
    pub bad_vertices: Vec<usize>,
}

impl ClusteringReport {
    pub fn is_valid(&self) -> bool {
        self.disjoint && self.covers_all && self.independent
    }
}

pub fn validate_clustering(graph: &DirectedGraph, c: &Clustering) -> ClusteringReport {
    let n = graph.n_vertices();
    let mut count = vec![0usize; n];
    let mut bad = BTreeSet::new();
    for cluster in c.clusters() {
        for &v in cluster {
            if v < n {
                count[v] += 1;
                if count[v] > 1 {
                    bad.insert(v + 1);
                }
            } else {
                bad.insert(v + 1);
            }
        }
    }
    let disjoint = count.iter().all(|&k| k <= 1) && bad.iter().all(|&v| v <= n);
    let covers_all = count.iter().all(|&k| k >= 1);

    let mut conflicts = Vec::new();
    for cluster in c.clusters() {
        for (pos, &a) in cluster.iter().enumerate() {
            for &b in &cluster[pos + 1..] {
                if a < n && b < n && graph.adjacent(a, b) {
                    conflicts.push((a + 1, b + 1));
                }
            }
        }
    }
    ClusteringReport {
        disjoint,
        covers_all,
        independent: conflicts.is_empty(),
        conflicts,
        bad_vertices: bad.into_iter().collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};

    fn chain4() -> DirectedGraph {
        DirectedGraph::undirected_chain(4, true).unwrap()
    }

    #[test]
    fn chain_lowest_index_gives_alternating_clusters() {
        let mut rng = stream(0, Purpose::Clustering, 0, 0);
        let c = cluster_non_adjacent(&chain4(), &mut rng, ClusterMode::LowestIndex);
        assert_eq!(c.one_based(), vec![vec![1, 3], vec![2, 4]]);
    }

    #[test]
    fn single_vertex() {
        let g = DirectedGraph::new(1, true).unwrap();
        let mut rng = stream(0, Purpose::Clustering, 0, 0);
        let c = cluster_non_adjacent(&g, &mut rng, ClusterMode::Random);
        assert_eq!(c.one_based(), vec![vec![1]]);
    }

    #[test]
    fn complete_graph_gives_singletons() {
        let g = DirectedGraph::complete(4).unwrap();
        let mut rng = stream(3, Purpose::Clustering, 0, 0);
        let c = cluster_non_adjacent(&g, &mut rng, ClusterMode::Random);
        assert_eq!(c.len(), 4);
        assert_eq!(min_cluster_trials(&g, 10, &mut rng).len(), 4);
    }

    #[test]
    fn directed_edges_are_symmetrized() {
        let g = DirectedGraph::from_edges(2, true, &[(0, 1)]).unwrap();
        let mut rng = stream(0, Purpose::Clustering, 0, 0);
        let c = cluster_non_adjacent(&g, &mut rng, ClusterMode::LowestIndex);
        assert_eq!(c.len(), 2);
    }

    #[test]
    fn validation_reports() {
        let g = chain4();
        assert!(validate_clustering(&g, &Clustering::new(vec![vec![0, 2], vec![1, 3]])).is_valid());

        let bad = validate_clustering(&g, &Clustering::new(vec![vec![0, 1], vec![2, 3]]));
        assert!(!bad.independent);
        assert!(bad.disjoint && bad.covers_all);
        assert_eq!(bad.conflicts, vec![(1, 2), (3, 4)]);

        let partial = validate_clustering(&g, &Clustering::new(vec![vec![0, 2], vec![1]]));
        assert!(!partial.covers_all);
        assert!(!partial.is_valid());

        let overlap = validate_clustering(&g, &Clustering::new(vec![vec![0, 2], vec![0, 1, 3]]));
        assert!(!overlap.disjoint);
    }

    #[test]
    fn self_loops_do_not_invalidate() {
        let g = DirectedGraph::new(3, true).unwrap();
        assert!(validate_clustering(&g, &Clustering::single(3)).is_valid());
    }
}
