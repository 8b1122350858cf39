//! Cost, sensing and learning graphs, and non-adjacent clustering.

mod cluster;
mod graph;
pub mod io;

pub use cluster::{
    cluster_non_adjacent, min_cluster_trials, validate_clustering, ClusterMode, Clustering,
    ClusteringReport,
};
pub use graph::{build_learning_graph, reachable_set, DirectedGraph, ReachSet};
