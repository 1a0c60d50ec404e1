//! Competing recommenders: group popularity and the Mann-Whitney
//! dependency-graph method.

mod depgraph;
mod grppop;
mod mwu;

pub use depgraph::{
    build_dependency_graph, depgraph_rank, DepGraphConfig, DependencyEdge, DependencyGraph,
};
pub use grppop::{build_grppop, grppop_rank, GroupPopModel};
pub use mwu::{exact_p, mann_whitney_u, normal_p, u_statistic, MwuResult, PMethod, EXACT_MAX_N};
