//! Sensor placement against unreactive Markovian evaders.
//!
//! Evaders are absorbing Markov chains walking toward a killing target;
//! sensors on edges (or on every edge leaving a node) detect a passing evader
//! with a per-edge efficiency. This crate evaluates the capture probability of
//! a placement exactly, searches for the best placement under a cardinality
//! budget, and builds and checks the two-evader instances that encode Planar
//! Vertex Cover.
//!
//! Modules:
//!
//! - [`graph`]: directed and undirected graphs, edge-list I/O.
//! - [`evader`]: chains, ensembles, and the capture probability.
//! - [`interdiction`]: plans, budgets, node/edge instance transforms.
//! - [`instance`]: the solvable unit.
//! - [`coloring`]: exact four-coloring.
//! - [`reduction`]: vertex cover to two-evader interdiction.
//! - [`solvers`]: exhaustive and greedy placement, the `<J> = 1` decision.
//! - [`oracles`]: independent references used for verification.
//! - [`document`]: JSON documents.
//! - [`generate`]: planar test graphs.

pub mod coloring;
pub mod document;
pub mod evader;
pub mod generate;
pub mod graph;
pub mod instance;
pub mod interdiction;
mod linalg;
pub mod oracles;
pub mod reduction;
pub mod solvers;

pub use coloring::{four_color, verify_coloring, Color, ColorAssignment, ColoringError, ColoringOptions};
pub use evader::{capture_breakdown, capture_probability, validate_chain, weighted_capture, EvalError, EvaderChain, EvaderEnsemble};
pub use graph::{to_directed, DiGraph, GraphError, UndirectedGraph};
pub use instance::{Candidate, InstanceError, UmeInstance};
pub use interdiction::{
    edge_to_node_instance, node_to_edge_instance, plan_from_nodes, Budget, BudgetUnit, Efficiency, InterdictionPlan,
    Mode,
};
pub use linalg::RCOND_THRESHOLD;
pub use reduction::{build_evaders, build_ume_graph, edge_traversal_report, reduce_pvc, ReductionArtifacts};
pub use solvers::{decide_perfect, solve_exact, solve_greedy, Answer, Decision, SolveResult};
