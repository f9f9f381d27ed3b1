//! The unit of solving and serialization: graph, evaders, efficiencies,
//! budget, and interdiction mode.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::evader::{EvalError, EvaderEnsemble};
use crate::graph::{DiGraph, GraphError};
use crate::interdiction::{plan_from_nodes, Budget, Efficiency, InterdictionError, InterdictionPlan, Mode};

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Evader(#[from] EvalError),
    #[error(transparent)]
    Interdiction(#[from] InterdictionError),
    #[error("evaders live on {evader_nodes} nodes but the graph has {graph_nodes}")]
    NodeCountMismatch { graph_nodes: usize, evader_nodes: usize },
    #[error("evader {evader} moves {from} -> {to}, which is not a graph edge")]
    UnsupportedTransition { evader: usize, from: usize, to: usize },
    #[error("efficiency override on ({0}, {1}), which is not a sensor-eligible edge")]
    StrayEfficiency(usize, usize),
}

/// Sensor site: a node in node mode, a directed pair in edge mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Candidate {
    Node(usize),
    Edge(usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct UmeInstance {
    graph: DiGraph,
    ensemble: EvaderEnsemble,
    efficiency: Efficiency,
    budget: Budget,
    arcs: Vec<(usize, usize)>,
}

impl UmeInstance {
    /// The interdiction mode follows the budget unit.
    ///
    /// Off-diagonal transitions must follow graph edges. Diagonal entries
    /// (an evader lingering in place) are allowed and become
    /// sensor-eligible self-loop pairs.
    pub fn new(
        graph: DiGraph,
        ensemble: EvaderEnsemble,
        efficiency: Efficiency,
        budget: Budget,
    ) -> Result<Self, InstanceError> {
        let n = graph.node_count();
        if ensemble.dim() != n {
            return Err(InstanceError::NodeCountMismatch { graph_nodes: n, evader_nodes: ensemble.dim() });
        }
        let mut arcs: BTreeSet<(usize, usize)> = graph.pairs().collect();
        for (k, chain) in ensemble.chains().iter().enumerate() {
            for u in 0..n {
                for v in 0..n {
                    if chain.transition[(u, v)] == 0.0 {
                        continue;
                    }
                    if u == v {
                        arcs.insert((u, u));
                    } else if !graph.has_edge(u, v) {
                        return Err(InstanceError::UnsupportedTransition { evader: k, from: u, to: v });
                    }
                }
            }
        }
        if let Some(&(u, v)) = efficiency.overrides().keys().find(|p| !arcs.contains(p)) {
            return Err(InstanceError::StrayEfficiency(u, v));
        }
        Ok(Self {
            graph,
            ensemble,
            efficiency,
            budget,
            arcs: arcs.into_iter().collect(),
        })
    }

    pub fn graph(&self) -> &DiGraph {
        &self.graph
    }

    pub fn ensemble(&self) -> &EvaderEnsemble {
        &self.ensemble
    }

    pub fn efficiency(&self) -> &Efficiency {
        &self.efficiency
    }

    pub fn budget(&self) -> Budget {
        self.budget
    }

    pub fn mode(&self) -> Mode {
        self.budget.unit.mode()
    }

    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    /// Graph edges plus chain self-loops, sorted.
    pub fn arcs(&self) -> &[(usize, usize)] {
        &self.arcs
    }

    pub fn with_budget_limit(mut self, limit: usize) -> Self {
        self.budget.limit = limit;
        self
    }

    /// Nodes that are the target of every evader. Interdicting them changes
    /// nothing because no evader ever leaves them.
    pub fn common_targets(&self) -> BTreeSet<usize> {
        let mut chains = self.ensemble.chains().iter();
        let first = chains.next().map(|c| c.target);
        first
            .filter(|&t| chains.all(|c| c.target == t))
            .into_iter()
            .collect()
    }

    /// Sensor sites a solver searches over: nodes other than the shared
    /// target in node mode, pairs with `d > 0` in edge mode.
    pub fn candidates(&self) -> Vec<Candidate> {
        match self.mode() {
            Mode::Node => {
                let skip = self.common_targets();
                (0..self.node_count())
                    .filter(|u| !skip.contains(u))
                    .map(Candidate::Node)
                    .collect()
            }
            Mode::Edge => self
                .arcs
                .iter()
                .filter(|&&(u, v)| self.efficiency.get(u, v) > 0.0)
                .map(|&(u, v)| Candidate::Edge(u, v))
                .collect(),
        }
    }

    pub fn node_plan(&self, nodes: impl IntoIterator<Item = usize>) -> Result<InterdictionPlan, InterdictionError> {
        plan_from_nodes(&self.graph, nodes, &self.efficiency)
    }

    pub fn edge_plan(&self, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<InterdictionPlan, InterdictionError> {
        let edges: Vec<_> = edges.into_iter().collect();
        if let Some(&(u, v)) = edges.iter().find(|e| self.arcs.binary_search(e).is_err()) {
            return Err(InterdictionError::UnknownEdge(u, v));
        }
        Ok(InterdictionPlan::from_edges(edges, self.efficiency.clone()))
    }

    /// Plan for a set of candidates of this instance's mode.
    pub fn plan_for(&self, selection: &[Candidate]) -> Result<InterdictionPlan, InterdictionError> {
        match self.mode() {
            Mode::Node => self.node_plan(selection.iter().filter_map(|c| match *c {
                Candidate::Node(u) => Some(u),
                Candidate::Edge(..) => None,
            })),
            Mode::Edge => self.edge_plan(selection.iter().filter_map(|c| match *c {
                Candidate::Edge(u, v) => Some((u, v)),
                Candidate::Node(_) => None,
            })),
        }
    }

    /// Checks that every sensor of `plan` sits on an eligible pair.
    pub fn check_plan(&self, plan: &InterdictionPlan) -> Result<(), InterdictionError> {
        if let Some(nodes) = plan.node_set() {
            if let Some(&q) = nodes.iter().find(|&&q| q >= self.node_count()) {
                return Err(InterdictionError::UnknownNode { node: q, node_count: self.node_count() });
            }
        }
        match plan.sensors().iter().find(|e| self.arcs.binary_search(e).is_err()) {
            Some(&(u, v)) => Err(InterdictionError::UnknownEdge(u, v)),
            None => Ok(()),
        }
    }

    /// `(i, j, d_ij)` kill entries produced by one candidate.
    pub(crate) fn kills_of(&self, c: Candidate) -> Vec<(usize, usize, f64)> {
        let entry = |u: usize, v: usize| (u, v, self.efficiency.get(u, v));
        match c {
            Candidate::Node(u) => self.graph.out_arcs(u).iter().map(|a| entry(a.from, a.to)).collect(),
            Candidate::Edge(u, v) => vec![entry(u, v)],
        }
        .into_iter()
        .filter(|&(_, _, d)| d > 0.0)
        .collect()
    }
}
