//! Interdiction plans, budgets, and the node/edge instance transforms.
//!
//! A plan is the sensor indicator `r` over directed pairs together with the
//! efficiency map `d`. Node-mode plans are derived from a node set `Q`:
//! interdicting node `i` places a sensor on every graph edge leaving `i`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evader::{EvaderChain, EvaderEnsemble};
use crate::graph::{Arc, DiGraph};
use crate::instance::{InstanceError, UmeInstance};
use nalgebra::DMatrix;

#[derive(Debug, Error)]
pub enum InterdictionError {
    #[error("node {node} is not in the graph (node count {node_count})")]
    UnknownNode { node: usize, node_count: usize },
    #[error("({0}, {1}) is not a sensor-eligible edge")]
    UnknownEdge(usize, usize),
    #[error("efficiency {value} for {pair:?} is outside [0, 1]")]
    EfficiencyRange { pair: Option<(usize, usize)>, value: f64 },
    #[error("transform expects a {expected:?}-mode instance, got {found:?}")]
    WrongMode { expected: Mode, found: Mode },
    #[error("node {node} has out-edges with differing efficiencies; a single internal edge cannot reproduce them")]
    NonUniformEfficiency { node: usize },
    #[error(transparent)]
    Instance(#[from] Box<InstanceError>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Node,
    Edge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BudgetUnit {
    Nodes,
    Edges,
}

impl BudgetUnit {
    pub fn mode(self) -> Mode {
        match self {
            BudgetUnit::Nodes => Mode::Node,
            BudgetUnit::Edges => Mode::Edge,
        }
    }
}

/// Cardinality budget: `|Q| <= B` in node mode, `||r|| <= beta` in edge mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    pub limit: usize,
    pub unit: BudgetUnit,
}

impl Budget {
    pub fn nodes(limit: usize) -> Self {
        Self { limit, unit: BudgetUnit::Nodes }
    }

    pub fn edges(limit: usize) -> Self {
        Self { limit, unit: BudgetUnit::Edges }
    }

    pub fn admits(&self, plan: &InterdictionPlan) -> bool {
        match self.unit {
            BudgetUnit::Nodes => plan.node_set().is_some_and(|q| q.len() <= self.limit),
            BudgetUnit::Edges => plan.sensors().len() <= self.limit,
        }
    }
}

/// Direction-specific detection probabilities `d_ij`, with a default for
/// pairs that carry no override.
#[derive(Debug, Clone, PartialEq)]
pub struct Efficiency {
    default: f64,
    overrides: BTreeMap<(usize, usize), f64>,
}

fn check_unit(pair: Option<(usize, usize)>, value: f64) -> Result<f64, InterdictionError> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(InterdictionError::EfficiencyRange { pair, value })
    }
}

impl Efficiency {
    pub fn uniform(default: f64) -> Result<Self, InterdictionError> {
        Self::new(default, [])
    }

    /// Every edge fully interdictable.
    pub fn perfect() -> Self {
        Self { default: 1.0, overrides: BTreeMap::new() }
    }

    pub fn new(
        default: f64,
        overrides: impl IntoIterator<Item = ((usize, usize), f64)>,
    ) -> Result<Self, InterdictionError> {
        let default = check_unit(None, default)?;
        let mut map = BTreeMap::new();
        for (pair, d) in overrides {
            map.insert(pair, check_unit(Some(pair), d)?);
        }
        Ok(Self { default, overrides: map })
    }

    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.overrides.get(&(u, v)).copied().unwrap_or(self.default)
    }

    pub fn default_value(&self) -> f64 {
        self.default
    }

    pub fn overrides(&self) -> &BTreeMap<(usize, usize), f64> {
        &self.overrides
    }

    pub fn set(&mut self, u: usize, v: usize, d: f64) -> Result<(), InterdictionError> {
        self.overrides.insert((u, v), check_unit(Some((u, v)), d)?);
        Ok(())
    }
}

/// Sensor indicator `r` plus efficiencies `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct InterdictionPlan {
    mode: Mode,
    node_set: Option<BTreeSet<usize>>,
    sensors: BTreeSet<(usize, usize)>,
    efficiency: Efficiency,
}

impl InterdictionPlan {
    pub fn empty(mode: Mode, efficiency: Efficiency) -> Self {
        Self {
            mode,
            node_set: (mode == Mode::Node).then(BTreeSet::new),
            sensors: BTreeSet::new(),
            efficiency,
        }
    }

    /// Edge-mode plan with a sensor on each listed pair. Pairs are not
    /// checked against any graph here; `UmeInstance::edge_plan` does that.
    pub fn from_edges(edges: impl IntoIterator<Item = (usize, usize)>, efficiency: Efficiency) -> Self {
        Self {
            mode: Mode::Edge,
            node_set: None,
            sensors: edges.into_iter().collect(),
            efficiency,
        }
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn node_set(&self) -> Option<&BTreeSet<usize>> {
        self.node_set.as_ref()
    }

    pub fn sensors(&self) -> &BTreeSet<(usize, usize)> {
        &self.sensors
    }

    pub fn efficiency(&self) -> &Efficiency {
        &self.efficiency
    }

    pub fn is_interdicted(&self, u: usize, v: usize) -> bool {
        self.sensors.contains(&(u, v))
    }

    /// Effective detection probability `r_ij * d_ij` of one step.
    pub fn detection(&self, u: usize, v: usize) -> f64 {
        if self.is_interdicted(u, v) {
            self.efficiency.get(u, v)
        } else {
            0.0
        }
    }

    /// `(i, j, d_ij)` for every sensor; pairs with `d = 0` are skipped.
    pub fn kills(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.sensors
            .iter()
            .map(|&(u, v)| (u, v, self.efficiency.get(u, v)))
            .filter(|&(_, _, d)| d > 0.0)
    }

    /// Largest node index referenced by a sensor.
    pub fn max_node(&self) -> Option<usize> {
        self.sensors.iter().map(|&(u, v)| u.max(v)).max()
    }
}

/// Node-mode plan: `r_ij = 1` exactly when `i` is in `nodes` and `(i, j)` is
/// an edge of `g`.
pub fn plan_from_nodes(
    g: &DiGraph,
    nodes: impl IntoIterator<Item = usize>,
    efficiency: &Efficiency,
) -> Result<InterdictionPlan, InterdictionError> {
    let mut node_set = BTreeSet::new();
    let mut sensors = BTreeSet::new();
    for q in nodes {
        if q >= g.node_count() {
            return Err(InterdictionError::UnknownNode { node: q, node_count: g.node_count() });
        }
        node_set.insert(q);
        sensors.extend(g.out_arcs(q).iter().map(|a| (a.from, a.to)));
    }
    Ok(InterdictionPlan {
        mode: Mode::Node,
        node_set: Some(node_set),
        sensors,
        efficiency: efficiency.clone(),
    })
}

fn boxed(e: InstanceError) -> InterdictionError {
    InterdictionError::Instance(Box::new(e))
}

/// Subdivides every sensor-eligible pair `(u, v)` with a fresh node
/// `x_uv`, turning an edge-mode instance into a node-mode one.
///
/// Evaders move `u -> x_uv` with the original probability `M_uv` and then
/// `x_uv -> v` with probability 1. The edge `(x_uv, v)` carries `d_uv`;
/// out-edges of original nodes carry `d = 0`, so only the subdivision nodes
/// are meaningful sensor sites. Fresh nodes are numbered after the
/// originals in the order of `inst.arcs()`.
pub fn edge_to_node_instance(inst: &UmeInstance) -> Result<UmeInstance, InterdictionError> {
    if inst.mode() != Mode::Edge {
        return Err(InterdictionError::WrongMode { expected: Mode::Edge, found: inst.mode() });
    }
    let n = inst.node_count();
    let arcs = inst.arcs();
    let total = n + arcs.len();
    let mut new_arcs = Vec::with_capacity(2 * arcs.len());
    let mut overrides = Vec::new();
    let weight_of = |u: usize, v: usize| {
        inst.graph()
            .out_arcs(u)
            .iter()
            .find(|a| a.to == v)
            .and_then(|a| a.weight)
    };
    for (k, &(u, v)) in arcs.iter().enumerate() {
        let x = n + k;
        let w = weight_of(u, v);
        new_arcs.push(Arc { from: u, to: x, weight: w });
        new_arcs.push(Arc { from: x, to: v, weight: w });
        overrides.push(((x, v), inst.efficiency().get(u, v)));
    }
    let graph = DiGraph::new(total, new_arcs).map_err(|e| boxed(InstanceError::Graph(e)))?;
    let efficiency = Efficiency::new(0.0, overrides)?;

    let chains = inst
        .ensemble()
        .chains()
        .iter()
        .map(|c| {
            let mut m = DMatrix::zeros(total, total);
            for (k, &(u, v)) in arcs.iter().enumerate() {
                let x = n + k;
                m[(u, x)] = c.transition[(u, v)];
                m[(x, v)] = 1.0;
            }
            let mut source = c.source.clone();
            source.resize(total, 0.0);
            EvaderChain::new(source, m, c.target, c.weight)
        })
        .collect();
    let ensemble = EvaderEnsemble::new(chains).map_err(|e| boxed(InstanceError::Evader(e)))?;
    UmeInstance::new(graph, ensemble, efficiency, Budget::nodes(inst.budget().limit)).map_err(boxed)
}

/// Splits every node `u` into `u_in = 2u` and `u_out = 2u + 1` joined by an
/// internal edge that carries `u`'s interdiction.
///
/// In-edges of `u` enter `u_in`, out-edges leave `u_out`, and each chain's
/// target becomes `t_in`. Only internal edges get nonzero efficiency. A
/// chain self-loop at `u` becomes a self-loop at `u_out`, so it is not
/// re-interdicted (node-mode sensors never cover self-loops). Requires that
/// all graph out-edges of a node share one efficiency.
pub fn node_to_edge_instance(inst: &UmeInstance) -> Result<UmeInstance, InterdictionError> {
    if inst.mode() != Mode::Node {
        return Err(InterdictionError::WrongMode { expected: Mode::Node, found: inst.mode() });
    }
    let n = inst.node_count();
    let g = inst.graph();
    let eff = inst.efficiency();
    let (node_in, node_out) = (|u: usize| 2 * u, |u: usize| 2 * u + 1);

    let mut overrides = Vec::with_capacity(n);
    for u in 0..n {
        let outs = g.out_arcs(u);
        let d = match outs.first() {
            Some(a) => eff.get(u, a.to),
            None => eff.default_value(),
        };
        if outs.iter().any(|a| eff.get(u, a.to) != d) {
            return Err(InterdictionError::NonUniformEfficiency { node: u });
        }
        overrides.push(((node_in(u), node_out(u)), d));
    }

    let mut arcs: Vec<Arc> = (0..n)
        .map(|u| Arc { from: node_in(u), to: node_out(u), weight: None })
        .collect();
    arcs.extend(g.arcs().iter().map(|a| Arc {
        from: node_out(a.from),
        to: node_in(a.to),
        weight: a.weight,
    }));
    let graph = DiGraph::new(2 * n, arcs).map_err(|e| boxed(InstanceError::Graph(e)))?;
    let efficiency = Efficiency::new(0.0, overrides)?;

    let chains = inst
        .ensemble()
        .chains()
        .iter()
        .map(|c| {
            let mut m = DMatrix::zeros(2 * n, 2 * n);
            let mut source = vec![0.0; 2 * n];
            for u in 0..n {
                source[node_in(u)] = c.source[u];
                if u != c.target {
                    m[(node_in(u), node_out(u))] = 1.0;
                }
                for v in 0..n {
                    let p = c.transition[(u, v)];
                    if p == 0.0 {
                        continue;
                    }
                    if u == v {
                        m[(node_out(u), node_out(u))] = p;
                    } else {
                        m[(node_out(u), node_in(v))] = p;
                    }
                }
            }
            EvaderChain::new(source, m, node_in(c.target), c.weight)
        })
        .collect();
    let ensemble = EvaderEnsemble::new(chains).map_err(|e| boxed(InstanceError::Evader(e)))?;
    UmeInstance::new(graph, ensemble, efficiency, Budget::edges(inst.budget().limit)).map_err(boxed)
}
