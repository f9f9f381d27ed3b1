//! JSON documents: instances, plans, and reduction artifacts.
//!
//! Probabilities, efficiencies and weights travel as decimal strings in
//! shortest round-trip form, so a write/read cycle reproduces every value
//! bit for bit. Sparse entries are sorted by index.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::coloring::Color;
use crate::evader::{EvaderChain, EvaderEnsemble};
use crate::graph::{Arc, DiGraph, GraphError};
use crate::instance::{InstanceError, UmeInstance};
use crate::interdiction::{Budget, Efficiency, InterdictionError, InterdictionPlan, Mode};
use crate::reduction::{edge_traversal_report, EdgeTraversal, ReductionArtifacts};

pub const INSTANCE_VERSION: &str = "ume-instance/1";
pub const PLAN_VERSION: &str = "ume-plan/1";
pub const ARTIFACTS_VERSION: &str = "ume-artifacts/1";

#[derive(Debug, Error)]
pub enum DocumentError {
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("unsupported document version {found:?} (expected {expected:?})")]
    Version { found: String, expected: &'static str },
    #[error("mode {mode:?} does not match budget unit {budget:?}")]
    ModeMismatch { mode: Mode, budget: Budget },
    #[error("evader {evader}: node {node} is outside 0..{node_count}")]
    NodeRange { evader: usize, node: usize, node_count: usize },
    #[error("evader {evader}: entry for node {node} is listed twice")]
    DuplicateEntry { evader: usize, node: usize },
    #[error("plan lists {0} but the instance is in {1:?} mode")]
    PlanShape(&'static str, Mode),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Interdiction(#[from] InterdictionError),
}

/// `f64` carried as a decimal string.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decimal(pub f64);

impl fmt::Display for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Display is the shortest string that parses back to the same f64.
        write!(f, "{}", self.0)
    }
}

impl Serialize for Decimal {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Decimal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        f64::from_str(text.trim())
            .map(Decimal)
            .map_err(|_| serde::de::Error::custom(format!("not a decimal number: {text:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeDoc {
    pub from: usize,
    pub to: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<Decimal>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDoc {
    pub node_count: usize,
    pub edges: Vec<EdgeDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

impl GraphDoc {
    pub fn from_digraph(g: &DiGraph) -> Self {
        Self {
            node_count: g.node_count(),
            edges: g
                .arcs()
                .iter()
                .map(|a| EdgeDoc { from: a.from, to: a.to, weight: a.weight.map(Decimal) })
                .collect(),
            labels: g.labels().map(<[String]>::to_vec),
        }
    }

    pub fn to_digraph(&self) -> Result<DiGraph, GraphError> {
        let g = DiGraph::new(
            self.node_count,
            self.edges.iter().map(|e| Arc { from: e.from, to: e.to, weight: e.weight.map(|w| w.0) }),
        )?;
        match &self.labels {
            Some(l) => g.with_labels(l.clone()),
            None => Ok(g),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryDoc {
    pub node: usize,
    pub p: Decimal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowDoc {
    pub node: usize,
    pub entries: Vec<EntryDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaderDoc {
    pub weight: Decimal,
    pub target: usize,
    pub source: Vec<EntryDoc>,
    pub transitions: Vec<RowDoc>,
}

impl EvaderDoc {
    pub fn from_chain(c: &EvaderChain) -> Self {
        let n = c.dim();
        let source = (0..n)
            .filter(|&u| c.source[u] != 0.0)
            .map(|u| EntryDoc { node: u, p: Decimal(c.source[u]) })
            .collect();
        let transitions = (0..n)
            .filter_map(|u| {
                let entries: Vec<EntryDoc> = (0..n)
                    .filter(|&v| c.transition[(u, v)] != 0.0)
                    .map(|v| EntryDoc { node: v, p: Decimal(c.transition[(u, v)]) })
                    .collect();
                (!entries.is_empty()).then_some(RowDoc { node: u, entries })
            })
            .collect();
        Self { weight: Decimal(c.weight), target: c.target, source, transitions }
    }

    pub fn to_chain(&self, index: usize, n: usize) -> Result<EvaderChain, DocumentError> {
        let range = |node: usize| {
            if node < n {
                Ok(node)
            } else {
                Err(DocumentError::NodeRange { evader: index, node, node_count: n })
            }
        };
        let mut source = vec![0.0; n];
        let mut seen = vec![false; n];
        for e in &self.source {
            let u = range(e.node)?;
            if std::mem::replace(&mut seen[u], true) {
                return Err(DocumentError::DuplicateEntry { evader: index, node: u });
            }
            source[u] = e.p.0;
        }
        let mut m = DMatrix::zeros(n, n);
        let mut seen = vec![false; n * n];
        for row in &self.transitions {
            let u = range(row.node)?;
            for e in &row.entries {
                let v = range(e.node)?;
                if std::mem::replace(&mut seen[u * n + v], true) {
                    return Err(DocumentError::DuplicateEntry { evader: index, node: v });
                }
                m[(u, v)] = e.p.0;
            }
        }
        Ok(EvaderChain::new(source, m, self.target, self.weight.0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverrideDoc {
    pub from: usize,
    pub to: usize,
    pub d: Decimal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyDoc {
    pub default: Decimal,
    #[serde(default)]
    pub overrides: Vec<OverrideDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceDocument {
    pub version: String,
    pub graph: GraphDoc,
    pub evaders: Vec<EvaderDoc>,
    pub efficiency: EfficiencyDoc,
    pub budget: Budget,
    pub mode: Mode,
}

fn check_version(found: &str, expected: &'static str) -> Result<(), DocumentError> {
    if found == expected {
        Ok(())
    } else {
        Err(DocumentError::Version { found: found.to_string(), expected })
    }
}

impl InstanceDocument {
    pub fn from_instance(inst: &UmeInstance) -> Self {
        let eff = inst.efficiency();
        Self {
            version: INSTANCE_VERSION.to_string(),
            graph: GraphDoc::from_digraph(inst.graph()),
            evaders: inst.ensemble().chains().iter().map(EvaderDoc::from_chain).collect(),
            efficiency: EfficiencyDoc {
                default: Decimal(eff.default_value()),
                overrides: eff
                    .overrides()
                    .iter()
                    .map(|(&(from, to), &d)| OverrideDoc { from, to, d: Decimal(d) })
                    .collect(),
            },
            budget: inst.budget(),
            mode: inst.mode(),
        }
    }

    /// Builds and validates the instance; every chain must pass validation.
    pub fn to_instance(&self) -> Result<UmeInstance, DocumentError> {
        check_version(&self.version, INSTANCE_VERSION)?;
        if self.mode != self.budget.unit.mode() {
            return Err(DocumentError::ModeMismatch { mode: self.mode, budget: self.budget });
        }
        let graph = self.graph.to_digraph()?;
        let n = graph.node_count();
        let chains = self
            .evaders
            .iter()
            .enumerate()
            .map(|(k, e)| e.to_chain(k, n))
            .collect::<Result<Vec<_>, _>>()?;
        let ensemble = EvaderEnsemble::new(chains).map_err(InstanceError::from)?;
        let efficiency = Efficiency::new(
            self.efficiency.default.0,
            self.efficiency.overrides.iter().map(|o| ((o.from, o.to), o.d.0)),
        )?;
        Ok(UmeInstance::new(graph, ensemble, efficiency, self.budget)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("documents always serialize") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self, DocumentError> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanDocument {
    pub version: String,
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<[usize; 2]>>,
}

impl PlanDocument {
    pub fn from_plan(plan: &InterdictionPlan) -> Self {
        match plan.node_set() {
            Some(nodes) => Self {
                version: PLAN_VERSION.to_string(),
                mode: Mode::Node,
                nodes: Some(nodes.iter().copied().collect()),
                edges: None,
            },
            None => Self {
                version: PLAN_VERSION.to_string(),
                mode: Mode::Edge,
                nodes: None,
                edges: Some(plan.sensors().iter().map(|&(u, v)| [u, v]).collect()),
            },
        }
    }

    /// Resolves the plan against an instance, checking every sensor site.
    pub fn to_plan(&self, inst: &UmeInstance) -> Result<InterdictionPlan, DocumentError> {
        check_version(&self.version, PLAN_VERSION)?;
        let plan = match self.mode {
            Mode::Node => {
                if self.edges.is_some() {
                    return Err(DocumentError::PlanShape("edges", Mode::Node));
                }
                inst.node_plan(self.nodes.iter().flatten().copied())?
            }
            Mode::Edge => {
                if self.nodes.is_some() {
                    return Err(DocumentError::PlanShape("nodes", Mode::Edge));
                }
                inst.edge_plan(self.edges.iter().flatten().map(|e| (e[0], e[1])))?
            }
        };
        inst.check_plan(&plan)?;
        Ok(plan)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("documents always serialize") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self, DocumentError> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeColor {
    pub node: usize,
    pub color: Color,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Normalizer {
    pub node: usize,
    pub z: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassSets {
    pub s1: Vec<usize>,
    pub s2: Vec<usize>,
    pub p1: Vec<usize>,
    pub p2: Vec<usize>,
}

/// Audit trail of one reduction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArtifactsDocument {
    pub version: String,
    pub original_nodes: usize,
    pub original_edges: Vec<[usize; 2]>,
    pub original_budget: usize,
    pub target: usize,
    pub pathological: bool,
    pub coloring: Vec<NodeColor>,
    pub sets: ClassSets,
    pub normalizers: [Vec<Normalizer>; 2],
    pub traversal: Vec<EdgeTraversal>,
}

impl ArtifactsDocument {
    pub fn from_artifacts(a: &ReductionArtifacts) -> Self {
        let list = |s: &std::collections::BTreeSet<usize>| s.iter().copied().collect::<Vec<_>>();
        let norms = |i: usize| {
            a.sets.normalizers[i]
                .iter()
                .map(|(&node, &z)| Normalizer { node, z })
                .collect::<Vec<_>>()
        };
        Self {
            version: ARTIFACTS_VERSION.to_string(),
            original_nodes: a.original.node_count(),
            original_edges: a.original.edges().iter().map(|&(u, v)| [u, v]).collect(),
            original_budget: a.original_budget,
            target: a.target,
            pathological: a.sets.pathological,
            coloring: (0..a.coloring.len())
                .filter_map(|u| a.coloring.get(u).map(|color| NodeColor { node: u, color }))
                .collect(),
            sets: ClassSets {
                s1: list(&a.sets.sources[0]),
                s2: list(&a.sets.sources[1]),
                p1: list(&a.sets.penultimates[0]),
                p2: list(&a.sets.penultimates[1]),
            },
            normalizers: [norms(0), norms(1)],
            traversal: edge_traversal_report(a),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("documents always serialize") + "\n"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coloring::ColoringOptions;
    use crate::generate;
    use crate::reduction::reduce_pvc;

    #[test]
    fn decimal_strings() {
        assert_eq!(serde_json::to_string(&Decimal(0.5)).unwrap(), "\"0.5\"");
        assert_eq!(serde_json::to_string(&Decimal(1.0)).unwrap(), "\"1\"");
        let third: Decimal = serde_json::from_str("\"0.3333333333333333\"").unwrap();
        assert_eq!(third.0, 1.0 / 3.0);
        assert!(serde_json::from_str::<Decimal>("\"abc\"").is_err());
    }

    #[test]
    fn reduction_instance_round_trips() {
        let a = reduce_pvc(&generate::wheel(5), 3, ColoringOptions::default()).unwrap();
        let doc = InstanceDocument::from_instance(&a.instance);
        let text = doc.to_json();
        let back = InstanceDocument::from_json(&text).unwrap();
        assert_eq!(back, doc);
        assert_eq!(back.to_instance().unwrap(), a.instance);
        assert_eq!(InstanceDocument::from_instance(&back.to_instance().unwrap()).to_json(), text);
    }

    #[test]
    fn rejects_bad_documents() {
        let a = reduce_pvc(&generate::complete(3), 2, ColoringOptions::default()).unwrap();
        let mut doc = InstanceDocument::from_instance(&a.instance);
        doc.version = "ume-instance/0".into();
        assert!(matches!(doc.to_instance(), Err(DocumentError::Version { .. })));

        let mut doc = InstanceDocument::from_instance(&a.instance);
        doc.mode = Mode::Edge;
        assert!(matches!(doc.to_instance(), Err(DocumentError::ModeMismatch { .. })));

        let mut doc = InstanceDocument::from_instance(&a.instance);
        doc.evaders[0].source[0].node = 99;
        assert!(matches!(doc.to_instance(), Err(DocumentError::NodeRange { evader: 0, node: 99, .. })));

        let mut doc = InstanceDocument::from_instance(&a.instance);
        doc.evaders[1].transitions[0].entries[0].p = Decimal(1.5);
        assert!(matches!(doc.to_instance(), Err(DocumentError::Instance(_))));
    }

    #[test]
    fn plan_documents() {
        let a = reduce_pvc(&generate::complete(3), 2, ColoringOptions::default()).unwrap();
        let plan = a.instance.node_plan([0, 2]).unwrap();
        let doc = PlanDocument::from_plan(&plan);
        let back = PlanDocument::from_json(&doc.to_json()).unwrap();
        assert_eq!(back.to_plan(&a.instance).unwrap(), plan);

        let bad = PlanDocument { version: PLAN_VERSION.into(), mode: Mode::Node, nodes: Some(vec![9]), edges: None };
        assert!(bad.to_plan(&a.instance).is_err());
        let bad = PlanDocument {
            version: PLAN_VERSION.into(),
            mode: Mode::Edge,
            nodes: None,
            edges: Some(vec![[3, 0]]),
        };
        assert!(bad.to_plan(&a.instance).is_err());
    }

    #[test]
    fn artifacts_document_lists_classes() {
        let a = reduce_pvc(&generate::complete(3), 2, ColoringOptions::default()).unwrap();
        let doc = ArtifactsDocument::from_artifacts(&a);
        assert_eq!(doc.coloring.len(), 3);
        assert_eq!(doc.traversal.len(), 3);
        let json = doc.to_json();
        assert!(json.contains("\"s1\""));
    }
}
