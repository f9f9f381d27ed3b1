//! Graph representations shared by every other module.
//!
//! Nodes are dense indices `0..node_count`. Two graph types exist: the
//! undirected simple graph that reduction inputs arrive as, and the directed
//! weighted graph that evaders move on. Both are immutable once built.
//!
//! The edge-list text format is line oriented:
//!
//! ```text
//! # comment
//! 3          <- node count
//! 0 1        <- edge, optional third column is a non-negative weight
//! 1 2 0.5
//! ```

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{}duplicate edge ({u}, {v})", at_line(.line))]
    DuplicateEdge { u: usize, v: usize, line: Option<usize> },
    #[error("{}edge ({u}, {v}) has an endpoint outside 0..{node_count}", at_line(.line))]
    DanglingEndpoint {
        u: usize,
        v: usize,
        node_count: usize,
        line: Option<usize>,
    },
    #[error("{}self-loop on node {node}", at_line(.line))]
    SelfLoop { node: usize, line: Option<usize> },
    #[error("{}edge ({u}, {v}) has invalid weight {weight}", at_line(.line))]
    InvalidWeight {
        u: usize,
        v: usize,
        weight: f64,
        line: Option<usize>,
    },
    #[error("{0} labels supplied for {1} nodes")]
    LabelCount(usize, usize),
    #[error("instance document: {0}")]
    Document(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn at_line(line: &Option<usize>) -> String {
    match line {
        Some(l) => format!("line {l}: "),
        None => String::new(),
    }
}

/// Simple undirected graph: no self-loops, no parallel edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UndirectedGraph {
    node_count: usize,
    /// Normalized `(min, max)` pairs in sorted order.
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

impl UndirectedGraph {
    pub fn new(node_count: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self, GraphError> {
        Self::build(node_count, edges.into_iter().map(|(u, v)| (u, v, None)))
    }

    fn build(
        node_count: usize,
        edges: impl IntoIterator<Item = (usize, usize, Option<usize>)>,
    ) -> Result<Self, GraphError> {
        let mut set = BTreeSet::new();
        for (u, v, line) in edges {
            if u >= node_count || v >= node_count {
                return Err(GraphError::DanglingEndpoint { u, v, node_count, line });
            }
            if u == v {
                return Err(GraphError::SelfLoop { node: u, line });
            }
            if !set.insert((u.min(v), u.max(v))) {
                return Err(GraphError::DuplicateEdge { u, v, line });
            }
        }
        let mut adjacency = vec![Vec::new(); node_count];
        for &(u, v) in &set {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(Self {
            node_count,
            edges: set.into_iter().collect(),
            adjacency,
        })
    }

    /// Graph on `node_count` nodes and no edges.
    pub fn empty(node_count: usize) -> Self {
        Self {
            node_count,
            edges: Vec::new(),
            adjacency: vec![Vec::new(); node_count],
        }
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges as `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.adjacency[u]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adjacency[u].len()
    }

    pub fn is_singleton(&self, u: usize) -> bool {
        self.adjacency[u].is_empty()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.node_count && self.adjacency[u].binary_search(&v).is_ok()
    }

    /// Renders the graph in edge-list format.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("{}\n", self.node_count);
        for &(u, v) in &self.edges {
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }
}

/// One directed edge with an optional non-negative weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    pub from: usize,
    pub to: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
}

/// Directed weighted graph without self-loops.
///
/// Edges are stored sorted by `(from, to)`; the out-edges of a node form a
/// contiguous slice.
#[derive(Debug, Clone, PartialEq)]
pub struct DiGraph {
    node_count: usize,
    arcs: Vec<Arc>,
    offsets: Vec<usize>,
    labels: Option<Vec<String>>,
}

impl DiGraph {
    pub fn new(node_count: usize, arcs: impl IntoIterator<Item = Arc>) -> Result<Self, GraphError> {
        Self::build(node_count, arcs.into_iter().map(|a| (a, None)))
    }

    /// Unweighted graph from `(from, to)` pairs.
    pub fn from_pairs(node_count: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self, GraphError> {
        Self::new(
            node_count,
            pairs.into_iter().map(|(from, to)| Arc { from, to, weight: None }),
        )
    }

    fn build(node_count: usize, arcs: impl IntoIterator<Item = (Arc, Option<usize>)>) -> Result<Self, GraphError> {
        let mut seen = BTreeSet::new();
        let mut list = Vec::new();
        for (arc, line) in arcs {
            let (u, v) = (arc.from, arc.to);
            if u >= node_count || v >= node_count {
                return Err(GraphError::DanglingEndpoint { u, v, node_count, line });
            }
            if u == v {
                return Err(GraphError::SelfLoop { node: u, line });
            }
            if let Some(w) = arc.weight {
                if !(w.is_finite() && w >= 0.0) {
                    return Err(GraphError::InvalidWeight { u, v, weight: w, line });
                }
            }
            if !seen.insert((u, v)) {
                return Err(GraphError::DuplicateEdge { u, v, line });
            }
            list.push(arc);
        }
        list.sort_by_key(|a| (a.from, a.to));
        let mut offsets = vec![0; node_count + 1];
        for a in &list {
            offsets[a.from + 1] += 1;
        }
        for i in 0..node_count {
            offsets[i + 1] += offsets[i];
        }
        Ok(Self {
            node_count,
            arcs: list,
            offsets,
            labels: None,
        })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self, GraphError> {
        if labels.len() != self.node_count {
            return Err(GraphError::LabelCount(labels.len(), self.node_count));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.arcs.len()
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.arcs.iter().map(|a| (a.from, a.to))
    }

    pub fn out_arcs(&self, u: usize) -> &[Arc] {
        &self.arcs[self.offsets[u]..self.offsets[u + 1]]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.node_count && self.out_arcs(u).binary_search_by_key(&v, |a| a.to).is_ok()
    }

    pub fn label(&self, u: usize) -> Option<&str> {
        self.labels.as_ref().map(|l| l[u].as_str())
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Edge-list rendering; weights are written when present, labels are dropped.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("{}\n", self.node_count);
        for a in &self.arcs {
            match a.weight {
                Some(w) => {
                    let _ = writeln!(out, "{} {} {}", a.from, a.to, w);
                }
                None => {
                    let _ = writeln!(out, "{} {}", a.from, a.to);
                }
            }
        }
        out
    }
}

/// Each undirected edge `{u, v}` becomes the pair `(u, v)`, `(v, u)`.
pub fn to_directed(g: &UndirectedGraph) -> DiGraph {
    DiGraph::from_pairs(
        g.node_count(),
        g.edges().iter().flat_map(|&(u, v)| [(u, v), (v, u)]),
    )
    .expect("a simple undirected graph doubles into a valid digraph")
}

struct ParsedEdge {
    u: usize,
    v: usize,
    weight: Option<f64>,
    line: usize,
}

fn parse_edge_lines(text: &str) -> Result<(usize, Vec<ParsedEdge>), GraphError> {
    let mut node_count = None;
    let mut edges = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        let parse_index = |s: &str| {
            s.parse::<usize>().map_err(|_| GraphError::Parse {
                line,
                message: format!("expected a node index, found {s:?}"),
            })
        };
        match node_count {
            None => {
                if fields.len() != 1 {
                    return Err(GraphError::Parse {
                        line,
                        message: "first line must hold the node count alone".into(),
                    });
                }
                node_count = Some(fields[0].parse::<usize>().map_err(|_| GraphError::Parse {
                    line,
                    message: format!("expected a node count, found {:?}", fields[0]),
                })?);
            }
            Some(_) => {
                if !(2..=3).contains(&fields.len()) {
                    return Err(GraphError::Parse {
                        line,
                        message: format!("expected \"u v [weight]\", found {} fields", fields.len()),
                    });
                }
                let u = parse_index(fields[0])?;
                let v = parse_index(fields[1])?;
                let weight = match fields.get(2) {
                    Some(s) => Some(s.parse::<f64>().map_err(|_| GraphError::Parse {
                        line,
                        message: format!("expected a weight, found {s:?}"),
                    })?),
                    None => None,
                };
                edges.push(ParsedEdge { u, v, weight, line });
            }
        }
    }
    let node_count = node_count.ok_or(GraphError::Parse {
        line: text.lines().count().max(1),
        message: "missing node count".into(),
    })?;
    Ok((node_count, edges))
}

/// Parses edge-list text as an undirected graph. Weights, if present, are
/// validated and then dropped.
pub fn parse_undirected(text: &str) -> Result<UndirectedGraph, GraphError> {
    let (n, edges) = parse_edge_lines(text)?;
    for e in &edges {
        if let Some(w) = e.weight {
            if !(w.is_finite() && w >= 0.0) {
                return Err(GraphError::InvalidWeight { u: e.u, v: e.v, weight: w, line: Some(e.line) });
            }
        }
    }
    UndirectedGraph::build(n, edges.into_iter().map(|e| (e.u, e.v, Some(e.line))))
}

/// Parses edge-list text as a directed graph: each line is one arc.
pub fn parse_directed(text: &str) -> Result<DiGraph, GraphError> {
    let (n, edges) = parse_edge_lines(text)?;
    DiGraph::build(
        n,
        edges.into_iter().map(|e| {
            (
                Arc { from: e.u, to: e.v, weight: e.weight },
                Some(e.line),
            )
        }),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphFormat {
    EdgeList,
    InstanceJson,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LoadedGraph {
    Undirected(UndirectedGraph),
    Directed(DiGraph),
}

/// Loads a graph file. Edge lists load as undirected graphs; instance
/// documents yield the directed graph the evaders move on.
pub fn load_graph(path: impl AsRef<Path>, format: GraphFormat) -> Result<LoadedGraph, GraphError> {
    let text = std::fs::read_to_string(path)?;
    match format {
        GraphFormat::EdgeList => parse_undirected(&text).map(LoadedGraph::Undirected),
        GraphFormat::InstanceJson => {
            let doc: crate::document::InstanceDocument =
                serde_json::from_str(&text).map_err(|e| GraphError::Document(e.to_string()))?;
            doc.graph
                .to_digraph()
                .map(LoadedGraph::Directed)
                .map_err(|e| GraphError::Document(e.to_string()))
        }
    }
}

pub fn load_undirected(path: impl AsRef<Path>) -> Result<UndirectedGraph, GraphError> {
    parse_undirected(&std::fs::read_to_string(path)?)
}
