//! Planar Vertex Cover to two-evader node interdiction.
//!
//! Given `G'` and budget `B'`:
//!
//! 1. Four-color `G'` with colors white, red, green, black.
//! 2. Add a target `t` (index `n`), keep every original edge in both
//!    directions, add `(u, t)` for every non-singleton `u`, and set `d = 1`.
//! 3. Read each color as two bits (see [`bits`]) and build two evaders.
//!    Evader `i` starts uniformly on its source set `S_i` (bit `i` clear),
//!    steps to a neighboring penultimate node in `P_i` (bit `i` set) chosen
//!    uniformly, then steps to `t`.
//!
//! Adjacent nodes differ in at least one bit, so every original edge is
//! walked by some evader on its way to `t`. `<J> = 1` is then achievable
//! with `B'` nodes exactly when `G'` has a vertex cover of size `B'`.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;
use serde::Serialize;
use thiserror::Error;

use crate::coloring::{four_color, verify_coloring, Color, ColorAssignment, ColoringError, ColoringOptions};
use crate::evader::{expected_visits, EvaderChain, EvaderEnsemble};
use crate::graph::{Arc, DiGraph, UndirectedGraph};
use crate::instance::{InstanceError, UmeInstance};
use crate::interdiction::{Budget, Efficiency, InterdictionPlan, Mode};

pub const EVADER_COUNT: usize = 2;

#[derive(Debug, Error)]
pub enum ReductionError {
    #[error(transparent)]
    Coloring(#[from] ColoringError),
    #[error("coloring is not proper: monochromatic edges {0:?}")]
    ImproperColoring(Vec<(usize, usize)>),
    #[error("the input graph has no nodes; the target would be the only node")]
    EmptyGraph,
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

/// Two-bit code of a color. Entry `i` set means penultimate for evader
/// `i + 1`, clear means source: white is a source for both, green is
/// penultimate for evader 1, red for evader 2, black for both.
pub fn bits(c: Color) -> [bool; 2] {
    match c {
        Color::White => [false, false],
        Color::Red => [false, true],
        Color::Green => [true, false],
        Color::Black => [true, true],
    }
}

/// Source and penultimate classes with their normalizers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaderSets {
    pub sources: [BTreeSet<usize>; 2],
    pub penultimates: [BTreeSet<usize>; 2],
    /// `z_u` per evader: number of penultimate neighbors of source `u`.
    pub normalizers: [BTreeMap<usize, usize>; 2],
    /// All nodes of `G'` are singletons.
    pub pathological: bool,
}

#[derive(Debug, Clone)]
pub struct ReductionArtifacts {
    pub coloring: ColorAssignment,
    pub sets: EvaderSets,
    pub instance: UmeInstance,
    pub target: usize,
    pub original: UndirectedGraph,
    pub original_budget: usize,
}

/// `G` from `G'`: nodes `V' ∪ {t}` with `t = n`, both directions of every
/// original edge, and `(u, t)` for non-singletons. Returns the graph and `t`.
pub fn build_ume_graph(gprime: &UndirectedGraph) -> (DiGraph, usize) {
    let n = gprime.node_count();
    let t = n;
    let mut arcs: Vec<Arc> = gprime
        .edges()
        .iter()
        .flat_map(|&(u, v)| [(u, v), (v, u)])
        .map(|(from, to)| Arc { from, to, weight: None })
        .collect();
    arcs.extend(
        (0..n)
            .filter(|&u| !gprime.is_singleton(u))
            .map(|u| Arc { from: u, to: t, weight: None }),
    );
    let g = DiGraph::new(n + 1, arcs).expect("a simple graph plus a fresh target is valid");
    (g, t)
}

/// Source/penultimate classes and both evader chains for a proper coloring.
pub fn build_evaders(
    gprime: &UndirectedGraph,
    f: &ColorAssignment,
) -> Result<(EvaderEnsemble, EvaderSets), ReductionError> {
    let n = gprime.node_count();
    if n == 0 {
        return Err(ReductionError::EmptyGraph);
    }
    let bad = verify_coloring(gprime, f)?;
    if !bad.is_empty() {
        return Err(ReductionError::ImproperColoring(bad));
    }
    let t = n;
    let dim = n + 1;
    let weight = 1.0 / EVADER_COUNT as f64;

    if gprime.edge_count() == 0 {
        // every evader sits still on the lowest-index node
        let mut source = vec![0.0; dim];
        source[0] = 1.0;
        let chains = (0..EVADER_COUNT)
            .map(|_| EvaderChain::new(source.clone(), DMatrix::zeros(dim, dim), t, weight))
            .collect();
        let sets = EvaderSets {
            sources: Default::default(),
            penultimates: Default::default(),
            normalizers: Default::default(),
            pathological: true,
        };
        return Ok((EvaderEnsemble::new(chains).expect("point-mass chains are valid"), sets));
    }

    let mut sources: [BTreeSet<usize>; 2] = Default::default();
    let mut penultimates: [BTreeSet<usize>; 2] = Default::default();
    for u in (0..n).filter(|&u| !gprime.is_singleton(u)) {
        let code = bits(f.get(u).expect("verified total"));
        for i in 0..EVADER_COUNT {
            if code[i] {
                penultimates[i].insert(u);
            } else {
                sources[i].insert(u);
            }
        }
    }

    let mut normalizers: [BTreeMap<usize, usize>; 2] = Default::default();
    let mut chains = Vec::with_capacity(EVADER_COUNT);
    for i in 0..EVADER_COUNT {
        let mut m = DMatrix::zeros(dim, dim);
        let mut source = vec![0.0; dim];
        if sources[i].is_empty() {
            // No node has bit i clear: the other evader walks every edge, so
            // this one is parked on node 0 and never moves.
            source[0] = 1.0;
        } else {
            let share = 1.0 / sources[i].len() as f64;
            for &u in &sources[i] {
                source[u] = share;
                let targets: Vec<usize> = gprime
                    .neighbors(u)
                    .iter()
                    .copied()
                    .filter(|v| penultimates[i].contains(v))
                    .collect();
                normalizers[i].insert(u, targets.len());
                // z_u = 0 leaves the row empty: the evader vanishes
                for &v in &targets {
                    m[(u, v)] = 1.0 / targets.len() as f64;
                }
            }
            for &u in &penultimates[i] {
                m[(u, t)] = 1.0;
            }
        }
        chains.push(EvaderChain::new(source, m, t, weight));
    }
    let ensemble = EvaderEnsemble::new(chains).expect("constructed chains satisfy the chain invariants");
    Ok((
        ensemble,
        EvaderSets { sources, penultimates, normalizers, pathological: false },
    ))
}

/// Assembles the instance for a given coloring.
pub fn reduce_with_coloring(
    gprime: &UndirectedGraph,
    coloring: ColorAssignment,
    bprime: usize,
) -> Result<ReductionArtifacts, ReductionError> {
    let (ensemble, sets) = build_evaders(gprime, &coloring)?;
    let (graph, target) = build_ume_graph(gprime);
    let instance = UmeInstance::new(graph, ensemble, Efficiency::perfect(), Budget::nodes(bprime))?;
    Ok(ReductionArtifacts {
        coloring,
        sets,
        instance,
        target,
        original: gprime.clone(),
        original_budget: bprime,
    })
}

/// Full pipeline: color, build `G`, build the evaders, set `B = B'`.
pub fn reduce_pvc(
    gprime: &UndirectedGraph,
    bprime: usize,
    options: ColoringOptions,
) -> Result<ReductionArtifacts, ReductionError> {
    if gprime.node_count() == 0 {
        return Err(ReductionError::EmptyGraph);
    }
    let coloring = four_color(gprime, options)?;
    reduce_with_coloring(gprime, coloring, bprime)
}

/// One direction in which an evader walks an original edge.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Traversal {
    /// 1-based evader number.
    pub evader: usize,
    pub from: usize,
    pub to: usize,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeTraversal {
    pub u: usize,
    pub v: usize,
    /// 1-based evader numbers with positive traversal probability.
    pub evaders: Vec<usize>,
    pub traversals: Vec<Traversal>,
}

/// For every original edge, the evaders that walk it (either direction)
/// with positive probability under the empty plan.
pub fn edge_traversal_report(artifacts: &ReductionArtifacts) -> Vec<EdgeTraversal> {
    let empty = InterdictionPlan::empty(Mode::Node, Efficiency::perfect());
    let chains = artifacts.instance.ensemble().chains();
    let visits: Vec<Vec<f64>> = chains
        .iter()
        .map(|c| expected_visits(c, &empty).expect("reduction chains are nilpotent"))
        .collect();
    artifacts
        .original
        .edges()
        .iter()
        .map(|&(u, v)| {
            let mut traversals = Vec::new();
            for (i, c) in chains.iter().enumerate() {
                for (from, to) in [(u, v), (v, u)] {
                    let p = visits[i][from] * c.transition[(from, to)];
                    if p > 0.0 {
                        traversals.push(Traversal { evader: i + 1, from, to, probability: p });
                    }
                }
            }
            let evaders: BTreeSet<usize> = traversals.iter().map(|t| t.evader).collect();
            EdgeTraversal { u, v, evaders: evaders.into_iter().collect(), traversals }
        })
        .collect()
}
