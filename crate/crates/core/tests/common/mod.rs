//! Random instance generators shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ume_core::evader::{EvaderChain, EvaderEnsemble};
use ume_core::graph::{load_undirected, DiGraph, UndirectedGraph};
use ume_core::instance::UmeInstance;
use ume_core::interdiction::{Budget, Efficiency, InterdictionPlan, Mode};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy)]
pub struct Shape {
    pub nodes: usize,
    /// Allow edges to lower-numbered nodes and chain self-loops.
    pub cyclic: bool,
    pub evaders: usize,
    /// Chance that an edge is present.
    pub density: f64,
    /// Chance that a transition row keeps some mass back (the evader may
    /// vanish there).
    pub leak: f64,
}

impl Shape {
    pub fn acyclic(nodes: usize) -> Self {
        Self { nodes, cyclic: false, evaders: 1, density: 0.5, leak: 0.2 }
    }

    pub fn cyclic(nodes: usize) -> Self {
        Self { nodes, cyclic: true, evaders: 1, density: 0.4, leak: 0.2 }
    }
}

/// Random graph on `0..n` with target `n - 1`, from which every node can
/// reach the target. Acyclic shapes only have edges `u -> v` with `u < v`.
pub fn random_graph(rng: &mut impl Rng, shape: Shape) -> DiGraph {
    let n = shape.nodes;
    let t = n - 1;
    let mut edges = BTreeSet::new();
    for u in 0..t {
        for v in 0..n {
            let allowed = if shape.cyclic { v != u } else { v > u };
            if allowed && rng.random_bool(shape.density) {
                edges.insert((u, v));
            }
        }
    }
    // Walk down from the target: every node gets a route to it.
    for u in (0..t).rev() {
        let reaches = |edges: &BTreeSet<(usize, usize)>| {
            let mut seen = vec![false; n];
            let mut stack = vec![u];
            while let Some(x) = stack.pop() {
                if x == t {
                    return true;
                }
                if std::mem::replace(&mut seen[x], true) {
                    continue;
                }
                stack.extend(edges.range((x, 0)..(x + 1, 0)).map(|&(_, y)| y));
            }
            false
        };
        if !reaches(&edges) {
            let v = rng.random_range(u + 1..n);
            edges.insert((u, v));
            if !reaches(&edges) {
                edges.insert((u, t));
            }
        }
    }
    DiGraph::from_pairs(n, edges).expect("generated edges are simple")
}

fn random_distribution(rng: &mut impl Rng, len: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..len).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

/// Random chain on `g` aimed at `n - 1`. Every graph edge gets positive
/// probability; cyclic shapes add occasional self-loops.
pub fn random_chain(rng: &mut impl Rng, g: &DiGraph, shape: Shape, weight: f64) -> EvaderChain {
    let n = g.node_count();
    let t = n - 1;
    let mut m = DMatrix::zeros(n, n);
    for u in 0..t {
        let mut targets: Vec<usize> = g.out_arcs(u).iter().map(|a| a.to).collect();
        if shape.cyclic && rng.random_bool(0.3) {
            targets.push(u);
        }
        let probs = random_distribution(rng, targets.len());
        let keep = if rng.random_bool(shape.leak) { rng.random_range(0.6..1.0) } else { 1.0 };
        for (&v, p) in targets.iter().zip(probs) {
            m[(u, v)] = p * keep;
        }
    }
    let support: Vec<usize> = (0..t).filter(|_| rng.random_bool(0.6)).collect();
    let support = if support.is_empty() { vec![rng.random_range(0..t)] } else { support };
    let probs = random_distribution(rng, support.len());
    let mut source = vec![0.0; n];
    for (&u, p) in support.iter().zip(probs) {
        source[u] = p;
    }
    EvaderChain::new(source, m, t, weight)
}

/// Node-mode efficiencies are uniform per node (so the node-to-edge
/// transform applies); edge-mode efficiencies vary per pair.
pub fn random_efficiency(rng: &mut impl Rng, g: &DiGraph, arcs: &[(usize, usize)], mode: Mode) -> Efficiency {
    let draw = |rng: &mut dyn rand::RngCore| if rng.random_bool(0.4) { 1.0 } else { rng.random_range(0.1..1.0) };
    let mut eff = Efficiency::perfect();
    match mode {
        Mode::Node => {
            for u in 0..g.node_count() {
                let d = draw(rng);
                for a in g.out_arcs(u) {
                    eff.set(u, a.to, d).unwrap();
                }
            }
        }
        Mode::Edge => {
            for &(u, v) in arcs {
                eff.set(u, v, draw(rng)).unwrap();
            }
        }
    }
    eff
}

pub fn random_instance(rng: &mut impl Rng, shape: Shape, mode: Mode, budget: usize) -> UmeInstance {
    let g = random_graph(rng, shape);
    let weights = random_distribution(rng, shape.evaders);
    let chains: Vec<EvaderChain> = weights.iter().map(|&w| random_chain(rng, &g, shape, w)).collect();
    let ensemble = EvaderEnsemble::new(chains).expect("generated chains are valid");
    let budget = match mode {
        Mode::Node => Budget::nodes(budget),
        Mode::Edge => Budget::edges(budget),
    };
    let bare = UmeInstance::new(g.clone(), ensemble.clone(), Efficiency::perfect(), budget).unwrap();
    let eff = random_efficiency(rng, &g, bare.arcs(), mode);
    UmeInstance::new(g, ensemble, eff, budget).expect("generated instance is valid")
}

/// A random plan of the instance's mode touching roughly `share` of the
/// candidate sites.
pub fn random_plan(rng: &mut impl Rng, inst: &UmeInstance, share: f64) -> InterdictionPlan {
    match inst.mode() {
        Mode::Node => {
            let nodes: Vec<usize> = (0..inst.node_count()).filter(|_| rng.random_bool(share)).collect();
            inst.node_plan(nodes).unwrap()
        }
        Mode::Edge => {
            let mut arcs = inst.arcs().to_vec();
            arcs.shuffle(rng);
            let k = (arcs.len() as f64 * share).round() as usize;
            inst.edge_plan(arcs.into_iter().take(k)).unwrap()
        }
    }
}

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("fixtures")
}

/// The committed planar suite, sorted by file name.
pub fn planar_suite() -> Vec<(String, UndirectedGraph)> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(fixture_dir().join("planar"))
        .expect("fixture directory exists")
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "txt"))
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|p| {
            let name = p.file_stem().unwrap().to_string_lossy().into_owned();
            let g = load_undirected(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            (name, g)
        })
        .collect()
}
