//! Independent references for the capture formula and the reduction:
//! trajectory enumeration, Monte Carlo simulation, exact minimum vertex
//! cover, and the end-to-end equivalence check.
//!
//! Nothing here touches the linear-algebra path in `evader`.

use std::fmt::Write as _;
use std::ops::RangeInclusive;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::coloring::ColoringOptions;
use crate::evader::EvaderChain;
use crate::graph::UndirectedGraph;
use crate::instance::Candidate;
use crate::interdiction::InterdictionPlan;
use crate::reduction::{reduce_pvc, ReductionError};
use crate::solvers::{decide_perfect_with, Answer, SolveError, SolverOptions, DEFAULT_DECISION_TOLERANCE};

pub const DEFAULT_PATH_CAP: usize = 10_000_000;
pub const DEFAULT_COVER_NODE_LIMIT: usize = 20;
/// Monte Carlo work is split into this many seeded blocks regardless of the
/// thread count.
pub const MC_BLOCKS: u64 = 64;
const MC_STEP_LIMIT: usize = 10_000_000;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("trajectory enumeration exceeded {cap} partial paths")]
    PathExplosion { cap: usize },
    #[error("max_hops must be at least 1")]
    NoHops,
    #[error("plan references node {node} outside a chain on {dim} nodes")]
    PlanDimension { node: usize, dim: usize },
    #[error("graph has {nodes} nodes; exact vertex cover is limited to {limit}")]
    InstanceTooLarge { nodes: usize, limit: usize },
    #[error("budget {budget}: {source}")]
    Reduction {
        budget: usize,
        #[source]
        source: ReductionError,
    },
    #[error("budget {budget}: {source}")]
    Solve {
        budget: usize,
        #[source]
        source: SolveError,
    },
}

/// Per node: `(next, step probability, detection probability)`.
type SparseRows = Vec<Vec<(usize, f64, f64)>>;

fn sparse_rows(chain: &EvaderChain, plan: &InterdictionPlan) -> Result<SparseRows, OracleError> {
    let n = chain.dim();
    if let Some(m) = plan.max_node().filter(|&m| m >= n) {
        return Err(OracleError::PlanDimension { node: m, dim: n });
    }
    Ok((0..n)
        .map(|u| {
            (0..n)
                .filter_map(|v| {
                    let p = chain.transition[(u, v)];
                    (p > 0.0).then(|| (v, p, plan.detection(u, v)))
                })
                .collect()
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathEstimate {
    pub capture: f64,
    /// Undetected probability still in flight when trajectories were cut at
    /// `max_hops`. The exact value lies in `[capture - truncated, capture]`.
    pub truncated: f64,
    pub paths: usize,
}

/// Capture probability by summing over every trajectory of at most
/// `max_hops` steps.
pub fn oracle_capture_paths(
    chain: &EvaderChain,
    plan: &InterdictionPlan,
    max_hops: usize,
    path_cap: usize,
) -> Result<PathEstimate, OracleError> {
    if max_hops == 0 {
        return Err(OracleError::NoHops);
    }
    let rows = sparse_rows(chain, plan)?;
    let t = chain.target;
    let mut arrived = 0.0;
    let mut truncated = 0.0;
    let mut paths = 0usize;
    let mut stack: Vec<(usize, f64, usize)> = Vec::new();
    for (u, &a) in chain.source.iter().enumerate() {
        if a > 0.0 {
            if u == t {
                arrived += a;
            } else {
                stack.push((u, a, 0));
            }
        }
    }
    while let Some((u, p, hops)) = stack.pop() {
        if rows[u].is_empty() {
            continue;
        }
        if hops == max_hops {
            truncated += p;
            continue;
        }
        for &(v, step, detect) in &rows[u] {
            paths += 1;
            if paths > path_cap {
                return Err(OracleError::PathExplosion { cap: path_cap });
            }
            let q = p * step * (1.0 - detect);
            if q == 0.0 {
                continue;
            }
            if v == t {
                arrived += q;
            } else {
                stack.push((v, q, hops + 1));
            }
        }
    }
    Ok(PathEstimate { capture: 1.0 - arrived, truncated, paths })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub samples: u64,
}

fn sample_index(weights: impl Iterator<Item = (usize, f64)>, r: f64) -> Option<usize> {
    let mut acc = 0.0;
    for (i, w) in weights {
        acc += w;
        if r < acc {
            return Some(i);
        }
    }
    None
}

/// Simulated capture probability. Each step draws the next node from the
/// transition row (leftover row mass means the evader vanishes), then the
/// sensor on that step detects with probability `r_ij d_ij`. A trajectory
/// counts as captured unless it arrives at the target undetected.
///
/// Samples are split over [`MC_BLOCKS`] blocks, block `b` drawing from
/// stream `b` of a ChaCha8 generator seeded with `seed`.
pub fn oracle_capture_mc(
    chain: &EvaderChain,
    plan: &InterdictionPlan,
    samples: u64,
    seed: u64,
) -> Result<McEstimate, OracleError> {
    let rows = sparse_rows(chain, plan)?;
    let t = chain.target;
    let per = samples / MC_BLOCKS;
    let extra = samples % MC_BLOCKS;
    let captured: u64 = (0..MC_BLOCKS)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b);
            let count = per + u64::from(b < extra);
            let mut caught = 0u64;
            for _ in 0..count {
                let start = sample_index(chain.source.iter().copied().enumerate(), rng.random::<f64>());
                let mut u = match start {
                    Some(u) => u,
                    None => {
                        caught += 1;
                        continue;
                    }
                };
                let mut outcome = 1;
                for _ in 0..MC_STEP_LIMIT {
                    if u == t {
                        outcome = 0;
                        break;
                    }
                    let r = rng.random::<f64>();
                    let Some(k) = sample_index(rows[u].iter().enumerate().map(|(k, e)| (k, e.1)), r) else {
                        break;
                    };
                    let (v, _, detect) = rows[u][k];
                    if detect > 0.0 && rng.random::<f64>() < detect {
                        break;
                    }
                    u = v;
                }
                caught += outcome;
            }
            caught
        })
        .sum();
    let n = samples.max(1) as f64;
    let p = captured as f64 / n;
    Ok(McEstimate {
        estimate: p,
        std_error: (p * (1.0 - p) / n).sqrt(),
        samples,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VertexCover {
    pub size: usize,
    pub witness: Vec<usize>,
}

fn lower_bound(g: &UndirectedGraph, in_cover: &[bool]) -> usize {
    // greedy maximal matching on uncovered edges
    let mut used = vec![false; g.node_count()];
    let mut size = 0;
    for &(u, v) in g.edges() {
        if !in_cover[u] && !in_cover[v] && !used[u] && !used[v] {
            used[u] = true;
            used[v] = true;
            size += 1;
        }
    }
    size
}

fn cover_branch(g: &UndirectedGraph, in_cover: &mut Vec<bool>, count: usize, best: &mut (usize, Vec<bool>)) {
    if count + lower_bound(g, in_cover) >= best.0 {
        return;
    }
    let open = g.edges().iter().copied().find(|&(u, v)| !in_cover[u] && !in_cover[v]);
    let Some((u, v)) = open else {
        *best = (count, in_cover.clone());
        return;
    };
    for w in [u, v] {
        in_cover[w] = true;
        cover_branch(g, in_cover, count + 1, best);
        in_cover[w] = false;
    }
}

/// Minimum vertex cover by branching on uncovered edges with a matching
/// lower bound.
pub fn min_vertex_cover(g: &UndirectedGraph, node_limit: usize) -> Result<VertexCover, OracleError> {
    let n = g.node_count();
    if n > node_limit {
        return Err(OracleError::InstanceTooLarge { nodes: n, limit: node_limit });
    }
    let all: Vec<bool> = (0..n).map(|u| !g.is_singleton(u)).collect();
    // start from the trivial cover; the search only accepts strict improvements
    let mut best = (all.iter().filter(|&&x| x).count(), all);
    cover_branch(g, &mut vec![false; n], 0, &mut best);
    let witness: Vec<usize> = (0..n).filter(|&u| best.1[u]).collect();
    Ok(VertexCover { size: witness.len(), witness })
}

#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    pub coloring: ColoringOptions,
    pub solver: SolverOptions,
    pub tolerance: f64,
    pub cover_node_limit: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            coloring: ColoringOptions::default(),
            solver: SolverOptions::default(),
            tolerance: DEFAULT_DECISION_TOLERANCE,
            cover_node_limit: DEFAULT_COVER_NODE_LIMIT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationRow {
    pub budget: usize,
    pub pvc: Answer,
    pub ume: Answer,
    pub agree: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ume_witness: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ume_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub graph_id: String,
    pub node_count: usize,
    pub edge_count: usize,
    pub min_cover: usize,
    pub cover_witness: Vec<usize>,
    pub rows: Vec<VerificationRow>,
    pub passed: bool,
    /// Wall time in milliseconds; left out unless requested so that reports
    /// stay byte-reproducible.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<f64>,
}

impl VerificationReport {
    pub fn table(&self) -> String {
        let mut out = format!(
            "graph {} (n={}, m={}, min cover {})\n budget  pvc  ume  agree\n",
            self.graph_id, self.node_count, self.edge_count, self.min_cover
        );
        for r in &self.rows {
            let name = |a: Answer| if a == Answer::Yes { "YES" } else { "NO" };
            let _ = writeln!(
                out,
                " {:>6}  {:<3}  {:<3}  {}",
                r.budget,
                name(r.pvc),
                name(r.ume),
                if r.agree { "ok" } else { "MISMATCH" }
            );
        }
        let _ = writeln!(out, "{}", if self.passed { "PASS" } else { "FAIL" });
        out
    }
}

/// For each `B'` in `budgets`, compares "a cover of size `B'` exists" with
/// the decision answer on the reduced two-evader instance.
pub fn verify_reduction(
    graph_id: &str,
    gprime: &UndirectedGraph,
    budgets: RangeInclusive<usize>,
    options: VerifyOptions,
) -> Result<VerificationReport, OracleError> {
    let start = Instant::now();
    let cover = min_vertex_cover(gprime, options.cover_node_limit)?;
    let mut rows = Vec::new();
    for budget in budgets {
        let artifacts = reduce_pvc(gprime, budget, options.coloring)
            .map_err(|source| OracleError::Reduction { budget, source })?;
        let decision = decide_perfect_with(&artifacts.instance, options.tolerance, options.solver)
            .map_err(|source| OracleError::Solve { budget, source })?;
        let pvc = if cover.size <= budget { Answer::Yes } else { Answer::No };
        let witness = decision.witness.as_ref().map(|w| {
            w.selection
                .iter()
                .filter_map(|c| match c {
                    Candidate::Node(u) => Some(*u),
                    Candidate::Edge(..) => None,
                })
                .collect()
        });
        rows.push(VerificationRow {
            budget,
            pvc,
            ume: decision.answer,
            agree: pvc == decision.answer,
            ume_value: decision.witness.as_ref().map(|w| w.value),
            ume_witness: witness,
        });
    }
    Ok(VerificationReport {
        graph_id: graph_id.to_string(),
        node_count: gprime.node_count(),
        edge_count: gprime.edge_count(),
        min_cover: cover.size,
        cover_witness: cover.witness,
        passed: rows.iter().all(|r| r.agree),
        rows,
        elapsed_ms: Some(start.elapsed().as_secs_f64() * 1e3),
    })
}
