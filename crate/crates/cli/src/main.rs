//! `ume`: evaluate, optimize and verify sensor placements against
//! unreactive Markovian evaders.
//!
//! Exit codes: 0 success, 1 a clean NO from `decide`, 2 any error.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};

use ume_core::coloring::{four_color, verify_coloring, ColoringError, ColoringOptions};
use ume_core::document::{ArtifactsDocument, DocumentError, InstanceDocument, PlanDocument};
use ume_core::evader::{capture_breakdown, EvalError};
use ume_core::generate;
use ume_core::graph::{load_undirected, GraphError, UndirectedGraph};
use ume_core::instance::{InstanceError, UmeInstance};
use ume_core::oracles::{oracle_capture_mc, verify_reduction, OracleError, VerifyOptions};
use ume_core::reduction::{reduce_pvc, ReductionError};
use ume_core::solvers::{
    decide_perfect_with, solve_exact_with, solve_greedy, Answer, SolveError, SolveResult, SolverOptions,
    DEFAULT_DECISION_TOLERANCE, DEFAULT_SUBSET_CAP,
};

#[derive(Parser)]
#[command(name = "ume", version, about = "Sensor placement against unreactive Markovian evaders")]
struct Cli {
    /// Maximum worker threads (default: one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the weighted capture probability of a plan and its per-evader terms.
    Eval {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        plan: PathBuf,
    },
    /// Find a plan maximizing the weighted capture probability.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, value_enum, default_value_t = MethodArg::Exact)]
        method: MethodArg,
        /// Overrides the budget limit stored in the instance.
        #[arg(long)]
        budget: Option<usize>,
        /// Write the plan found here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Largest number of subsets the exact search may enumerate.
        #[arg(long, default_value_t = DEFAULT_SUBSET_CAP)]
        cap: u128,
    },
    /// Decide whether some plan within the budget captures with certainty.
    Decide {
        #[arg(long)]
        instance: PathBuf,
        /// Overrides the budget limit stored in the instance.
        #[arg(long)]
        budget: Option<usize>,
        /// A plan counts as certain when its value is at least 1 - tol.
        #[arg(long, default_value_t = DEFAULT_DECISION_TOLERANCE)]
        tol: f64,
        /// On YES, write the witness plan here.
        #[arg(long)]
        witness: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_SUBSET_CAP)]
        cap: u128,
    },
    /// Turn a planar vertex-cover instance into a two-evader instance.
    Reduce {
        /// Edge-list file of the planar graph.
        #[arg(long)]
        graph: PathBuf,
        /// Cover size to ask for; becomes the node budget.
        #[arg(long)]
        budget: usize,
        /// Instance document output.
        #[arg(long)]
        out: PathBuf,
        /// Optional audit trail: coloring, evader classes, edge traversals.
        #[arg(long)]
        artifacts: Option<PathBuf>,
        #[command(flatten)]
        coloring: ColoringArgs,
    },
    /// Four-color a planar graph; prints one "node color" line per node.
    Color {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        coloring: ColoringArgs,
    },
    /// Compare brute-force vertex cover with the reduced decision per budget.
    Verify {
        #[arg(long)]
        graph: PathBuf,
        /// Inclusive range `LO..HI` (default `0..n`).
        #[arg(long)]
        budgets: Option<BudgetRange>,
        /// Name used in the report (default: the file stem).
        #[arg(long)]
        id: Option<String>,
        /// Write the JSON report here; otherwise JSON goes to stdout and the
        /// table to stderr.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Include wall time in the report (breaks byte reproducibility).
        #[arg(long)]
        timing: bool,
        #[arg(long, default_value_t = DEFAULT_DECISION_TOLERANCE)]
        tol: f64,
        #[command(flatten)]
        coloring: ColoringArgs,
    },
    /// Monte Carlo estimate of each evader's capture probability.
    Simulate {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        plan: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Write a planar test graph as an edge list.
    Generate {
        #[arg(value_enum)]
        kind: GraphKind,
        /// Node count (path, cycle, complete, outerplanar, triangulation,
        /// planar), leaves (star), rim size (wheel) or rows (grid).
        #[arg(long)]
        size: usize,
        /// Grid columns.
        #[arg(long, default_value_t = 1)]
        cols: usize,
        /// Fraction of edges dropped from a triangulation (planar only).
        #[arg(long, default_value_t = 0.3)]
        drop: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(clap::Args)]
struct ColoringArgs {
    /// Seed for the colorer's tie-breaking order.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Colorer time limit in seconds.
    #[arg(long, default_value_t = 30.0)]
    time_budget: f64,
}

impl ColoringArgs {
    fn options(&self) -> anyhow::Result<ColoringOptions> {
        let time_budget = Duration::try_from_secs_f64(self.time_budget)
            .map_err(|e| anyhow::anyhow!("invalid --time-budget {}: {e}", self.time_budget))?;
        Ok(ColoringOptions { time_budget, seed: self.seed })
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Exact,
    Greedy,
}

#[derive(Clone, Copy, ValueEnum)]
enum GraphKind {
    Path,
    Cycle,
    Complete,
    Star,
    Wheel,
    Grid,
    Outerplanar,
    Triangulation,
    Planar,
}

#[derive(Clone, Copy, Debug)]
struct BudgetRange(usize, usize);

impl std::str::FromStr for BudgetRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (lo, hi) = s.split_once("..").ok_or_else(|| format!("expected LO..HI, got {s:?}"))?;
        let parse = |x: &str| x.trim().parse::<usize>().map_err(|e| format!("{x:?}: {e}"));
        let (lo, hi) = (parse(lo)?, parse(hi.trim_start_matches('='))?);
        if lo > hi {
            return Err(format!("empty range {s:?}"));
        }
        Ok(BudgetRange(lo, hi))
    }
}

/// An error tagged with the module that raised it.
struct Failure {
    module: &'static str,
    error: anyhow::Error,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "error [{}]: {:#}", self.module, self.error)
    }
}

trait Attribute<T> {
    fn attribute(self, module: &'static str) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Attribute<T> for Result<T, E> {
    fn attribute(self, module: &'static str) -> Result<T, Failure> {
        self.map_err(|e| Failure { module, error: e.into() })
    }
}

fn instance_module(e: &InstanceError) -> &'static str {
    match e {
        InstanceError::Graph(_) => "graph_core",
        InstanceError::Evader(_) => "evader_model",
        _ => "interdiction",
    }
}

fn document_module(e: &DocumentError) -> &'static str {
    match e {
        DocumentError::Graph(_) => "graph_core",
        DocumentError::Instance(i) => instance_module(i),
        DocumentError::Interdiction(_) => "interdiction",
        _ => "cli",
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).attribute("cli")
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display())).attribute("cli")
}

fn load_instance(path: &Path) -> Result<UmeInstance, Failure> {
    let text = read(path)?;
    InstanceDocument::from_json(&text)
        .and_then(|d| d.to_instance())
        .map_err(|e| Failure {
            module: document_module(&e),
            error: anyhow::Error::new(e).context(format!("loading instance {}", path.display())),
        })
}

fn load_plan(path: &Path, inst: &UmeInstance) -> Result<ume_core::InterdictionPlan, Failure> {
    let text = read(path)?;
    PlanDocument::from_json(&text)
        .and_then(|d| d.to_plan(inst))
        .map_err(|e| Failure {
            module: document_module(&e),
            error: anyhow::Error::new(e).context(format!("loading plan {}", path.display())),
        })
}

fn load_graph(path: &Path) -> Result<UndirectedGraph, Failure> {
    load_undirected(path)
        .map_err(|e: GraphError| anyhow::Error::new(e).context(format!("loading graph {}", path.display())))
        .attribute("graph_core")
}

fn eval_failure(e: EvalError) -> Failure {
    Failure { module: "evader_model", error: e.into() }
}

fn solve_failure(e: SolveError) -> Failure {
    let module = match &e {
        SolveError::Eval(_) => "evader_model",
        SolveError::Interdiction(_) => "interdiction",
        SolveError::SearchSpaceTooLarge { .. } => "solvers",
    };
    Failure { module, error: e.into() }
}

fn reduction_failure(e: ReductionError) -> Failure {
    let module = match &e {
        ReductionError::Coloring(_) => "coloring",
        _ => "reduction",
    };
    Failure { module, error: e.into() }
}

fn coloring_failure(e: ColoringError) -> Failure {
    Failure { module: "coloring", error: e.into() }
}

fn with_budget(inst: UmeInstance, budget: Option<usize>) -> UmeInstance {
    match budget {
        Some(b) => inst.with_budget_limit(b),
        None => inst,
    }
}

fn print_values(total: f64, per: &[f64]) {
    println!("<J> = {total:.12}");
    for (k, j) in per.iter().enumerate() {
        println!("J[{}] = {j:.12}", k + 1);
    }
}

fn weighted(inst: &UmeInstance, per: &[f64]) -> f64 {
    inst.ensemble().chains().iter().zip(per).map(|(c, j)| c.weight * j).sum()
}

fn print_result(r: &SolveResult) {
    let selection: Vec<String> = r
        .selection
        .iter()
        .map(|c| match c {
            ume_core::Candidate::Node(u) => u.to_string(),
            ume_core::Candidate::Edge(u, v) => format!("{u}->{v}"),
        })
        .collect();
    println!("selection = [{}]", selection.join(", "));
    println!("<J> = {:.12}", r.value);
    println!("evaluations = {}", r.evaluations);
}

fn run(cli: Cli) -> Result<ExitCode, Failure> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .context("configuring the worker pool")
            .attribute("cli")?;
    }
    match cli.command {
        Command::Eval { instance, plan } => {
            let inst = load_instance(&instance)?;
            let plan = load_plan(&plan, &inst)?;
            let per = capture_breakdown(inst.ensemble(), &plan).map_err(eval_failure)?;
            print_values(weighted(&inst, &per), &per);
        }
        Command::Solve { instance, method, budget, out, cap } => {
            let inst = with_budget(load_instance(&instance)?, budget);
            let result = match method {
                MethodArg::Exact => solve_exact_with(&inst, SolverOptions { cap }),
                MethodArg::Greedy => solve_greedy(&inst),
            }
            .map_err(solve_failure)?;
            print_result(&result);
            if let Some(out) = out {
                write(&out, &PlanDocument::from_plan(&result.plan).to_json())?;
            }
        }
        Command::Decide { instance, budget, tol, witness, cap } => {
            let inst = with_budget(load_instance(&instance)?, budget);
            let decision = decide_perfect_with(&inst, tol, SolverOptions { cap }).map_err(solve_failure)?;
            match (&decision.answer, &decision.witness) {
                (Answer::Yes, Some(w)) => {
                    println!("YES");
                    print_result(w);
                    if let Some(path) = witness {
                        write(&path, &PlanDocument::from_plan(&w.plan).to_json())?;
                    }
                }
                _ => {
                    println!("NO");
                    println!("evaluations = {}", decision.evaluations);
                    return Ok(ExitCode::from(1));
                }
            }
        }
        Command::Reduce { graph, budget, out, artifacts, coloring } => {
            let g = load_graph(&graph)?;
            let a = reduce_pvc(&g, budget, coloring.options().attribute("cli")?).map_err(reduction_failure)?;
            write(&out, &InstanceDocument::from_instance(&a.instance).to_json())?;
            if let Some(path) = artifacts {
                write(&path, &ArtifactsDocument::from_artifacts(&a).to_json())?;
            }
            println!(
                "reduced {} nodes / {} edges to {} nodes, target {}, budget {}",
                g.node_count(),
                g.edge_count(),
                a.instance.node_count(),
                a.target,
                budget
            );
        }
        Command::Color { graph, out, coloring } => {
            let g = load_graph(&graph)?;
            let f = four_color(&g, coloring.options().attribute("cli")?).map_err(coloring_failure)?;
            let conflicts = verify_coloring(&g, &f).map_err(coloring_failure)?;
            if !conflicts.is_empty() {
                return Err(Failure {
                    module: "coloring",
                    error: anyhow::anyhow!("colorer produced conflicting edges {conflicts:?}"),
                });
            }
            match out {
                Some(path) => write(&path, &f.to_lines())?,
                None => print!("{}", f.to_lines()),
            }
        }
        Command::Verify { graph, budgets, id, out, timing, tol, coloring } => {
            let g = load_graph(&graph)?;
            let BudgetRange(lo, hi) = budgets.unwrap_or(BudgetRange(0, g.node_count()));
            let id = id.unwrap_or_else(|| {
                graph.file_stem().map_or_else(|| "graph".into(), |s| s.to_string_lossy().into_owned())
            });
            let options = VerifyOptions {
                coloring: coloring.options().attribute("cli")?,
                tolerance: tol,
                ..VerifyOptions::default()
            };
            let mut report = verify_reduction(&id, &g, lo..=hi, options).map_err(|e: OracleError| Failure {
                module: "oracles",
                error: e.into(),
            })?;
            if !timing {
                report.elapsed_ms = None;
            }
            let json = serde_json::to_string_pretty(&report).context("serializing report").attribute("cli")? + "\n";
            match out {
                Some(path) => {
                    write(&path, &json)?;
                    print!("{}", report.table());
                }
                None => {
                    print!("{json}");
                    eprint!("{}", report.table());
                }
            }
            if !report.passed {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Simulate { instance, plan, samples, seed } => {
            let inst = load_instance(&instance)?;
            let plan = load_plan(&plan, &inst)?;
            let exact = capture_breakdown(inst.ensemble(), &plan).map_err(eval_failure)?;
            let mut total = 0.0;
            for (k, chain) in inst.ensemble().chains().iter().enumerate() {
                let mc = oracle_capture_mc(chain, &plan, samples, seed.wrapping_add(k as u64))
                    .map_err(|e| Failure { module: "oracles", error: e.into() })?;
                total += chain.weight * mc.estimate;
                println!(
                    "J[{}] ~ {:.12} +- {:.12} (exact {:.12}, {} samples)",
                    k + 1,
                    mc.estimate,
                    mc.std_error,
                    exact[k],
                    mc.samples
                );
            }
            println!("<J> ~ {total:.12} (exact {:.12})", weighted(&inst, &exact));
        }
        Command::Generate { kind, size, cols, drop, seed, out } => {
            let minimum = match kind {
                GraphKind::Cycle
                | GraphKind::Wheel
                | GraphKind::Outerplanar
                | GraphKind::Triangulation
                | GraphKind::Planar => 3,
                _ => 0,
            };
            if size < minimum {
                return Err(Failure {
                    module: "cli",
                    error: anyhow::anyhow!("--size must be at least {minimum} for this graph kind"),
                });
            }
            if !(0.0..=1.0).contains(&drop) {
                return Err(Failure { module: "cli", error: anyhow::anyhow!("--drop must lie in [0, 1]") });
            }
            let g = match kind {
                GraphKind::Path => generate::path(size),
                GraphKind::Cycle => generate::cycle(size),
                GraphKind::Complete => generate::complete(size),
                GraphKind::Star => generate::star(size),
                GraphKind::Wheel => generate::wheel(size),
                GraphKind::Grid => generate::grid(size, cols),
                GraphKind::Outerplanar => generate::outerplanar(size, seed),
                GraphKind::Triangulation => generate::random_triangulation(size, seed),
                GraphKind::Planar => generate::random_planar(size, drop, seed),
            };
            match out {
                Some(path) => write(&path, &g.to_edge_list())?,
                None => print!("{}", g.to_edge_list()),
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(failure) => {
            eprintln!("{failure}");
            ExitCode::from(2)
        }
    }
}
