//! Budget-constrained maximization of `<J>` and the `<J> = 1` decision.
//!
//! Both exact routines enumerate candidate subsets of size at most the
//! budget in lexicographic order of their sorted candidate indices
//! (`[]`, `[0]`, `[0, 1]`, ... `[1]`, ...). Subsets are evaluated in
//! parallel chunks but folded in that order, so results never depend on
//! the thread count.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::evader::EvalError;
use crate::instance::{Candidate, UmeInstance};
use crate::interdiction::{InterdictionError, InterdictionPlan};

pub const DEFAULT_SUBSET_CAP: u128 = 10_000_000;
pub const DEFAULT_DECISION_TOLERANCE: f64 = 1e-9;
/// Objective values closer than this are ties.
pub const TIE_TOLERANCE: f64 = 1e-12;

const CHUNK: usize = 2048;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("{subsets} candidate subsets exceed the enumeration cap of {cap}")]
    SearchSpaceTooLarge { subsets: u128, cap: u128 },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Interdiction(#[from] InterdictionError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exact,
    Greedy,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub plan: InterdictionPlan,
    pub selection: Vec<Candidate>,
    pub value: f64,
    pub method: Method,
    pub evaluations: usize,
    pub elapsed: Duration,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Largest number of subsets an exact routine may enumerate.
    pub cap: u128,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { cap: DEFAULT_SUBSET_CAP }
    }
}

/// Number of subsets of size `<= max_len` drawn from `k` items, saturating.
pub fn subset_count(k: usize, max_len: usize) -> u128 {
    let mut total: u128 = 0;
    let mut binom: u128 = 1;
    for j in 0..=max_len.min(k) {
        total = total.saturating_add(binom);
        binom = binom.saturating_mul((k - j) as u128) / (j as u128 + 1);
    }
    total
}

/// Subsets of `0..k` with at most `max_len` elements, lexicographic order.
struct LexSubsets {
    k: usize,
    max_len: usize,
    current: Vec<usize>,
    started: bool,
    done: bool,
}

impl LexSubsets {
    fn new(k: usize, max_len: usize) -> Self {
        Self { k, max_len, current: Vec::new(), started: false, done: false }
    }
}

impl Iterator for LexSubsets {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            return Some(Vec::new());
        }
        if self.current.len() < self.max_len {
            let next = self.current.last().map_or(0, |x| x + 1);
            if next < self.k {
                self.current.push(next);
                return Some(self.current.clone());
            }
        }
        while let Some(x) = self.current.pop() {
            if x + 1 < self.k {
                self.current.push(x + 1);
                return Some(self.current.clone());
            }
        }
        self.done = true;
        None
    }
}

impl std::iter::FusedIterator for LexSubsets {}

/// Objective over candidate index sets with per-candidate kill lists
/// computed once.
struct Objective<'a> {
    inst: &'a UmeInstance,
    candidates: Vec<Candidate>,
    kills: Vec<Vec<(usize, usize, f64)>>,
}

impl<'a> Objective<'a> {
    fn new(inst: &'a UmeInstance) -> Self {
        let candidates = inst.candidates();
        let kills = candidates.iter().map(|&c| inst.kills_of(c)).collect();
        Self { inst, candidates, kills }
    }

    fn value(&self, subset: &[usize]) -> Result<f64, EvalError> {
        let kills: Vec<_> = subset.iter().flat_map(|&i| self.kills[i].iter().copied()).collect();
        self.inst.ensemble().weighted_with_kills(&kills)
    }

    fn selection(&self, subset: &[usize]) -> Vec<Candidate> {
        subset.iter().map(|&i| self.candidates[i]).collect()
    }

    fn check_cap(&self, budget: usize, cap: u128) -> Result<(), SolveError> {
        let subsets = subset_count(self.candidates.len(), budget);
        if subsets > cap {
            return Err(SolveError::SearchSpaceTooLarge { subsets, cap });
        }
        Ok(())
    }

    /// Streams lexicographic subsets through `visit` in evaluated chunks;
    /// `visit` returns `true` to stop.
    fn scan(
        &self,
        budget: usize,
        mut visit: impl FnMut(&[usize], f64) -> bool,
    ) -> Result<usize, EvalError> {
        let mut subsets = LexSubsets::new(self.candidates.len(), budget);
        let mut evaluations = 0;
        loop {
            let chunk: Vec<Vec<usize>> = subsets.by_ref().take(CHUNK).collect();
            if chunk.is_empty() {
                return Ok(evaluations);
            }
            let values = chunk
                .par_iter()
                .map(|s| self.value(s))
                .collect::<Result<Vec<f64>, _>>()?;
            for (s, v) in chunk.iter().zip(values) {
                evaluations += 1;
                if visit(s, v) {
                    return Ok(evaluations);
                }
            }
        }
    }

    fn finish(
        &self,
        subset: &[usize],
        value: f64,
        method: Method,
        evaluations: usize,
        start: Instant,
    ) -> Result<SolveResult, SolveError> {
        let selection = self.selection(subset);
        Ok(SolveResult {
            plan: self.inst.plan_for(&selection)?,
            selection,
            value,
            method,
            evaluations,
            elapsed: start.elapsed(),
        })
    }
}

pub fn solve_exact(inst: &UmeInstance) -> Result<SolveResult, SolveError> {
    solve_exact_with(inst, SolverOptions::default())
}

/// Globally optimal plan within the budget. Among plans within
/// [`TIE_TOLERANCE`] of the optimum, the lexicographically smallest sorted
/// candidate set wins.
pub fn solve_exact_with(inst: &UmeInstance, options: SolverOptions) -> Result<SolveResult, SolveError> {
    let start = Instant::now();
    let objective = Objective::new(inst);
    let budget = inst.budget().limit;
    objective.check_cap(budget, options.cap)?;

    // Lexicographic staircase: each kept subset beats every earlier one. The
    // answer is the first kept subset within tolerance of the last.
    let mut stairs: Vec<(f64, Vec<usize>)> = Vec::new();
    let evaluations = objective.scan(budget, |s, v| {
        if stairs.last().is_none_or(|(best, _)| v > *best) {
            stairs.push((v, s.to_vec()));
            let top = v;
            let drop = stairs.iter().take_while(|(w, _)| *w < top - TIE_TOLERANCE).count();
            stairs.drain(..drop);
        }
        false
    })?;
    let (value, subset) = stairs.into_iter().next().expect("the empty subset is always evaluated");
    objective.finish(&subset, value, Method::Exact, evaluations, start)
}

/// Adds the candidate with the largest marginal gain until the budget is
/// spent or no candidate gains more than [`TIE_TOLERANCE`]. Ties go to the
/// lowest candidate index.
pub fn solve_greedy(inst: &UmeInstance) -> Result<SolveResult, SolveError> {
    let start = Instant::now();
    let objective = Objective::new(inst);
    let mut chosen: Vec<usize> = Vec::new();
    let mut current = objective.value(&chosen)?;
    let mut evaluations = 1;
    for _ in 0..inst.budget().limit {
        let open: Vec<usize> = (0..objective.candidates.len()).filter(|i| !chosen.contains(i)).collect();
        if open.is_empty() {
            break;
        }
        let values = open
            .par_iter()
            .map(|&i| {
                let mut trial = chosen.clone();
                trial.push(i);
                trial.sort_unstable();
                objective.value(&trial)
            })
            .collect::<Result<Vec<f64>, _>>()?;
        evaluations += values.len();
        let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if best - current <= TIE_TOLERANCE {
            break;
        }
        let pick = values.iter().position(|&v| v >= best - TIE_TOLERANCE).unwrap();
        chosen.push(open[pick]);
        chosen.sort_unstable();
        current = values[pick];
    }
    objective.finish(&chosen, current, Method::Greedy, evaluations, start)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Answer {
    Yes,
    No,
}

#[derive(Debug, Clone)]
pub struct Decision {
    pub answer: Answer,
    /// Lexicographically first subset reaching `1 - tol`, on YES.
    pub witness: Option<SolveResult>,
    pub evaluations: usize,
}

impl Decision {
    pub fn is_yes(&self) -> bool {
        self.answer == Answer::Yes
    }
}

/// Is there a plan within the budget with `<J> >= 1 - tol`?
pub fn decide_perfect(inst: &UmeInstance, tol: f64) -> Result<Decision, SolveError> {
    decide_perfect_with(inst, tol, SolverOptions::default())
}

pub fn decide_perfect_with(inst: &UmeInstance, tol: f64, options: SolverOptions) -> Result<Decision, SolveError> {
    let start = Instant::now();
    let objective = Objective::new(inst);
    let budget = inst.budget().limit;
    objective.check_cap(budget, options.cap)?;
    let mut hit: Option<(Vec<usize>, f64)> = None;
    let evaluations = objective.scan(budget, |s, v| {
        if v >= 1.0 - tol {
            hit = Some((s.to_vec(), v));
            true
        } else {
            false
        }
    })?;
    let witness = match hit {
        Some((s, v)) => Some(objective.finish(&s, v, Method::Exact, evaluations, start)?),
        None => None,
    };
    Ok(Decision {
        answer: if witness.is_some() { Answer::Yes } else { Answer::No },
        witness,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evader::{EvaderChain, EvaderEnsemble};
    use crate::graph::DiGraph;
    use crate::interdiction::{Budget, Efficiency};
    use nalgebra::DMatrix;

    #[test]
    fn lex_subsets_order() {
        let all: Vec<Vec<usize>> = LexSubsets::new(3, 2).collect();
        assert_eq!(
            all,
            vec![vec![], vec![0], vec![0, 1], vec![0, 2], vec![1], vec![1, 2], vec![2]]
        );
        assert_eq!(LexSubsets::new(0, 3).count(), 1);
        let mut it = LexSubsets::new(2, 1);
        assert_eq!(it.by_ref().count(), 3);
        assert_eq!(it.next(), None);
        for k in 0..7 {
            for b in 0..8 {
                assert_eq!(LexSubsets::new(k, b).count() as u128, subset_count(k, b));
            }
        }
        assert_eq!(subset_count(300, 300), u128::MAX);
        assert!(subset_count(200, 100) > DEFAULT_SUBSET_CAP);
    }

    fn two_node(budget: usize) -> UmeInstance {
        let g = DiGraph::from_pairs(2, [(0, 1)]).unwrap();
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let ens = EvaderEnsemble::single(EvaderChain::new(vec![1.0, 0.0], m, 1, 1.0)).unwrap();
        UmeInstance::new(g, ens, Efficiency::perfect(), Budget::nodes(budget)).unwrap()
    }

    #[test]
    fn zero_budget_is_empty_plan() {
        let r = solve_exact(&two_node(0)).unwrap();
        assert!(r.selection.is_empty());
        assert_eq!(r.value, 0.0);
        assert!(solve_greedy(&two_node(0)).unwrap().selection.is_empty());
    }

    #[test]
    fn single_sensor_catches() {
        let r = solve_exact(&two_node(1)).unwrap();
        assert_eq!(r.selection, vec![Candidate::Node(0)]);
        assert_eq!(r.value, 1.0);
        let d = decide_perfect(&two_node(1), DEFAULT_DECISION_TOLERANCE).unwrap();
        assert!(d.is_yes());
        assert!(!decide_perfect(&two_node(0), DEFAULT_DECISION_TOLERANCE).unwrap().is_yes());
    }

    #[test]
    fn k3_reduction_answers() {
        use crate::coloring::ColoringOptions;
        use crate::reduction::reduce_pvc;
        let a = reduce_pvc(&crate::generate::complete(3), 2, ColoringOptions::default()).unwrap();
        let exact = solve_exact(&a.instance).unwrap();
        assert_eq!(exact.value, 1.0);
        assert_eq!(exact.selection, vec![Candidate::Node(0), Candidate::Node(1)]);
        assert_eq!(solve_greedy(&a.instance).unwrap().value, 1.0);

        let yes = decide_perfect(&a.instance, DEFAULT_DECISION_TOLERANCE).unwrap();
        assert!(yes.is_yes());
        assert_eq!(yes.witness.unwrap().selection.len(), 2);
        let one = a.instance.clone().with_budget_limit(1);
        let no = decide_perfect(&one, DEFAULT_DECISION_TOLERANCE).unwrap();
        assert_eq!((no.answer, no.evaluations), (Answer::No, 4));
        assert!(no.witness.is_none());
    }

    #[test]
    fn ties_go_to_the_lexicographically_smallest_set() {
        // two symmetric routes: either node alone is equally good
        let g = DiGraph::from_pairs(3, [(0, 2), (1, 2)]).unwrap();
        let m = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        let ens = EvaderEnsemble::single(EvaderChain::new(vec![0.5, 0.5, 0.0], m, 2, 1.0)).unwrap();
        let inst = UmeInstance::new(g, ens, Efficiency::perfect(), Budget::nodes(1)).unwrap();
        assert_eq!(solve_exact(&inst).unwrap().selection, vec![Candidate::Node(0)]);
        assert_eq!(solve_greedy(&inst).unwrap().selection, vec![Candidate::Node(0)]);
    }

    #[test]
    fn cap_is_enforced() {
        let opts = SolverOptions { cap: 1 };
        match solve_exact_with(&two_node(1), opts) {
            Err(SolveError::SearchSpaceTooLarge { subsets: 2, cap: 1 }) => {}
            other => panic!("{other:?}"),
        }
        assert!(decide_perfect_with(&two_node(1), 1e-9, opts).is_err());
    }
}
