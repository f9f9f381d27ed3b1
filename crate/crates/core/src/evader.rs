//! Evader Markov chains and exact capture probabilities.
//!
//! For one evader with source distribution `a`, sub-stochastic transition
//! matrix `M`, killing target `t`, and a plan with detection `r ⊙ d`, the
//! capture probability is
//!
//! ```text
//! J = 1 - ( a [I - (M - M ⊙ r ⊙ d)]^-1 )_t
//! ```
//!
//! i.e. one minus the probability of arriving at `t` without being detected.
//! Mass that leaks out of a sub-stochastic row never arrives at `t` and so
//! counts toward `J`. The row vector `a [..]^-1` is obtained from a single
//! transposed linear solve.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::interdiction::InterdictionPlan;
use crate::linalg::{Factored, Singular};

/// Slack on probability sums and row sums.
pub const SUM_TOLERANCE: f64 = 1e-12;
/// Results within this distance outside `[0, 1]` are clamped; farther is an error.
pub const CLAMP_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("dimension mismatch: expected {expected} nodes, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("I - M is singular under this plan (rcond estimate {rcond:e}): a recurrent class never leaks")]
    Singular { rcond: f64 },
    #[error("capture probability {value} fell outside [0, 1]")]
    OutOfRange { value: f64 },
    #[error("evader {index}: {source}")]
    Evader {
        index: usize,
        #[source]
        source: Box<EvalError>,
    },
    #[error("evader {index} is invalid: {report}")]
    InvalidChain { index: usize, report: ValidationReport },
    #[error("evader weights sum to {sum}, expected 1")]
    WeightSum { sum: f64 },
    #[error("an ensemble needs at least one evader")]
    EmptyEnsemble,
}

impl From<Singular> for EvalError {
    fn from(s: Singular) -> Self {
        EvalError::Singular { rcond: s.rcond }
    }
}

/// One evader: source distribution, transition matrix, target, scenario weight.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaderChain {
    pub source: Vec<f64>,
    pub transition: DMatrix<f64>,
    pub target: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Dimension { source_len: usize, rows: usize, cols: usize },
    TargetOutOfRange { target: usize, node_count: usize },
    NonFinite { from: usize, to: Option<usize> },
    NegativeSource { node: usize, value: f64 },
    SourceSum { sum: f64 },
    NegativeTransition { from: usize, to: usize, value: f64 },
    TransitionAboveOne { from: usize, to: usize, value: f64 },
    RowSum { node: usize, sum: f64 },
    TargetRowNonzero { target: usize, mass: f64 },
    Weight { value: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Dimension { source_len, rows, cols } => {
                write!(f, "source has length {source_len} but M is {rows}x{cols}")
            }
            Violation::TargetOutOfRange { target, node_count } => {
                write!(f, "target {target} is not among {node_count} nodes")
            }
            Violation::NonFinite { from, to: Some(to) } => write!(f, "M[{from},{to}] is not finite"),
            Violation::NonFinite { from, to: None } => write!(f, "a[{from}] is not finite"),
            Violation::NegativeSource { node, value } => write!(f, "a[{node}] = {value} is negative"),
            Violation::SourceSum { sum } => write!(f, "source distribution sums to {sum}"),
            Violation::NegativeTransition { from, to, value } => write!(f, "M[{from},{to}] = {value} is negative"),
            Violation::TransitionAboveOne { from, to, value } => write!(f, "M[{from},{to}] = {value} exceeds 1"),
            Violation::RowSum { node, sum } => write!(f, "row {node} of M sums to {sum}"),
            Violation::TargetRowNonzero { target, mass } => {
                write!(f, "target row {target} carries mass {mass}; the target must kill")
            }
            Violation::Weight { value } => write!(f, "weight {value} is outside (0, 1]"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

impl EvaderChain {
    pub fn new(source: Vec<f64>, transition: DMatrix<f64>, target: usize, weight: f64) -> Self {
        Self { source, transition, target, weight }
    }

    /// Number of nodes the chain lives on.
    pub fn dim(&self) -> usize {
        self.source.len()
    }

    /// Lists every violated invariant. An empty report means the chain is valid.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let n = self.source.len();
        let (rows, cols) = self.transition.shape();
        if rows != n || cols != n {
            violations.push(Violation::Dimension { source_len: n, rows, cols });
            return ValidationReport { violations };
        }
        if self.target >= n {
            violations.push(Violation::TargetOutOfRange { target: self.target, node_count: n });
        }
        if !(self.weight > 0.0 && self.weight <= 1.0) {
            violations.push(Violation::Weight { value: self.weight });
        }

        let mut sum = 0.0;
        for (u, &p) in self.source.iter().enumerate() {
            if !p.is_finite() {
                violations.push(Violation::NonFinite { from: u, to: None });
            } else if p < 0.0 {
                violations.push(Violation::NegativeSource { node: u, value: p });
            }
            sum += p;
        }
        if sum.is_nan() || (sum - 1.0).abs() > SUM_TOLERANCE {
            violations.push(Violation::SourceSum { sum });
        }

        for u in 0..n {
            let mut row = 0.0;
            for v in 0..n {
                let p = self.transition[(u, v)];
                if !p.is_finite() {
                    violations.push(Violation::NonFinite { from: u, to: Some(v) });
                } else if p < 0.0 {
                    violations.push(Violation::NegativeTransition { from: u, to: v, value: p });
                } else if p > 1.0 {
                    violations.push(Violation::TransitionAboveOne { from: u, to: v, value: p });
                }
                row += p;
            }
            if row > 1.0 + SUM_TOLERANCE {
                violations.push(Violation::RowSum { node: u, sum: row });
            }
            if u == self.target {
                let mass: f64 = (0..n).map(|v| self.transition[(u, v)].abs()).sum();
                if mass != 0.0 {
                    violations.push(Violation::TargetRowNonzero { target: u, mass });
                }
            }
        }
        ValidationReport { violations }
    }

    fn check_plan(&self, plan: &InterdictionPlan) -> Result<(), EvalError> {
        match plan.max_node() {
            Some(m) if m >= self.dim() => Err(EvalError::DimensionMismatch {
                expected: self.dim(),
                found: m + 1,
            }),
            _ => Ok(()),
        }
    }

    /// Row vector `a [I - M~]^-1` where `M~` is `M` with each killed entry
    /// scaled by `1 - d`. Entry `v` is the expected number of undetected
    /// visits to `v`; entry `t` is the probability of reaching `t` undetected.
    pub(crate) fn visits_with_kills(
        &self,
        kills: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<DVector<f64>, EvalError> {
        let n = self.dim();
        if self.transition.shape() != (n, n) {
            return Err(EvalError::DimensionMismatch { expected: n, found: self.transition.nrows() });
        }
        let mut escaped = self.transition.clone();
        for (i, j, d) in kills {
            if i >= n || j >= n {
                return Err(EvalError::DimensionMismatch { expected: n, found: i.max(j) + 1 });
            }
            escaped[(i, j)] *= 1.0 - d;
        }
        // x (I - M~) = a  <=>  (I - M~)^T x^T = a^T
        let mut system = -escaped.transpose();
        for i in 0..n {
            system[(i, i)] += 1.0;
        }
        let rhs = DVector::from_column_slice(&self.source);
        Ok(Factored::new(system).checked_solve(&rhs)?)
    }

    pub(crate) fn capture_with_kills(
        &self,
        kills: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<f64, EvalError> {
        if self.target >= self.dim() {
            return Err(EvalError::DimensionMismatch { expected: self.dim(), found: self.target + 1 });
        }
        let visits = self.visits_with_kills(kills)?;
        clamp_probability(1.0 - visits[self.target])
    }
}

fn clamp_probability(value: f64) -> Result<f64, EvalError> {
    if !(-CLAMP_TOLERANCE..=1.0 + CLAMP_TOLERANCE).contains(&value) {
        return Err(EvalError::OutOfRange { value });
    }
    Ok(value.clamp(0.0, 1.0))
}

/// Capture probability `J` of one evader under `plan`.
pub fn capture_probability(chain: &EvaderChain, plan: &InterdictionPlan) -> Result<f64, EvalError> {
    chain.check_plan(plan)?;
    chain.capture_with_kills(plan.kills())
}

/// Expected undetected visits per node under `plan`.
pub fn expected_visits(chain: &EvaderChain, plan: &InterdictionPlan) -> Result<Vec<f64>, EvalError> {
    chain.check_plan(plan)?;
    Ok(chain.visits_with_kills(plan.kills())?.iter().copied().collect())
}

pub fn validate_chain(chain: &EvaderChain) -> ValidationReport {
    chain.validate()
}

/// Evaders sharing one node index space, with weights summing to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaderEnsemble {
    chains: Vec<EvaderChain>,
}

impl EvaderEnsemble {
    /// Validates every chain, equal dimensions, and the weight sum.
    pub fn new(chains: Vec<EvaderChain>) -> Result<Self, EvalError> {
        let first = chains.first().ok_or(EvalError::EmptyEnsemble)?;
        let n = first.dim();
        for (index, c) in chains.iter().enumerate() {
            let report = c.validate();
            if !report.is_valid() {
                return Err(EvalError::InvalidChain { index, report });
            }
            if c.dim() != n {
                return Err(EvalError::Evader {
                    index,
                    source: Box::new(EvalError::DimensionMismatch { expected: n, found: c.dim() }),
                });
            }
        }
        let sum: f64 = chains.iter().map(|c| c.weight).sum();
        if sum.is_nan() || (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(EvalError::WeightSum { sum });
        }
        Ok(Self { chains })
    }

    pub fn single(chain: EvaderChain) -> Result<Self, EvalError> {
        Self::new(vec![chain])
    }

    pub fn chains(&self) -> &[EvaderChain] {
        &self.chains
    }

    pub fn dim(&self) -> usize {
        self.chains[0].dim()
    }

    pub fn len(&self) -> usize {
        self.chains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chains.is_empty()
    }

    pub(crate) fn breakdown_with_kills(&self, kills: &[(usize, usize, f64)]) -> Result<Vec<f64>, EvalError> {
        self.chains
            .iter()
            .enumerate()
            .map(|(index, c)| {
                c.capture_with_kills(kills.iter().copied())
                    .map_err(|e| EvalError::Evader { index, source: Box::new(e) })
            })
            .collect()
    }

    pub(crate) fn weighted_with_kills(&self, kills: &[(usize, usize, f64)]) -> Result<f64, EvalError> {
        let parts = self.breakdown_with_kills(kills)?;
        Ok(self.chains.iter().zip(parts).map(|(c, j)| c.weight * j).sum())
    }
}

/// Per-evader capture probabilities `J^(k)`.
pub fn capture_breakdown(ensemble: &EvaderEnsemble, plan: &InterdictionPlan) -> Result<Vec<f64>, EvalError> {
    ensemble.chains[0].check_plan(plan)?;
    let kills: Vec<_> = plan.kills().collect();
    ensemble.breakdown_with_kills(&kills)
}

/// Expected capture probability `<J> = sum_k w^(k) J^(k)`.
pub fn weighted_capture(ensemble: &EvaderEnsemble, plan: &InterdictionPlan) -> Result<f64, EvalError> {
    ensemble.chains[0].check_plan(plan)?;
    let kills: Vec<_> = plan.kills().collect();
    ensemble.weighted_with_kills(&kills)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interdiction::{Efficiency, InterdictionPlan, Mode};

    fn straight() -> EvaderChain {
        // node 0 = s, node 1 = t
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        EvaderChain::new(vec![1.0, 0.0], m, 1, 1.0)
    }

    fn self_loop() -> EvaderChain {
        let m = DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.0, 0.0]);
        EvaderChain::new(vec![1.0, 0.0], m, 1, 1.0)
    }

    #[test]
    fn empty_plan_means_no_capture() {
        let plan = InterdictionPlan::empty(Mode::Edge, Efficiency::perfect());
        assert_eq!(capture_probability(&straight(), &plan).unwrap(), 0.0);
    }

    #[test]
    fn full_interdiction_captures() {
        let plan = InterdictionPlan::from_edges([(0, 1)], Efficiency::perfect());
        assert_eq!(capture_probability(&straight(), &plan).unwrap(), 1.0);
    }

    #[test]
    fn self_loop_two_thirds() {
        // sum_k 0.25^k * 0.25 = 1/3 of the mass arrives undetected
        let plan = InterdictionPlan::from_edges([(0, 0), (0, 1)], Efficiency::uniform(0.5).unwrap());
        let j = capture_probability(&self_loop(), &plan).unwrap();
        assert!((j - 2.0 / 3.0).abs() <= 1e-12, "{j}");
    }

    #[test]
    fn plan_out_of_range() {
        let plan = InterdictionPlan::from_edges([(0, 5)], Efficiency::perfect());
        assert!(matches!(
            capture_probability(&straight(), &plan),
            Err(EvalError::DimensionMismatch { expected: 2, found: 6 })
        ));
    }

    #[test]
    fn closed_recurrent_class_is_singular() {
        // 0 <-> 1 forever, target 2 unreachable
        let m = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let chain = EvaderChain::new(vec![1.0, 0.0, 0.0], m, 2, 1.0);
        let empty = InterdictionPlan::empty(Mode::Edge, Efficiency::perfect());
        assert!(matches!(capture_probability(&chain, &empty), Err(EvalError::Singular { .. })));
        // a leaky sensor breaks the recurrence
        let plan = InterdictionPlan::from_edges([(0, 1)], Efficiency::uniform(0.1).unwrap());
        assert_eq!(capture_probability(&chain, &plan).unwrap(), 1.0);
    }

    #[test]
    fn vanishing_mass_counts_as_capture() {
        let m = DMatrix::from_row_slice(3, 3, &[0.0, 0.4, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let chain = EvaderChain::new(vec![1.0, 0.0, 0.0], m, 2, 1.0);
        let empty = InterdictionPlan::empty(Mode::Edge, Efficiency::perfect());
        assert_eq!(capture_probability(&chain, &empty).unwrap(), 1.0);
        let visits = expected_visits(&chain, &empty).unwrap();
        assert!((visits[1] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn weighted_is_convex_combination() {
        let caught = EvaderChain { weight: 0.5, ..straight() };
        let free = EvaderChain {
            weight: 0.5,
            ..EvaderChain::new(vec![1.0, 0.0], DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0]), 0, 1.0)
        };
        let ens = EvaderEnsemble::new(vec![caught, free]).unwrap();
        let plan = InterdictionPlan::from_edges([(0, 1)], Efficiency::perfect());
        assert_eq!(capture_breakdown(&ens, &plan).unwrap(), vec![1.0, 0.0]);
        assert_eq!(weighted_capture(&ens, &plan).unwrap(), 0.5);

        let single = EvaderEnsemble::single(self_loop()).unwrap();
        let plan = InterdictionPlan::from_edges([(0, 1)], Efficiency::uniform(0.3).unwrap());
        assert_eq!(
            weighted_capture(&single, &plan).unwrap(),
            capture_probability(&self_loop(), &plan).unwrap()
        );
    }

    #[test]
    fn evader_errors_are_annotated() {
        let m = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let stuck = EvaderChain::new(vec![1.0, 0.0, 0.0], m, 2, 0.5);
        let ok = EvaderChain::new(vec![1.0, 0.0, 0.0], DMatrix::zeros(3, 3), 2, 0.5);
        let ens = EvaderEnsemble::new(vec![ok, stuck]).unwrap();
        let plan = InterdictionPlan::empty(Mode::Edge, Efficiency::perfect());
        match weighted_capture(&ens, &plan) {
            Err(EvalError::Evader { index: 1, source }) => assert!(matches!(*source, EvalError::Singular { .. })),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn validation_names_offenders() {
        assert!(straight().validate().is_valid());
        let mut m = DMatrix::zeros(5, 5);
        m[(3, 0)] = 0.75;
        m[(3, 1)] = 0.75;
        m[(4, 0)] = 0.5;
        m[(2, 1)] = -0.1;
        let chain = EvaderChain::new(vec![0.5, 0.25, 0.0, 0.0, 0.0], m, 4, 1.5);
        let report = validate_chain(&chain);
        let v = &report.violations;
        assert!(v.contains(&Violation::RowSum { node: 3, sum: 1.5 }));
        assert!(v.contains(&Violation::SourceSum { sum: 0.75 }));
        assert!(v.contains(&Violation::TargetRowNonzero { target: 4, mass: 0.5 }));
        assert!(v.contains(&Violation::NegativeTransition { from: 2, to: 1, value: -0.1 }));
        assert!(v.contains(&Violation::Weight { value: 1.5 }));
        assert!(report.to_string().contains("row 3"));
    }

    #[test]
    fn ensemble_rejects_bad_weights() {
        let a = EvaderChain { weight: 0.5, ..straight() };
        assert!(matches!(EvaderEnsemble::new(vec![a.clone()]), Err(EvalError::WeightSum { .. })));
        assert!(matches!(EvaderEnsemble::new(vec![]), Err(EvalError::EmptyEnsemble)));
        let three = EvaderChain::new(vec![1.0, 0.0, 0.0], DMatrix::zeros(3, 3), 2, 0.5);
        assert!(EvaderEnsemble::new(vec![a, three]).is_err());
    }
}
