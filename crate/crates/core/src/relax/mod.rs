//! Certified lower-bound backends.
//!
//! Two backends satisfy the same contract: [`exact`] enumerates the binary
//! subproblem, [`dnn`] runs a first-order scheme on the doubly nonnegative
//! relaxation and certifies its dual with [`certificate::safe_lower_bound`].
//! Either way the returned bound never exceeds the subproblem optimum.

pub mod certificate;
pub mod dnn;
pub mod exact;
pub mod psd;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{CutSet, LiftedProblem, LinearCut, QuboInstance, Sense};

pub use certificate::{safe_lower_bound, DualCandidate};
pub use dnn::{extract_xbar, solve_dnn, DnnConfig, DnnSession, WarmStart};
pub use exact::{solve_exact, ExactConfig, ExactSession};
pub use psd::{project_psd, EPS_EIG};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    CertifiedBound,
    Infeasible,
    BudgetExhausted,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Diagnostics {
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelaxationResult {
    /// Certified lower bound; `+∞` when the subproblem is proven empty.
    pub lower_bound: f64,
    /// Approximate solution in `[0,1]^{2m}` (position `i-1` holds `x_i`).
    pub xbar: Option<Vec<f64>>,
    pub status: Status,
    pub diagnostics: Diagnostics,
}

impl RelaxationResult {
    pub fn infeasible() -> Self {
        Self {
            lower_bound: f64::INFINITY,
            xbar: None,
            status: Status::Infeasible,
            diagnostics: Diagnostics::default(),
        }
    }
}

/// Iteration cap and stopping tolerance of a first-order solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub max_sweeps: usize,
    pub tol: f64,
}

impl Default for Budget {
    fn default() -> Self {
        Self { max_sweeps: 2000, tol: 1e-7 }
    }
}

/// A lifted subproblem: the base relaxation plus linear cuts, at most one of
/// which is an `≤` probe.
#[derive(Debug, Clone)]
pub struct RelaxationQuery<'a> {
    pub lifted: &'a LiftedProblem,
    pub cuts: Vec<LinearCut>,
    pub budget: Budget,
}

impl<'a> RelaxationQuery<'a> {
    pub fn new(lifted: &'a LiftedProblem, cuts: Vec<LinearCut>) -> Self {
        Self { lifted, cuts, budget: Budget::default() }
    }

    pub fn probe_count(&self) -> usize {
        self.cuts.iter().filter(|c| c.sense == Sense::AtMost).count()
    }
}

/// True iff the probe bound strictly exceeds `eta`, i.e. the `≤ α` side holds
/// no point with value `≤ eta` and the `≥ α+1` side keeps the optimum.
pub fn validate_matrix_cut(bound_a: f64, eta: i64) -> bool {
    (eta as f64) < bound_a
}

/// Right-hand side and direction for one cut row of a prepared session.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RowSpec {
    pub rhs: i64,
    pub sense: Sense,
}

/// Backend selection.
#[derive(Debug, Clone, PartialEq)]
pub enum Backend {
    Exact(ExactConfig),
    Dnn(DnnConfig),
}

impl Backend {
    pub fn name(&self) -> &'static str {
        match self {
            Backend::Exact(_) => "exact",
            Backend::Dnn(_) => "dnn",
        }
    }

    /// Prepares repeated solves over a fixed list of cut sets (coordinates of
    /// `inst`'s slack space); each solve then only chooses per-set directions.
    pub fn prepare(&self, inst: &QuboInstance, sets: &[CutSet]) -> Result<Session> {
        match self {
            Backend::Exact(cfg) => Ok(Session::Exact(ExactSession::new(inst, sets, cfg)?)),
            Backend::Dnn(cfg) => Ok(Session::Dnn(DnnSession::new(inst, sets, cfg.clone())?)),
        }
    }
}

pub enum Session {
    Exact(ExactSession),
    Dnn(DnnSession),
}

impl Session {
    pub fn solve_master(&self, rows: &[RowSpec]) -> Result<(RelaxationResult, Option<WarmStart>)> {
        match self {
            Session::Exact(s) => Ok((s.solve(rows), None)),
            Session::Dnn(s) => {
                let (res, warm) = s.solve(rows, None, s.config().master)?;
                Ok((res, Some(warm)))
            }
        }
    }

    pub fn solve_probe(&self, rows: &[RowSpec], warm: Option<&WarmStart>) -> Result<RelaxationResult> {
        match self {
            Session::Exact(s) => Ok(s.solve(rows)),
            Session::Dnn(s) => Ok(s.solve(rows, warm, s.config().probe)?.0),
        }
    }
}
