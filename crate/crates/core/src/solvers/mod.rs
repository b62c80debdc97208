//! Primal-dual gradient and fast gradient methods with adaptive step sizes.
//!
//! Both methods take a `(delta, L)`-model of the objective, solve one
//! constrained prox-subproblem per line-search trial, average the recovered
//! multipliers, and report a certificate `gap <= R^2 / A_N + noise`.

mod certificate;
mod config;
mod fast;
mod gradient;
mod line_search;
mod trace;

pub use certificate::{compute_certificate, Certificate, CertificateInput};
pub use config::{DeltaSchedule, LineSearch, SolverConfig};
pub use fast::solve_fast_pd;
pub use gradient::solve_gradient_pd;
pub use line_search::{backtrack_l, Backtrack, TrialOutcome};
pub use trace::{IterationRecord, RunSummary, RunTrace, TRACE_CSV_HEADER};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::ModelOracle;
use crate::problem::ProblemSpec;
use crate::prox::ProxSetup;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    /// Primal-dual gradient method; outputs the weighted average of the iterates.
    Gd,
    /// Primal-dual fast gradient method; outputs the last iterate.
    Fast,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Gd => "gd",
            Algorithm::Fast => "fast",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    MaxIterations,
    GapBelowEps,
}

#[derive(Debug, Clone)]
pub struct PrimalDualResult {
    pub algorithm: Algorithm,
    pub x0: DVector<f64>,
    pub x_out: DVector<f64>,
    pub z_out: DVector<f64>,
    pub a_n: f64,
    pub iterations: usize,
    pub stop_reason: StopReason,
    pub trace: RunTrace,
    pub certificate: Certificate,
}

impl PrimalDualResult {
    pub fn model_evals(&self) -> usize {
        self.trace.records.iter().map(|r| r.model_evals).sum()
    }
}

/// Dispatches to [`solve_gradient_pd`] or [`solve_fast_pd`].
pub fn solve<M: ModelOracle + ?Sized>(
    algorithm: Algorithm,
    problem: &ProblemSpec,
    oracle: &M,
    prox: &ProxSetup,
    cfg: &SolverConfig,
) -> Result<PrimalDualResult> {
    match algorithm {
        Algorithm::Gd => solve_gradient_pd(problem, oracle, prox, cfg),
        Algorithm::Fast => solve_fast_pd(problem, oracle, prox, cfg),
    }
}

#[cfg(test)]
mod tests;
