use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::argdual::ArgdualOptions;
use crate::error::{Error, Result};
use crate::linalg::{check_dim, ensure_finite_vec};
use crate::model::ModelOracle;
use crate::problem::ProblemSpec;
use crate::prox::{ProxKind, ProxSetup};

/// Inexactness `delta_k` declared for iteration `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeltaSchedule {
    Zero,
    /// `delta_k = eps / 2`.
    ConstantHalfEps,
    /// `delta_k = eps * w_{k+1} / (2 A_{k+1})` with `w` the step weight
    /// (`alpha_{k+1}` for the fast method, `1 / L_{k+1}` for the gradient method).
    FastScaled,
    Constant(f64),
    /// Explicit values; the last one repeats once the list runs out.
    Custom(Vec<f64>),
}

impl DeltaSchedule {
    pub fn delta(&self, k: usize, weight: f64, a_next: f64, eps: f64) -> f64 {
        match self {
            DeltaSchedule::Zero => 0.0,
            DeltaSchedule::ConstantHalfEps => 0.5 * eps,
            DeltaSchedule::FastScaled => eps * weight / (2.0 * a_next),
            DeltaSchedule::Constant(v) => *v,
            DeltaSchedule::Custom(seq) => seq.get(k).or(seq.last()).copied().unwrap_or(0.0),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            DeltaSchedule::Constant(v) if !(*v >= 0.0) || !v.is_finite() => {
                Err(Error::invalid("constant delta must be finite and non-negative"))
            }
            DeltaSchedule::Custom(seq) if seq.is_empty() => Err(Error::invalid("custom delta schedule is empty")),
            DeltaSchedule::Custom(seq) if seq.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) => {
                Err(Error::invalid("custom delta values must be finite and non-negative"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LineSearch {
    /// Smallest `i_k >= 0` with `L_{k+1} = 2^(i_k - 1) L_k` passing the exit inequality.
    Adaptive,
    /// Constant `L`, no exit test.
    Fixed(f64),
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub l0: f64,
    pub eps: f64,
    pub delta: DeltaSchedule,
    pub max_iters: usize,
    pub max_backtracks: usize,
    /// Adaptive `L` never drops below this fraction of the largest `L` seen so
    /// far (`L0` included). At a fixed point the exit test passes for every `L`,
    /// and unbounded halving would blow up the step weights.
    pub l_floor_ratio: f64,
    pub subproblem: ArgdualOptions,
    pub line_search: LineSearch,
    /// Starting point; defaults to the ground set's center.
    pub x0: Option<DVector<f64>>,
    /// Stop as soon as the certified gap drops to `eps`.
    pub early_stop: bool,
    /// Evaluate the certificate after every iteration.
    pub monitor_certificate: bool,
    /// User bound on `V(x(z_N), x0)`; when absent the exact value is used.
    pub r2: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            l0: 1.0,
            eps: 1e-3,
            delta: DeltaSchedule::Zero,
            max_iters: 1000,
            max_backtracks: 60,
            l_floor_ratio: 1e-3,
            subproblem: ArgdualOptions::default(),
            line_search: LineSearch::Adaptive,
            x0: None,
            early_stop: false,
            monitor_certificate: true,
            r2: None,
        }
    }
}

impl SolverConfig {
    pub(super) fn validate<M: ModelOracle + ?Sized>(
        &self,
        problem: &ProblemSpec,
        oracle: &M,
        prox: &ProxSetup,
    ) -> Result<DVector<f64>> {
        if !(self.l0 > 0.0) || !self.l0.is_finite() {
            return Err(Error::invalid("L0 must be positive"));
        }
        if !(self.eps > 0.0) || !self.eps.is_finite() {
            return Err(Error::invalid("eps must be positive"));
        }
        if let LineSearch::Fixed(l) = self.line_search {
            if !(l > 0.0) || !l.is_finite() {
                return Err(Error::invalid("fixed L must be positive"));
            }
        }
        if !(0.0..=0.5).contains(&self.l_floor_ratio) {
            return Err(Error::invalid("l_floor_ratio must lie in [0, 0.5]"));
        }
        if self.max_backtracks == 0 {
            return Err(Error::invalid("max_backtracks must be at least 1"));
        }
        self.delta.validate()?;
        let n = problem.n();
        check_dim(n, oracle.dim())?;
        check_dim(n, prox.dim())?;
        if prox.ground_set() != &problem.ground_set {
            return Err(Error::invalid("prox setup and problem use different ground sets"));
        }
        let x0 = self.x0.clone().unwrap_or_else(|| problem.ground_set.center());
        check_dim(n, x0.len())?;
        ensure_finite_vec(&x0, "starting point")?;
        if !problem.ground_set.contains(&x0, 1e-12) {
            return Err(Error::OutsideGroundSet);
        }
        if prox.kind() == ProxKind::Entropy && x0.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::NotInterior);
        }
        Ok(x0)
    }
}
