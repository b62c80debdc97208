//! Constrained prox-subproblems solved together with their Lagrange multipliers.
//!
//! A subproblem is
//!
//! ```text
//!     minimize   c1 * psi(x, y_ref) + c2 * V(x, center)
//!     subject to A x - b <= 0,  x in ground set
//! ```
//!
//! with `psi` in linearized form. [`solve_argdual`] returns the minimizer and
//! the multipliers of `A x - b <= 0`. Two independent routes exist: exhaustive
//! active-set enumeration (Euclidean prox, full space or box, few rows) and
//! projected dual ascent with an exact active-set polish (everything else).

mod ascent;
mod dual_fn;
mod enumerate;
mod kkt;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{check_dim, ensure_finite_vec, simplex_threshold, soft_threshold, softmax};
use crate::model::{Linearization, SimpleTerm};
use crate::problem::{AffineConstraints, GroundSet};
use crate::prox::{ProxKind, ProxSetup};

pub use dual_fn::{eval_dual_function, DualEval};
pub use kkt::{kkt_residuals, verify_kkt, KktResiduals};

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_ENUMERATION_LIMIT: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArgdualMethod {
    /// Enumeration when applicable, dual ascent otherwise.
    Auto,
    Enumerate,
    DualAscent,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArgdualOptions {
    pub tol: f64,
    pub method: ArgdualMethod,
    /// Largest number of inequality rows (constraints plus finite box bounds) enumerated exhaustively.
    pub enumeration_limit: usize,
    pub max_iterations: usize,
}

impl Default for ArgdualOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            method: ArgdualMethod::Auto,
            enumeration_limit: DEFAULT_ENUMERATION_LIMIT,
            max_iterations: 200_000,
        }
    }
}

/// `c1 * psi(x, y_ref) + c2 * V(x, center)` over `{x in Q : A x <= b}`.
#[derive(Debug, Clone)]
pub struct SubproblemSpec<'a> {
    pub model: Linearization,
    pub model_weight: f64,
    pub prox_weight: f64,
    pub center: DVector<f64>,
    pub constraints: &'a AffineConstraints,
    pub prox: &'a ProxSetup,
}

impl<'a> SubproblemSpec<'a> {
    pub fn new(
        model: Linearization,
        model_weight: f64,
        prox_weight: f64,
        center: DVector<f64>,
        constraints: &'a AffineConstraints,
        prox: &'a ProxSetup,
    ) -> Result<Self> {
        let n = prox.dim();
        check_dim(n, model.point.len())?;
        check_dim(n, model.grad.len())?;
        check_dim(n, center.len())?;
        check_dim(n, constraints.n())?;
        if !(model_weight >= 0.0) || !model_weight.is_finite() {
            return Err(Error::invalid("model weight must be finite and non-negative"));
        }
        if !(prox_weight > 0.0) || !prox_weight.is_finite() {
            return Err(Error::invalid("prox weight must be finite and positive"));
        }
        ensure_finite_vec(&center, "prox center")?;
        ensure_finite_vec(&model.grad, "model gradient")?;
        if prox.kind() == ProxKind::Entropy && center.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::NotInterior);
        }
        Ok(Self {
            model,
            model_weight,
            prox_weight,
            center,
            constraints,
            prox,
        })
    }

    /// Pure proximal problem `min c2 * V(x, center) + <lin, x>` (no model term at a reference point).
    pub fn proximal(
        linear: DVector<f64>,
        prox_weight: f64,
        center: DVector<f64>,
        constraints: &'a AffineConstraints,
        prox: &'a ProxSetup,
    ) -> Result<Self> {
        let model = Linearization {
            point: center.clone(),
            grad: linear,
            term: SimpleTerm::Zero,
        };
        Self::new(model, 1.0, prox_weight, center, constraints, prox)
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn ground_set(&self) -> &GroundSet {
        self.prox.ground_set()
    }

    /// `phi(x)`.
    pub fn objective(&self, x: &DVector<f64>) -> Result<f64> {
        Ok(self.model_weight * self.model.eval(x)? + self.prox_weight * self.prox.bregman(x, &self.center)?)
    }

    /// `phi(x) + <z, A x - b>`.
    pub fn lagrangian(&self, x: &DVector<f64>, z: &DVector<f64>) -> Result<f64> {
        Ok(self.objective(x)? + z.dot(&self.constraints.eval(x)?))
    }

    /// The model term's effective l1 weight `c1 * w`, or zero.
    fn l1_weight(&self) -> f64 {
        match self.model.term {
            SimpleTerm::L1 { weight } => self.model_weight * weight,
            SimpleTerm::Zero => 0.0,
        }
    }

    /// Minimizer of the Lagrangian in `x` for fixed multipliers, in closed form.
    pub fn inner_minimizer(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        let shift = &self.model.grad * self.model_weight + self.constraints.adjoint(z)?;
        let c2 = self.prox_weight;
        let x = match self.prox.kind() {
            ProxKind::Euclidean => {
                let v = &self.center - shift / c2;
                let tau = self.l1_weight() / c2;
                match self.ground_set() {
                    GroundSet::FullSpace(_) => v.map(|vi| soft_threshold(vi, tau)),
                    GroundSet::Box { lower, upper } => {
                        DVector::from_fn(v.len(), |i, _| soft_threshold(v[i], tau).clamp(lower[i], upper[i]))
                    }
                    // |x|_1 is constant on the simplex.
                    GroundSet::Simplex(_) => {
                        let tau = simplex_threshold(v.as_slice(), 1.0);
                        v.map(|vi| (vi - tau).max(0.0))
                    }
                }
            }
            ProxKind::Entropy => {
                let logits = DVector::from_fn(self.dim(), |i, _| self.center[i].ln() - shift[i] / c2);
                softmax(&logits)
            }
        };
        ensure_finite_vec(&x, "subproblem iterate")?;
        Ok(x)
    }

    /// Acceptance test for solutions of exact (direct) solves, whose residuals
    /// carry roundoff proportional to the data: stationarity is judged against
    /// the gradient magnitudes, feasibility against `|b|` and `|center|`, and
    /// complementarity additionally against `|z|`.
    pub(crate) fn accepts(&self, res: &KktResiduals, z: &DVector<f64>, tol: f64) -> Result<bool> {
        let g_scale = 1.0 + self.model_weight * self.model.grad.amax() + self.constraints.adjoint(z)?.amax();
        let x_scale = 1.0 + self.constraints.b().amax() + self.center.amax();
        Ok(res.stationarity <= tol * g_scale
            && res.primal_infeasibility <= tol * x_scale
            && res.dual_infeasibility <= tol
            && res.complementarity <= tol * x_scale * (1.0 + z.amax()))
    }

    /// Lagrange dual function `D(z) = min_x phi(x) + <z, A x - b>`.
    pub fn dual_value(&self, z: &DVector<f64>) -> Result<f64> {
        let x = self.inner_minimizer(z)?;
        self.lagrangian(&x, z)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArgdualSolution {
    pub x_star: DVector<f64>,
    pub z_star: DVector<f64>,
    pub kkt: KktResiduals,
    pub method: ArgdualMethod,
    pub iterations: usize,
}

/// Solves the subproblem to KKT tolerance `tol` with default options.
pub fn solve_argdual(spec: &SubproblemSpec<'_>, tol: f64) -> Result<ArgdualSolution> {
    solve_argdual_with(
        spec,
        &ArgdualOptions {
            tol,
            ..ArgdualOptions::default()
        },
    )
}

pub fn solve_argdual_with(spec: &SubproblemSpec<'_>, opts: &ArgdualOptions) -> Result<ArgdualSolution> {
    solve_argdual_from(spec, opts, None)
}

/// Like [`solve_argdual_with`], starting the dual iteration from `z0` when given.
/// Enumeration ignores the starting point.
pub fn solve_argdual_from(
    spec: &SubproblemSpec<'_>,
    opts: &ArgdualOptions,
    z0: Option<&DVector<f64>>,
) -> Result<ArgdualSolution> {
    if let Some(z0) = z0 {
        check_dim(spec.constraints.m(), z0.len())?;
        ensure_finite_vec(z0, "warm-start multipliers")?;
    }
    if !(opts.tol > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let enumerable = enumerate::applicable(spec, opts.enumeration_limit);
    match opts.method {
        ArgdualMethod::Enumerate if !enumerable => Err(Error::invalid(
            "active-set enumeration needs a Euclidean prox, no l1 term, a full-space or box ground set, and few rows",
        )),
        ArgdualMethod::Enumerate => enumerate::solve(spec, opts.tol),
        ArgdualMethod::Auto if enumerable => enumerate::solve(spec, opts.tol),
        _ => ascent::solve(spec, opts, z0),
    }
}

#[cfg(test)]
mod tests;
