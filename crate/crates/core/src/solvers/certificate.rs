use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::argdual::eval_dual_function;
use crate::error::{Error, Result};
use crate::linalg::check_dim;
use crate::problem::ProblemSpec;
use crate::prox::ProxSetup;

/// `gap = f(x_out) + g(z_out)` against `bound = R^2 / A_N + noise_sum`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub gap: f64,
    pub bound: f64,
    pub r2_used: f64,
    pub noise_sum: f64,
}

impl Certificate {
    pub fn holds(&self, tol: f64) -> bool {
        self.gap <= self.bound + tol
    }
}

/// State of a run at some prefix `N`.
#[derive(Debug, Clone, Copy)]
pub struct CertificateInput<'a> {
    pub x_out: &'a DVector<f64>,
    pub z_out: &'a DVector<f64>,
    pub a_n: f64,
    /// The already-normalized noise term (divided by `A_N`).
    pub noise_sum: f64,
    pub x0: &'a DVector<f64>,
}

/// Evaluates the duality gap and its certified bound. Without an explicit
/// `r2`, the exact `V(x(z_out), x0)` is used, where `x(z_out)` maximizes the
/// dual-function objective.
pub fn compute_certificate(
    problem: &ProblemSpec,
    prox: &ProxSetup,
    input: CertificateInput<'_>,
    r2: Option<f64>,
    tol: f64,
) -> Result<Certificate> {
    check_dim(problem.n(), input.x_out.len())?;
    check_dim(problem.n(), input.x0.len())?;
    if !(input.a_n > 0.0) {
        return Err(Error::invalid("A_N must be positive"));
    }
    let dual = eval_dual_function(problem, input.z_out, tol)?;
    let gap = problem.value(input.x_out)? + dual.g_value;
    let r2_used = match r2 {
        Some(r) => r,
        None => prox.bregman(&dual.x_of_z, input.x0)?,
    };
    Ok(Certificate {
        gap,
        bound: r2_used / input.a_n + input.noise_sum,
        r2_used,
        noise_sum: input.noise_sum,
    })
}
