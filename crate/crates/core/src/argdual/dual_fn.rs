use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::{check_dim, ensure_finite, ensure_finite_vec};
use crate::problem::{ProblemSpec, SmoothFunction};
use crate::qp::minimize_quadratic;

#[derive(Debug, Clone, PartialEq)]
pub struct DualEval {
    pub g_value: f64,
    /// Maximizer of `-f(x) - <z, F(x)>` over the ground set.
    pub x_of_z: DVector<f64>,
}

/// `g(z) = max_{x in Q} [-f(x) - <z, A x - b>]` together with its maximizer.
///
/// Multipliers below `-tol` are rejected; tiny negative entries are clipped to zero.
pub fn eval_dual_function(problem: &ProblemSpec, z: &DVector<f64>, tol: f64) -> Result<DualEval> {
    check_dim(problem.m(), z.len())?;
    ensure_finite_vec(z, "dual point")?;
    if z.iter().any(|v| *v < -tol) {
        return Err(Error::invalid("dual point must be non-negative"));
    }
    let z = z.map(|v| v.max(0.0));
    let obj = &problem.objective;
    let q = obj.c() + problem.constraints.adjoint(&z)?;
    let x = minimize_quadratic(obj.q(), &q, &problem.ground_set)?;
    ensure_finite_vec(&x, "dual maximizer")?;
    let g = -obj.value(&x)? - z.dot(&problem.constraints.eval(&x)?);
    Ok(DualEval {
        g_value: ensure_finite(g, "dual value")?,
        x_of_z: x,
    })
}
