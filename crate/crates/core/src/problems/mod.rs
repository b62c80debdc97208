//! Seeded test problems with strictly feasible points and reference solutions
//! computed without the solvers (closed form, active-set enumeration).

mod qp;
mod transport;

pub use qp::{gen_qp, qp_instance};
pub use transport::{gen_transport_toy, transport_instance, TRANSPORT_REGULARIZER};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::problem::{GroundSet, ProblemSpec};

/// How a reference solution was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReferenceSource {
    KktHand,
    ActiveSetEnum,
    GridSearch,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub x_star: DVector<f64>,
    pub z_star: DVector<f64>,
    pub f_star: f64,
    pub source: ReferenceSource,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedInstance {
    pub problem: ProblemSpec,
    pub reference: Reference,
    /// Point of the ground set with `A x - b < 0` componentwise.
    pub slater_point: DVector<f64>,
}

impl GeneratedInstance {
    /// Largest KKT residual of the stored reference for the outer problem.
    pub fn reference_residual(&self) -> Result<f64> {
        outer_kkt_residual(&self.problem, &self.reference.x_star, &self.reference.z_star)
    }

    /// Most positive constraint value at the Slater point.
    pub fn slater_margin(&self) -> Result<f64> {
        Ok(self.problem.constraints.eval(&self.slater_point)?.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v)))
    }
}

/// Max of stationarity, primal and dual infeasibility, and complementarity for
/// `min f(x)` over the ground set subject to `A x <= b`.
pub fn outer_kkt_residual(problem: &ProblemSpec, x: &DVector<f64>, z: &DVector<f64>) -> Result<f64> {
    let f = problem.constraints.eval(x)?;
    let grad = problem.objective.q() * x + problem.objective.c() + problem.constraints.adjoint(z)?;
    let primal = f.iter().fold(0.0f64, |m, v| m.max(*v));
    let dual = z.iter().fold(0.0f64, |m, v| m.max(-v));
    let comp = z.iter().zip(f.iter()).fold(0.0f64, |m, (zi, fi)| m.max((zi * fi).abs()));
    let tol = 1e-12;
    let (stat, ground) = match &problem.ground_set {
        GroundSet::FullSpace(_) => (grad.amax(), 0.0),
        GroundSet::Box { lower, upper } => {
            let mut s = 0.0f64;
            let mut g = 0.0f64;
            for i in 0..x.len() {
                g = g.max(lower[i] - x[i]).max(x[i] - upper[i]);
                let at_lo = (x[i] - lower[i]).abs() <= tol * (1.0 + lower[i].abs());
                let at_hi = (x[i] - upper[i]).abs() <= tol * (1.0 + upper[i].abs());
                let r = match (at_lo, at_hi) {
                    (true, true) => 0.0,
                    (true, false) => (-grad[i]).max(0.0),
                    (false, true) => grad[i].max(0.0),
                    (false, false) => grad[i].abs(),
                };
                s = s.max(r);
            }
            (s, g)
        }
        GroundSet::Simplex(_) => {
            let g = x.iter().fold((x.sum() - 1.0).abs(), |m, v| m.max(-v));
            // Gradient equal to its minimum on the support and no smaller elsewhere.
            let lo = grad.min();
            let on_support = (0..x.len()).filter(|&i| x[i] > tol).fold(0.0f64, |m, i| m.max(grad[i] - lo));
            (on_support, g)
        }
    };
    Ok(stat.max(primal).max(ground).max(dual).max(comp))
}
