use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{ArgdualSolution, SubproblemSpec};
use crate::error::Result;
use crate::linalg::{check_dim, SOFTMAX_FLOOR};

const UNDERFLOW: f64 = 1e6 * SOFTMAX_FLOOR;
use crate::problem::GroundSet;
use crate::prox::ProxKind;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct KktResiduals {
    pub stationarity: f64,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub complementarity: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.stationarity
            .max(self.primal_infeasibility)
            .max(self.dual_infeasibility)
            .max(self.complementarity)
    }

    pub fn within(&self, tol: f64) -> bool {
        self.max() <= tol
    }
}

/// Recomputes the four KKT residuals of `(x, z)` from the problem data alone.
///
/// Stationarity is measured as the distance from zero to the subdifferential
/// of the Lagrangian plus the normal cone of the ground set; `bound_tol`
/// decides when a coordinate counts as sitting on a bound.
pub fn kkt_residuals(spec: &SubproblemSpec<'_>, x: &DVector<f64>, z: &DVector<f64>, bound_tol: f64) -> Result<KktResiduals> {
    let n = spec.dim();
    check_dim(n, x.len())?;
    check_dim(spec.constraints.m(), z.len())?;
    let f = spec.constraints.eval(x)?;

    let primal_rows = f.iter().fold(0.0f64, |m, v| m.max(*v));
    let ground_violation = match spec.ground_set() {
        GroundSet::FullSpace(_) => 0.0,
        GroundSet::Box { lower, upper } => (0..n).fold(0.0f64, |m, i| m.max(lower[i] - x[i]).max(x[i] - upper[i])),
        GroundSet::Simplex(_) => x.iter().fold((x.sum() - 1.0).abs(), |m, v| m.max(-v)),
    };
    let dual_infeasibility = z.iter().fold(0.0f64, |m, v| m.max(-v));
    let complementarity: f64 = z.iter().zip(f.iter()).map(|(zi, fi)| (zi * fi).abs()).sum();

    // Smooth part of the Lagrangian gradient, without the l1 term.
    let mut r = &spec.model.grad * spec.model_weight + spec.constraints.adjoint(z)?;
    let c2 = spec.prox_weight;
    let stationarity = match (spec.prox.kind(), spec.ground_set()) {
        (ProxKind::Euclidean, GroundSet::Simplex(_)) => {
            r += (x - &spec.center) * c2;
            simplex_spread(&r, x, bound_tol)
        }
        (ProxKind::Entropy, _) => {
            // Coordinates that underflowed carry no information about the log term.
            let support: Vec<usize> = (0..n).filter(|&i| x[i] > UNDERFLOW).collect();
            for &i in &support {
                r[i] += c2 * (x[i] / spec.center[i]).ln();
            }
            let hi = support.iter().map(|&i| r[i]).fold(f64::NEG_INFINITY, f64::max);
            let lo = support.iter().map(|&i| r[i]).fold(f64::INFINITY, f64::min);
            if support.is_empty() {
                f64::INFINITY
            } else {
                hi - lo
            }
        }
        (ProxKind::Euclidean, ground) => {
            r += (x - &spec.center) * c2;
            let tau = spec.l1_weight();
            let mut worst = 0.0f64;
            for i in 0..n {
                // Subdifferential of the l1 term at x_i, as an interval around r_i.
                let (lo, hi) = if tau == 0.0 {
                    (r[i], r[i])
                } else if x[i] > 0.0 {
                    (r[i] + tau, r[i] + tau)
                } else if x[i] < 0.0 {
                    (r[i] - tau, r[i] - tau)
                } else {
                    (r[i] - tau, r[i] + tau)
                };
                let (at_lower, at_upper) = match ground {
                    GroundSet::Box { lower, upper } => (
                        lower[i].is_finite() && (x[i] - lower[i]).abs() <= bound_tol * (1.0 + lower[i].abs()),
                        upper[i].is_finite() && (x[i] - upper[i]).abs() <= bound_tol * (1.0 + upper[i].abs()),
                    ),
                    _ => (false, false),
                };
                let res = match (at_lower, at_upper) {
                    (true, true) => 0.0,
                    (true, false) => (-hi).max(0.0),
                    (false, true) => lo.max(0.0),
                    (false, false) => lo.max(0.0).max((-hi).max(0.0)),
                };
                worst = worst.max(res);
            }
            worst
        }
    };

    Ok(KktResiduals {
        stationarity,
        primal_infeasibility: primal_rows.max(ground_violation),
        dual_infeasibility,
        complementarity,
    })
}

/// Simplex optimality: equal gradient on the support, no smaller off it.
fn simplex_spread(r: &DVector<f64>, x: &DVector<f64>, bound_tol: f64) -> f64 {
    let support: Vec<usize> = (0..x.len()).filter(|&i| x[i] > bound_tol).collect();
    if support.is_empty() {
        return f64::INFINITY;
    }
    let rho = support.iter().map(|&i| r[i]).fold(f64::INFINITY, f64::min);
    let hi = support.iter().map(|&i| r[i]).fold(f64::NEG_INFINITY, f64::max);
    let off_min = (0..x.len())
        .filter(|i| !support.contains(i))
        .map(|i| r[i])
        .fold(f64::INFINITY, f64::min);
    (hi - rho).max((rho - off_min).max(0.0))
}

/// Independently recomputes the residuals of `sol` and checks them against `tol`.
pub fn verify_kkt(spec: &SubproblemSpec<'_>, sol: &ArgdualSolution, tol: f64) -> bool {
    match kkt_residuals(spec, &sol.x_star, &sol.z_star, tol) {
        Ok(res) => res.within(tol),
        Err(_) => false,
    }
}
