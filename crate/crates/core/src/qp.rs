//! Exact minimization of a convex quadratic over a ground set.
//!
//! Used by the dual-function evaluator, where the inner problem is
//! `min 1/2 x^T H x + q^T x` over the full space, a box, or the simplex.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{project_simplex, solve_general};
use crate::problem::GroundSet;

const MAX_ACTIVE_SET_ITERS: usize = 10_000;

/// Minimizes `1/2 x^T H x + q^T x` over `ground`. Returns [`Error::DualUnbounded`]
/// when the infimum is `-inf`.
pub fn minimize_quadratic(h: &DMatrix<f64>, q: &DVector<f64>, ground: &GroundSet) -> Result<DVector<f64>> {
    let n = q.len();
    let scale = 1.0 + h.amax() + q.amax();
    if h.amax() == 0.0 {
        return minimize_linear(q, ground);
    }
    if let Some(lambda) = scaled_identity(h) {
        match ground {
            GroundSet::FullSpace(_) => return Ok(-q / lambda),
            GroundSet::Box { lower, upper } => {
                return Ok(DVector::from_fn(n, |i, _| (-q[i] / lambda).clamp(lower[i], upper[i])));
            }
            GroundSet::Simplex(_) => return Ok(project_simplex(&(-q / lambda), 1.0)),
        }
    }
    match ground {
        GroundSet::FullSpace(_) => minimize_unconstrained(h, q, scale),
        GroundSet::Box { lower, upper } => active_set(h, q, lower, upper, false),
        GroundSet::Simplex(_) => {
            let lower = DVector::zeros(n);
            let upper = DVector::from_element(n, f64::INFINITY);
            active_set(h, q, &lower, &upper, true)
        }
    }
}

fn scaled_identity(h: &DMatrix<f64>) -> Option<f64> {
    let lambda = h[(0, 0)];
    if lambda <= 0.0 {
        return None;
    }
    for i in 0..h.nrows() {
        for j in 0..h.ncols() {
            let expect = if i == j { lambda } else { 0.0 };
            if h[(i, j)] != expect {
                return None;
            }
        }
    }
    Some(lambda)
}

fn minimize_linear(q: &DVector<f64>, ground: &GroundSet) -> Result<DVector<f64>> {
    match ground {
        GroundSet::FullSpace(_) => {
            if q.iter().all(|v| *v == 0.0) {
                Ok(DVector::zeros(q.len()))
            } else {
                Err(Error::DualUnbounded)
            }
        }
        GroundSet::Box { lower, upper } => {
            let mut x = DVector::zeros(q.len());
            for i in 0..q.len() {
                x[i] = if q[i] > 0.0 {
                    lower[i]
                } else if q[i] < 0.0 {
                    upper[i]
                } else {
                    0.0f64.clamp(lower[i], upper[i])
                };
                if !x[i].is_finite() {
                    return Err(Error::DualUnbounded);
                }
            }
            Ok(x)
        }
        GroundSet::Simplex(n) => {
            let mut best = 0;
            for i in 1..*n {
                if q[i] < q[best] {
                    best = i;
                }
            }
            let mut x = DVector::zeros(*n);
            x[best] = 1.0;
            Ok(x)
        }
    }
}

fn minimize_unconstrained(h: &DMatrix<f64>, q: &DVector<f64>, scale: f64) -> Result<DVector<f64>> {
    if let Some(ch) = h.clone().cholesky() {
        return Ok(ch.solve(&(-q)));
    }
    // Singular H: a minimizer exists iff -q lies in range(H).
    let svd = h.clone().svd(true, true);
    let x = svd
        .solve(&(-q), 1e-12 * scale)
        .map_err(|_| Error::Singular)?;
    let residual = (h * &x + q).amax();
    if residual > 1e-9 * scale {
        return Err(Error::DualUnbounded);
    }
    Ok(x)
}

/// Primal active-set method for bounds plus an optional `sum x = 1` equality.
fn active_set(
    h: &DMatrix<f64>,
    q: &DVector<f64>,
    lower: &DVector<f64>,
    upper: &DVector<f64>,
    simplex: bool,
) -> Result<DVector<f64>> {
    let n = q.len();
    #[derive(Clone, Copy, PartialEq)]
    enum Bound {
        Free,
        Lower,
        Upper,
    }
    let mut x = if simplex {
        DVector::from_element(n, 1.0 / n as f64)
    } else {
        DVector::from_fn(n, |i, _| 0.0f64.clamp(lower[i], upper[i]))
    };
    let mut state: Vec<Bound> = (0..n)
        .map(|i| {
            if x[i] == lower[i] {
                Bound::Lower
            } else if x[i] == upper[i] {
                Bound::Upper
            } else {
                Bound::Free
            }
        })
        .collect();
    let scale = 1.0 + h.amax() + q.amax();
    for _ in 0..MAX_ACTIVE_SET_ITERS {
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == Bound::Free).collect();
        let k = free.len();
        let extra = usize::from(simplex);
        // Equality-constrained step: minimize over free coordinates with others fixed.
        let grad = h * &x + q;
        let mut kkt = DMatrix::zeros(k + extra, k + extra);
        let mut rhs = DVector::zeros(k + extra);
        for (a, &i) in free.iter().enumerate() {
            for (b, &j) in free.iter().enumerate() {
                kkt[(a, b)] = h[(i, j)];
            }
            rhs[a] = -grad[i];
            if simplex {
                kkt[(a, k)] = 1.0;
                kkt[(k, a)] = 1.0;
            }
        }
        let (step, nu) = if k + extra == 0 {
            (DVector::zeros(0), 0.0)
        } else {
            let sol = if simplex && k == 0 {
                DVector::zeros(1)
            } else {
                solve_general(kkt, &rhs)?
            };
            let nu = if simplex { sol[k] } else { 0.0 };
            (sol.rows(0, k).into_owned(), nu)
        };
        let step_norm = step.amax();
        if step_norm <= 1e-14 * (1.0 + x.amax()) {
            // Stationary on the working set: check multiplier signs of the fixed coordinates.
            let grad = h * &x + q;
            let mut worst: Option<(usize, f64)> = None;
            for i in 0..n {
                let g = grad[i] + nu;
                let violation = match state[i] {
                    Bound::Lower => -g,
                    Bound::Upper => g,
                    Bound::Free => continue,
                };
                if violation > 1e-13 * scale && worst.map_or(true, |(_, w)| violation > w) {
                    worst = Some((i, violation));
                }
            }
            match worst {
                None => return Ok(x),
                Some((i, _)) => {
                    state[i] = Bound::Free;
                    continue;
                }
            }
        }
        // Longest feasible step along the direction.
        let mut t = 1.0;
        let mut blocking: Option<(usize, Bound)> = None;
        for (a, &i) in free.iter().enumerate() {
            let d = step[a];
            if d < 0.0 && lower[i].is_finite() {
                let r = (lower[i] - x[i]) / d;
                if r < t {
                    t = r;
                    blocking = Some((i, Bound::Lower));
                }
            } else if d > 0.0 && upper[i].is_finite() {
                let r = (upper[i] - x[i]) / d;
                if r < t {
                    t = r;
                    blocking = Some((i, Bound::Upper));
                }
            }
        }
        let t = t.max(0.0);
        for (a, &i) in free.iter().enumerate() {
            x[i] += t * step[a];
        }
        if let Some((i, b)) = blocking {
            x[i] = if b == Bound::Lower { lower[i] } else { upper[i] };
            state[i] = b;
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::DualUnbounded);
        }
    }
    Err(Error::invalid("active-set iteration limit reached"))
}
