//! Projected dual ascent on `z >= 0` with periodic exact polishing.
//!
//! The dual `D(z) = min_x phi(x) + <z, A x - b>` is concave with gradient
//! `A x(z) - b`. Accelerated projected ascent identifies the active set; the
//! polish step then solves the optimality system on that set exactly
//! (a linear solve for Euclidean prox, Newton's method for entropy).

use nalgebra::{DMatrix, DVector};

use super::{kkt_residuals, ArgdualMethod, ArgdualOptions, ArgdualSolution, KktResiduals, SubproblemSpec};
use crate::error::{Error, Result};
use crate::linalg::{norm_inf, solve_general};
use crate::model::SimpleTerm;
use crate::problem::GroundSet;
use crate::prox::ProxKind;

const POLISH_EVERY: usize = 10;
/// Multipliers beyond this multiple of the data scale are taken as a sign of infeasibility.
const DIVERGENCE_FACTOR: f64 = 1e8;

pub(super) fn solve(spec: &SubproblemSpec<'_>, opts: &ArgdualOptions, z0: Option<&DVector<f64>>) -> Result<ArgdualSolution> {
    let m = spec.constraints.m();
    let tol = opts.tol;
    let mut z = z0.map_or_else(|| DVector::zeros(m), |z0| z0.map(|v| v.max(0.0)));
    let x0 = spec.inner_minimizer(&z)?;
    let res0 = kkt_residuals(spec, &x0, &z, tol)?;
    if m == 0 || res0.within(tol) {
        return finish(x0, z, res0, 0);
    }

    let lip = dual_lipschitz(spec);
    let data_scale = 1.0
        + norm_inf(&spec.model.grad) * spec.model_weight
        + spec.prox_weight * (1.0 + norm_inf(&spec.center))
        + norm_inf(spec.constraints.b());
    let divergence_limit = DIVERGENCE_FACTOR * data_scale;
    let step = 1.0 / lip;
    let mut y = z.clone();
    let mut t = 1.0f64;
    let mut d_prev = spec.dual_value(&z)?;
    let mut best = res0;

    for it in 1..=opts.max_iterations {
        let xy = spec.inner_minimizer(&y)?;
        let grad = spec.constraints.eval(&xy)?;
        let z_next = (&y + grad * step).map(|v| v.max(0.0));
        let d_next = spec.dual_value(&z_next)?;
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        if d_next < d_prev {
            // Function-value restart.
            y = z_next.clone();
            t = 1.0;
        } else {
            y = &z_next + (&z_next - &z) * ((t - 1.0) / t_next);
            t = t_next;
        }
        z = z_next;
        d_prev = d_next.max(d_prev);
        if norm_inf(&z) > divergence_limit {
            return Err(Error::Infeasible);
        }

        if it % POLISH_EVERY == 0 || it == 1 {
            let x = spec.inner_minimizer(&z)?;
            let res = kkt_residuals(spec, &x, &z, tol)?;
            if res.max() < best.max() {
                best = res;
            }
            if res.within(tol) {
                return finish(x, z, res, it);
            }
            for candidate in polish_candidates(spec, &z, &x)? {
                let xc = spec.inner_minimizer(&candidate)?;
                let rc = kkt_residuals(spec, &xc, &candidate, tol)?;
                if rc.max() < best.max() {
                    best = rc;
                }
                if spec.accepts(&rc, &candidate, tol)? {
                    return finish(xc, candidate, rc, it);
                }
            }
        }
    }
    Err(Error::ArgdualNotConverged {
        iterations: opts.max_iterations,
        residuals: best,
    })
}

fn finish(x: DVector<f64>, z: DVector<f64>, kkt: KktResiduals, iterations: usize) -> Result<ArgdualSolution> {
    Ok(ArgdualSolution {
        x_star: x,
        z_star: z,
        kkt,
        method: ArgdualMethod::DualAscent,
        iterations,
    })
}

/// Upper bound on the Lipschitz constant of the dual gradient.
fn dual_lipschitz(spec: &SubproblemSpec<'_>) -> f64 {
    let a = spec.constraints.a();
    let c2 = spec.prox_weight;
    let raw = match spec.prox.kind() {
        // |A|_2^2 / c2, bounded by the Frobenius norm.
        ProxKind::Euclidean => a.norm_squared(),
        // Entropy is 1-strongly convex in l1: sum_i |a_i|_inf^2 / c2.
        ProxKind::Entropy => a.row_iter().map(|r| r.amax().powi(2)).sum(),
    };
    (raw / c2).max(f64::MIN_POSITIVE)
}

/// Multiplier guesses obtained by solving the optimality system on guessed active sets.
fn polish_candidates(spec: &SubproblemSpec<'_>, z: &DVector<f64>, x: &DVector<f64>) -> Result<Vec<DVector<f64>>> {
    let f = spec.constraints.eval(x)?;
    let positive: Vec<usize> = (0..z.len()).filter(|&i| z[i] > 0.0).collect();
    let mut widened = positive.clone();
    for i in 0..z.len() {
        if z[i] == 0.0 && f[i] > 0.0 {
            widened.push(i);
        }
    }
    widened.sort_unstable();
    let mut sets = vec![positive];
    if widened != sets[0] {
        sets.push(widened);
    }
    let mut out = Vec::new();
    for set in sets {
        let polished = match spec.prox.kind() {
            ProxKind::Euclidean => polish_euclidean(spec, &set, x),
            ProxKind::Entropy => polish_entropy(spec, &set, z),
        };
        if let Some(zc) = polished {
            if zc.iter().all(|v| v.is_finite()) {
                out.push(zc.map(|v| v.max(0.0)));
            }
        }
    }
    Ok(out)
}

/// Solves `A_S x = b_S` for the multipliers with the ground-set pattern of `x` frozen.
fn polish_euclidean(spec: &SubproblemSpec<'_>, set: &[usize], x: &DVector<f64>) -> Option<DVector<f64>> {
    let n = spec.dim();
    let m = spec.constraints.m();
    let a = spec.constraints.a();
    let b = spec.constraints.b();
    let c2 = spec.prox_weight;
    let v = &spec.center - &spec.model.grad * (spec.model_weight / c2);
    let tau = match spec.model.term {
        SimpleTerm::L1 { weight } => spec.model_weight * weight / c2,
        SimpleTerm::Zero => 0.0,
    };
    let simplex = matches!(spec.ground_set(), GroundSet::Simplex(_));
    // Free coordinates follow x_j = v'_j - (A_S^T z)_j / c2 - theta; the rest stay where they are.
    let mut free = Vec::new();
    let mut vprime = v.clone();
    for j in 0..n {
        let fixed = match spec.ground_set() {
            GroundSet::FullSpace(_) => tau > 0.0 && x[j] == 0.0,
            GroundSet::Box { lower, upper } => x[j] == lower[j] || x[j] == upper[j] || (tau > 0.0 && x[j] == 0.0),
            GroundSet::Simplex(_) => x[j] == 0.0,
        };
        if !fixed {
            free.push(j);
            if tau > 0.0 && !simplex {
                vprime[j] -= tau * x[j].signum();
            }
        }
    }
    let k = set.len();
    let extra = usize::from(simplex);
    if k + extra == 0 {
        return None;
    }
    let mut mat = DMatrix::zeros(k + extra, k + extra);
    let mut rhs = DVector::zeros(k + extra);
    for (p, &i) in set.iter().enumerate() {
        for (q, &l) in set.iter().enumerate() {
            mat[(p, q)] = free.iter().map(|&j| a[(i, j)] * a[(l, j)]).sum::<f64>() / c2;
        }
        let fixed_part: f64 = (0..n).filter(|j| !free.contains(j)).map(|j| a[(i, j)] * x[j]).sum();
        rhs[p] = free.iter().map(|&j| a[(i, j)] * vprime[j]).sum::<f64>() + fixed_part - b[i];
        if simplex {
            mat[(p, k)] = free.iter().map(|&j| a[(i, j)]).sum();
        }
    }
    if simplex {
        for (q, &l) in set.iter().enumerate() {
            mat[(k, q)] = free.iter().map(|&j| a[(l, j)]).sum::<f64>() / c2;
        }
        mat[(k, k)] = free.len() as f64;
        rhs[k] = free.iter().map(|&j| vprime[j]).sum::<f64>() - 1.0;
    }
    let sol = solve_general(mat, &rhs).ok()?;
    let mut z = DVector::zeros(m);
    for (p, &i) in set.iter().enumerate() {
        z[i] = sol[p];
    }
    Some(z)
}

/// Newton's method on `A_S x(z) = b_S` over the multipliers in `set`.
fn polish_entropy(spec: &SubproblemSpec<'_>, set: &[usize], z: &DVector<f64>) -> Option<DVector<f64>> {
    if set.is_empty() {
        return Some(DVector::zeros(z.len()));
    }
    let a = spec.constraints.a();
    let b = spec.constraints.b();
    let c2 = spec.prox_weight;
    let k = set.len();
    let mut z = z.clone();
    for i in 0..z.len() {
        if !set.contains(&i) {
            z[i] = 0.0;
        }
    }
    let residual = |z: &DVector<f64>| -> Option<(DVector<f64>, DVector<f64>)> {
        let x = spec.inner_minimizer(z).ok()?;
        let r = DVector::from_fn(k, |p, _| a.row(set[p]).transpose().dot(&x) - b[set[p]]);
        Some((x, r))
    };
    let (mut x, mut r) = residual(&z)?;
    let scale = 1.0 + b.amax();
    for _ in 0..50 {
        let rn = norm_inf(&r);
        if rn <= 1e-15 * scale {
            break;
        }
        // J = -(1/c2) A_S (diag x - x x^T) A_S^T
        let a_s = DMatrix::from_fn(k, x.len(), |p, j| a[(set[p], j)]);
        let ax = &a_s * &x;
        let mut jac = &a_s * DMatrix::from_diagonal(&x) * a_s.transpose() - &ax * ax.transpose();
        jac /= -c2;
        let dz = solve_general(jac, &(-&r)).ok()?;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let mut trial = z.clone();
            for (p, &i) in set.iter().enumerate() {
                trial[i] += t * dz[p];
            }
            if let Some((xt, rt)) = residual(&trial) {
                if norm_inf(&rt) < rn {
                    z = trial;
                    x = xt;
                    r = rt;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Some(z)
}
