//! Exhaustive active-set enumeration for Euclidean subproblems.
//!
//! With `phi(x) = <p, x> + c2/2 |x - center|^2` the Lagrangian is minimized at
//! `x = center - (p + R_S^T w) / c2`, so each active set `S` costs one
//! `|S| x |S|` Gram solve. Keeping `p + R^T w` together avoids cancellation
//! when `c2` is tiny.

use nalgebra::{DMatrix, DVector};

use super::{kkt_residuals, ArgdualMethod, ArgdualSolution, SubproblemSpec};
use crate::error::{Error, Result};
use crate::model::SimpleTerm;
use crate::problem::GroundSet;
use crate::prox::ProxKind;

/// Inequality rows `R x <= d`: the constraints followed by finite box bounds.
struct Rows {
    r: DMatrix<f64>,
    d: DVector<f64>,
}

fn stacked_rows(spec: &SubproblemSpec<'_>) -> Rows {
    let n = spec.dim();
    let a = spec.constraints.a();
    let b = spec.constraints.b();
    let mut rows: Vec<(Vec<f64>, f64)> = (0..a.nrows())
        .map(|i| (a.row(i).iter().cloned().collect(), b[i]))
        .collect();
    if let GroundSet::Box { lower, upper } = spec.ground_set() {
        for i in 0..n {
            if lower[i].is_finite() {
                let mut e = vec![0.0; n];
                e[i] = -1.0;
                rows.push((e, -lower[i]));
            }
            if upper[i].is_finite() {
                let mut e = vec![0.0; n];
                e[i] = 1.0;
                rows.push((e, upper[i]));
            }
        }
    }
    let r = DMatrix::from_fn(rows.len(), n, |i, j| rows[i].0[j]);
    let d = DVector::from_iterator(rows.len(), rows.iter().map(|(_, v)| *v));
    Rows { r, d }
}

fn row_count(spec: &SubproblemSpec<'_>) -> usize {
    let bounds = match spec.ground_set() {
        GroundSet::Box { lower, upper } => {
            lower.iter().filter(|v| v.is_finite()).count() + upper.iter().filter(|v| v.is_finite()).count()
        }
        _ => 0,
    };
    spec.constraints.m() + bounds
}

pub(super) fn applicable(spec: &SubproblemSpec<'_>, limit: usize) -> bool {
    let smooth = match spec.model.term {
        SimpleTerm::Zero => true,
        SimpleTerm::L1 { weight } => weight * spec.model_weight == 0.0,
    };
    spec.prox.kind() == ProxKind::Euclidean
        && smooth
        && matches!(spec.ground_set(), GroundSet::FullSpace(_) | GroundSet::Box { .. })
        && row_count(spec) <= limit
}

type Candidate = (f64, DVector<f64>, DVector<f64>);

/// Feasible candidate `(|z|, x, z)`, or `None` if some row is violated.
fn accept(r: &DMatrix<f64>, d: &DVector<f64>, x: DVector<f64>, w: &DVector<f64>, m: usize, tol: f64) -> Option<Candidate> {
    let slack = r * &x - d;
    if slack.iter().any(|s| *s > tol) {
        return None;
    }
    let z = w.rows(0, m).into_owned();
    Some((z.norm(), x, z))
}

/// Keeps the candidate with the smallest multiplier norm.
fn keep(best: &mut Option<Candidate>, cand: Candidate) {
    if best.as_ref().map_or(true, |(bn, _, _)| cand.0 < *bn) {
        *best = Some(cand);
    }
}

pub(super) fn solve(spec: &SubproblemSpec<'_>, tol: f64) -> Result<ArgdualSolution> {
    let n = spec.dim();
    let m = spec.constraints.m();
    let c2 = spec.prox_weight;
    let p = &spec.model.grad * spec.model_weight;
    let Rows { r, d } = stacked_rows(spec);
    let total = r.nrows();
    // Roundoff allowances in the units of x and of the multipliers.
    let x_scale = 1.0 + spec.center.amax() + d.amax() + p.amax() / c2;
    let select_tol = tol.min(1e-10) * x_scale;
    let w_tol = select_tol * c2;

    // Gram right-hand side: c2 (R center - d) - R p.
    let residual = (&r * &spec.center - &d) * c2 - &r * &p;
    let mut best: Option<Candidate> = None;
    let mut checked = 0usize;
    for mask in 0u64..(1u64 << total) {
        let size = mask.count_ones() as usize;
        if size > n {
            continue;
        }
        let idx: Vec<usize> = (0..total).filter(|i| mask >> i & 1 == 1).collect();
        checked += 1;
        let mut w_full = DVector::zeros(total);
        if !idx.is_empty() {
            let rs = DMatrix::from_fn(size, n, |a, j| r[(idx[a], j)]);
            let gram = &rs * rs.transpose();
            let rhs = DVector::from_fn(size, |a, _| residual[idx[a]]);
            let Some(ch) = gram.cholesky() else { continue };
            let w = ch.solve(&rhs);
            if w.iter().any(|wi| !wi.is_finite() || *wi < -w_tol) {
                continue;
            }
            for (a, &i) in idx.iter().enumerate() {
                w_full[i] = w[a].max(0.0);
            }
            let mut x = &spec.center - (&p + r.tr_mul(&w_full)) / c2;
            // One step of iterative refinement onto the active rows.
            let drift = DVector::from_fn(size, |a, _| r.row(idx[a]).dot(&x.transpose()) - d[idx[a]]);
            let corr = ch.solve(&drift);
            x -= rs.tr_mul(&corr);
            for (a, &i) in idx.iter().enumerate() {
                w_full[i] = (w_full[i] + c2 * corr[a]).max(0.0);
            }
            if let Some(best_x) = accept(&r, &d, x, &w_full, m, select_tol) {
                keep(&mut best, best_x);
            }
            continue;
        }
        let x = &spec.center - (&p + r.tr_mul(&w_full)) / c2;
        if let Some(cand) = accept(&r, &d, x, &w_full, m, select_tol) {
            keep(&mut best, cand);
        }
    }
    let (_, x_star, z_star) = best.ok_or(Error::Infeasible)?;
    let kkt = kkt_residuals(spec, &x_star, &z_star, tol)?;
    if !spec.accepts(&kkt, &z_star, tol)? {
        return Err(Error::ArgdualNotConverged {
            iterations: checked,
            residuals: kkt,
        });
    }
    Ok(ArgdualSolution {
        x_star,
        z_star,
        kkt,
        method: ArgdualMethod::Enumerate,
        iterations: checked,
    })
}
