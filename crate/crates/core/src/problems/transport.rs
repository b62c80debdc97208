use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{GeneratedInstance, Reference, ReferenceSource};
use crate::error::{Error, Result};
use crate::linalg::simplex_threshold;
use crate::problem::{AffineConstraints, GroundSet, ProblemSpec, QuadraticObjective};

/// Weight of the quadratic regularizer `lambda/2 |x|^2`.
pub const TRANSPORT_REGULARIZER: f64 = 0.1;

const MAX_CELLS: usize = 64;

/// Random transport plan: uniform costs in `[0, 1)` and a capacity
/// `sum_j x_ij <= cap_i` on every origin row but the last, with `cap_i`
/// uniform in `[1.1, 2) / rows` so the uniform plan is strictly feasible.
pub fn gen_transport_toy(rows: usize, cols: usize, seed: u64) -> Result<GeneratedInstance> {
    if rows == 0 || cols == 0 || rows * cols > MAX_CELLS {
        return Err(Error::invalid(format!("transport grid must have between 1 and {MAX_CELLS} cells")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cost = DMatrix::from_fn(rows, cols, |_, _| rng.random_range(0.0..1.0));
    let caps: Vec<f64> = (0..rows - 1).map(|_| rng.random_range(1.1..2.0) / rows as f64).collect();
    transport_instance(&cost, &caps, TRANSPORT_REGULARIZER)
}

/// `min <cost, x> + lambda/2 |x|^2` over plans on the simplex of `rows * cols`
/// cells (row-major), subject to row-sum capacities on the first `caps.len()`
/// rows.
pub fn transport_instance(cost: &DMatrix<f64>, caps: &[f64], lambda: f64) -> Result<GeneratedInstance> {
    let (rows, cols) = cost.shape();
    let n = rows * cols;
    if n == 0 || n > MAX_CELLS {
        return Err(Error::invalid(format!("transport grid must have between 1 and {MAX_CELLS} cells")));
    }
    if caps.len() >= rows {
        return Err(Error::invalid("at most rows - 1 capacity rows are supported"));
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::invalid("regularizer must be positive"));
    }
    let c = DVector::from_fn(n, |k, _| cost[(k / cols, k % cols)]);
    let q = DMatrix::identity(n, n) * lambda;
    let constraints = if caps.is_empty() {
        AffineConstraints::none(n)
    } else {
        let a = DMatrix::from_fn(caps.len(), n, |i, k| if k / cols == i { 1.0 } else { 0.0 });
        AffineConstraints::new(a, DVector::from_column_slice(caps))?
    };
    let problem = ProblemSpec::new(QuadraticObjective::new(q, c)?, constraints, GroundSet::simplex(n)?)?
        .with_known_lipschitz(lambda)?;
    let slater_point = DVector::from_element(n, 1.0 / n as f64);
    let reference = capacity_reference(&problem, rows, cols, caps, lambda)?;
    Ok(GeneratedInstance {
        problem,
        reference,
        slater_point,
    })
}

/// The solution is the projection of `v = -cost / lambda` onto the feasible
/// plans. For a set `S` of tight rows, every row in `S` is projected onto
/// `{x >= 0, sum = cap_i}` and the remaining cells jointly onto the leftover
/// mass; `S` is valid when the row thresholds dominate the shared one and the
/// free rows respect their caps.
fn capacity_reference(problem: &ProblemSpec, rows: usize, cols: usize, caps: &[f64], lambda: f64) -> Result<Reference> {
    let m = caps.len();
    let v: Vec<f64> = problem.objective.c().iter().map(|c| -c / lambda).collect();
    let row = |i: usize| &v[i * cols..(i + 1) * cols];
    let tol = 1e-12;
    for mask in 0u64..(1u64 << m) {
        let tight: Vec<bool> = (0..rows).map(|i| i < m && mask >> i & 1 == 1).collect();
        let leftover = 1.0 - (0..m).filter(|&i| tight[i]).map(|i| caps[i]).sum::<f64>();
        if !(leftover > 0.0) {
            continue;
        }
        let free: Vec<f64> = (0..rows).filter(|&i| !tight[i]).flat_map(|i| row(i).iter().copied()).collect();
        let theta = simplex_threshold(&free, leftover);
        let mut x = DVector::zeros(rows * cols);
        let mut z = DVector::zeros(m);
        let mut ok = true;
        for i in 0..rows {
            let t = if tight[i] {
                let t = simplex_threshold(row(i), caps[i]);
                if t < theta - tol {
                    ok = false;
                }
                if i < m {
                    z[i] = lambda * (t - theta).max(0.0);
                }
                t
            } else {
                theta
            };
            for j in 0..cols {
                x[i * cols + j] = (row(i)[j] - t).max(0.0);
            }
            if i < m && !tight[i] && x.rows(i * cols, cols).sum() > caps[i] + tol {
                ok = false;
            }
        }
        if ok {
            return Ok(Reference {
                f_star: problem.value(&x)?,
                x_star: x,
                z_star: z,
                source: ReferenceSource::ActiveSetEnum,
            });
        }
    }
    Err(Error::Infeasible)
}
