use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{GeneratedInstance, Reference, ReferenceSource};
use crate::error::{Error, Result};
use crate::linalg::solve_general;
use crate::problem::{AffineConstraints, GroundSet, ProblemSpec, QuadraticObjective};

/// Largest constraint count solved by exhaustive enumeration.
const ENUM_LIMIT: usize = 12;

fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Random strongly convex QP on the full space with a planted KKT point.
///
/// `Q = U diag(s) U^T` with `s` log-spaced over `[1, condition]`; each
/// constraint is tight at the planted optimum with probability 1/2 (at most
/// `n` of them) and carries a multiplier in `[0.5, 1.5]`, otherwise it has
/// slack in `[0.5, 1.5]`. The reference is recomputed by enumeration.
pub fn gen_qp(n: usize, m: usize, seed: u64, condition: f64) -> Result<GeneratedInstance> {
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    if !(condition >= 1.0) || !condition.is_finite() {
        return Err(Error::invalid("condition must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = gaussian_matrix(&mut rng, n, n).qr().q();
    let spectrum = DVector::from_fn(n, |i, _| {
        if n == 1 {
            1.0
        } else {
            condition.powf(i as f64 / (n - 1) as f64)
        }
    });
    let q = &u * DMatrix::from_diagonal(&spectrum) * u.transpose();
    let q = (&q + q.transpose()) * 0.5;

    let x_plant = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let a = gaussian_matrix(&mut rng, m, n);
    let mut b = DVector::zeros(m);
    let mut z_plant = DVector::zeros(m);
    let mut active = Vec::new();
    for i in 0..m {
        let ax = a.row(i).dot(&x_plant.transpose());
        if active.len() < n && rng.random_bool(0.5) {
            b[i] = ax;
            z_plant[i] = rng.random_range(0.5..1.5);
            active.push(i);
        } else {
            b[i] = ax + rng.random_range(0.5..1.5);
        }
    }
    let c = -(&q * &x_plant) - a.tr_mul(&z_plant);

    let slater_point = slater_from_plant(&a, &b, &x_plant, &active)?;
    let problem = ProblemSpec::new(
        QuadraticObjective::new(q, c)?,
        AffineConstraints::new(a, b)?,
        GroundSet::full(n),
    )?;
    let l = problem.objective.lipschitz_l2();
    let problem = problem.with_known_lipschitz(l)?;

    let reference = if m <= ENUM_LIMIT {
        enumerate_reference(&problem)?
    } else {
        Reference {
            f_star: problem.value(&x_plant)?,
            x_star: x_plant,
            z_star: z_plant,
            source: ReferenceSource::KktHand,
        }
    };
    Ok(GeneratedInstance {
        problem,
        reference,
        slater_point,
    })
}

/// Moves off the tight constraints along `d` with `A_S d = 1`.
fn slater_from_plant(a: &DMatrix<f64>, b: &DVector<f64>, x: &DVector<f64>, active: &[usize]) -> Result<DVector<f64>> {
    if active.is_empty() {
        return Ok(x.clone());
    }
    let n = x.len();
    let a_s = DMatrix::from_fn(active.len(), n, |r, j| a[(active[r], j)]);
    let gram = &a_s * a_s.transpose();
    let d = a_s.tr_mul(&solve_general(gram, &DVector::from_element(active.len(), 1.0))?);
    let ad = a * &d;
    let mut t: f64 = 1.0;
    for i in 0..a.nrows() {
        if !active.contains(&i) && ad[i] < 0.0 {
            let slack = b[i] - a.row(i).dot(&x.transpose());
            t = t.min(0.5 * slack / -ad[i]);
        }
    }
    Ok(x - d * t)
}

/// Builds an instance on the full space and solves it by enumeration. The
/// Slater point is searched for among the origin and the reference.
pub fn qp_instance(q: DMatrix<f64>, c: DVector<f64>, a: DMatrix<f64>, b: DVector<f64>) -> Result<GeneratedInstance> {
    let n = c.len();
    let constraints = if a.nrows() == 0 {
        AffineConstraints::none(n)
    } else {
        AffineConstraints::new(a, b)?
    };
    let problem = ProblemSpec::new(QuadraticObjective::new(q, c)?, constraints, GroundSet::full(n))?;
    let reference = if problem.m() == 0 {
        let x = solve_general(problem.objective.q().clone(), &(-problem.objective.c()))?;
        Reference {
            f_star: problem.value(&x)?,
            x_star: x,
            z_star: DVector::zeros(0),
            source: ReferenceSource::KktHand,
        }
    } else {
        enumerate_reference(&problem)?
    };
    let slater_point = [DVector::zeros(n), reference.x_star.clone()]
        .into_iter()
        .find(|p| problem.constraints.eval(p).is_ok_and(|f| f.iter().all(|v| *v < -1e-6)))
        .ok_or_else(|| Error::invalid("no strictly feasible point found"))?;
    Ok(GeneratedInstance {
        problem,
        reference,
        slater_point,
    })
}

/// Solves the KKT system for every active set of size at most `n` and keeps
/// the feasible one with non-negative multipliers.
fn enumerate_reference(problem: &ProblemSpec) -> Result<Reference> {
    let (n, m) = (problem.n(), problem.m());
    if m > ENUM_LIMIT {
        return Err(Error::invalid("too many constraints to enumerate"));
    }
    let q = problem.objective.q();
    let c = problem.objective.c();
    let a = problem.constraints.a();
    let b = problem.constraints.b();
    let scale = 1.0 + c.amax() + b.amax();
    let tol = 1e-10 * scale;
    let mut best: Option<(f64, DVector<f64>, DVector<f64>)> = None;
    for mask in 0u32..(1u32 << m) {
        let idx: Vec<usize> = (0..m).filter(|i| mask >> i & 1 == 1).collect();
        let s = idx.len();
        if s > n {
            continue;
        }
        let mut kkt = DMatrix::zeros(n + s, n + s);
        kkt.view_mut((0, 0), (n, n)).copy_from(q);
        let mut rhs = DVector::zeros(n + s);
        rhs.rows_mut(0, n).copy_from(&(-c));
        for (r, &i) in idx.iter().enumerate() {
            for j in 0..n {
                kkt[(n + r, j)] = a[(i, j)];
                kkt[(j, n + r)] = a[(i, j)];
            }
            rhs[n + r] = b[i];
        }
        let Ok(sol) = solve_general(kkt, &rhs) else { continue };
        let x = sol.rows(0, n).into_owned();
        let mut z = DVector::zeros(m);
        for (r, &i) in idx.iter().enumerate() {
            z[i] = sol[n + r];
        }
        if z.iter().any(|v| *v < -tol) || (a * &x - b).iter().any(|v| *v > tol) {
            continue;
        }
        let z = z.map(|v| v.max(0.0));
        let f = problem.value(&x)?;
        if best.as_ref().map_or(true, |(bf, _, _)| f < *bf - tol) {
            best = Some((f, x, z));
        }
    }
    let (f_star, x_star, z_star) = best.ok_or(Error::Infeasible)?;
    Ok(Reference {
        x_star,
        z_star,
        f_star,
        source: ReferenceSource::ActiveSetEnum,
    })
}
