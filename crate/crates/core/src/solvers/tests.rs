use nalgebra::{DMatrix, DVector};

use super::*;
use crate::linalg::log_log_slope;
use crate::model::{InexactModel, LinearModel};
use crate::problem::{AffineConstraints, GroundSet, QuadraticObjective};

fn v(xs: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(xs)
}

fn half_square() -> ProblemSpec {
    let obj = QuadraticObjective::new(DMatrix::identity(1, 1), v(&[0.0])).unwrap();
    ProblemSpec::new(obj, AffineConstraints::none(1), GroundSet::full(1)).unwrap()
}

/// `f(x) = 1/2 (x - 2)^2` subject to `x <= 1`.
fn capped_qp() -> ProblemSpec {
    let obj = QuadraticObjective::new(DMatrix::identity(1, 1), v(&[-2.0])).unwrap();
    let cons = AffineConstraints::new(DMatrix::from_element(1, 1, 1.0), v(&[1.0])).unwrap();
    ProblemSpec::new(obj, cons, GroundSet::full(1)).unwrap()
}

fn run(alg: Algorithm, p: &ProblemSpec, cfg: &SolverConfig) -> PrimalDualResult {
    let oracle = LinearModel::new(p.objective.clone());
    let prox = ProxSetup::euclidean(p.ground_set.clone());
    solve(alg, p, &oracle, &prox, cfg).unwrap()
}

fn cfg(iters: usize, x0: f64) -> SolverConfig {
    SolverConfig {
        max_iters: iters,
        x0: Some(v(&[x0])),
        ..SolverConfig::default()
    }
}

#[test]
fn gd_unconstrained_half_square() {
    let p = half_square();
    let r = run(Algorithm::Gd, &p, &cfg(50, 1.0));
    let f = p.value(&r.x_out).unwrap();
    assert!(f >= 0.0);
    assert!(f <= 0.5 / r.a_n + 1e-12, "f={f} bound={}", 0.5 / r.a_n);
    assert_eq!(r.certificate.noise_sum, 0.0);
}

#[test]
fn gd_capped_qp_converges_to_kkt_point() {
    let p = capped_qp();
    let r = run(Algorithm::Gd, &p, &cfg(2000, 0.0));
    assert!((r.x_out[0] - 1.0).abs() < 1e-2, "x={}", r.x_out[0]);
    assert!((r.z_out[0] - 1.0).abs() < 1e-2, "z={}", r.z_out[0]);
    assert!(r.certificate.gap.abs() < 1e-2);
    assert!(r.certificate.holds(1e-9));
}

#[test]
fn gd_half_eps_noise_sum_is_eps() {
    let p = capped_qp();
    let mut c = cfg(40, 0.0);
    c.eps = 0.1;
    c.delta = DeltaSchedule::ConstantHalfEps;
    let r = run(Algorithm::Gd, &p, &c);
    assert!((r.certificate.noise_sum - 0.1).abs() <= 1e-12);
}

#[test]
fn fast_scaled_noise_sum_is_eps() {
    let p = capped_qp();
    let mut c = cfg(40, 0.0);
    c.eps = 1e-3;
    c.delta = DeltaSchedule::FastScaled;
    let r = run(Algorithm::Fast, &p, &c);
    assert!((r.certificate.noise_sum - 1e-3).abs() <= 1e-12);
}

#[test]
fn fast_first_iteration() {
    let p = half_square();
    let mut c = cfg(1, 1.0);
    c.line_search = LineSearch::Fixed(1.0);
    let r = run(Algorithm::Fast, &p, &c);
    let rec = &r.trace.records[0];
    assert_eq!(rec.alpha, 1.0);
    assert_eq!(rec.a, 1.0);
    // y_1 = u_0 = 1, one full step with L = 1 lands on the minimizer.
    assert!(r.x_out[0].abs() < 1e-12);
}

#[test]
fn fast_weight_identity_every_step() {
    for ls in [LineSearch::Fixed(1.0), LineSearch::Adaptive] {
        let p = capped_qp();
        let mut c = cfg(100, 0.0);
        c.line_search = ls;
        let r = run(Algorithm::Fast, &p, &c);
        for rec in &r.trace.records {
            assert!((rec.a - rec.l * rec.alpha * rec.alpha).abs() <= 1e-9 * rec.a);
        }
    }
}

#[test]
fn fast_capped_qp_rate() {
    let p = capped_qp();
    let r = run(Algorithm::Fast, &p, &cfg(256, 0.0));
    let mut ns = Vec::new();
    let mut bounds = Vec::new();
    for n in [8usize, 16, 32, 64, 128, 256] {
        let rec = &r.trace.records[n - 1];
        ns.push(n as f64);
        bounds.push(rec.certificate_rhs.unwrap());
        assert!(rec.certificate_lhs.unwrap() <= rec.certificate_rhs.unwrap() + 1e-9);
    }
    let slope = log_log_slope(&ns, &bounds).unwrap();
    assert!(slope <= -1.9, "slope {slope}");
    assert!((r.x_out[0] - 1.0).abs() < 1e-3);
}

#[test]
fn certificate_holds_at_every_prefix() {
    let obj = QuadraticObjective::new(DMatrix::from_row_slice(2, 2, &[3.0, 1.0, 1.0, 2.0]), v(&[-4.0, 1.0])).unwrap();
    let cons = AffineConstraints::new(DMatrix::from_row_slice(2, 2, &[1.0, 1.0, -1.0, 2.0]), v(&[0.5, 1.0])).unwrap();
    let p = ProblemSpec::new(obj, cons, GroundSet::full(2)).unwrap();
    for alg in [Algorithm::Gd, Algorithm::Fast] {
        let c = SolverConfig {
            max_iters: 150,
            ..SolverConfig::default()
        };
        let r = run(alg, &p, &c);
        for rec in &r.trace.records {
            let (lhs, rhs) = (rec.certificate_lhs.unwrap(), rec.certificate_rhs.unwrap());
            assert!(lhs <= rhs + 1e-8, "{alg:?} k={} {lhs} > {rhs}", rec.k);
            assert!(lhs >= -1e-7, "{alg:?} k={} gap {lhs}", rec.k);
            assert!(p.constraints.violation(&rec.x).unwrap() <= 1e-7);
        }
        assert!(r.z_out.iter().all(|&z| z >= 0.0));
        assert!(p.constraints.violation(&r.x_out).unwrap() <= 1e-7);
    }
}

#[test]
fn line_search_amortized() {
    let obj = QuadraticObjective::new(DMatrix::from_diagonal(&v(&[5.0, 1.0, 0.2])), v(&[1.0, -1.0, 0.5])).unwrap();
    let p = ProblemSpec::new(obj, AffineConstraints::none(3), GroundSet::full(3)).unwrap();
    for alg in [Algorithm::Gd, Algorithm::Fast] {
        let n = 100;
        let r = run(alg, &p, &cfg3(n));
        let budget = 2.0 * n as f64 + (2.0f64 * 5.0 / 1.0).max(1.0).log2() + 0.1 * n as f64;
        assert!((r.model_evals() as f64) <= budget, "{alg:?} evals {}", r.model_evals());
    }
}

fn cfg3(n: usize) -> SolverConfig {
    SolverConfig {
        max_iters: n,
        x0: Some(v(&[1.0, 1.0, 1.0])),
        ..SolverConfig::default()
    }
}

#[test]
fn fixed_step_matches_gradient_descent() {
    let q = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
    let c = v(&[-1.0, 0.3]);
    let obj = QuadraticObjective::new(q.clone(), c.clone()).unwrap();
    let p = ProblemSpec::new(obj, AffineConstraints::none(2), GroundSet::full(2)).unwrap();
    let l = 2.5;
    let cfg = SolverConfig {
        max_iters: 30,
        line_search: LineSearch::Fixed(l),
        x0: Some(v(&[1.0, -2.0])),
        ..SolverConfig::default()
    };
    let r = run(Algorithm::Gd, &p, &cfg);
    let mut x = v(&[1.0, -2.0]);
    let mut sum = DVector::zeros(2);
    for rec in &r.trace.records {
        x = &x - (&q * &x + &c) / l;
        sum += &x;
        assert!((&rec.x - &x).amax() <= 1e-8);
    }
    assert!((&r.x_out - sum / 30.0).amax() <= 1e-8);
}

#[test]
fn inexact_oracle_gap_within_two_eps() {
    let p = capped_qp();
    let prox = ProxSetup::euclidean(p.ground_set.clone());
    let eps = 1e-2;
    let gd = InexactModel::new(LinearModel::new(p.objective.clone()), eps, 7).unwrap();
    let c = SolverConfig {
        eps,
        delta: DeltaSchedule::ConstantHalfEps,
        max_iters: 2000,
        x0: Some(v(&[0.0])),
        ..SolverConfig::default()
    };
    let r = solve_gradient_pd(&p, &gd, &prox, &c).unwrap();
    assert!(r.certificate.gap <= 2.0 * eps + 1e-6, "gap {}", r.certificate.gap);
    assert!(r.certificate.holds(1e-9));

    let n = 400;
    let fast = InexactModel::new(LinearModel::new(p.objective.clone()), eps / (4.0 * n as f64), 7).unwrap();
    let c = SolverConfig {
        delta: DeltaSchedule::FastScaled,
        max_iters: n,
        ..c
    };
    let r = solve_fast_pd(&p, &fast, &prox, &c).unwrap();
    assert!(r.certificate.gap <= 2.0 * eps + 1e-6, "gap {}", r.certificate.gap);
}

#[test]
fn early_stop_records_reason() {
    let p = capped_qp();
    let mut c = cfg(5000, 0.0);
    c.early_stop = true;
    c.eps = 1e-4;
    let r = run(Algorithm::Fast, &p, &c);
    assert_eq!(r.stop_reason, StopReason::GapBelowEps);
    assert!(r.iterations < 5000);
    assert!(r.certificate.gap <= 1e-4 + 1e-12);
}

#[test]
fn zero_iterations_rejected() {
    let p = capped_qp();
    let oracle = LinearModel::new(p.objective.clone());
    let prox = ProxSetup::euclidean(p.ground_set.clone());
    assert!(solve_fast_pd(&p, &oracle, &prox, &cfg(0, 0.0)).is_err());
}

#[test]
fn entropy_simplex_problem() {
    let obj = QuadraticObjective::new(DMatrix::from_diagonal(&v(&[1.0, 2.0, 0.5])), v(&[0.2, -0.3, 0.1])).unwrap();
    let cons = AffineConstraints::new(DMatrix::from_row_slice(1, 3, &[0.0, 1.0, 0.0]), v(&[0.4])).unwrap();
    let gs = GroundSet::simplex(3).unwrap();
    let p = ProblemSpec::new(obj, cons, gs).unwrap();
    let oracle = LinearModel::new(p.objective.clone());
    let prox = ProxSetup::entropy(3).unwrap();
    for alg in [Algorithm::Gd, Algorithm::Fast] {
        let c = SolverConfig {
            max_iters: 200,
            ..SolverConfig::default()
        };
        let r = solve(alg, &p, &oracle, &prox, &c).unwrap();
        assert!(r.certificate.holds(1e-8), "{alg:?} {:?}", r.certificate);
        assert!(r.certificate.gap >= -1e-7);
        assert!(r.x_out[1] <= 0.4 + 1e-7);
    }
}
