use nalgebra::{dmatrix, dvector, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::model::{Linearization, SimpleTerm};
use crate::problem::{AffineConstraints, GroundSet, ProblemSpec, QuadraticObjective};
use crate::prox::ProxSetup;

fn opts(method: ArgdualMethod) -> ArgdualOptions {
    ArgdualOptions {
        method,
        ..ArgdualOptions::default()
    }
}

/// phi(x) = 1/2 |x - target|^2 written as c2 * V(x, target) with no model term.
fn pull_to<'a>(target: DVector<f64>, cons: &'a AffineConstraints, prox: &'a ProxSetup) -> SubproblemSpec<'a> {
    let n = target.len();
    SubproblemSpec::proximal(DVector::zeros(n), 1.0, target, cons, prox).unwrap()
}

#[test]
fn active_constraint_example() {
    let cons = AffineConstraints::new(dmatrix![1.0], dvector![1.0]).unwrap();
    let prox = ProxSetup::euclidean(GroundSet::full(1));
    let spec = pull_to(dvector![2.0], &cons, &prox);
    for method in [ArgdualMethod::Enumerate, ArgdualMethod::DualAscent] {
        let sol = solve_argdual_with(&spec, &opts(method)).unwrap();
        assert!((sol.x_star[0] - 1.0).abs() < 1e-12, "{method:?}");
        assert!((sol.z_star[0] - 1.0).abs() < 1e-12, "{method:?}");
        assert!(verify_kkt(&spec, &sol, 1e-9));
    }
}

#[test]
fn inactive_constraint_example() {
    let cons = AffineConstraints::new(dmatrix![1.0], dvector![1.0]).unwrap();
    let prox = ProxSetup::euclidean(GroundSet::full(1));
    let spec = pull_to(dvector![0.5], &cons, &prox);
    let sol = solve_argdual(&spec, 1e-9).unwrap();
    assert_eq!(sol.x_star, dvector![0.5]);
    assert_eq!(sol.z_star, dvector![0.0]);
}

#[test]
fn entropy_linear_closed_form() {
    let cons = AffineConstraints::none(2);
    let prox = ProxSetup::entropy(2).unwrap();
    let spec = SubproblemSpec::proximal(dvector![1.0, 0.0], 1.0, dvector![0.5, 0.5], &cons, &prox).unwrap();
    let sol = solve_argdual(&spec, 1e-9).unwrap();
    let e = std::f64::consts::E;
    assert!((sol.x_star[0] - 1.0 / (1.0 + e)).abs() < 1e-14);
    assert!((sol.x_star[1] - e / (1.0 + e)).abs() < 1e-14);
    assert!((sol.x_star[0] - 0.2689).abs() < 1e-4);

    // Grid search along the segment {(t, 1 - t)}.
    let phi = |t: f64| {
        let x = dvector![t, 1.0 - t];
        spec.objective(&x).unwrap()
    };
    let mut best = (f64::INFINITY, 0.0);
    for i in 1..100_000 {
        let t = i as f64 / 100_000.0;
        let v = phi(t);
        if v < best.0 {
            best = (v, t);
        }
    }
    assert!((best.1 - sol.x_star[0]).abs() < 2e-5);
}

#[test]
fn verify_kkt_examples() {
    let cons = AffineConstraints::new(dmatrix![1.0], dvector![1.0]).unwrap();
    let prox = ProxSetup::euclidean(GroundSet::full(1));
    let spec = pull_to(dvector![2.0], &cons, &prox);
    let good = ArgdualSolution {
        x_star: dvector![1.0],
        z_star: dvector![1.0],
        kkt: KktResiduals::default(),
        method: ArgdualMethod::Enumerate,
        iterations: 0,
    };
    assert!(verify_kkt(&spec, &good, 1e-9));
    let bad = ArgdualSolution {
        z_star: dvector![0.5],
        ..good.clone()
    };
    assert!(!verify_kkt(&spec, &bad, 1e-9));
    let res = kkt_residuals(&spec, &bad.x_star, &bad.z_star, 1e-9).unwrap();
    assert!((res.stationarity - 0.5).abs() < 1e-15);

    let none = AffineConstraints::none(1);
    let spec = pull_to(dvector![3.0], &none, &prox);
    let sol = ArgdualSolution {
        x_star: dvector![3.0],
        z_star: DVector::zeros(0),
        ..good
    };
    assert!(verify_kkt(&spec, &sol, 1e-9));
}

#[test]
fn infeasible_subproblem_is_error() {
    // x <= -1 and -x <= -1 (x >= 1).
    let cons = AffineConstraints::new(dmatrix![1.0; -1.0], dvector![-1.0, -1.0]).unwrap();
    let prox = ProxSetup::euclidean(GroundSet::full(1));
    let spec = pull_to(dvector![0.0], &cons, &prox);
    assert!(matches!(solve_argdual(&spec, 1e-9), Err(Error::Infeasible)));
    assert!(matches!(
        solve_argdual_with(&spec, &opts(ArgdualMethod::DualAscent)),
        Err(Error::Infeasible)
    ));
}

#[test]
fn enumeration_rejects_entropy() {
    let cons = AffineConstraints::none(2);
    let prox = ProxSetup::entropy(2).unwrap();
    let spec = SubproblemSpec::proximal(dvector![1.0, 0.0], 1.0, dvector![0.5, 0.5], &cons, &prox).unwrap();
    assert!(matches!(
        solve_argdual_with(&spec, &opts(ArgdualMethod::Enumerate)),
        Err(Error::InvalidInput(_))
    ));
}

#[test]
fn boundary_center_rejected_for_entropy() {
    let cons = AffineConstraints::none(2);
    let prox = ProxSetup::entropy(2).unwrap();
    assert!(matches!(
        SubproblemSpec::proximal(dvector![1.0, 0.0], 1.0, dvector![1.0, 0.0], &cons, &prox),
        Err(Error::NotInterior)
    ));
}

#[test]
fn degenerate_duplicate_rows_pick_small_multiplier() {
    // The same constraint twice: any split of the multiplier is optimal; minimal norm splits evenly.
    let cons = AffineConstraints::new(dmatrix![1.0; 1.0], dvector![1.0, 1.0]).unwrap();
    let prox = ProxSetup::euclidean(GroundSet::full(1));
    let spec = pull_to(dvector![2.0], &cons, &prox);
    let sol = solve_argdual_with(&spec, &opts(ArgdualMethod::Enumerate)).unwrap();
    assert!((sol.x_star[0] - 1.0).abs() < 1e-12);
    // Single-row sets give |z| = 1; the two-row set is singular and skipped.
    assert!((sol.z_star.norm() - 1.0).abs() < 1e-12);
}

#[test]
fn box_ground_set_with_constraint() {
    // min 1/2 |x - (2, 2)|^2 s.t. x1 + x2 <= 1, 0 <= x <= 0.8
    let cons = AffineConstraints::new(dmatrix![1.0, 1.0], dvector![1.0]).unwrap();
    let ground = GroundSet::boxed(dvector![0.0, 0.0], dvector![0.8, 0.8]).unwrap();
    let prox = ProxSetup::euclidean(ground);
    let spec = pull_to(dvector![2.0, 1.0], &cons, &prox);
    let a = solve_argdual_with(&spec, &opts(ArgdualMethod::Enumerate)).unwrap();
    let b = solve_argdual_with(&spec, &opts(ArgdualMethod::DualAscent)).unwrap();
    assert!((&a.x_star - dvector![0.8, 0.2]).amax() < 1e-12);
    assert!((&a.x_star - &b.x_star).amax() < 1e-9);
    assert!((a.z_star[0] - 0.8).abs() < 1e-12);
}

#[test]
fn l1_composite_uses_dual_ascent() {
    let cons = AffineConstraints::new(dmatrix![1.0, 1.0], dvector![0.5]).unwrap();
    let prox = ProxSetup::euclidean(GroundSet::full(2));
    let model = Linearization {
        point: dvector![0.0, 0.0],
        grad: dvector![-3.0, 0.2],
        term: SimpleTerm::L1 { weight: 0.5 },
    };
    let spec = SubproblemSpec::new(model, 1.0, 1.0, dvector![0.0, 0.0], &cons, &prox).unwrap();
    let sol = solve_argdual(&spec, 1e-9).unwrap();
    assert_eq!(sol.method, ArgdualMethod::DualAscent);
    // x1 = soft(3 - z, 0.5), x2 = soft(-0.2 - z, 0.5), x1 + x2 = 0.5  =>  z = 1.15.
    assert!((&sol.x_star - dvector![1.35, -0.85]).amax() < 1e-9);
    assert!((sol.z_star[0] - 1.15).abs() < 1e-9);
}

fn random_euclidean(rng: &mut ChaCha8Rng) -> (DVector<f64>, DVector<f64>, f64, AffineConstraints) {
    let n = rng.random_range(1..=6);
    let m = rng.random_range(1..=12);
    let center = DVector::from_fn(n, |_, _| rng.random_range(-2.0..2.0));
    let grad = DVector::from_fn(n, |_, _| rng.random_range(-3.0..3.0));
    let c2 = rng.random_range(0.2..5.0);
    // Rows through a strictly feasible origin.
    let a = DMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0));
    let b = DVector::from_fn(m, |_, _| rng.random_range(0.05..1.0));
    (center, grad, c2, AffineConstraints::new(a, b).unwrap())
}

#[test]
fn enumeration_and_dual_ascent_agree_and_satisfy_invariants() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..40 {
        let (center, grad, c2, cons) = random_euclidean(&mut rng);
        let n = center.len();
        let prox = ProxSetup::euclidean(GroundSet::full(n));
        let spec = SubproblemSpec::proximal(grad, c2, center, &cons, &prox).unwrap();
        let a = solve_argdual_with(&spec, &opts(ArgdualMethod::Enumerate)).unwrap();
        let b = solve_argdual_with(&spec, &opts(ArgdualMethod::DualAscent)).unwrap();
        assert!((&a.x_star - &b.x_star).amax() <= 1e-6);
        for sol in [&a, &b] {
            let f = cons.eval(&sol.x_star).unwrap();
            assert!(sol.z_star.dot(&f).abs() <= 1e-9);
            assert!(f.iter().all(|v| *v <= 1e-9));
            assert!(sol.z_star.iter().all(|v| *v >= 0.0));
            // Strong duality on the subproblem.
            let primal = spec.objective(&sol.x_star).unwrap();
            let dual = spec.dual_value(&sol.z_star).unwrap();
            assert!((primal - dual).abs() <= 2e-9 * (1.0 + primal.abs()));
        }
    }
}

#[test]
fn three_point_inequality_holds() {
    // phi(x) + <z, F(x)> >= phi(x*) + c2 V(x, x*) for all x in the ground set.
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..20 {
        let (center, grad, c2, cons) = random_euclidean(&mut rng);
        let n = center.len();
        let prox = ProxSetup::euclidean(GroundSet::full(n));
        let spec = SubproblemSpec::proximal(grad, c2, center, &cons, &prox).unwrap();
        let sol = solve_argdual(&spec, 1e-9).unwrap();
        let base = spec.objective(&sol.x_star).unwrap();
        for _ in 0..200 {
            let x = prox.ground_set().sample(&mut rng, 4.0);
            let lhs = spec.lagrangian(&x, &sol.z_star).unwrap();
            let rhs = base + c2 * prox.bregman(&x, &sol.x_star).unwrap();
            assert!(lhs >= rhs - 1e-8);
        }
    }
}

#[test]
fn entropy_with_constraints() {
    // Mass on the first two cells is capped at 0.3 while the cost pushes it there.
    let cons = AffineConstraints::new(dmatrix![1.0, 1.0, 0.0, 0.0], dvector![0.3]).unwrap();
    let prox = ProxSetup::entropy(4).unwrap();
    let center = DVector::from_element(4, 0.25);
    let spec = SubproblemSpec::proximal(dvector![-2.0, -1.0, 0.5, 0.0], 1.0, center, &cons, &prox).unwrap();
    let sol = solve_argdual(&spec, 1e-9).unwrap();
    assert!(sol.kkt.within(1e-9));
    assert!((sol.x_star[0] + sol.x_star[1] - 0.3).abs() < 1e-9);
    assert!(sol.z_star[0] > 0.0);
    // Conditional proportions inside each block follow the softmax of the costs.
    let r = sol.x_star[0] / sol.x_star[1];
    assert!((r - (1.0f64).exp()).abs() < 1e-8);
    let primal = spec.objective(&sol.x_star).unwrap();
    let dual = spec.dual_value(&sol.z_star).unwrap();
    assert!((primal - dual).abs() < 2e-9);
}

#[test]
fn euclidean_simplex_with_constraints() {
    let cons = AffineConstraints::new(dmatrix![1.0, 0.0, 0.0], dvector![0.2]).unwrap();
    let prox = ProxSetup::euclidean(GroundSet::simplex(3).unwrap());
    let spec = SubproblemSpec::proximal(dvector![-1.0, 0.0, 0.0], 1.0, DVector::from_element(3, 1.0 / 3.0), &cons, &prox).unwrap();
    let sol = solve_argdual(&spec, 1e-9).unwrap();
    assert!((&sol.x_star - dvector![0.2, 0.4, 0.4]).amax() < 1e-12);
}

#[test]
fn dual_function_examples() {
    let obj = QuadraticObjective::new(dmatrix![1.0], dvector![0.0]).unwrap();
    let cons = AffineConstraints::new(dmatrix![1.0], dvector![1.0]).unwrap();
    let p = ProblemSpec::new(obj, cons, GroundSet::full(1)).unwrap();
    let d0 = eval_dual_function(&p, &dvector![0.0], 1e-12).unwrap();
    assert_eq!(d0.g_value, 0.0);
    assert_eq!(d0.x_of_z, dvector![0.0]);
    let d1 = eval_dual_function(&p, &dvector![1.0], 1e-12).unwrap();
    assert_eq!(d1.x_of_z, dvector![-1.0]);
    assert!((d1.g_value - 1.5).abs() < 1e-15);
    // At the optimum x* = 0, z* = 0 the gap closes.
    let gap = p.value(&dvector![0.0]).unwrap() + d0.g_value;
    assert_eq!(gap, 0.0);
}

#[test]
fn dual_function_unbounded() {
    let obj = QuadraticObjective::linear(dvector![1.0]);
    let cons = AffineConstraints::new(dmatrix![1.0], dvector![1.0]).unwrap();
    let p = ProblemSpec::new(obj, cons, GroundSet::full(1)).unwrap();
    let err = eval_dual_function(&p, &dvector![0.5], 1e-12).unwrap_err();
    assert_eq!(err.to_string(), "dual function infinite at z");
    // z = -c cancels the linear term... but z must be non-negative, so use c = -1.
    let obj = QuadraticObjective::linear(dvector![-1.0]);
    let cons = AffineConstraints::new(dmatrix![1.0], dvector![1.0]).unwrap();
    let p = ProblemSpec::new(obj, cons, GroundSet::full(1)).unwrap();
    let d = eval_dual_function(&p, &dvector![1.0], 1e-12).unwrap();
    assert_eq!(d.g_value, 1.0);
}

#[test]
fn weak_duality_on_random_points() {
    let obj = QuadraticObjective::new(dmatrix![2.0, 0.3; 0.3, 1.0], dvector![-1.0, 0.5]).unwrap();
    let cons = AffineConstraints::new(dmatrix![1.0, 1.0; -1.0, 0.5], dvector![0.5, 1.0]).unwrap();
    let p = ProblemSpec::new(obj, cons, GroundSet::full(2)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..500 {
        let x = DVector::from_fn(2, |_, _| rng.random_range(-3.0..3.0));
        if !p.is_feasible(&x, 0.0).unwrap() {
            continue;
        }
        let z = DVector::from_fn(2, |_, _| rng.random_range(0.0..3.0));
        let g = eval_dual_function(&p, &z, 0.0).unwrap().g_value;
        assert!(p.value(&x).unwrap() + g >= -1e-12);
    }
}
