use nalgebra::DVector;

use super::certificate::{compute_certificate, CertificateInput};
use super::line_search::{search, TrialOutcome};
use super::{Algorithm, IterationRecord, PrimalDualResult, RunTrace, SolverConfig, StopReason};
use crate::argdual::{solve_argdual_from, SubproblemSpec};
use crate::error::Result;
use crate::model::ModelOracle;
use crate::problem::ProblemSpec;
use crate::prox::ProxSetup;

struct Step {
    x: DVector<f64>,
    z: DVector<f64>,
    delta: f64,
}

/// Primal-dual gradient method.
///
/// Each iteration finds `L_{k+1}` by backtracking, takes
/// `(x_{k+1}, z_{k+1}) = argdual(psi(x, x_k) + L_{k+1} V(x, x_k), F)`, and
/// outputs the `1/L`-weighted averages of the iterates and multipliers.
pub fn solve_gradient_pd<M: ModelOracle + ?Sized>(
    problem: &ProblemSpec,
    oracle: &M,
    prox: &ProxSetup,
    cfg: &SolverConfig,
) -> Result<PrimalDualResult> {
    let x0 = cfg.validate(problem, oracle, prox)?;
    let n = problem.n();
    let m = problem.m();
    let norm = prox.norm();
    let tol = cfg.subproblem.tol;

    let mut x = x0.clone();
    let mut l = cfg.l0;
    let mut l_peak = cfg.l0;
    let mut a = 0.0;
    let mut sum_x = DVector::zeros(n);
    let mut sum_z = DVector::zeros(m);
    let mut noise_acc = 0.0;
    let mut trace = RunTrace::default();
    let mut stop_reason = StopReason::MaxIterations;
    let mut warm: Option<DVector<f64>> = None;

    for k in 0..cfg.max_iters {
        let f_k = oracle.value(&x)?;
        let lin = oracle.linearize(&x)?;
        let a_prev = a;
        let bt = search(cfg.line_search, l, l_peak * cfg.l_floor_ratio, cfg.max_backtracks, |l_try| {
            let delta = cfg.delta.delta(k, 1.0 / l_try, a_prev + 1.0 / l_try, cfg.eps);
            let sub = SubproblemSpec::new(lin.clone(), 1.0, l_try, x.clone(), &problem.constraints, prox)?;
            let sol = solve_argdual_from(&sub, &cfg.subproblem, warm.as_ref())?;
            let f_next = oracle.value(&sol.x_star)?;
            let psi = lin.eval(&sol.x_star)?;
            let dist = norm.of(&(&sol.x_star - &x));
            Ok(TrialOutcome {
                lhs: f_next,
                rhs: f_k + psi + 0.5 * l_try * dist * dist + delta,
                scale: f_k,
                payload: Step {
                    x: sol.x_star,
                    z: sol.z_star,
                    delta,
                },
            })
        })?;
        l = bt.l_next;
        l_peak = l_peak.max(l);
        let Step { x: x_next, z: z_next, delta } = bt.payload;
        a += 1.0 / l;
        sum_x += &x_next / l;
        sum_z += &z_next / l;
        noise_acc += 2.0 * delta / l;

        let x_bar = &sum_x / a;
        let z_bar = &sum_z / a;
        let f_out = problem.value(&x_bar)?;
        let cert = if cfg.monitor_certificate || cfg.early_stop {
            compute_certificate(
                problem,
                prox,
                CertificateInput {
                    x_out: &x_bar,
                    z_out: &z_bar,
                    a_n: a,
                    noise_sum: noise_acc / a,
                    x0: &x0,
                },
                cfg.r2,
                tol,
            )
            .ok()
        } else {
            None
        };
        log::debug!("gd k={k} i_k={} L={l:e} A={a:e} f={f_out:e}", bt.i_k);
        trace.records.push(IterationRecord {
            k,
            i_k: bt.i_k,
            l,
            alpha: 1.0 / l,
            a,
            x: x_next.clone(),
            z: z_next,
            delta,
            model_evals: bt.model_evals,
            f_out,
            certificate_lhs: cert.map(|c| c.gap),
            certificate_rhs: cert.map(|c| c.bound),
        });
        warm = trace.records.last().map(|r| r.z.clone());
        x = x_next;
        if cfg.early_stop && cert.is_some_and(|c| c.gap <= cfg.eps) {
            stop_reason = StopReason::GapBelowEps;
            break;
        }
    }

    let iterations = trace.len();
    if iterations == 0 {
        return Err(crate::error::Error::invalid("max_iters must be at least 1"));
    }
    let x_out = &sum_x / a;
    let z_out = (&sum_z / a).map(|v| v.max(0.0));
    let certificate = compute_certificate(
        problem,
        prox,
        CertificateInput {
            x_out: &x_out,
            z_out: &z_out,
            a_n: a,
            noise_sum: noise_acc / a,
            x0: &x0,
        },
        cfg.r2,
        tol,
    )?;
    Ok(PrimalDualResult {
        algorithm: Algorithm::Gd,
        x0,
        x_out,
        z_out,
        a_n: a,
        iterations,
        stop_reason,
        trace,
        certificate,
    })
}
