use nalgebra::DVector;

use super::certificate::{compute_certificate, CertificateInput};
use super::line_search::{search, TrialOutcome};
use super::{Algorithm, IterationRecord, PrimalDualResult, RunTrace, SolverConfig, StopReason};
use crate::argdual::{solve_argdual_from, SubproblemSpec};
use crate::error::{Error, Result};
use crate::model::ModelOracle;
use crate::problem::ProblemSpec;
use crate::prox::ProxSetup;

struct Step {
    alpha: f64,
    a_next: f64,
    u: DVector<f64>,
    x: DVector<f64>,
    /// Raw multiplier of `V(x, u_k) + alpha psi(x, y)`; equals `alpha * z_{k+1}`.
    mu: DVector<f64>,
    delta: f64,
}

/// `alpha` solving `L alpha^2 = A + alpha`.
fn step_weight(l: f64, a: f64) -> f64 {
    (1.0 + (1.0 + 4.0 * l * a).sqrt()) / (2.0 * l)
}

/// Primal-dual fast gradient method.
///
/// Every line-search trial recomputes `alpha_{k+1}`, `y_{k+1}`, the subproblem
/// `(u_{k+1}, mu) = argdual(V(x, u_k) + alpha psi(x, y_{k+1}), F)`, and
/// `x_{k+1}`, since all of them depend on the candidate `L`. The dual output
/// averages the multipliers with weights `alpha`, i.e. `z_N = sum(mu) / A_N`.
pub fn solve_fast_pd<M: ModelOracle + ?Sized>(
    problem: &ProblemSpec,
    oracle: &M,
    prox: &ProxSetup,
    cfg: &SolverConfig,
) -> Result<PrimalDualResult> {
    let x0 = cfg.validate(problem, oracle, prox)?;
    let m = problem.m();
    let norm = prox.norm();
    let tol = cfg.subproblem.tol;

    let mut x = x0.clone();
    let mut u = x0.clone();
    let mut l = cfg.l0;
    let mut l_peak = cfg.l0;
    let mut a = 0.0f64;
    let mut sum_mu = DVector::zeros(m);
    let mut noise_acc = 0.0;
    let mut trace = RunTrace::default();
    let mut stop_reason = StopReason::MaxIterations;
    // Previous normalized multiplier, used to warm-start the dual iteration.
    let mut z_prev: Option<DVector<f64>> = None;

    for k in 0..cfg.max_iters {
        let a_prev = a;
        let bt = search(cfg.line_search, l, l_peak * cfg.l_floor_ratio, cfg.max_backtracks, |l_try| {
            let alpha = step_weight(l_try, a_prev);
            let a_next = a_prev + alpha;
            if !alpha.is_finite() || !a_next.is_finite() || !(a_next > 0.0) {
                return Err(Error::StepRecursion(k));
            }
            let y = (&u * alpha + &x * a_prev) / a_next;
            let delta = cfg.delta.delta(k, alpha, a_next, cfg.eps);
            let f_y = oracle.value(&y)?;
            let lin = oracle.linearize(&y)?;
            let sub = SubproblemSpec::new(lin.clone(), alpha, 1.0, u.clone(), &problem.constraints, prox)?;
            let warm = z_prev.as_ref().map(|z| z * alpha);
            let sol = solve_argdual_from(&sub, &cfg.subproblem, warm.as_ref())?;
            let x_next = (&sol.x_star * alpha + &x * a_prev) / a_next;
            let f_next = oracle.value(&x_next)?;
            let psi = lin.eval(&x_next)?;
            let dist = norm.of(&(&x_next - &y));
            Ok(TrialOutcome {
                lhs: f_next,
                rhs: f_y + psi + 0.5 * l_try * dist * dist + delta,
                scale: f_y,
                payload: Step {
                    alpha,
                    a_next,
                    u: sol.x_star,
                    x: x_next,
                    mu: sol.z_star,
                    delta,
                },
            })
        })?;
        l = bt.l_next;
        l_peak = l_peak.max(l);
        let step = bt.payload;
        a = step.a_next;
        sum_mu += &step.mu;
        noise_acc += 2.0 * step.a_next * step.delta;
        u = step.u;
        x = step.x;

        let z_bar = &sum_mu / a;
        let f_out = problem.value(&x)?;
        let cert = if cfg.monitor_certificate || cfg.early_stop {
            compute_certificate(
                problem,
                prox,
                CertificateInput {
                    x_out: &x,
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
        log::debug!("fast k={k} i_k={} L={l:e} A={a:e} f={f_out:e}", bt.i_k);
        trace.records.push(IterationRecord {
            k,
            i_k: bt.i_k,
            l,
            alpha: step.alpha,
            a,
            x: x.clone(),
            z: &step.mu / step.alpha,
            delta: step.delta,
            model_evals: bt.model_evals,
            f_out,
            certificate_lhs: cert.map(|c| c.gap),
            certificate_rhs: cert.map(|c| c.bound),
        });
        z_prev = trace.records.last().map(|r| r.z.clone());
        if cfg.early_stop && cert.is_some_and(|c| c.gap <= cfg.eps) {
            stop_reason = StopReason::GapBelowEps;
            break;
        }
    }

    let iterations = trace.len();
    if iterations == 0 {
        return Err(Error::invalid("max_iters must be at least 1"));
    }
    let z_out = (&sum_mu / a).map(|v| v.max(0.0));
    let certificate = compute_certificate(
        problem,
        prox,
        CertificateInput {
            x_out: &x,
            z_out: &z_out,
            a_n: a,
            noise_sum: noise_acc / a,
            x0: &x0,
        },
        cfg.r2,
        tol,
    )?;
    Ok(PrimalDualResult {
        algorithm: Algorithm::Fast,
        x0,
        x_out: x,
        z_out,
        a_n: a,
        iterations,
        stop_reason,
        trace,
        certificate,
    })
}

#[cfg(test)]
mod tests {
    use super::step_weight;

    #[test]
    fn first_step_weight() {
        // A_0 = 0, L_1 = 1: alpha_1 = (1 + 1) / 2 = 1.
        assert_eq!(step_weight(1.0, 0.0), 1.0);
    }

    #[test]
    fn weight_identity() {
        for (l, a) in [(1.0, 0.0), (2.0, 3.5), (0.125, 40.0), (1e3, 1e-2)] {
            let alpha = step_weight(l, a);
            let a_next = a + alpha;
            assert!((a_next - l * alpha * alpha).abs() <= 1e-12 * a_next);
        }
    }
}
