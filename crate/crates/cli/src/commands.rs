use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context};
use pdmo_core::io::{load_problem, save_problem};
use pdmo_core::linalg::log_log_slope;
use pdmo_core::model::{InexactModel, LinearModel};
use pdmo_core::problems::{gen_qp, gen_transport_toy, GeneratedInstance};
use pdmo_core::prox::{ProxKind, ProxSetup};
use pdmo_core::solvers::{
    compute_certificate, solve, Algorithm, CertificateInput, DeltaSchedule, PrimalDualResult, RunSummary, SolverConfig,
};
use pdmo_core::{DVector, ProblemSpec};
use serde::{Deserialize, Serialize};

use crate::args::{Algo, GenArgs, GenKind, ProblemArgs, ProxChoice, RatesArgs, RunArgs, SolverArgs, VerifyArgs};

/// Slack allowed in `gap <= bound` before a run counts as a violation.
const CERT_TOL: f64 = 1e-6;

pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

fn input_error(error: impl Into<anyhow::Error>) -> Failure {
    Failure { code: 1, error: error.into() }
}

fn solver_error(error: impl Into<anyhow::Error>) -> Failure {
    Failure { code: 2, error: error.into() }
}

fn violation(error: anyhow::Error) -> Failure {
    Failure { code: 3, error }
}

type CmdResult = Result<(), Failure>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum Source {
    File { path: String },
    Qp { n: usize, m: usize, condition: f64, seed: u64 },
    Transport { rows: usize, cols: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ConfigInfo {
    l0: f64,
    eps: f64,
    delta: String,
    noise: Option<f64>,
    prox: String,
    iterations: usize,
    early_stop: bool,
    seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RunReport {
    source: Source,
    config: ConfigInfo,
    /// Every per-iteration certificate held.
    prefixes_hold: bool,
    result: RunSummary,
}

struct Loaded {
    problem: ProblemSpec,
    x0: Option<DVector<f64>>,
    source: Source,
    instance: Option<GeneratedInstance>,
}

fn load(args: &ProblemArgs) -> Result<Loaded, Failure> {
    match (&args.problem, args.gen) {
        (Some(path), _) => {
            let (problem, x0) =
                load_problem(path).with_context(|| format!("reading {}", path.display())).map_err(input_error)?;
            Ok(Loaded {
                problem,
                x0,
                source: Source::File {
                    path: path.display().to_string(),
                },
                instance: None,
            })
        }
        (None, Some(kind)) => {
            let (instance, source) = match kind {
                GenKind::Qp => (
                    gen_qp(args.n, args.m, args.seed, args.condition),
                    Source::Qp {
                        n: args.n,
                        m: args.m,
                        condition: args.condition,
                        seed: args.seed,
                    },
                ),
                GenKind::Transport => (
                    gen_transport_toy(args.rows, args.cols, args.seed),
                    Source::Transport {
                        rows: args.rows,
                        cols: args.cols,
                        seed: args.seed,
                    },
                ),
            };
            let instance = instance.map_err(input_error)?;
            Ok(Loaded {
                problem: instance.problem.clone(),
                x0: None,
                source,
                instance: Some(instance),
            })
        }
        (None, None) => Err(input_error(anyhow!("either --problem FILE or --gen KIND is required"))),
    }
}

pub fn parse_delta(s: &str) -> anyhow::Result<DeltaSchedule> {
    Ok(match s {
        "zero" => DeltaSchedule::Zero,
        "half-eps" => DeltaSchedule::ConstantHalfEps,
        "fast-scaled" => DeltaSchedule::FastScaled,
        other => match other.strip_prefix("const:") {
            Some(v) => {
                let v: f64 = v.parse().with_context(|| format!("bad delta value {v:?}"))?;
                if !(v >= 0.0) || !v.is_finite() {
                    bail!("delta must be finite and non-negative");
                }
                DeltaSchedule::Constant(v)
            }
            None => bail!("unknown delta schedule {other:?} (expected zero, half-eps, fast-scaled, const:VALUE)"),
        },
    })
}

fn prox_for(choice: ProxChoice, problem: &ProblemSpec) -> anyhow::Result<ProxSetup> {
    let gs = problem.ground_set.clone();
    Ok(match choice {
        ProxChoice::Auto => ProxSetup::default_for(&gs),
        ProxChoice::Euclidean => ProxSetup::euclidean(gs),
        ProxChoice::Entropy => ProxSetup::new(ProxKind::Entropy, gs)?,
    })
}

fn prox_name(prox: &ProxSetup) -> &'static str {
    match prox.kind() {
        ProxKind::Euclidean => "euclidean",
        ProxKind::Entropy => "entropy",
    }
}

fn algorithm(a: Algo) -> Algorithm {
    match a {
        Algo::Gd => Algorithm::Gd,
        Algo::Fast => Algorithm::Fast,
    }
}

struct Prepared {
    prox: ProxSetup,
    cfg: SolverConfig,
}

fn prepare(solver: &SolverArgs, problem: &ProblemSpec, iters: usize, x0: Option<DVector<f64>>) -> Result<Prepared, Failure> {
    let prox = prox_for(solver.prox, problem).map_err(input_error)?;
    let delta = parse_delta(&solver.delta).map_err(input_error)?;
    let cfg = SolverConfig {
        l0: solver.l0,
        eps: solver.eps,
        delta,
        max_iters: iters,
        x0,
        early_stop: solver.early_stop,
        ..SolverConfig::default()
    };
    Ok(Prepared { prox, cfg })
}

fn execute(solver: &SolverArgs, problem: &ProblemSpec, p: &Prepared, seed: u64) -> Result<PrimalDualResult, Failure> {
    let exact = LinearModel::new(problem.objective.clone());
    let result = match solver.noise {
        Some(noise) => {
            let oracle = InexactModel::new(exact, noise, seed).map_err(input_error)?;
            solve(algorithm(solver.algo), problem, &oracle, &p.prox, &p.cfg)
        }
        None => solve(algorithm(solver.algo), problem, &exact, &p.prox, &p.cfg),
    };
    result.map_err(solver_error)
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(input_error)
}

pub fn run(args: &RunArgs) -> CmdResult {
    let loaded = load(&args.source)?;
    let problem = &loaded.problem;
    let prepared = prepare(&args.solver, problem, args.iters, loaded.x0.clone())?;
    let result = execute(&args.solver, problem, &prepared, args.source.seed)?;

    fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))
        .map_err(input_error)?;
    save_problem(args.out.join("problem.json"), problem, Some(&result.x0))
        .context("writing problem.json")
        .map_err(input_error)?;
    write(&args.out.join("trace.csv"), &result.trace.to_csv())?;

    let f_out = problem.value(&result.x_out).map_err(solver_error)?;
    let prefixes_hold = result
        .trace
        .records
        .iter()
        .all(|r| matches!((r.certificate_lhs, r.certificate_rhs), (Some(l), Some(h)) if l <= h + CERT_TOL));
    let report = RunReport {
        source: loaded.source.clone(),
        config: ConfigInfo {
            l0: args.solver.l0,
            eps: args.solver.eps,
            delta: args.solver.delta.clone(),
            noise: args.solver.noise,
            prox: prox_name(&prepared.prox).into(),
            iterations: args.iters,
            early_stop: args.solver.early_stop,
            seed: args.source.seed,
        },
        prefixes_hold,
        result: result.summary(f_out, CERT_TOL),
    };
    let json = serde_json::to_string_pretty(&report).map_err(|e| input_error(anyhow!(e)))?;
    write(&args.out.join("summary.json"), &json)?;

    let c = &result.certificate;
    println!(
        "{} iterations={} f={f_out:.10e} gap={:.3e} bound={:.3e} A_N={:.3e}",
        result.algorithm.name(),
        result.iterations,
        c.gap,
        c.bound,
        result.a_n
    );
    if let Some(inst) = &loaded.instance {
        let dx = (&result.x_out - &inst.reference.x_star).norm();
        println!("distance to reference: {dx:.3e}");
    }
    if !c.holds(CERT_TOL) {
        return Err(violation(anyhow!("certificate violated: gap {:e} > bound {:e}", c.gap, c.bound)));
    }
    if !prefixes_hold {
        return Err(violation(anyhow!("certificate violated at some prefix")));
    }
    Ok(())
}

pub fn gen(args: &GenArgs) -> CmdResult {
    if args.source.gen.is_none() {
        return Err(input_error(anyhow!("--gen KIND is required")));
    }
    let loaded = load(&args.source)?;
    save_problem(&args.out, &loaded.problem, None)
        .with_context(|| format!("writing {}", args.out.display()))
        .map_err(input_error)?;
    if let (Some(path), Some(inst)) = (&args.reference, &loaded.instance) {
        let r = &inst.reference;
        let json = serde_json::json!({
            "x_star": r.x_star.as_slice(),
            "z_star": r.z_star.as_slice(),
            "f_star": r.f_star,
            "source": r.source,
            "slater_point": inst.slater_point.as_slice(),
        });
        write(path, &serde_json::to_string_pretty(&json).map_err(|e| input_error(anyhow!(e)))?)?;
    }
    Ok(())
}

pub fn verify(args: &VerifyArgs) -> CmdResult {
    let summary_path = args.dir.join("summary.json");
    let text = fs::read_to_string(&summary_path)
        .with_context(|| format!("reading {}", summary_path.display()))
        .map_err(input_error)?;
    let report: RunReport = serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", summary_path.display()))
        .map_err(input_error)?;
    let (problem, _) = load_problem(args.dir.join("problem.json"))
        .context("reading problem.json")
        .map_err(input_error)?;
    let kind = match report.config.prox.as_str() {
        "euclidean" => ProxKind::Euclidean,
        "entropy" => ProxKind::Entropy,
        other => return Err(input_error(anyhow!("unknown prox {other:?}"))),
    };
    let prox = ProxSetup::new(kind, problem.ground_set.clone()).map_err(input_error)?;
    let r = &report.result;
    let x_out = DVector::from_column_slice(&r.x_out);
    let z_out = DVector::from_column_slice(&r.z_out);
    let x0 = DVector::from_column_slice(&r.x0);
    let cert = compute_certificate(
        &problem,
        &prox,
        CertificateInput {
            x_out: &x_out,
            z_out: &z_out,
            a_n: r.a_n,
            noise_sum: r.certificate.noise_sum,
            x0: &x0,
        },
        None,
        1e-9,
    )
    .map_err(|e| violation(anyhow!(e).context("certificate cannot be evaluated")))?;
    println!("gap={:.6e} bound={:.6e} R2={:.6e}", cert.gap, cert.bound, cert.r2_used);
    if problem.constraints.violation(&x_out).map_err(input_error)? > CERT_TOL {
        return Err(violation(anyhow!("primal output violates the constraints")));
    }
    if !cert.holds(args.tol) {
        return Err(violation(anyhow!("certificate violated: gap {:e} > bound {:e}", cert.gap, cert.bound)));
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct RatePoint {
    n: usize,
    gap: f64,
    bound: f64,
    a_n: f64,
}

#[derive(Debug, Serialize)]
struct RateReport {
    algorithm: Algorithm,
    points: Vec<RatePoint>,
    bound_slope: f64,
    /// Absent when some gap is not positive.
    gap_slope: Option<f64>,
    threshold: f64,
    slope_ok: bool,
    /// With a noisy schedule: final gap at most `2 eps` (plus slack).
    noise_plateau_ok: Option<bool>,
    pass: bool,
}

pub fn verify_rates(args: &RatesArgs) -> CmdResult {
    if args.ns.len() < 4 || args.ns.iter().any(|&n| n == 0) {
        return Err(input_error(anyhow!("--ns needs at least four positive iteration counts")));
    }
    let loaded = load(&args.source)?;
    let mut ns = args.ns.clone();
    ns.sort_unstable();
    ns.dedup();
    let runs: Vec<Result<PrimalDualResult, Failure>> = std::thread::scope(|scope| {
        let handles: Vec<_> = ns
            .iter()
            .map(|&n| {
                let loaded = &loaded;
                scope.spawn(move || {
                    let mut prepared = prepare(&args.solver, &loaded.problem, n, loaded.x0.clone())?;
                    prepared.cfg.monitor_certificate = false;
                    execute(&args.solver, &loaded.problem, &prepared, args.source.seed)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(solver_error(anyhow!("worker panicked")))))
            .collect()
    });
    let mut points = Vec::new();
    for (n, r) in ns.iter().zip(runs) {
        let r = r?;
        points.push(RatePoint {
            n: *n,
            gap: r.certificate.gap,
            bound: r.certificate.bound,
            a_n: r.a_n,
        });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.n as f64).collect();
    let bounds: Vec<f64> = points.iter().map(|p| p.bound).collect();
    let bound_slope = log_log_slope(&xs, &bounds).map_err(solver_error)?;
    let gap_slope = if points.iter().all(|p| p.gap > 0.0) {
        let gaps: Vec<f64> = points.iter().map(|p| p.gap).collect();
        log_log_slope(&xs, &gaps).ok()
    } else {
        None
    };
    let algorithm = algorithm(args.solver.algo);
    let threshold = match algorithm {
        Algorithm::Gd => -0.9,
        Algorithm::Fast => -1.9,
    };
    let noisy = parse_delta(&args.solver.delta).map_err(input_error)? != DeltaSchedule::Zero;
    let noise_plateau_ok = noisy.then(|| points.last().is_some_and(|p| p.gap <= 2.0 * args.solver.eps + CERT_TOL));
    // A noisy schedule keeps the bound from decaying, so only the plateau is checked then.
    let slope_ok = bound_slope <= threshold;
    let pass = if noisy { noise_plateau_ok == Some(true) } else { slope_ok };
    let report = RateReport {
        algorithm,
        points,
        bound_slope,
        gap_slope,
        threshold,
        slope_ok,
        noise_plateau_ok,
        pass,
    };
    let json = serde_json::to_string_pretty(&report).map_err(|e| input_error(anyhow!(e)))?;
    println!("{json}");
    if let Some(path) = &args.out {
        write(path, &json)?;
    }
    if !pass {
        return Err(violation(anyhow!("rate check failed (bound slope {bound_slope:.3}, threshold {threshold})")));
    }
    Ok(())
}
