//! Small dense helpers shared by the solvers.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Inner product with a dimension check.
pub fn dot(a: &DVector<f64>, b: &DVector<f64>) -> Result<f64> {
    check_dim(a.len(), b.len())?;
    Ok(a.dot(b))
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

pub(crate) fn ensure_finite_vec(v: &DVector<f64>, what: &'static str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

pub(crate) fn ensure_finite(x: f64, what: &'static str) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::NonFinite(what))
    }
}

pub fn norm_l1(v: &DVector<f64>) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

pub fn norm_l2(v: &DVector<f64>) -> f64 {
    v.norm()
}

pub fn norm_inf(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub(crate) fn solve_general(m: DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    let lu = m.lu();
    let sol = lu.solve(rhs).ok_or(Error::Singular)?;
    if sol.iter().all(|x| x.is_finite()) {
        Ok(sol)
    } else {
        Err(Error::Singular)
    }
}

/// Euclidean projection onto `{x >= 0, sum x = mass}`.
pub fn project_simplex(v: &DVector<f64>, mass: f64) -> DVector<f64> {
    let n = v.len();
    if n == 0 {
        return v.clone();
    }
    let tau = simplex_threshold(v.as_slice(), mass);
    v.map(|x| (x - tau).max(0.0))
}

/// Threshold `tau` with `sum max(v_i - tau, 0) = mass`.
pub(crate) fn simplex_threshold(v: &[f64], mass: f64) -> f64 {
    let mut sorted: Vec<f64> = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut tau = (sorted[0] - mass) / 1.0;
    for (j, &s) in sorted.iter().enumerate() {
        cumsum += s;
        let t = (cumsum - mass) / (j as f64 + 1.0);
        if s - t > 0.0 {
            tau = t;
        }
    }
    tau
}

/// Smallest weight `softmax` returns, so results stay usable as entropy prox centers.
pub(crate) const SOFTMAX_FLOOR: f64 = f64::MIN_POSITIVE;

/// Numerically stable softmax of a log-weight vector. Underflowed weights are
/// raised to [`SOFTMAX_FLOOR`].
pub(crate) fn softmax(logits: &DVector<f64>) -> DVector<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out = logits.map(|l| (l - max).exp());
    let s = out.sum();
    out /= s;
    out.apply(|v| *v = v.max(SOFTMAX_FLOOR));
    out
}

pub(crate) fn soft_threshold(x: f64, tau: f64) -> f64 {
    if x > tau {
        x - tau
    } else if x < -tau {
        x + tau
    } else {
        0.0
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    check_dim(xs.len(), ys.len())?;
    if xs.len() < 2 {
        return Err(Error::invalid("slope fit needs at least two points"));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::invalid("slope fit needs positive finite values"));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    Ok(sxy / sxx)
}
