use std::fmt::Write as _;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{Algorithm, Certificate, PrimalDualResult, StopReason};

/// One completed iteration. Indices follow the algorithms: after iteration
/// `k` the record holds `L_{k+1}`, `alpha_{k+1}`, `A_{k+1}`, `x_{k+1}`,
/// `z_{k+1}`, and `delta_k`; `k` in the CSV is the prefix length `k + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    pub i_k: usize,
    pub l: f64,
    pub alpha: f64,
    pub a: f64,
    pub x: DVector<f64>,
    /// Multiplier normalized to a unit model coefficient.
    pub z: DVector<f64>,
    pub delta: f64,
    pub model_evals: usize,
    /// Objective at the prefix output (`x_bar` for the gradient method, `x` for the fast one).
    pub f_out: f64,
    pub certificate_lhs: Option<f64>,
    pub certificate_rhs: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunTrace {
    pub records: Vec<IterationRecord>,
}

pub const TRACE_CSV_HEADER: &str = "k,i_k,L_k,alpha_k,A_k,delta_k,f_xk,gap_k,bound_k";

fn fmt_f64(out: &mut String, v: f64) {
    // Debug formatting is the shortest representation that round-trips.
    let _ = write!(out, "{v:?}");
}

impl RunTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.records.len() + 1));
        out.push_str(TRACE_CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            let _ = write!(out, "{},{},", r.k + 1, r.i_k);
            for v in [r.l, r.alpha, r.a, r.delta, r.f_out] {
                fmt_f64(&mut out, v);
                out.push(',');
            }
            if let Some(v) = r.certificate_lhs {
                fmt_f64(&mut out, v);
            }
            out.push(',');
            if let Some(v) = r.certificate_rhs {
                fmt_f64(&mut out, v);
            }
            out.push('\n');
        }
        out
    }
}

/// Serializable digest of a [`PrimalDualResult`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub algorithm: Algorithm,
    pub iterations: usize,
    pub stop_reason: StopReason,
    pub model_evals: usize,
    pub x0: Vec<f64>,
    pub x_out: Vec<f64>,
    pub z_out: Vec<f64>,
    pub a_n: f64,
    pub f_out: f64,
    pub certificate: Certificate,
    pub certificate_holds: bool,
}

impl PrimalDualResult {
    pub fn summary(&self, f_out: f64, tol: f64) -> RunSummary {
        RunSummary {
            algorithm: self.algorithm,
            iterations: self.iterations,
            stop_reason: self.stop_reason,
            model_evals: self.model_evals(),
            x0: self.x0.iter().copied().collect(),
            x_out: self.x_out.iter().copied().collect(),
            z_out: self.z_out.iter().copied().collect(),
            a_n: self.a_n,
            f_out,
            certificate: self.certificate,
            certificate_holds: self.certificate.holds(tol),
        }
    }
}
