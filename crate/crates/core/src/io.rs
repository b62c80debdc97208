//! JSON problem files.
//!
//! ```json
//! {"n": 2, "m": 1,
//!  "objective": {"kind": "quadratic", "Q": [[1, 0], [0, 1]], "c": [-2, 0]},
//!  "A": [[1, 0]], "b": [1],
//!  "ground_set": {"kind": "box", "lower": [null, 0], "upper": [null, null]}}
//! ```
//!
//! `null` box bounds stand for infinity. `"x0"` and `"known_lipschitz"` are optional.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{AffineConstraints, GroundSet, ProblemSpec, QuadraticObjective};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ObjectiveFile {
    Quadratic {
        #[serde(rename = "Q")]
        q: Vec<Vec<f64>>,
        c: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GroundSetFile {
    Full,
    Simplex,
    Box {
        lower: Vec<Option<f64>>,
        upper: Vec<Option<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemFile {
    pub n: usize,
    pub m: usize,
    pub objective: ObjectiveFile,
    #[serde(rename = "A", default)]
    pub a: Vec<Vec<f64>>,
    #[serde(default)]
    pub b: Vec<f64>,
    pub ground_set: GroundSetFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub known_lipschitz: Option<f64>,
}

fn matrix(rows: &[Vec<f64>], nrows: usize, ncols: usize, what: &str) -> Result<DMatrix<f64>> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::invalid(format!("{what} must be {nrows}x{ncols}")));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

fn vector(v: &[f64], len: usize, what: &str) -> Result<DVector<f64>> {
    if v.len() != len {
        return Err(Error::invalid(format!("{what} must have length {len}")));
    }
    Ok(DVector::from_column_slice(v))
}

fn bounds(v: &[Option<f64>], n: usize, missing: f64, what: &str) -> Result<DVector<f64>> {
    if v.len() != n {
        return Err(Error::invalid(format!("{what} must have length {n}")));
    }
    Ok(DVector::from_iterator(n, v.iter().map(|b| b.unwrap_or(missing))))
}

fn finite_or_none(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

impl ProblemFile {
    pub fn into_problem(self) -> Result<(ProblemSpec, Option<DVector<f64>>)> {
        let n = self.n;
        let ObjectiveFile::Quadratic { q, c } = &self.objective;
        let objective = QuadraticObjective::new(matrix(q, n, n, "Q")?, vector(c, n, "c")?)?;
        let constraints = if self.m == 0 && self.a.is_empty() {
            AffineConstraints::none(n)
        } else {
            AffineConstraints::new(matrix(&self.a, self.m, n, "A")?, vector(&self.b, self.m, "b")?)?
        };
        let ground_set = match &self.ground_set {
            GroundSetFile::Full => GroundSet::full(n),
            GroundSetFile::Simplex => GroundSet::simplex(n)?,
            GroundSetFile::Box { lower, upper } => GroundSet::boxed(
                bounds(lower, n, f64::NEG_INFINITY, "lower")?,
                bounds(upper, n, f64::INFINITY, "upper")?,
            )?,
        };
        let mut problem = ProblemSpec::new(objective, constraints, ground_set)?;
        if let Some(l) = self.known_lipschitz {
            problem = problem.with_known_lipschitz(l)?;
        }
        let x0 = self.x0.as_deref().map(|v| vector(v, n, "x0")).transpose()?;
        Ok((problem, x0))
    }

    pub fn from_problem(problem: &ProblemSpec, x0: Option<&DVector<f64>>) -> Self {
        let rows = |m: &DMatrix<f64>| -> Vec<Vec<f64>> { m.row_iter().map(|r| r.iter().copied().collect()).collect() };
        let ground_set = match &problem.ground_set {
            GroundSet::FullSpace(_) => GroundSetFile::Full,
            GroundSet::Simplex(_) => GroundSetFile::Simplex,
            GroundSet::Box { lower, upper } => GroundSetFile::Box {
                lower: lower.iter().copied().map(finite_or_none).collect(),
                upper: upper.iter().copied().map(finite_or_none).collect(),
            },
        };
        ProblemFile {
            n: problem.n(),
            m: problem.m(),
            objective: ObjectiveFile::Quadratic {
                q: rows(problem.objective.q()),
                c: problem.objective.c().iter().copied().collect(),
            },
            a: rows(problem.constraints.a()),
            b: problem.constraints.b().iter().copied().collect(),
            ground_set,
            x0: x0.map(|v| v.iter().copied().collect()),
            known_lipschitz: problem.known_lipschitz,
        }
    }
}

pub fn parse_problem(json: &str) -> Result<(ProblemSpec, Option<DVector<f64>>)> {
    serde_json::from_str::<ProblemFile>(json)?.into_problem()
}

pub fn problem_to_json(problem: &ProblemSpec, x0: Option<&DVector<f64>>) -> Result<String> {
    Ok(serde_json::to_string_pretty(&ProblemFile::from_problem(problem, x0))?)
}

pub fn load_problem(path: impl AsRef<Path>) -> Result<(ProblemSpec, Option<DVector<f64>>)> {
    parse_problem(&std::fs::read_to_string(path)?)
}

pub fn save_problem(path: impl AsRef<Path>, problem: &ProblemSpec, x0: Option<&DVector<f64>>) -> Result<()> {
    std::fs::write(path, problem_to_json(problem, x0)?)?;
    Ok(())
}
