//! Problem description: objective, affine constraints `A x - b <= 0`, and the ground set.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};
use crate::linalg::{check_dim, ensure_finite_vec};

/// Convex set the iterates live in before the functional constraints are applied.
#[derive(Debug, Clone, PartialEq)]
pub enum GroundSet {
    FullSpace(usize),
    /// Componentwise bounds; infinite entries are allowed.
    Box {
        lower: DVector<f64>,
        upper: DVector<f64>,
    },
    /// The probability simplex `{x >= 0, sum x = 1}`.
    Simplex(usize),
}

impl GroundSet {
    pub fn full(n: usize) -> Self {
        GroundSet::FullSpace(n)
    }

    pub fn simplex(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("simplex needs at least one coordinate"));
        }
        Ok(GroundSet::Simplex(n))
    }

    pub fn boxed(lower: DVector<f64>, upper: DVector<f64>) -> Result<Self> {
        check_dim(lower.len(), upper.len())?;
        if lower.iter().chain(upper.iter()).any(|v| v.is_nan()) {
            return Err(Error::NonFinite("box bounds"));
        }
        if lower.iter().zip(upper.iter()).any(|(l, u)| l > u) {
            return Err(Error::invalid("box requires lower <= upper componentwise"));
        }
        if lower.iter().any(|l| *l == f64::INFINITY) || upper.iter().any(|u| *u == f64::NEG_INFINITY) {
            return Err(Error::invalid("box bounds exclude every point"));
        }
        Ok(GroundSet::Box { lower, upper })
    }

    pub fn dim(&self) -> usize {
        match self {
            GroundSet::FullSpace(n) | GroundSet::Simplex(n) => *n,
            GroundSet::Box { lower, .. } => lower.len(),
        }
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        if x.len() != self.dim() || x.iter().any(|v| !v.is_finite()) {
            return false;
        }
        match self {
            GroundSet::FullSpace(_) => true,
            GroundSet::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper.iter()))
                .all(|(v, (l, u))| *v >= l - tol && *v <= u + tol),
            GroundSet::Simplex(_) => x.iter().all(|v| *v >= -tol) && (x.sum() - 1.0).abs() <= tol,
        }
    }

    /// A canonical starting point: the origin clipped into the set, or the simplex barycenter.
    pub fn center(&self) -> DVector<f64> {
        match self {
            GroundSet::FullSpace(n) => DVector::zeros(*n),
            GroundSet::Box { lower, upper } => DVector::from_iterator(
                lower.len(),
                lower.iter().zip(upper.iter()).map(|(l, u)| {
                    if l.is_finite() && u.is_finite() {
                        0.5 * (l + u)
                    } else {
                        0.0f64.clamp(*l, *u)
                    }
                }),
            ),
            GroundSet::Simplex(n) => DVector::from_element(*n, 1.0 / *n as f64),
        }
    }

    /// Draws a point of the set; unbounded directions are truncated to `[-radius, radius]`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, radius: f64) -> DVector<f64> {
        match self {
            GroundSet::FullSpace(n) => DVector::from_fn(*n, |_, _| rng.random_range(-radius..=radius)),
            GroundSet::Box { lower, upper } => DVector::from_fn(lower.len(), |i, _| {
                let lo = if lower[i].is_finite() { lower[i] } else { -radius.max(upper[i].abs() + radius) };
                let hi = if upper[i].is_finite() { upper[i] } else { radius.max(lower[i].abs() + radius) };
                if lo == hi {
                    lo
                } else {
                    rng.random_range(lo..=hi)
                }
            }),
            GroundSet::Simplex(n) => {
                let mut v = DVector::from_fn(*n, |_, _| {
                    let e: f64 = Exp1.sample(rng);
                    e + 1e-300
                });
                let s = v.sum();
                v /= s;
                v
            }
        }
    }
}

/// `F(x) = A x - b`; the feasible region is `F(x) <= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineConstraints {
    a: DMatrix<f64>,
    b: DVector<f64>,
}

impl AffineConstraints {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        check_dim(a.nrows(), b.len())?;
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("constraint data"));
        }
        for (i, row) in a.row_iter().enumerate() {
            if row.iter().all(|v| *v == 0.0) {
                return Err(Error::invalid(format!("constraint row {i} is all zero")));
            }
        }
        Ok(Self { a, b })
    }

    pub fn none(n: usize) -> Self {
        Self {
            a: DMatrix::zeros(0, n),
            b: DVector::zeros(0),
        }
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.m() == 0
    }

    /// `A x - b`.
    pub fn eval(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.n(), x.len())?;
        Ok(&self.a * x - &self.b)
    }

    /// `A^T z`.
    pub fn adjoint(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.m(), z.len())?;
        Ok(self.a.tr_mul(z))
    }

    /// Largest violation `max(0, max_i F_i(x))`.
    pub fn violation(&self, x: &DVector<f64>) -> Result<f64> {
        Ok(self.eval(x)?.iter().fold(0.0f64, |m, v| m.max(*v)))
    }
}

/// `eval_constraints`: returns `A x - b`.
pub fn eval_constraints(c: &AffineConstraints, x: &DVector<f64>) -> Result<DVector<f64>> {
    c.eval(x)
}

/// A differentiable function given by value and gradient.
pub trait SmoothFunction {
    fn dim(&self) -> usize;
    fn value(&self, x: &DVector<f64>) -> Result<f64>;
    fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>>;
}

/// `f(x) = 1/2 x^T Q x + c^T x` with symmetric positive semidefinite `Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticObjective {
    q: DMatrix<f64>,
    c: DVector<f64>,
}

impl QuadraticObjective {
    pub fn new(q: DMatrix<f64>, c: DVector<f64>) -> Result<Self> {
        if !q.is_square() {
            return Err(Error::invalid("quadratic term must be square"));
        }
        check_dim(q.nrows(), c.len())?;
        if q.iter().chain(c.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("objective data"));
        }
        let scale = 1.0 + q.amax();
        if (&q - q.transpose()).amax() > 1e-12 * scale {
            return Err(Error::invalid("quadratic term must be symmetric"));
        }
        let q = (&q + q.transpose()) * 0.5;
        Ok(Self { q, c })
    }

    pub fn linear(c: DVector<f64>) -> Self {
        let n = c.len();
        Self {
            q: DMatrix::zeros(n, n),
            c,
        }
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn c(&self) -> &DVector<f64> {
        &self.c
    }

    /// Largest eigenvalue of `Q`, the gradient Lipschitz constant in the Euclidean norm.
    pub fn lipschitz_l2(&self) -> f64 {
        if self.q.nrows() == 0 {
            return 0.0;
        }
        self.q
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .cloned()
            .fold(0.0, f64::max)
    }

    /// Gradient Lipschitz constant with respect to the l1 norm: `max_ij |Q_ij|`.
    pub fn lipschitz_l1(&self) -> f64 {
        self.q.amax()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        if self.q.nrows() == 0 {
            return 0.0;
        }
        self.q
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }
}

impl SmoothFunction for QuadraticObjective {
    fn dim(&self) -> usize {
        self.c.len()
    }

    fn value(&self, x: &DVector<f64>) -> Result<f64> {
        check_dim(self.c.len(), x.len())?;
        Ok(0.5 * x.dot(&(&self.q * x)) + self.c.dot(x))
    }

    fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.c.len(), x.len())?;
        Ok(&self.q * x + &self.c)
    }
}

/// `min f(x)` over `x in ground_set` with `A x - b <= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub objective: QuadraticObjective,
    pub constraints: AffineConstraints,
    pub ground_set: GroundSet,
    /// Gradient Lipschitz constant, when known. Only used by tests and diagnostics.
    pub known_lipschitz: Option<f64>,
}

impl ProblemSpec {
    pub fn new(objective: QuadraticObjective, constraints: AffineConstraints, ground_set: GroundSet) -> Result<Self> {
        let n = objective.dim();
        check_dim(n, constraints.n())?;
        check_dim(n, ground_set.dim())?;
        Ok(Self {
            objective,
            constraints,
            ground_set,
            known_lipschitz: None,
        })
    }

    pub fn with_known_lipschitz(mut self, l: f64) -> Result<Self> {
        if !(l > 0.0) || !l.is_finite() {
            return Err(Error::invalid("known Lipschitz constant must be positive"));
        }
        self.known_lipschitz = Some(l);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.objective.dim()
    }

    pub fn m(&self) -> usize {
        self.constraints.m()
    }

    pub fn value(&self, x: &DVector<f64>) -> Result<f64> {
        ensure_finite_vec(x, "point")?;
        self.objective.value(x)
    }

    /// True when `x` lies in the ground set and satisfies every constraint within `tol`.
    pub fn is_feasible(&self, x: &DVector<f64>, tol: f64) -> Result<bool> {
        Ok(self.ground_set.contains(x, tol) && self.constraints.violation(x)? <= tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn eval_constraints_examples() {
        let c = AffineConstraints::new(dmatrix![1.0, 0.0], dvector![1.0]).unwrap();
        assert_eq!(eval_constraints(&c, &dvector![1.0, 5.0]).unwrap(), dvector![0.0]);
        let c = AffineConstraints::new(dmatrix![1.0, 1.0], dvector![0.0]).unwrap();
        assert_eq!(eval_constraints(&c, &dvector![0.5, 0.5]).unwrap(), dvector![1.0]);
        let c = AffineConstraints::none(3);
        assert_eq!(eval_constraints(&c, &dvector![1.0, 2.0, 3.0]).unwrap().len(), 0);
    }

    #[test]
    fn eval_constraints_dimension_mismatch() {
        let c = AffineConstraints::new(dmatrix![1.0, 0.0], dvector![1.0]).unwrap();
        assert!(matches!(
            eval_constraints(&c, &dvector![1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn zero_rows_rejected() {
        assert!(AffineConstraints::new(dmatrix![0.0, 0.0], dvector![1.0]).is_err());
    }

    #[test]
    fn box_validation() {
        assert!(GroundSet::boxed(dvector![0.0, 1.0], dvector![1.0, 0.0]).is_err());
        assert!(GroundSet::boxed(dvector![0.0], dvector![f64::INFINITY]).is_ok());
    }

    #[test]
    fn asymmetric_quadratic_rejected() {
        assert!(QuadraticObjective::new(dmatrix![1.0, 2.0; 0.0, 1.0], dvector![0.0, 0.0]).is_err());
    }

    #[test]
    fn simplex_samples_are_on_simplex() {
        let g = GroundSet::simplex(5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let x = g.sample(&mut rng, 1.0);
            assert!(g.contains(&x, 1e-12));
            assert!(x.iter().all(|v| *v > 0.0));
        }
    }

    #[test]
    fn quadratic_objective_is_convex_on_samples() {
        let q = dmatrix![2.0, 0.5, 0.0; 0.5, 1.0, 0.1; 0.0, 0.1, 3.0];
        let f = QuadraticObjective::new(q, dvector![1.0, -1.0, 0.5]).unwrap();
        let g = GroundSet::full(3);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let x = g.sample(&mut rng, 5.0);
            let y = g.sample(&mut rng, 5.0);
            let t: f64 = rng.random();
            let mid = &x * t + &y * (1.0 - t);
            let lhs = f.value(&mid).unwrap();
            let rhs = t * f.value(&x).unwrap() + (1.0 - t) * f.value(&y).unwrap();
            assert!(lhs <= rhs + 1e-9);
        }
    }

    proptest! {
        #[test]
        fn constraint_map_is_affine(
            a in proptest::collection::vec(-5.0f64..5.0, 6),
            b in proptest::collection::vec(-5.0f64..5.0, 2),
            x in proptest::collection::vec(-5.0f64..5.0, 3),
            y in proptest::collection::vec(-5.0f64..5.0, 3),
            t in 0.0f64..1.0,
        ) {
            let mut a = DMatrix::from_row_slice(2, 3, &a);
            for mut row in a.row_iter_mut() {
                if row.iter().all(|v| *v == 0.0) { row[0] = 1.0; }
            }
            let c = AffineConstraints::new(a, DVector::from_vec(b)).unwrap();
            let x = DVector::from_vec(x);
            let y = DVector::from_vec(y);
            let lhs = c.eval(&(&x * t + &y * (1.0 - t))).unwrap();
            let rhs = c.eval(&x).unwrap() * t + c.eval(&y).unwrap() * (1.0 - t);
            prop_assert!((lhs - rhs).amax() <= 1e-12);
        }
    }
}
