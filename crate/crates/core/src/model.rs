//! `(delta, L)`-models of an objective.
//!
//! A model at a point `y` is a pair `(f_delta(y), psi_delta(., y))` with
//! `psi_delta(y, y) = 0`, `psi_delta(., y)` convex, and
//! `0 <= f(x) - f_delta(y) - psi_delta(x, y) <= L/2 |x - y|^2 + delta`.
//! Every model shipped here has `psi(x, y) = <g, x - y> + h(x) - h(y)`
//! for a vector `g` and a simple convex term `h`, which is what the
//! subproblem solver needs.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{check_dim, ensure_finite, ensure_finite_vec};
use crate::problem::{GroundSet, SmoothFunction};
use crate::prox::Norm;

/// Simple convex term `h` of a composite model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SimpleTerm {
    Zero,
    /// `weight * |x|_1`.
    L1 { weight: f64 },
}

impl SimpleTerm {
    pub fn value(&self, x: &DVector<f64>) -> f64 {
        match self {
            SimpleTerm::Zero => 0.0,
            SimpleTerm::L1 { weight } => weight * x.iter().map(|v| v.abs()).sum::<f64>(),
        }
    }

    /// A subgradient at `x` (zero is chosen at kinks).
    pub fn subgradient(&self, x: &DVector<f64>) -> DVector<f64> {
        match self {
            SimpleTerm::Zero => DVector::zeros(x.len()),
            SimpleTerm::L1 { weight } => x.map(|v| {
                if v > 0.0 {
                    *weight
                } else if v < 0.0 {
                    -*weight
                } else {
                    0.0
                }
            }),
        }
    }
}

/// `psi(x, y) = <grad, x - point> + term(x) - term(point)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linearization {
    pub point: DVector<f64>,
    pub grad: DVector<f64>,
    pub term: SimpleTerm,
}

impl Linearization {
    pub fn eval(&self, x: &DVector<f64>) -> Result<f64> {
        check_dim(self.point.len(), x.len())?;
        let diff = x - &self.point;
        let lin = self.grad.dot(&diff);
        let simple = match self.term {
            SimpleTerm::Zero => 0.0,
            _ => self.term.value(x) - self.term.value(&self.point),
        };
        Ok(lin + simple)
    }

    pub fn subgradient(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.grad + self.term.subgradient(x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelEval {
    pub value: f64,
    pub subgradient: DVector<f64>,
}

pub trait ModelOracle {
    fn dim(&self) -> usize;

    /// Declared accuracy of the model.
    fn delta(&self) -> f64;

    /// `f_delta(y)`.
    fn value(&self, y: &DVector<f64>) -> Result<f64>;

    /// The model `psi_delta(., y)` in linearized form.
    fn linearize(&self, y: &DVector<f64>) -> Result<Linearization>;

    /// `psi_delta(x, y)` with a subgradient in `x`.
    fn model(&self, x: &DVector<f64>, y: &DVector<f64>) -> Result<ModelEval> {
        let lin = self.linearize(y)?;
        Ok(ModelEval {
            value: lin.eval(x)?,
            subgradient: lin.subgradient(x),
        })
    }
}

/// `model_value`: `psi_delta(x, y)`; exactly zero when `x == y`.
pub fn model_value<M: ModelOracle + ?Sized>(oracle: &M, x: &DVector<f64>, y: &DVector<f64>) -> Result<f64> {
    check_dim(oracle.dim(), x.len())?;
    check_dim(oracle.dim(), y.len())?;
    Ok(oracle.model(x, y)?.value)
}

/// Gradient linearization of a smooth function: `psi(x, y) = <grad f(y), x - y>`, `delta = 0`.
#[derive(Debug, Clone)]
pub struct LinearModel<F> {
    f: F,
}

impl<F: SmoothFunction> LinearModel<F> {
    pub fn new(f: F) -> Self {
        Self { f }
    }

    pub fn function(&self) -> &F {
        &self.f
    }
}

impl<F: SmoothFunction> ModelOracle for LinearModel<F> {
    fn dim(&self) -> usize {
        self.f.dim()
    }

    fn delta(&self) -> f64 {
        0.0
    }

    fn value(&self, y: &DVector<f64>) -> Result<f64> {
        ensure_finite(self.f.value(y)?, "objective value")
    }

    fn linearize(&self, y: &DVector<f64>) -> Result<Linearization> {
        let grad = self.f.gradient(y)?;
        ensure_finite_vec(&grad, "gradient")?;
        Ok(Linearization {
            point: y.clone(),
            grad,
            term: SimpleTerm::Zero,
        })
    }
}

/// Composite objective `g + h`: linearize `g`, keep `h` exact.
#[derive(Debug, Clone)]
pub struct CompositeModel<G> {
    smooth: G,
    term: SimpleTerm,
}

impl<G: SmoothFunction> CompositeModel<G> {
    pub fn new(smooth: G, term: SimpleTerm) -> Result<Self> {
        if let SimpleTerm::L1 { weight } = term {
            if !(weight >= 0.0) || !weight.is_finite() {
                return Err(Error::invalid("l1 weight must be non-negative"));
            }
        }
        Ok(Self { smooth, term })
    }
}

impl<G: SmoothFunction> ModelOracle for CompositeModel<G> {
    fn dim(&self) -> usize {
        self.smooth.dim()
    }

    fn delta(&self) -> f64 {
        0.0
    }

    fn value(&self, y: &DVector<f64>) -> Result<f64> {
        ensure_finite(self.smooth.value(y)? + self.term.value(y), "objective value")
    }

    fn linearize(&self, y: &DVector<f64>) -> Result<Linearization> {
        let grad = self.smooth.gradient(y)?;
        ensure_finite_vec(&grad, "gradient")?;
        Ok(Linearization {
            point: y.clone(),
            grad,
            term: self.term,
        })
    }
}

/// Wraps a model and shifts `f_delta(y)` down by a deterministic amount in
/// `[0, noise_bound / 2]` that depends only on `y` and the seed.
///
/// A downward shift keeps the lower half of the model inequality intact, so
/// the result is a `(noise_bound, L)`-model whenever the inner one is a `(0, L)`-model.
#[derive(Debug, Clone)]
pub struct InexactModel<M> {
    inner: M,
    noise_bound: f64,
    seed: u64,
}

impl<M: ModelOracle> InexactModel<M> {
    pub fn new(inner: M, noise_bound: f64, seed: u64) -> Result<Self> {
        if !(noise_bound > 0.0) || !noise_bound.is_finite() {
            return Err(Error::invalid("noise bound must be positive"));
        }
        Ok(Self {
            inner,
            noise_bound,
            seed,
        })
    }

    pub fn noise_bound(&self) -> f64 {
        self.noise_bound
    }

    /// Perturbation in `[0, noise_bound / 2]` subtracted from the exact value at `y`.
    pub fn perturbation(&self, y: &DVector<f64>) -> f64 {
        let mut h = splitmix64(self.seed ^ 0x9e37_79b9_7f4a_7c15);
        for v in y.iter() {
            h = splitmix64(h ^ v.to_bits());
        }
        let unit = (h >> 11) as f64 / (1u64 << 53) as f64;
        0.5 * self.noise_bound * unit
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl<M: ModelOracle> ModelOracle for InexactModel<M> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn delta(&self) -> f64 {
        self.inner.delta() + self.noise_bound
    }

    fn value(&self, y: &DVector<f64>) -> Result<f64> {
        Ok(self.inner.value(y)? - self.perturbation(y))
    }

    fn linearize(&self, y: &DVector<f64>) -> Result<Linearization> {
        self.inner.linearize(y)
    }
}

impl<M: ModelOracle + ?Sized> ModelOracle for &M {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn delta(&self) -> f64 {
        (**self).delta()
    }
    fn value(&self, y: &DVector<f64>) -> Result<f64> {
        (**self).value(y)
    }
    fn linearize(&self, y: &DVector<f64>) -> Result<Linearization> {
        (**self).linearize(y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SandwichReport {
    pub violations: usize,
    /// Largest amount by which either inequality was exceeded (0 when none was).
    pub max_excess: f64,
}

/// Samples pairs `(x, y)` from `ground` and counts violations of
/// `0 <= f(x) - f_delta(y) - psi(x, y) <= L/2 |x - y|^2 + delta` beyond `1e-9`.
pub fn check_model_sandwich<M, F>(
    oracle: &M,
    f_true: &F,
    ground: &GroundSet,
    norm: Norm,
    l: f64,
    delta: f64,
    samples: usize,
    seed: u64,
) -> Result<SandwichReport>
where
    M: ModelOracle + ?Sized,
    F: Fn(&DVector<f64>) -> Result<f64>,
{
    if !(l > 0.0) || !(delta >= 0.0) {
        return Err(Error::invalid("sandwich check needs L > 0 and delta >= 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0;
    let mut max_excess = 0.0f64;
    for _ in 0..samples {
        let x = ground.sample(&mut rng, 5.0);
        let y = ground.sample(&mut rng, 5.0);
        let gap = f_true(&x)? - oracle.value(&y)? - model_value(oracle, &x, &y)?;
        let upper = 0.5 * l * norm.of(&(&x - &y)).powi(2) + delta;
        let excess = (-gap).max(gap - upper);
        if excess > 1e-9 {
            violations += 1;
        }
        max_excess = max_excess.max(excess);
    }
    Ok(SandwichReport { violations, max_excess })
}
