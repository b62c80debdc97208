//! Prox-functions and their Bregman divergences.
//!
//! Two setups ship: the Euclidean one, `d(x) = 1/2 |x|_2^2`, which is 1-strongly
//! convex in the l2 norm on any ground set, and the entropy one,
//! `d(x) = sum x_i ln x_i`, which is 1-strongly convex in the l1 norm on the simplex.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{check_dim, norm_l1, norm_l2};
use crate::problem::GroundSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    L1,
    L2,
}

impl Norm {
    pub fn of(self, v: &DVector<f64>) -> f64 {
        match self {
            Norm::L1 => norm_l1(v),
            Norm::L2 => norm_l2(v),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProxKind {
    Euclidean,
    Entropy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProxSetup {
    kind: ProxKind,
    ground_set: GroundSet,
}

impl ProxSetup {
    pub fn new(kind: ProxKind, ground_set: GroundSet) -> Result<Self> {
        if kind == ProxKind::Entropy && !matches!(ground_set, GroundSet::Simplex(_)) {
            return Err(Error::invalid("entropy prox-function requires a simplex ground set"));
        }
        Ok(Self { kind, ground_set })
    }

    pub fn euclidean(ground_set: GroundSet) -> Self {
        Self {
            kind: ProxKind::Euclidean,
            ground_set,
        }
    }

    pub fn entropy(n: usize) -> Result<Self> {
        Self::new(ProxKind::Entropy, GroundSet::simplex(n)?)
    }

    /// The natural setup for a ground set: entropy on the simplex, Euclidean otherwise.
    pub fn default_for(ground_set: &GroundSet) -> Self {
        let kind = match ground_set {
            GroundSet::Simplex(_) => ProxKind::Entropy,
            _ => ProxKind::Euclidean,
        };
        Self {
            kind,
            ground_set: ground_set.clone(),
        }
    }

    pub fn kind(&self) -> ProxKind {
        self.kind
    }

    pub fn ground_set(&self) -> &GroundSet {
        &self.ground_set
    }

    pub fn dim(&self) -> usize {
        self.ground_set.dim()
    }

    /// The norm `d` is 1-strongly convex in.
    pub fn norm(&self) -> Norm {
        match self.kind {
            ProxKind::Euclidean => Norm::L2,
            ProxKind::Entropy => Norm::L1,
        }
    }

    /// `d(x)`.
    pub fn distance_generating(&self, x: &DVector<f64>) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        match self.kind {
            ProxKind::Euclidean => Ok(0.5 * x.norm_squared()),
            ProxKind::Entropy => {
                if x.iter().any(|v| *v < 0.0) {
                    return Err(Error::OutsideGroundSet);
                }
                Ok(x.iter().map(|v| xlnx(*v)).sum())
            }
        }
    }

    /// `V(x, y) = d(x) - d(y) - <grad d(y), x - y>`.
    pub fn bregman(&self, x: &DVector<f64>, y: &DVector<f64>) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        check_dim(self.dim(), y.len())?;
        match self.kind {
            ProxKind::Euclidean => Ok(0.5 * (x - y).norm_squared()),
            ProxKind::Entropy => {
                if y.iter().any(|v| !(*v > 0.0)) {
                    return Err(Error::NotInterior);
                }
                if x.iter().any(|v| *v < 0.0 || !v.is_finite()) {
                    return Err(Error::OutsideGroundSet);
                }
                // sum x ln(x/y) - x + y; the last two terms cancel on the simplex.
                Ok(x.iter()
                    .zip(y.iter())
                    .map(|(xi, yi)| {
                        let t = if *xi == 0.0 { 0.0 } else { xi * (xi / yi).ln() };
                        t - xi + yi
                    })
                    .sum())
            }
        }
    }
}

fn xlnx(v: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        v * v.ln()
    }
}

pub fn bregman(setup: &ProxSetup, x: &DVector<f64>, y: &DVector<f64>) -> Result<f64> {
    setup.bregman(x, y)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrongConvexityReport {
    pub violations: usize,
    pub worst_margin: f64,
}

/// Samples `(x, y)` pairs and counts failures of `V(x,y) >= 1/2 |x - y|^2 - 1e-9`
/// in the setup's own norm.
pub fn check_strong_convexity(setup: &ProxSetup, samples: usize, seed: u64) -> StrongConvexityReport {
    check_strong_convexity_in(setup, setup.norm(), samples, seed)
}

/// Same as [`check_strong_convexity`] against an arbitrary norm.
pub fn check_strong_convexity_in(setup: &ProxSetup, norm: Norm, samples: usize, seed: u64) -> StrongConvexityReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0;
    let mut worst_margin = f64::INFINITY;
    for _ in 0..samples {
        let x = setup.ground_set.sample(&mut rng, 10.0);
        let y = setup.ground_set.sample(&mut rng, 10.0);
        let v = match setup.bregman(&x, &y) {
            Ok(v) => v,
            Err(_) => {
                violations += 1;
                continue;
            }
        };
        let margin = v - 0.5 * norm.of(&(&x - &y)).powi(2);
        worst_margin = worst_margin.min(margin);
        if margin < -1e-9 {
            violations += 1;
        }
    }
    StrongConvexityReport { violations, worst_margin }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;
    use rand::Rng;

    #[test]
    fn euclidean_examples() {
        let p = ProxSetup::euclidean(GroundSet::full(2));
        assert_eq!(p.bregman(&dvector![3.0, 4.0], &dvector![3.0, 4.0]).unwrap(), 0.0);
        assert_eq!(p.bregman(&dvector![1.0, 0.0], &dvector![0.0, 0.0]).unwrap(), 0.5);
    }

    #[test]
    fn entropy_kl_example() {
        let p = ProxSetup::entropy(2).unwrap();
        let v = p.bregman(&dvector![1.0, 0.0], &dvector![0.5, 0.5]).unwrap();
        // KL([1,0] || [1/2,1/2]) = 1 * ln(1 / 0.5).
        let direct = 1.0f64 * (1.0f64 / 0.5).ln();
        assert!((v - direct).abs() < 1e-15);
        assert!((v - 0.693147).abs() < 1e-6);
    }

    #[test]
    fn entropy_boundary_center_is_error() {
        let p = ProxSetup::entropy(2).unwrap();
        let err = p.bregman(&dvector![0.5, 0.5], &dvector![1.0, 0.0]).unwrap_err();
        assert!(matches!(err, Error::NotInterior));
        assert_eq!(err.to_string(), "bregman center not interior");
    }

    #[test]
    fn entropy_requires_simplex() {
        assert!(ProxSetup::new(ProxKind::Entropy, GroundSet::full(2)).is_err());
    }

    #[test]
    fn bregman_matches_definition() {
        // V(x,y) = d(x) - d(y) - <grad d(y), x - y> evaluated term by term.
        let p = ProxSetup::entropy(3).unwrap();
        let x = dvector![0.2, 0.3, 0.5];
        let y = dvector![0.6, 0.1, 0.3];
        let grad_y = y.map(|v: f64| v.ln() + 1.0);
        let direct = p.distance_generating(&x).unwrap() - p.distance_generating(&y).unwrap() - grad_y.dot(&(&x - &y));
        assert!((p.bregman(&x, &y).unwrap() - direct).abs() < 1e-14);
    }

    #[test]
    fn strong_convexity_checks() {
        let e = ProxSetup::euclidean(GroundSet::full(4));
        assert_eq!(check_strong_convexity(&e, 1000, 1).violations, 0);
        let h = ProxSetup::entropy(4).unwrap();
        assert_eq!(check_strong_convexity(&h, 1000, 2).violations, 0);
        let h2 = ProxSetup::entropy(2).unwrap();
        assert_eq!(check_strong_convexity_in(&h2, Norm::L2, 1000, 3).violations, 0);
    }

    #[test]
    fn pinsker_spot_check() {
        let p = ProxSetup::entropy(2).unwrap();
        let x = dvector![0.9, 0.1];
        let y = dvector![0.4, 0.6];
        let kl = 0.9 * (0.9f64 / 0.4).ln() + 0.1 * (0.1f64 / 0.6).ln();
        let l1 = 1.0;
        assert!((p.bregman(&x, &y).unwrap() - kl).abs() < 1e-14);
        assert!(kl >= 0.5 * l1 * l1);
    }

    #[test]
    fn divergence_positive_and_convex_in_first_argument() {
        for p in [ProxSetup::euclidean(GroundSet::full(3)), ProxSetup::entropy(3).unwrap()] {
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            for _ in 0..500 {
                let x = p.ground_set().sample(&mut rng, 3.0);
                let x2 = p.ground_set().sample(&mut rng, 3.0);
                let y = p.ground_set().sample(&mut rng, 3.0);
                assert_eq!(p.bregman(&x, &x).unwrap(), 0.0);
                assert!(p.bregman(&x, &y).unwrap() > 0.0);
                let t: f64 = rng.random();
                let mid = &x * t + &x2 * (1.0 - t);
                let lhs = p.bregman(&mid, &y).unwrap();
                let rhs = t * p.bregman(&x, &y).unwrap() + (1.0 - t) * p.bregman(&x2, &y).unwrap();
                assert!(lhs <= rhs + 1e-9);
            }
        }
    }
}
