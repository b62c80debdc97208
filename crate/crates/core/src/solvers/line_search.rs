use crate::error::{Error, Result};

/// Both sides of the exit inequality for one candidate `L`, plus whatever the
/// trial computed (next iterate, multipliers, ...).
#[derive(Debug, Clone)]
pub struct TrialOutcome<T> {
    pub lhs: f64,
    pub rhs: f64,
    /// Magnitude used to scale the acceptance slack, `|f_delta(x_k)|`.
    pub scale: f64,
    pub payload: T,
}

#[derive(Debug, Clone)]
pub struct Backtrack<T> {
    pub l_next: f64,
    pub i_k: usize,
    pub payload: T,
    pub model_evals: usize,
}

/// Relative slack accepted in the exit inequality.
pub const EXIT_SLACK: f64 = 1e-10;

/// Finds the smallest `i >= 0` such that the trial at `L = 2^(i-1) * l_prev`
/// satisfies `lhs <= rhs + 1e-10 (1 + scale)`. The first candidate halves `l_prev`.
pub fn backtrack_l<T, F>(l_prev: f64, max_tries: usize, mut trial: F) -> Result<Backtrack<T>>
where
    F: FnMut(f64) -> Result<TrialOutcome<T>>,
{
    if !(l_prev > 0.0) || !l_prev.is_finite() {
        return Err(Error::invalid("previous L must be positive"));
    }
    let mut l = 0.5 * l_prev;
    for i in 0..max_tries {
        let out = trial(l)?;
        if out.lhs <= out.rhs + EXIT_SLACK * (1.0 + out.scale.abs()) {
            return Ok(Backtrack {
                l_next: l,
                i_k: i,
                payload: out.payload,
                model_evals: i + 1,
            });
        }
        l *= 2.0;
        if !l.is_finite() {
            break;
        }
    }
    Err(Error::NoValidL {
        tries: max_tries,
        last_l: l,
    })
}

/// Runs the configured search: adaptive backtracking, or a single trial at a fixed `L`.
/// Adaptive candidates never drop below `l_min`.
pub(super) fn search<T, F>(
    line_search: super::LineSearch,
    l_prev: f64,
    l_min: f64,
    max_tries: usize,
    mut trial: F,
) -> Result<Backtrack<T>>
where
    F: FnMut(f64) -> Result<TrialOutcome<T>>,
{
    match line_search {
        super::LineSearch::Adaptive => backtrack_l(l_prev.max(2.0 * l_min), max_tries, trial),
        super::LineSearch::Fixed(l) => Ok(Backtrack {
            l_next: l,
            i_k: 0,
            payload: trial(l)?.payload,
            model_evals: 1,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// One gradient step on f(x) = 1/2 x^2 from x = 1 with step 1/L.
    fn quadratic_trial(l: f64) -> Result<TrialOutcome<f64>> {
        let (x, g) = (1.0, 1.0);
        let next = x - g / l;
        let f = |v: f64| 0.5 * v * v;
        Ok(TrialOutcome {
            lhs: f(next),
            rhs: f(x) + g * (next - x) + 0.5 * l * (next - x).powi(2),
            scale: f(x),
            payload: next,
        })
    }

    #[test]
    fn tight_quadratic_accepts_first_halving() {
        let bt = backtrack_l(2.0, 60, quadratic_trial).unwrap();
        assert_eq!(bt.i_k, 0);
        assert_eq!(bt.l_next, 1.0);
        assert_eq!(bt.model_evals, 1);
    }

    #[test]
    fn climbs_to_first_power_of_two_above_curvature() {
        let bt = backtrack_l(0.25, 60, quadratic_trial).unwrap();
        assert_eq!(bt.i_k, 3);
        assert_eq!(bt.l_next, 1.0);
        assert_eq!(bt.model_evals, 4);
        let at_half = quadratic_trial(0.5).unwrap();
        assert!(at_half.lhs > at_half.rhs);
    }

    #[test]
    fn linear_function_always_accepts_immediately() {
        for l_prev in [1e-6, 0.3, 1.0, 1e6] {
            let bt = backtrack_l(l_prev, 60, |l| {
                let (x, g) = (2.0, 3.0);
                let next = x - g / l;
                let f = |v: f64| 3.0 * v - 1.0;
                Ok(TrialOutcome {
                    lhs: f(next),
                    rhs: f(x) + g * (next - x) + 0.5 * l * (next - x).powi(2),
                    scale: f(x),
                    payload: (),
                })
            })
            .unwrap();
            assert_eq!(bt.i_k, 0);
        }
    }

    #[test]
    fn budget_exhaustion_is_error() {
        let err = backtrack_l(1.0, 5, |_| {
            Ok(TrialOutcome {
                lhs: 1.0,
                rhs: 0.0,
                scale: 0.0,
                payload: (),
            })
        })
        .unwrap_err();
        assert!(matches!(err, Error::NoValidL { tries: 5, .. }));
    }
}
