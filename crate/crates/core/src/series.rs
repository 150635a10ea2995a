//! Tolerance-driven summation of term sequences.
//!
//! All infinite-series expressions in this crate (SNR p.d.f., outage,
//! moments, error probability, ergodic capacity) funnel through
//! [`sum_series`]: terms are accumulated until the relative change
//! `|T_n / sum|` drops below the tolerance, with a hard cap as a backstop
//! against series that converge too slowly to be computed in f64.

use crate::error::{Error, Result};

/// Stopping policy for truncated series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesPolicy {
    /// Relative-change stop: accumulation ends once `|T_n / sum| < tol`.
    pub tol: f64,
    /// Hard cap on the term index.
    pub cap: usize,
    /// Earliest index allowed to stop. Guards against truncating on an
    /// accidental zero term (alternating inner sums produce them).
    pub min_terms: usize,
}

impl SeriesPolicy {
    pub const DEFAULT_CAP: usize = 150;

    /// Policy with the given tolerance and the default cap of 150.
    pub fn with_tol(tol: f64) -> Self {
        SeriesPolicy { tol, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::Parameter(format!("series tolerance must be > 0, got {}", self.tol)));
        }
        if self.cap < self.min_terms {
            return Err(Error::Parameter(format!(
                "series cap {} below min_terms {}",
                self.cap, self.min_terms
            )));
        }
        Ok(())
    }
}

impl Default for SeriesPolicy {
    fn default() -> Self {
        SeriesPolicy { tol: 1e-10, cap: Self::DEFAULT_CAP, min_terms: 3 }
    }
}

/// Outcome of a truncated series evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesResult {
    /// The accumulated sum.
    pub value: f64,
    /// Index of the last term added.
    pub terms_used: usize,
    /// Whether the relative-change criterion was met before the cap.
    pub converged: bool,
    /// Largest |T_n| seen; ratio to |value| diagnoses cancellation.
    pub max_term_magnitude: f64,
}

impl SeriesResult {
    /// Same result with the value mapped through `f` (for clamping or
    /// scaling the sum while keeping diagnostics).
    pub fn map_value(self, f: impl FnOnce(f64) -> f64) -> Self {
        SeriesResult { value: f(self.value), ..self }
    }
}

/// Sum `T_0 + T_1 + ...` until `|T_n / sum| < policy.tol` for some
/// `n >= policy.min_terms`, or until `n == policy.cap`.
///
/// The provider is called with consecutive indices starting at 0 and must
/// be deterministic. A non-finite partial sum aborts with
/// [`Error::NumericOverflow`] carrying the last index that was still finite.
pub fn sum_series<F>(mut term: F, policy: &SeriesPolicy) -> Result<SeriesResult>
where
    F: FnMut(usize) -> Result<f64>,
{
    policy.validate()?;
    let mut sum = 0.0f64;
    let mut max_term = 0.0f64;
    for n in 0..=policy.cap {
        let t = term(n)?;
        sum += t;
        if !sum.is_finite() {
            return Err(Error::NumericOverflow { last_stable_index: n.saturating_sub(1) });
        }
        max_term = max_term.max(t.abs());
        // the zero/zero clause stops structurally-zero series (e.g. a CDF
        // evaluated at the origin) that the relative test cannot end
        if n >= policy.min_terms && (t.abs() < policy.tol * sum.abs() || (t == 0.0 && sum == 0.0)) {
            return Ok(SeriesResult { value: sum, terms_used: n, converged: true, max_term_magnitude: max_term });
        }
    }
    Ok(SeriesResult { value: sum, terms_used: policy.cap, converged: false, max_term_magnitude: max_term })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geometric(ratio: f64) -> impl FnMut(usize) -> Result<f64> {
        move |n| Ok(ratio.powi(n as i32))
    }

    #[test]
    fn geometric_half_sums_to_two() {
        let r = sum_series(geometric(0.5), &SeriesPolicy::default()).unwrap();
        assert!((r.value - 2.0).abs() < 1e-9);
        assert!(r.converged);
        // |0.5^n / 2| < 1e-10 first holds near n = 35
        assert!((30..=40).contains(&r.terms_used), "terms_used = {}", r.terms_used);
        assert_eq!(r.max_term_magnitude, 1.0);
    }

    #[test]
    fn zero_term_before_min_terms_does_not_truncate() {
        // T_0 = 1, T_1 = 0, T_2 = 0.5, then a fast geometric tail.
        let r = sum_series(
            |n| Ok(match n {
                0 => 1.0,
                1 => 0.0,
                _ => 0.5f64.powi(n as i32),
            }),
            &SeriesPolicy::default(),
        )
        .unwrap();
        assert!(r.terms_used > 1);
        assert!((r.value - (1.0 + 0.25 / (1.0 - 0.5) * 0.5 / 0.25)).abs() < 1.0); // sanity only
        assert!(r.value > 1.4);
    }

    #[test]
    fn structurally_zero_series_converges_to_zero() {
        let r = sum_series(|_| Ok(0.0), &SeriesPolicy::default()).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(r.converged);
        assert_eq!(r.terms_used, 3);
    }

    #[test]
    fn cap_reached_reports_unconverged() {
        let policy = SeriesPolicy { tol: 1e-10, cap: 20, min_terms: 3 };
        let r = sum_series(|_| Ok(1.0), &policy).unwrap();
        assert!(!r.converged);
        assert_eq!(r.terms_used, 20);
        assert_eq!(r.value, 21.0);
    }

    #[test]
    fn overflow_reports_last_stable_index() {
        let err = sum_series(|n| Ok(1e308 * 2f64.powi(n as i32)), &SeriesPolicy::default()).unwrap_err();
        match err {
            Error::NumericOverflow { last_stable_index } => assert_eq!(last_stable_index, 0),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn provider_errors_propagate() {
        let err = sum_series(
            |n| if n < 2 { Ok(1.0) } else { Err(Error::Domain("boom")) },
            &SeriesPolicy::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Domain("boom")));
    }

    #[test]
    fn invalid_policy_rejected() {
        let bad = SeriesPolicy { tol: 0.0, cap: 150, min_terms: 3 };
        assert!(sum_series(|_| Ok(0.0), &bad).is_err());
        let bad = SeriesPolicy { tol: 1e-10, cap: 2, min_terms: 3 };
        assert!(sum_series(|_| Ok(0.0), &bad).is_err());
    }
}
