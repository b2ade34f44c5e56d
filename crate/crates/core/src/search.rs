//! Bisection for the largest argument satisfying a monotone predicate.

use crate::error::{Error, Result};

/// Default tolerance relative to the bracket magnitude.
pub const DEFAULT_REL_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchBracket {
    pub lo: f64,
    pub hi: f64,
    /// Absolute tolerance on the returned threshold.
    pub tol: f64,
    pub max_iter: u32,
}

impl SearchBracket {
    /// Bracket with the default relative tolerance.
    pub fn new(lo: f64, hi: f64) -> Self {
        let scale = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
        SearchBracket { lo, hi, tol: DEFAULT_REL_TOL * scale, max_iter: 200 }
    }

    pub fn with_tol(self, tol: f64) -> Self {
        SearchBracket { tol, ..self }
    }

    fn validate(&self) -> Result<()> {
        if !(self.lo < self.hi) || !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(Error::InvalidBracket { lo: self.lo, hi: self.hi });
        }
        if !(self.tol > 0.0) {
            return Err(Error::domain(format!("search tolerance must be positive, got {}", self.tol)));
        }
        Ok(())
    }
}

/// Largest `x` in the bracket with `predicate(x)` true, for a predicate that
/// is true below some threshold and false above it.
///
/// Returns `Ok(None)` when the predicate already fails at `lo`, and `hi`
/// when it holds on the whole bracket. The returned point always satisfies
/// the predicate.
pub fn max_feasible<P>(mut predicate: P, bracket: SearchBracket) -> Result<Option<f64>>
where
    P: FnMut(f64) -> bool,
{
    bracket.validate()?;
    if !predicate(bracket.lo) {
        return Ok(None);
    }
    if predicate(bracket.hi) {
        return Ok(Some(bracket.hi));
    }
    let (mut good, mut bad) = (bracket.lo, bracket.hi);
    let mut iter = 0;
    while bad - good > bracket.tol && iter < bracket.max_iter {
        let mid = 0.5 * (good + bad);
        if predicate(mid) {
            good = mid;
        } else {
            bad = mid;
        }
        iter += 1;
    }
    Ok(Some(good))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_threshold() {
        let b = SearchBracket::new(0.0, 10.0).with_tol(1e-6);
        let x = max_feasible(|x| x <= 2.5, b).unwrap().unwrap();
        assert!((x - 2.5).abs() <= 1e-6 && x <= 2.5);
    }

    #[test]
    fn infeasible_and_saturated() {
        let b = SearchBracket::new(0.0, 10.0);
        assert_eq!(max_feasible(|_| false, b).unwrap(), None);
        assert_eq!(max_feasible(|_| true, b).unwrap(), Some(10.0));
    }

    #[test]
    fn rejects_inverted_bracket() {
        assert!(max_feasible(|_| true, SearchBracket::new(1.0, 1.0)).is_err());
        assert!(max_feasible(|_| true, SearchBracket::new(2.0, 1.0)).is_err());
    }

    #[test]
    fn stub_error_rate_threshold() {
        // Pr(E) = λ/10 against a 0.1 target crosses at λ = 1.
        let b = SearchBracket::new(0.0, 10.0).with_tol(1e-9);
        let x = max_feasible(|lam| lam / 10.0 <= 0.1, b).unwrap().unwrap();
        assert!((x - 1.0).abs() <= 1e-9);
    }
}
