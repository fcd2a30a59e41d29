//! Chance-level accuracy and the binomial significance cut.
//!
//! A classifier that always answers "referent" scores
//! `p = n_referent / (n_referent + n_subject)`. Treating the number of
//! correct test labels as `Binomial(n_test, p)`, a window is significant when
//! its accuracy lands in the upper tail with probability below `alpha`.

use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::factorial::ln_binomial;

use crate::error::{Error, Result};

/// Above this many test samples the tail is taken from a normal
/// approximation with continuity correction instead of an exact sum.
pub const EXACT_TAIL_LIMIT: usize = 100_000;

/// Fraction of samples where `p > 0.5` matches the label.
pub fn binary_accuracy(predicted: &[f64], actual: &[u8]) -> Result<f64> {
    if predicted.len() != actual.len() {
        return Err(Error::DimensionMismatch {
            expected: predicted.len(),
            found: actual.len(),
        });
    }
    if predicted.is_empty() {
        return Err(Error::TooFewRows { needed: 1, found: 0 });
    }
    let correct = predicted
        .iter()
        .zip(actual)
        .filter(|(&p, &y)| (p > 0.5) == (y == 1))
        .count();
    Ok(correct as f64 / predicted.len() as f64)
}

/// Accuracy of always predicting the referent class.
pub fn chance_accuracy(n_referent: usize, n_subject: usize) -> f64 {
    n_referent as f64 / (n_referent + n_subject) as f64
}

/// Smallest accuracy `k / n_test` whose binomial upper tail
/// `P(X >= k | n_test, p)` is below `alpha`.
///
/// The tail is summed exactly (smallest terms first, in log space) for
/// `n_test <= EXACT_TAIL_LIMIT` and approximated as
/// `1 - Phi((k - 0.5 - n p) / sqrt(n p (1 - p)))` beyond. Returns 1.0 when
/// even a perfect score is not significant, so nothing can exceed it.
pub fn accuracy_threshold(n_test: usize, p: f64, alpha: f64) -> Result<f64> {
    if n_test == 0 {
        return Err(Error::InvalidArgument("n_test must be at least 1".into()));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidArgument(format!("p must lie in (0, 1), got {p}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    let k = if n_test <= EXACT_TAIL_LIMIT {
        exact_cut(n_test, p, alpha)
    } else {
        normal_cut(n_test, p, alpha)
    };
    Ok((k as f64 / n_test as f64).min(1.0))
}

fn exact_cut(n: usize, p: f64, alpha: f64) -> usize {
    let (lp, lq) = (p.ln(), (1.0 - p).ln());
    let mut tail = 0.0;
    // Walk down from k = n; the answer is one above the first k whose tail
    // reaches alpha.
    for k in (0..=n).rev() {
        let ln_pmf = ln_binomial(n as u64, k as u64) + k as f64 * lp + (n - k) as f64 * lq;
        tail += ln_pmf.exp();
        if tail >= alpha {
            return k + 1;
        }
    }
    0
}

fn normal_cut(n: usize, p: f64, alpha: f64) -> usize {
    let mean = n as f64 * p;
    let sd = (mean * (1.0 - p)).sqrt();
    let z = Normal::standard().inverse_cdf(1.0 - alpha);
    let k = (mean + 0.5 + z * sd).floor() as usize + 1;
    k.min(n + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accuracy_examples() {
        assert_eq!(binary_accuracy(&[0.9, 0.1], &[1, 0]).unwrap(), 1.0);
        assert_eq!(binary_accuracy(&[0.9, 0.9], &[1, 0]).unwrap(), 0.5);
        let mut y = vec![0u8; 12];
        y.push(1);
        assert!((binary_accuracy(&[0.4; 13], &y).unwrap() - 12.0 / 13.0).abs() < 1e-15);
        assert!(binary_accuracy(&[0.4], &[0, 1]).is_err());
    }

    #[test]
    fn chance_levels() {
        assert!((chance_accuracy(43_200, 3_600) - 12.0 / 13.0).abs() < 1e-12);
        assert_eq!(chance_accuracy(86_400, 3_600), 0.96);
        assert_eq!(chance_accuracy(1, 1), 0.5);
    }

    #[test]
    fn small_exact_cut() {
        assert_eq!(accuracy_threshold(20, 0.5, 0.01).unwrap(), 0.8);
        // At alpha = 0.5 the cut sits at the median.
        let t = accuracy_threshold(100, 0.5, 0.5).unwrap();
        assert!((t - 0.5).abs() <= 0.011, "{t}");
        // Nothing out of one coin flip is significant at 1%.
        assert_eq!(accuracy_threshold(1, 0.5, 0.01).unwrap(), 1.0);
    }

    #[test]
    fn paper_scale_cut() {
        let t = accuracy_threshold(14_040, 12.0 / 13.0, 0.01).unwrap();
        assert!((t - 0.9285).abs() <= 0.0005, "{t}");
    }

    #[test]
    fn regimes_agree_at_the_boundary() {
        let p = 0.96;
        let exact = exact_cut(EXACT_TAIL_LIMIT, p, 0.01);
        let approx = normal_cut(EXACT_TAIL_LIMIT, p, 0.01);
        assert!(exact.abs_diff(approx) <= 3, "{exact} vs {approx}");
        assert!(accuracy_threshold(EXACT_TAIL_LIMIT + 1, p, 0.01).is_ok());
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(accuracy_threshold(0, 0.5, 0.01).is_err());
        assert!(accuracy_threshold(10, 1.0, 0.01).is_err());
        assert!(accuracy_threshold(10, 0.5, 0.0).is_err());
    }
}
