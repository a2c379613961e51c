//! Binomial confidence intervals and log-log regression.

use statrs::function::beta::beta_reg;

use crate::error::{param, Result};

/// Confidence level of every reported interval.
pub const CONFIDENCE: f64 = 0.99;

/// Inverse of the regularized incomplete beta function in `x`, by bisection.
fn beta_quantile(a: f64, b: f64, prob: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if beta_reg(a, b, mid) < prob {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Exact (Clopper–Pearson) two-sided interval for `failures` out of
/// `trials` at the given confidence.
pub fn clopper_pearson(failures: u64, trials: u64, confidence: f64) -> Result<(f64, f64)> {
    if trials == 0 {
        return Err(param("trials must be positive"));
    }
    if failures > trials {
        return Err(param(format!("failures {failures} exceed trials {trials}")));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(param(format!("confidence must lie in (0, 1), got {confidence}")));
    }
    let alpha = 1.0 - confidence;
    let (f, t) = (failures as f64, trials as f64);
    let low = if failures == 0 { 0.0 } else { beta_quantile(f, t - f + 1.0, alpha / 2.0) };
    let high = if failures == trials { 1.0 } else { beta_quantile(f + 1.0, t - f, 1.0 - alpha / 2.0) };
    let rate = f / t;
    Ok((low.min(rate), high.max(rate)))
}

/// Least-squares line through `(ln x, ln y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn loglog_fit(points: &[(f64, f64)]) -> Result<LogLogFit> {
    if points.len() < 3 {
        return Err(param(format!("need at least 3 points, got {}", points.len())));
    }
    if points.iter().any(|(x, y)| !(*x > 0.0) || !(*y > 0.0) || !x.is_finite() || !y.is_finite()) {
        return Err(param("fit points must be positive and finite"));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|(x, y)| (x.ln(), y.ln())).collect();
    let k = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / k;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = logs.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(param("fit needs at least two distinct abscissae"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = logs.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    Ok(LogLogFit { slope, intercept, r_squared })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// P{Bin(t, p) <= f} by direct pmf summation in log space.
    fn binom_cdf(f: u64, t: u64, p: f64) -> f64 {
        let mut log_c = 0.0f64;
        let mut total = 0.0;
        for j in 0..=f {
            if j > 0 {
                log_c += ((t - j + 1) as f64).ln() - (j as f64).ln();
            }
            total += (log_c + j as f64 * p.ln() + (t - j) as f64 * (-p).ln_1p()).exp();
        }
        total
    }

    #[test]
    fn endpoints_solve_tail_equations() {
        let half = (1.0 - CONFIDENCE) / 2.0;
        for t in [1u64, 2, 7, 30, 100, 1000] {
            for f in [0, 1, t / 3, t / 2, t.saturating_sub(1), t] {
                let (lo, hi) = clopper_pearson(f, t, CONFIDENCE).unwrap();
                assert!(lo <= f as f64 / t as f64 && f as f64 / t as f64 <= hi);
                if f == 0 {
                    assert_eq!(lo, 0.0);
                } else {
                    // P{X >= f | lo} = half
                    let upper_tail = 1.0 - binom_cdf(f - 1, t, lo);
                    assert!((upper_tail - half).abs() < 1e-7, "t={t} f={f} tail={upper_tail}");
                }
                if f == t {
                    assert_eq!(hi, 1.0);
                } else {
                    let lower_tail = binom_cdf(f, t, hi);
                    assert!((lower_tail - half).abs() < 1e-7, "t={t} f={f} tail={lower_tail}");
                }
            }
        }
    }

    #[test]
    fn zero_failures_closed_form() {
        let (lo, hi) = clopper_pearson(0, 50, CONFIDENCE).unwrap();
        assert_eq!(lo, 0.0);
        assert!((hi - (1.0 - 0.005f64.powf(1.0 / 50.0))).abs() < 1e-10);
    }

    #[test]
    fn invalid_counts() {
        assert!(clopper_pearson(1, 0, CONFIDENCE).is_err());
        assert!(clopper_pearson(3, 2, CONFIDENCE).is_err());
    }

    #[test]
    fn power_law_fit() {
        let pts: Vec<(f64, f64)> = [16.0, 64.0, 256.0].iter().map(|&n: &f64| (n, 7.0 * n.powf(-1.5))).collect();
        let fit = loglog_fit(&pts).unwrap();
        assert!((fit.slope + 1.5).abs() < 1e-12);
        assert!((fit.intercept - 7f64.ln()).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        let flat = loglog_fit(&[(1.0, 3.0), (2.0, 3.0), (4.0, 3.0)]).unwrap();
        assert_eq!(flat.slope, 0.0);
        assert!(loglog_fit(&[(1.0, 1.0), (2.0, 1.0)]).is_err());
        assert!(loglog_fit(&[(1.0, 1.0), (2.0, 0.0), (3.0, 1.0)]).is_err());
    }
}
