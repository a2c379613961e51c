//! Closed-form error guarantees, failure bounds and lower-bound envelopes.
//!
//! Formulas are returned verbatim; a value above 1 is possible where the
//! expression is used as a probability, and callers cap it themselves.

pub mod exact;

pub use exact::{
    bakhvalov_chain_check, bakhvalov_exact_uncertainty, bakhvalov_intermediate_bound, lemma_a1_check, lemma_a1_scan,
    lemma_a2_check, lemma_a2_scan, BakhvalovChainRow, ExactProb, LemmaA1Row, LemmaA2Row,
};

use crate::error::{param, Error, Result};

/// An `(ε, δ)` guarantee for a method with budget `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct GuaranteeSpec {
    pub n: u64,
    pub epsilon: f64,
    pub delta: f64,
    /// Which formula produced it.
    pub source: &'static str,
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(param(format!("delta must lie in (0, 1), got {delta}")))
    }
}

/// Two-sided Hoeffding bound for the mean of `n = spreads.len()` independent
/// terms, each supported on an interval of the given length.
pub fn hoeffding_failure_bound(epsilon: f64, spreads: &[f64]) -> Result<f64> {
    if spreads.is_empty() {
        return Err(param("spreads must be nonempty"));
    }
    if !(epsilon > 0.0) {
        return Err(param(format!("epsilon must be positive, got {epsilon}")));
    }
    if spreads.iter().any(|b| !(*b > 0.0) || !b.is_finite()) {
        return Err(param("spreads must be positive and finite"));
    }
    let n = spreads.len() as f64;
    let sum_sq: f64 = spreads.iter().map(|b| b * b).sum();
    Ok(2.0 * (-2.0 * n * n * epsilon * epsilon / sum_sq).exp())
}

/// Error level of stratified sampling with `m^d` cells on a Hölder ball.
pub fn strat_holder_epsilon(m: u64, d: usize, beta: f64, delta: f64) -> Result<GuaranteeSpec> {
    if m == 0 || d == 0 {
        return Err(param("m and d must be positive"));
    }
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(param(format!("beta must lie in (0, 1], got {beta}")));
    }
    check_delta(delta)?;
    let exponent = beta + d as f64 / 2.0;
    let epsilon = (m as f64).powf(-exponent) * (2.0 / delta).ln().sqrt() / std::f64::consts::SQRT_2;
    let n = (m as u128).pow(d as u32);
    let n = u64::try_from(n).map_err(|_| Error::Budget { requested: n, cap: u64::MAX })?;
    Ok(GuaranteeSpec { n, epsilon, delta, source: "stratified-holder" })
}

/// Error level of one-dimensional stratified sampling on a `W^1_p` ball,
/// with `q = min(p, 2)`.
pub fn strat_w1p_epsilon(n: u64, q: f64, delta: f64) -> Result<GuaranteeSpec> {
    if n == 0 {
        return Err(param("n must be positive"));
    }
    if !(q > 1.0 && q <= 2.0) {
        return Err(param(format!("q must lie in (1, 2], got {q}")));
    }
    check_delta(delta)?;
    let epsilon = (n as f64).powf(-(2.0 - 1.0 / q)) * (2.0 / delta).ln().sqrt() / std::f64::consts::SQRT_2;
    Ok(GuaranteeSpec { n, epsilon, delta, source: "stratified-w1p" })
}

/// Failure bounds for the median of `k` independent runs that each fail
/// with probability at most `alpha`. Returns `(tight, loose)`.
pub fn median_failure_bound(alpha: f64, k: u64) -> Result<(f64, f64)> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(param(format!("alpha must lie in (0, 1/2), got {alpha}")));
    }
    if k.is_multiple_of(2) {
        return Err(param(format!("k must be odd, got {k}")));
    }
    let half_k = k as f64 / 2.0;
    let tight = 0.5 * (4.0 * alpha * (1.0 - alpha)).powf(half_k);
    let loose = 2f64.powf(k as f64 - 1.0) * alpha.powf(half_k);
    Ok((tight, loose))
}

/// Complexity bound for the median-amplified method.
#[derive(Debug, Clone, PartialEq)]
pub struct MedianComplexity {
    /// `⌈2 log₂ δ⁻¹⌉ · n_mean(inner_epsilon)`.
    pub total: u128,
    /// `⌈2 log₂ δ⁻¹⌉`.
    pub factor: u64,
    /// Smallest odd integer `≥ 2 log₂ (2δ)⁻¹`.
    pub k: u64,
    /// `8^{-1/ℓ} ε`.
    pub inner_epsilon: f64,
    pub inner_cost: u64,
}

/// Ceiling that ignores float noise of relative size `1e-12`.
fn ceil_clean(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-12 * x.abs().max(1.0) {
        r
    } else {
        x.ceil()
    }
}

pub fn median_complexity_upper(
    delta: f64,
    epsilon: f64,
    ell: f64,
    n_mean: impl Fn(f64) -> u64,
) -> Result<MedianComplexity> {
    if !(delta > 0.0 && delta <= 0.5) {
        return Err(param(format!("delta must lie in (0, 1/2], got {delta}")));
    }
    if !(epsilon > 0.0) {
        return Err(param(format!("epsilon must be positive, got {epsilon}")));
    }
    if !(ell >= 1.0) {
        return Err(param(format!("ell must be at least 1, got {ell}")));
    }
    let factor = ceil_clean(2.0 * (1.0 / delta).log2()) as u64;
    let raw_k = ceil_clean(2.0 * (1.0 / (2.0 * delta)).log2()).max(1.0) as u64;
    let k = if raw_k.is_multiple_of(2) { raw_k + 1 } else { raw_k };
    let inner_epsilon = 8f64.powf(-1.0 / ell) * epsilon;
    let inner_cost = n_mean(inner_epsilon);
    Ok(MedianComplexity { total: factor as u128 * inner_cost as u128, factor, k, inner_epsilon, inner_cost })
}

/// Lower error envelope `γ min(√n √(log₄ 1/(3δ)), n)` for `n ≥ 17`,
/// `0 < δ < 1/3`.
pub fn lower_envelope_aux1(n: u64, delta: f64, gamma: f64) -> Result<f64> {
    if n < 17 || !(delta > 0.0 && delta < 1.0 / 3.0) {
        return Err(Error::Range(format!("need n >= 17 and 0 < delta < 1/3, got n = {n}, delta = {delta}")));
    }
    if !(gamma > 0.0) {
        return Err(param(format!("gamma must be positive, got {gamma}")));
    }
    let log4 = (1.0 / (3.0 * delta)).ln() / 4f64.ln();
    let nf = n as f64;
    Ok(gamma * (nf.sqrt() * log4.sqrt()).min(nf))
}

/// `(γM/2, ½·2^{-⌈M/2⌉})`: the error level reached and the largest δ for
/// which it applies.
pub fn lower_envelope_aux2(gamma: f64, m: u64) -> Result<(f64, f64)> {
    if !(gamma > 0.0) || m == 0 {
        return Err(param("need gamma > 0 and M >= 1"));
    }
    let ceiling = 0.5 * 2f64.powi(-(m.div_ceil(2) as i32));
    Ok((gamma * m as f64 / 2.0, ceiling))
}

/// Shape `n^{-r/d} min(1, (ln δ⁻¹ / n)^{1 - 1/q})`, `q = min(p, 2)`.
///
/// For `q = 1` the second factor is the constant 1 and is not evaluated.
pub fn rate_envelope(n: u64, delta: f64, r: u32, d: usize, p: f64) -> Result<f64> {
    if n < 2 || d == 0 {
        return Err(param("need n >= 2 and d >= 1"));
    }
    check_delta(delta)?;
    if !(p >= 1.0) {
        return Err(param(format!("p must be at least 1, got {p}")));
    }
    let q = p.min(2.0);
    let nf = n as f64;
    let deterministic = nf.powf(-(r as f64) / d as f64);
    let exponent = 1.0 - 1.0 / q;
    if exponent == 0.0 {
        return Ok(deterministic);
    }
    let ratio = (1.0 / delta).ln() / nf;
    Ok(deterministic * ratio.powf(exponent).min(1.0))
}
