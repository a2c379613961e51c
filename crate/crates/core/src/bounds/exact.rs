//! Exact dyadic probabilities and the binomial tail inequalities behind the
//! lower bounds.
//!
//! Left-hand sides are sums of binomial coefficients over `2^k`, computed
//! with big integers. Right-hand sides that involve `exp` or `sqrt` are
//! evaluated in `f64` and then rounded *up* by [`conservative_upper`], so a
//! reported `holds = true` is a sound certificate. The final comparison is
//! exact: every finite `f64` is a dyadic rational.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{param, Error, Result};

/// `numerator / 2^denominator_log2`, kept unreduced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactProb {
    numerator: BigUint,
    denominator_log2: u32,
}

impl ExactProb {
    pub fn new(numerator: BigUint, denominator_log2: u32) -> Result<Self> {
        if numerator > (BigUint::one() << denominator_log2) {
            return Err(param("probability numerator exceeds its denominator"));
        }
        Ok(Self { numerator, denominator_log2 })
    }

    pub fn numerator(&self) -> &BigUint {
        &self.numerator
    }

    pub fn denominator_log2(&self) -> u32 {
        self.denominator_log2
    }

    /// Nearest-ish `f64`; exact whenever the numerator fits in 53 bits.
    pub fn to_f64(&self) -> f64 {
        let bits = self.numerator.bits();
        let shift = bits.saturating_sub(64);
        let top = (&self.numerator >> shift).to_f64().unwrap_or(0.0);
        let exp = shift as i64 - self.denominator_log2 as i64;
        top * 2f64.powi(exp.clamp(i32::MIN as i64, i32::MAX as i64) as i32)
    }

    /// Exact comparison against a finite `f64`.
    pub fn cmp_f64(&self, x: f64) -> Ordering {
        assert!(x.is_finite(), "cannot compare against {x}");
        if x < 0.0 {
            return Ordering::Greater;
        }
        if x == 0.0 {
            return if self.numerator.is_zero() { Ordering::Equal } else { Ordering::Greater };
        }
        let (mantissa, exponent) = decompose(x);
        // numerator / 2^D  vs  mantissa * 2^exponent
        let shift = exponent + self.denominator_log2 as i64;
        if shift >= 0 {
            self.numerator.cmp(&(BigUint::from(mantissa) << shift as u64))
        } else {
            (&self.numerator << (-shift) as u64).cmp(&BigUint::from(mantissa))
        }
    }

    /// Exact comparison of two dyadic fractions.
    pub fn cmp_exact(&self, other: &ExactProb) -> Ordering {
        let d = self.denominator_log2.max(other.denominator_log2);
        let a = &self.numerator << (d - self.denominator_log2);
        let b = &other.numerator << (d - other.denominator_log2);
        a.cmp(&b)
    }
}

impl fmt::Display for ExactProb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numerator, BigUint::one() << self.denominator_log2)
    }
}

/// `x = mantissa * 2^exponent` for finite positive `x`.
fn decompose(x: f64) -> (u64, i64) {
    let bits = x.to_bits();
    let exp_bits = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    if exp_bits == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), exp_bits - 1075)
    }
}

/// Upward rounding of an `f64` computed from a handful of correctly or
/// faithfully rounded operations (`exp`, `sqrt`, `powf`, division).
///
/// Relative inflation of `1e-12` dominates any accumulated error of a few
/// dozen ulps.
pub fn conservative_upper(x: f64) -> f64 {
    if x <= 0.0 {
        return x;
    }
    let up = x * (1.0 + 1e-12);
    f64::from_bits(up.to_bits() + 1)
}

/// Row `k` of Pascal's triangle.
pub fn binomial_row(k: u64) -> Vec<BigUint> {
    let mut row = Vec::with_capacity(k as usize + 1);
    let mut c = BigUint::one();
    row.push(c.clone());
    for j in 0..k {
        c = c * BigUint::from(k - j) / BigUint::from(j + 1);
        row.push(c.clone());
    }
    row
}

/// Prefix sums `S[i] = Σ_{j<i} row[j]`, length `k + 2`.
fn prefix_sums(row: &[BigUint]) -> Vec<BigUint> {
    let mut out = Vec::with_capacity(row.len() + 1);
    let mut acc = BigUint::zero();
    out.push(acc.clone());
    for c in row {
        acc += c;
        out.push(acc.clone());
    }
    out
}

/// Σ_{j=lo}^{hi} C(k, j), empty when `lo > hi`.
fn range_sum(prefix: &[BigUint], lo: i64, hi: i64) -> BigUint {
    let k = prefix.len() as i64 - 2;
    let lo = lo.max(0);
    let hi = hi.min(k);
    if lo > hi {
        return BigUint::zero();
    }
    &prefix[hi as usize + 1] - &prefix[lo as usize]
}

/// Largest `t` covered by the first tail inequality for this `k`:
/// `⌊(k+3)/8⌋` for odd `k`, `⌊(k+6)/8⌋` for even `k`.
pub fn lemma_a1_max_t(k: u64) -> u64 {
    if k % 2 == 1 {
        (k + 3) / 8
    } else {
        (k + 6) / 8
    }
}

/// Constant `1 / (2 + 4/√π)` of the tail lower bound.
pub fn a1_constant() -> f64 {
    1.0 / (2.0 + 4.0 / std::f64::consts::PI.sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaA1Row {
    pub k: u64,
    pub t: u64,
    /// `2^{-k} Σ_{j=0}^{⌊k/2⌋−t} C(k, j)`.
    pub lhs: ExactProb,
    /// Upper-rounded right-hand side.
    pub rhs: f64,
    pub holds: bool,
    /// The mirrored upper tail `2^{-k} Σ_{j=⌈k/2⌉+t}^{k} C(k, j)` equals `lhs`.
    pub symmetric: bool,
}

fn lemma_a1_row(k: u64, t: u64, prefix: &[BigUint]) -> LemmaA1Row {
    let lower = range_sum(prefix, 0, (k / 2) as i64 - t as i64);
    let upper = range_sum(prefix, k.div_ceil(2) as i64 + t as i64, k as i64);
    let lhs = ExactProb { numerator: lower.clone(), denominator_log2: k as u32 };
    let shifted = if k % 2 == 1 { t as f64 } else { t as f64 - 0.5 };
    let rhs = conservative_upper(a1_constant() * (-16.0 * std::f64::consts::LN_2 * shifted * shifted / k as f64).exp());
    let holds = lhs.cmp_f64(rhs) != Ordering::Less;
    LemmaA1Row { k, t, lhs, rhs, holds, symmetric: lower == upper }
}

/// Binomial tail lower bound with exact left-hand side.
pub fn lemma_a1_check(k: u64, t: u64) -> Result<LemmaA1Row> {
    if k == 0 {
        return Err(param("k must be at least 1"));
    }
    if t > lemma_a1_max_t(k) {
        return Err(Error::Range(format!("t = {t} exceeds {} for k = {k}", lemma_a1_max_t(k))));
    }
    let prefix = prefix_sums(&binomial_row(k));
    Ok(lemma_a1_row(k, t, &prefix))
}

/// Every in-range `(k, t)` with `1 ≤ k ≤ k_max`.
pub fn lemma_a1_scan(k_max: u64) -> Vec<LemmaA1Row> {
    let mut rows = Vec::new();
    for k in 1..=k_max {
        let prefix = prefix_sums(&binomial_row(k));
        for t in 0..=lemma_a1_max_t(k) {
            rows.push(lemma_a1_row(k, t, &prefix));
        }
    }
    rows
}

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaA2Row {
    pub k: u64,
    pub k_prime: u64,
    /// Mass outside the central window of `k'` removed terms.
    pub lhs: ExactProb,
    pub holds: bool,
    pub equality: bool,
}

fn lemma_a2_row(k: u64, k_prime: u64, prefix: &[BigUint]) -> LemmaA2Row {
    let lo_hi = ((k - k_prime) / 2) as i64;
    let hi_lo = (k + k_prime + 1).div_ceil(2) as i64;
    let num = range_sum(prefix, 0, lo_hi) + range_sum(prefix, hi_lo, k as i64);
    // lhs >= 2^{-k'}  <=>  num >= 2^{k-k'}
    let threshold = BigUint::one() << (k - k_prime);
    let ord = num.cmp(&threshold);
    LemmaA2Row {
        k,
        k_prime,
        lhs: ExactProb { numerator: num, denominator_log2: k as u32 },
        holds: ord != Ordering::Less,
        equality: ord == Ordering::Equal,
    }
}

/// Two-sided tail outside a window of `k'` central terms, against `2^{-k'}`.
pub fn lemma_a2_check(k: u64, k_prime: u64) -> Result<LemmaA2Row> {
    if k < k_prime {
        return Err(Error::Precondition(format!("need k >= k', got k = {k}, k' = {k_prime}")));
    }
    let prefix = prefix_sums(&binomial_row(k));
    Ok(lemma_a2_row(k, k_prime, &prefix))
}

/// Every `0 ≤ k' ≤ k` with `1 ≤ k ≤ k_max`.
pub fn lemma_a2_scan(k_max: u64) -> Vec<LemmaA2Row> {
    let mut rows = Vec::new();
    for k in 1..=k_max {
        let prefix = prefix_sums(&binomial_row(k));
        for kp in 0..=k {
            rows.push(lemma_a2_row(k, kp, &prefix));
        }
    }
    rows
}

/// `inf_a P{|X_k − a| > e}` for `X_k` a sum of `k` Rademacher signs.
///
/// `X_k = 2j − k` with `j ~ Bin(k, 1/2)`; a window `[a − e, a + e]` captures
/// at most `⌊e⌋ + 1` consecutive values of `j`. Every window position is
/// tried and the best one removed.
pub fn bakhvalov_exact_uncertainty(k: u64, eps_over_gamma: f64) -> Result<ExactProb> {
    if k == 0 {
        return Err(param("k must be at least 1"));
    }
    if !(eps_over_gamma >= 0.0) || !eps_over_gamma.is_finite() {
        return Err(param(format!("eps/gamma must be finite and nonnegative, got {eps_over_gamma}")));
    }
    let width = (eps_over_gamma.floor() as u64).saturating_add(1).min(k + 1);
    let prefix = prefix_sums(&binomial_row(k));
    let best = (0..=(k + 1 - width))
        .map(|start| &prefix[(start + width) as usize] - &prefix[start as usize])
        .max()
        .unwrap_or_default();
    let total = BigUint::one() << k;
    Ok(ExactProb { numerator: total - best, denominator_log2: k as u32 })
}

/// Intermediate bound `exp(−4 ln2 (e+2)^2 / k) / (1 + 2/√π)`, stated for
/// `e ≤ (k − 6)/4`.
pub fn bakhvalov_intermediate_bound(k: u64, eps_over_gamma: f64) -> Result<f64> {
    if k < 6 || eps_over_gamma > (k as f64 - 6.0) / 4.0 || eps_over_gamma < 0.0 {
        return Err(Error::Range(format!("need 0 <= e <= (k-6)/4, got k = {k}, e = {eps_over_gamma}")));
    }
    let e2 = (eps_over_gamma + 2.0).powi(2);
    Ok((-4.0 * std::f64::consts::LN_2 * e2 / k as f64).exp() / (1.0 + 2.0 / std::f64::consts::PI.sqrt()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BakhvalovChainRow {
    pub n: u64,
    pub k: u64,
    pub eps_over_gamma: f64,
    pub exact: ExactProb,
    /// Upper-rounded `(1/3) 4^{−e²/n}`.
    pub envelope: f64,
    pub holds: bool,
}

/// Exact uncertainty at `k = 4n + 6` against `(1/3) 4^{−e²/n}`, strict.
pub fn bakhvalov_chain_check(n: u64, eps_over_gamma: f64) -> Result<BakhvalovChainRow> {
    if n < 17 {
        return Err(Error::Range(format!("need n >= 17, got {n}")));
    }
    if !(eps_over_gamma > 0.0 && eps_over_gamma <= n as f64) {
        return Err(Error::Range(format!("need 0 < e <= n, got {eps_over_gamma}")));
    }
    let k = 4 * n + 6;
    let exact = bakhvalov_exact_uncertainty(k, eps_over_gamma)?;
    let envelope = conservative_upper(4f64.powf(-eps_over_gamma * eps_over_gamma / n as f64) / 3.0);
    let holds = exact.cmp_f64(envelope) == Ordering::Greater;
    Ok(BakhvalovChainRow { n, k, eps_over_gamma, exact, envelope, holds })
}
