//! Randomized integration rules on `[0,1]^d`.
//!
//! All estimators are pure functions of `(configuration, integrand, seed)`.
//! Evaluation counts are reported exactly in [`Estimate::evals_used`].

use std::fmt;

use crate::error::{param, Error, Result};
use crate::rng::RandomSource;
use crate::testfn::Integrand;

/// Default cap on function evaluations per estimate.
pub const DEFAULT_EVAL_CAP: u64 = 100_000_000;
/// Largest dimension accepted by the control-variate tensor grid.
pub const MAX_CONTROL_VARIATE_DIM: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub evals_used: u64,
}

/// A randomized quadrature rule.
pub trait Estimator: Sync {
    fn estimate(&self, f: &dyn Integrand, src: &RandomSource) -> Result<Estimate>;

    /// Evaluations an estimate will use, when known in advance.
    fn planned_evals(&self, _d: usize) -> Option<u128> {
        None
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EstimatorKind {
    PlainMc { n: usize },
    Stratified { m: usize },
    Median { k: usize, inner: Box<EstimatorKind> },
    ControlVariate { m_grid: usize, n_mc: usize },
    Frolov1D { n: usize },
}

impl EstimatorKind {
    /// Checks counts and parity; does not need the integrand.
    pub fn validate(&self) -> Result<()> {
        match self {
            EstimatorKind::PlainMc { n } if *n == 0 => Err(param("n must be at least 1")),
            EstimatorKind::Stratified { m } if *m == 0 => Err(param("m must be at least 1")),
            EstimatorKind::Median { k, inner } => {
                check_odd(*k)?;
                inner.validate()
            }
            EstimatorKind::ControlVariate { m_grid, n_mc } if *m_grid == 0 || *n_mc == 0 => {
                Err(param("m_grid and n_mc must be at least 1"))
            }
            EstimatorKind::Frolov1D { n } if *n == 0 => Err(param("n must be at least 1")),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EstimatorKind::PlainMc { n } => write!(f, "plain(n={n})"),
            EstimatorKind::Stratified { m } => write!(f, "stratified(m={m})"),
            EstimatorKind::Median { k, inner } => write!(f, "median(k={k},{inner})"),
            EstimatorKind::ControlVariate { m_grid, n_mc } => write!(f, "cv(m_grid={m_grid},n_mc={n_mc})"),
            EstimatorKind::Frolov1D { n } => write!(f, "frolov(n={n})"),
        }
    }
}

impl Estimator for EstimatorKind {
    fn estimate(&self, f: &dyn Integrand, src: &RandomSource) -> Result<Estimate> {
        match self {
            EstimatorKind::PlainMc { n } => plain_mc(f, *n, src),
            EstimatorKind::Stratified { m } => stratified(f, *m, src),
            EstimatorKind::Median { k, inner } => median_amplify(inner.as_ref(), *k, f, src),
            EstimatorKind::ControlVariate { m_grid, n_mc } => control_variate(f, *m_grid, *n_mc, src),
            EstimatorKind::Frolov1D { n } => frolov_1d(f, *n, src),
        }
    }

    fn planned_evals(&self, d: usize) -> Option<u128> {
        match self {
            EstimatorKind::PlainMc { n } => Some(*n as u128),
            EstimatorKind::Stratified { m } => (*m as u128).checked_pow(d as u32),
            EstimatorKind::Median { k, inner } => inner.planned_evals(d).map(|e| e * *k as u128),
            EstimatorKind::ControlVariate { m_grid, n_mc } => {
                (*m_grid as u128 + 1).checked_pow(d as u32).map(|g| g + *n_mc as u128)
            }
            EstimatorKind::Frolov1D { .. } => None,
        }
    }
}

fn check_odd(k: usize) -> Result<()> {
    if k == 0 || k.is_multiple_of(2) {
        return Err(param(format!("k must be odd and at least 1, got {k}")));
    }
    Ok(())
}

fn check_budget(requested: u128, cap: u64) -> Result<()> {
    if requested > cap as u128 {
        return Err(Error::Budget { requested, cap });
    }
    Ok(())
}

/// `(1/n) Σ f(U_i)` with `U_i` i.i.d. uniform on the cube.
pub fn plain_mc<F: Integrand + ?Sized>(f: &F, n: usize, src: &RandomSource) -> Result<Estimate> {
    if n == 0 {
        return Err(param("n must be at least 1"));
    }
    check_budget(n as u128, DEFAULT_EVAL_CAP)?;
    let d = f.dim();
    let mut stream = src.stream();
    let mut x = vec![0.0; d];
    let mut sum = 0.0;
    for _ in 0..n {
        stream.fill(&mut x);
        sum += f.eval(&x);
    }
    Ok(Estimate { value: sum / n as f64, evals_used: n as u64 })
}

/// One uniform point in each half-open cell `∏_j [i_j/m, (i_j+1)/m)`,
/// averaged with equal weights. Uses `m^d` evaluations.
pub fn stratified<F: Integrand + ?Sized>(f: &F, m: usize, src: &RandomSource) -> Result<Estimate> {
    stratified_capped(f, m, src, DEFAULT_EVAL_CAP)
}

pub fn stratified_capped<F: Integrand + ?Sized>(f: &F, m: usize, src: &RandomSource, cap: u64) -> Result<Estimate> {
    if m == 0 {
        return Err(param("m must be at least 1"));
    }
    let d = f.dim();
    let cells = (m as u128).checked_pow(d as u32).unwrap_or(u128::MAX);
    check_budget(cells, cap)?;
    let cells = cells as u64;
    let mf = m as f64;
    let mut stream = src.stream();
    let mut idx = vec![0usize; d];
    let mut x = vec![0.0; d];
    let mut sum = 0.0;
    for _ in 0..cells {
        for j in 0..d {
            let u = stream.next_f64();
            // (i + u)/m can round up to (i+1)/m; keep the point in its cell.
            let t = (idx[j] as f64 + u) / mf;
            let upper = (idx[j] + 1) as f64 / mf;
            x[j] = if t < upper { t } else { prev_float(upper) };
        }
        sum += f.eval(&x);
        // Odometer over [m]^d, last axis fastest.
        for j in (0..d).rev() {
            idx[j] += 1;
            if idx[j] < m {
                break;
            }
            idx[j] = 0;
        }
    }
    Ok(Estimate { value: sum / cells as f64, evals_used: cells })
}

fn prev_float(x: f64) -> f64 {
    f64::from_bits(x.to_bits() - 1)
}

/// Median of an odd-length slice. Reorders the slice.
pub fn median_of(values: &mut [f64]) -> Result<f64> {
    check_odd(values.len())?;
    let mid = values.len() / 2;
    let (_, m, _) = values.select_nth_unstable_by(mid, |a, b| a.total_cmp(b));
    Ok(*m)
}

/// Median of `k` independent runs of `inner`; run `j` uses `src.child(j)`.
pub fn median_amplify<E: Estimator + ?Sized>(
    inner: &E,
    k: usize,
    f: &dyn Integrand,
    src: &RandomSource,
) -> Result<Estimate> {
    check_odd(k)?;
    if let Some(per_run) = inner.planned_evals(f.dim()) {
        check_budget(per_run.saturating_mul(k as u128), DEFAULT_EVAL_CAP)?;
    }
    let mut values = Vec::with_capacity(k);
    let mut evals = 0u64;
    for j in 0..k {
        let e = inner.estimate(f, &src.child(j as u64))?;
        values.push(e.value);
        evals += e.evals_used;
    }
    Ok(Estimate { value: median_of(&mut values)?, evals_used: evals })
}

/// [`median_amplify`] over an arbitrary inner estimator.
#[derive(Debug, Clone)]
pub struct MedianOf<E> {
    pub inner: E,
    pub k: usize,
}

impl<E: Estimator> MedianOf<E> {
    pub fn new(inner: E, k: usize) -> Result<Self> {
        check_odd(k)?;
        Ok(Self { inner, k })
    }
}

impl<E: Estimator> Estimator for MedianOf<E> {
    fn estimate(&self, f: &dyn Integrand, src: &RandomSource) -> Result<Estimate> {
        median_amplify(&self.inner, self.k, f, src)
    }

    fn planned_evals(&self, d: usize) -> Option<u128> {
        self.inner.planned_evals(d).map(|e| e * self.k as u128)
    }
}

/// Node values of `f` on the `(m+1)^d` tensor grid `{0, 1/m, ..., 1}^d`
/// and the exactly integrated d-linear interpolant through them.
#[derive(Debug, Clone)]
pub struct TensorInterpolant {
    m: usize,
    d: usize,
    values: Vec<f64>,
}

impl TensorInterpolant {
    pub fn fit<F: Integrand + ?Sized>(f: &F, m: usize) -> Result<Self> {
        let d = f.dim();
        if m == 0 {
            return Err(param("m_grid must be at least 1"));
        }
        if d > MAX_CONTROL_VARIATE_DIM {
            let requested = (m as u128 + 1).checked_pow(d as u32).unwrap_or(u128::MAX);
            return Err(Error::Budget { requested, cap: DEFAULT_EVAL_CAP });
        }
        let nodes = m + 1;
        let total = nodes.pow(d as u32);
        let mut values = Vec::with_capacity(total);
        let mut x = vec![0.0; d];
        for flat in 0..total {
            let mut rem = flat;
            for j in (0..d).rev() {
                x[j] = (rem % nodes) as f64 / m as f64;
                rem /= nodes;
            }
            values.push(f.eval(&x));
        }
        Ok(Self { m, d, values })
    }

    pub fn nodes(&self) -> usize {
        self.values.len()
    }

    /// Tensor trapezoidal rule, exact for the d-linear interpolant.
    pub fn integral(&self) -> f64 {
        let nodes = self.m + 1;
        let h = 1.0 / self.m as f64;
        let mut sum = 0.0;
        for (flat, v) in self.values.iter().enumerate() {
            let mut rem = flat;
            let mut w = 1.0;
            for _ in 0..self.d {
                let i = rem % nodes;
                rem /= nodes;
                w *= if i == 0 || i == self.m { 0.5 * h } else { h };
            }
            sum += w * v;
        }
        sum
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let nodes = self.m + 1;
        let mf = self.m as f64;
        let mut base = 0usize;
        let mut frac = [0.0f64; MAX_CONTROL_VARIATE_DIM];
        for (j, &t) in x.iter().enumerate() {
            let s = (t.clamp(0.0, 1.0)) * mf;
            let c = (s.floor() as usize).min(self.m - 1);
            frac[j] = s - c as f64;
            base = base * nodes + c;
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << self.d) {
            let mut w = 1.0;
            let mut offset = 0usize;
            for (j, &fj) in frac.iter().enumerate().take(self.d) {
                let bit = (corner >> (self.d - 1 - j)) & 1;
                w *= if bit == 1 { fj } else { 1.0 - fj };
                offset = offset * nodes + bit;
            }
            if w != 0.0 {
                acc += w * self.values[base + offset];
            }
        }
        acc
    }
}

/// Separation of the main part: integrate the d-linear interpolant `g` on the
/// `(m_grid+1)^d` grid exactly and add plain Monte Carlo on `f − g`.
pub fn control_variate<F: Integrand + ?Sized>(
    f: &F,
    m_grid: usize,
    n_mc: usize,
    src: &RandomSource,
) -> Result<Estimate> {
    if m_grid == 0 || n_mc == 0 {
        return Err(param("m_grid and n_mc must be at least 1"));
    }
    let d = f.dim();
    let grid = (m_grid as u128 + 1).checked_pow(d as u32).unwrap_or(u128::MAX);
    if d > MAX_CONTROL_VARIATE_DIM {
        return Err(Error::Budget { requested: grid, cap: DEFAULT_EVAL_CAP });
    }
    check_budget(grid + n_mc as u128, DEFAULT_EVAL_CAP)?;
    let g = TensorInterpolant::fit(f, m_grid)?;
    let mut stream = src.stream();
    let mut x = vec![0.0; d];
    let mut residual = 0.0;
    for _ in 0..n_mc {
        stream.fill(&mut x);
        residual += f.eval(&x) - g.eval(&x);
    }
    Ok(Estimate { value: g.integral() + residual / n_mc as f64, evals_used: g.nodes() as u64 + n_mc as u64 })
}

/// Randomly dilated and shifted one-dimensional Frolov rule:
/// `u ~ U[1/2, 3/2]`, `v ~ U[0, 1)`, then [`frolov_1d_at`].
pub fn frolov_1d<F: Integrand + ?Sized>(f: &F, n: usize, src: &RandomSource) -> Result<Estimate> {
    let mut stream = src.stream();
    let u = stream.uniform(0.5, 1.5);
    let v = stream.next_f64();
    frolov_1d_at(f, n, u, v)
}

/// `(1/(un)) Σ_m f((m+v)/(un))` over the integers `m` whose node lies in
/// `[0, 1]`, both endpoints included.
pub fn frolov_1d_at<F: Integrand + ?Sized>(f: &F, n: usize, u: f64, v: f64) -> Result<Estimate> {
    if f.dim() != 1 {
        return Err(Error::UnsupportedDimension(f.dim()));
    }
    if n == 0 {
        return Err(param("n must be at least 1"));
    }
    if !(u > 0.0) || !(0.0..=1.0).contains(&v) {
        return Err(param(format!("dilation must be positive and shift in [0,1], got u={u}, v={v}")));
    }
    let scale = u * n as f64;
    let mut sum = 0.0;
    let mut evals = 0u64;
    let mut m = 0u64;
    loop {
        let x = (m as f64 + v) / scale;
        if x > 1.0 {
            break;
        }
        sum += f.eval(&[x]);
        evals += 1;
        m += 1;
    }
    Ok(Estimate { value: sum / scale, evals_used: evals })
}

/// Synthetic estimator that is exact except, independently with probability
/// `alpha`, off by `offset` (always on the same side).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FailureInjector {
    pub alpha: f64,
    pub offset: f64,
}

impl FailureInjector {
    pub fn new(alpha: f64, offset: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(param(format!("failure probability must lie in [0,1], got {alpha}")));
        }
        Ok(Self { alpha, offset })
    }
}

impl Estimator for FailureInjector {
    fn estimate(&self, f: &dyn Integrand, src: &RandomSource) -> Result<Estimate> {
        let fails = src.stream().next_f64() < self.alpha;
        let value = f.exact_integral() + if fails { self.offset } else { 0.0 };
        Ok(Estimate { value, evals_used: 0 })
    }

    fn planned_evals(&self, _d: usize) -> Option<u128> {
        Some(0)
    }
}

/// Inner estimator with forced outputs: called with `parent.child(j)` it
/// returns `values[j]`.
#[derive(Debug, Clone)]
pub struct ScriptedEstimator {
    parent: RandomSource,
    values: Vec<f64>,
}

impl ScriptedEstimator {
    pub fn new(parent: RandomSource, values: Vec<f64>) -> Self {
        Self { parent, values }
    }
}

impl Estimator for ScriptedEstimator {
    fn estimate(&self, _f: &dyn Integrand, src: &RandomSource) -> Result<Estimate> {
        (0..self.values.len())
            .find(|&j| self.parent.child(j as u64) == *src)
            .map(|j| Estimate { value: self.values[j], evals_used: 1 })
            .ok_or_else(|| param("scripted estimator called with an unexpected seed"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testfn::{make_frolov_counterexample, make_holder_bump, make_sobolev_poly_bump, Counting, TestFunction};

    fn src(seed: u64) -> RandomSource {
        RandomSource::new(seed)
    }

    #[test]
    fn plain_mc_constant() {
        let f = TestFunction::constant(3, 0.7).unwrap();
        for n in [1, 5, 100] {
            let e = plain_mc(&f, n, &src(1)).unwrap();
            assert!((e.value - 0.7).abs() < 1e-14);
            assert_eq!(e.evals_used, n as u64);
        }
    }

    #[test]
    fn plain_mc_replays_generator() {
        let f = TestFunction::coordinate_mean(1).unwrap();
        let e = plain_mc(&f, 4, &src(7)).unwrap();
        let mut s = src(7).stream();
        let mean = (0..4).map(|_| s.next_f64()).sum::<f64>() / 4.0;
        assert_eq!(e.value, mean);
    }

    #[test]
    fn plain_mc_rejects_zero() {
        let f = TestFunction::constant(1, 1.0).unwrap();
        assert!(matches!(plain_mc(&f, 0, &src(0)), Err(Error::Parameter(_))));
    }

    #[test]
    fn stratified_constant_exact() {
        let f = TestFunction::constant(2, -1.25).unwrap();
        for m in [1, 3, 10] {
            let e = stratified(&f, m, &src(3)).unwrap();
            assert!((e.value + 1.25).abs() < 1e-14);
            assert_eq!(e.evals_used, (m * m) as u64);
        }
    }

    #[test]
    fn stratified_single_cell_is_plain_mc() {
        let f = make_holder_bump(0.5, 3).unwrap();
        for seed in 0..20 {
            assert_eq!(stratified(&f, 1, &src(seed)).unwrap(), plain_mc(&f, 1, &src(seed)).unwrap());
        }
    }

    #[test]
    fn stratified_holder_deterministic_cap() {
        let f = make_holder_bump(1.0, 1).unwrap();
        for seed in 0..10_000 {
            let e = stratified(&f, 256, &src(seed)).unwrap();
            assert!((e.value - f.exact_integral()).abs() <= 1.0 / 256.0);
        }
    }

    #[test]
    fn stratified_budget_guard() {
        let f = TestFunction::constant(3, 1.0).unwrap();
        let err = stratified_capped(&f, 100, &src(0), 999_999).unwrap_err();
        assert!(matches!(err, Error::Budget { requested: 1_000_000, .. }));
        assert!(matches!(stratified(&f, 1000, &src(0)), Err(Error::Budget { .. })));
    }

    #[test]
    fn stratified_points_stay_in_cells() {
        struct CellCheck {
            m: usize,
            seen: std::sync::Mutex<Vec<usize>>,
        }
        impl Integrand for CellCheck {
            fn dim(&self) -> usize {
                2
            }
            fn eval(&self, x: &[f64]) -> f64 {
                let i = (x[0] * self.m as f64).floor() as usize;
                let j = (x[1] * self.m as f64).floor() as usize;
                self.seen.lock().unwrap().push(i * self.m + j);
                0.0
            }
            fn exact_integral(&self) -> f64 {
                0.0
            }
        }
        let c = CellCheck { m: 7, seen: Default::default() };
        stratified(&c, 7, &src(11)).unwrap();
        assert_eq!(*c.seen.lock().unwrap(), (0..49).collect::<Vec<_>>());
    }

    #[test]
    fn median_of_three() {
        let mut v = [0.1, 0.9, 0.4];
        assert_eq!(median_of(&mut v).unwrap(), 0.4);
        assert!(median_of(&mut [1.0, 2.0]).is_err());
    }

    #[test]
    fn median_forced_inner_values() {
        let f = TestFunction::constant(1, 0.0).unwrap();
        let root = src(5);
        let inner = ScriptedEstimator::new(root, vec![0.1, 0.9, 0.4]);
        let e = median_amplify(&inner, 3, &f, &root).unwrap();
        assert_eq!(e.value, 0.4);
        assert_eq!(e.evals_used, 3);
    }

    #[test]
    fn median_k_one_is_single_inner_run() {
        let f = make_holder_bump(1.0, 2).unwrap();
        let inner = EstimatorKind::Stratified { m: 4 };
        let root = src(9);
        let med = median_amplify(&inner, 1, &f, &root).unwrap();
        assert_eq!(med, inner.estimate(&f, &root.child(0)).unwrap());
    }

    #[test]
    fn median_rejects_even_k() {
        let f = TestFunction::constant(1, 0.0).unwrap();
        let inner = EstimatorKind::PlainMc { n: 1 };
        assert!(matches!(median_amplify(&inner, 2, &f, &src(0)), Err(Error::Parameter(_))));
        assert!(EstimatorKind::Median { k: 4, inner: Box::new(inner) }.validate().is_err());
    }

    #[test]
    fn median_counts_evals() {
        let f = make_holder_bump(1.0, 1).unwrap();
        let kind = EstimatorKind::Median { k: 5, inner: Box::new(EstimatorKind::PlainMc { n: 7 }) };
        let counted = Counting::new(&f);
        let e = kind.estimate(&counted, &src(2)).unwrap();
        assert_eq!(e.evals_used, 35);
        assert_eq!(counted.calls(), 35);
    }

    #[test]
    fn median_fails_only_with_majority() {
        // Composed failure implies at least ceil(k/2) inner failures.
        let f = TestFunction::constant(1, 0.0).unwrap();
        let inj = FailureInjector::new(0.3, 1.0).unwrap();
        for k in [1usize, 3, 5, 7] {
            for t in 0..2000u64 {
                let root = src(t);
                let fails =
                    (0..k).filter(|&j| inj.estimate(&f, &root.child(j as u64)).unwrap().value.abs() > 0.5).count();
                let composed = median_amplify(&inj, k, &f, &root).unwrap().value.abs() > 0.5;
                assert_eq!(composed, fails >= k.div_ceil(2));
            }
        }
    }

    #[test]
    fn control_variate_constant_and_affine_exact() {
        let c = TestFunction::constant(2, 3.5).unwrap();
        let e = control_variate(&c, 4, 10, &src(0)).unwrap();
        assert!((e.value - 3.5).abs() < 1e-14);
        assert_eq!(e.evals_used, 25 + 10);
        let lin = TestFunction::coordinate_mean(1).unwrap();
        for seed in 0..20 {
            let e = control_variate(&lin, 3, 5, &src(seed)).unwrap();
            assert!((e.value - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn control_variate_dimension_guard() {
        let f = TestFunction::constant(4, 1.0).unwrap();
        assert!(matches!(control_variate(&f, 2, 2, &src(0)), Err(Error::Budget { .. })));
    }

    #[test]
    fn interpolant_reproduces_multilinear() {
        // x*y*(1+z) is trilinear, so the interpolant is exact everywhere.
        struct Tri;
        impl Integrand for Tri {
            fn dim(&self) -> usize {
                3
            }
            fn eval(&self, x: &[f64]) -> f64 {
                x[0] * x[1] * (1.0 + x[2])
            }
            fn exact_integral(&self) -> f64 {
                0.25 * 1.5
            }
        }
        let g = TensorInterpolant::fit(&Tri, 3).unwrap();
        assert!((g.integral() - 0.375).abs() < 1e-14);
        let mut s = src(1).stream();
        for _ in 0..100 {
            let x = [s.next_f64(), s.next_f64(), s.next_f64()];
            assert!((g.eval(&x) - Tri.eval(&x)).abs() < 1e-14);
        }
    }

    #[test]
    fn interpolation_error_is_second_order() {
        // Linear interpolation error is at most h^2/8 · sup|f''|; f'' by central differences.
        let f = make_sobolev_poly_bump(2, 2.0, 1).unwrap();
        let h = 1e-4;
        let second = (1..10_000)
            .map(|i| {
                let x = i as f64 / 10_000.0;
                ((f.eval(&[x + h]) - 2.0 * f.eval(&[x]) + f.eval(&[x - h])) / (h * h)).abs()
            })
            .fold(0.0, f64::max);
        let sup_residual = |m: usize| {
            let g = TensorInterpolant::fit(&f, m).unwrap();
            (0..100_000)
                .map(|i| {
                    let x = [i as f64 / 99_999.0];
                    (f.eval(&x) - g.eval(&x)).abs()
                })
                .fold(0.0, f64::max)
        };
        for m in [8usize, 16, 32, 64] {
            let bound = second / (8.0 * (m * m) as f64);
            let r = sup_residual(m);
            assert!(r <= bound * 1.001, "m={m}");
            assert!(r > 0.5 * bound, "m={m}");
        }
    }

    #[test]
    fn frolov_forced_hat() {
        let f = make_holder_bump(1.0, 1).unwrap();
        let e = frolov_1d_at(&f, 2, 1.0, 0.5).unwrap();
        assert_eq!(e.evals_used, 2);
        assert!((e.value - 0.25).abs() < 1e-15);
    }

    #[test]
    fn frolov_forced_counterexample_zero() {
        let f = make_frolov_counterexample(4, 1).unwrap();
        let counted = Counting::new(&f);
        let e = frolov_1d_at(&counted, 4, 1.0, 0.6).unwrap();
        assert_eq!(e.value, 0.0);
        assert_eq!(e.evals_used, 4);
        assert_eq!(counted.calls(), 4);
    }

    #[test]
    fn frolov_shift_average_is_integral() {
        let f = make_sobolev_poly_bump(2, 2.0, 1).unwrap();
        for u in [0.5, 0.77, 1.0, 1.31, 1.5] {
            for n in [1usize, 3, 10] {
                let q = 10_000;
                let avg =
                    (0..q).map(|i| frolov_1d_at(&f, n, u, (i as f64 + 0.5) / q as f64).unwrap().value).sum::<f64>()
                        / q as f64;
                assert!((avg - f.exact_integral()).abs() < 1e-6, "u={u} n={n}: {avg}");
            }
        }
    }

    #[test]
    fn frolov_eval_count_near_n() {
        let f = make_holder_bump(1.0, 1).unwrap();
        for seed in 0..500 {
            let mut s = src(seed).stream();
            let u = s.uniform(0.5, 1.5);
            let v = s.next_f64();
            let e = frolov_1d_at(&f, 10, u, v).unwrap();
            let un = (u * 10.0).ceil() as i64;
            assert!((e.evals_used as i64 - un).abs() <= 1);
            assert_eq!(frolov_1d(&f, 10, &src(seed)).unwrap(), e);
        }
    }

    #[test]
    fn frolov_rejects_multi_d() {
        let f = make_holder_bump(1.0, 2).unwrap();
        assert_eq!(frolov_1d(&f, 4, &src(0)).unwrap_err(), Error::UnsupportedDimension(2));
    }

    #[test]
    fn evals_match_instrumented_counter() {
        let f = make_holder_bump(1.0, 2).unwrap();
        let kinds = [
            EstimatorKind::PlainMc { n: 13 },
            EstimatorKind::Stratified { m: 6 },
            EstimatorKind::ControlVariate { m_grid: 4, n_mc: 9 },
            EstimatorKind::Median { k: 3, inner: Box::new(EstimatorKind::Stratified { m: 3 }) },
        ];
        for kind in &kinds {
            let c = Counting::new(&f);
            let e = kind.estimate(&c, &src(4)).unwrap();
            assert_eq!(e.evals_used, c.calls(), "{kind}");
            assert_eq!(Some(e.evals_used as u128), kind.planned_evals(2));
        }
        let g = make_frolov_counterexample(5, 1).unwrap();
        for seed in 0..50 {
            let c = Counting::new(&g);
            let e = frolov_1d(&c, 5, &src(seed)).unwrap();
            assert_eq!(e.evals_used, c.calls());
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let f = make_holder_bump(0.5, 2).unwrap();
        let kind =
            EstimatorKind::Median { k: 5, inner: Box::new(EstimatorKind::ControlVariate { m_grid: 3, n_mc: 4 }) };
        let a = kind.estimate(&f, &src(77)).unwrap();
        let b = kind.estimate(&f, &src(77)).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
    }
}
