//! Integrands with known integrals and certified (semi)norm bounds.
//!
//! Every factory output carries its exact integral, the smoothness class it
//! is meant to be a unit-ball member of, and an upper bound on the class
//! (semi)norm. Estimator errors are measured against the exact integral.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::error::{param, Error, Result};

/// Points per axis used when certifying Sobolev norms of the polynomial bump.
pub const NORM_GRID: usize = 4096;
/// Inflation applied to grid-estimated norms before they are declared bounds.
pub const NORM_INFLATION: f64 = 1.1;
/// Largest dense cell table a fooling sum may allocate.
pub const MAX_FOOLING_CELLS: usize = 1 << 24;

/// Anything the estimators can integrate over `[0,1]^d`.
pub trait Integrand: Sync {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[f64]) -> f64;
    fn exact_integral(&self) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SmoothnessKind {
    Holder { beta: f64 },
    SobolevIso { r: u32, p: f64 },
    Lp { p: f64 },
}

/// Function class on `[0,1]^d`; `p = f64::INFINITY` is the sup-norm case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothnessClass {
    kind: SmoothnessKind,
    dim: usize,
}

fn check_p(p: f64) -> Result<()> {
    if p.is_nan() || p < 1.0 {
        return Err(param(format!("integrability p must lie in [1, inf], got {p}")));
    }
    Ok(())
}

fn check_dim(d: usize) -> Result<()> {
    if d == 0 {
        return Err(param("dimension must be at least 1"));
    }
    Ok(())
}

impl SmoothnessClass {
    pub fn holder(beta: f64, d: usize) -> Result<Self> {
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(param(format!("Hölder exponent must lie in (0, 1], got {beta}")));
        }
        check_dim(d)?;
        Ok(Self { kind: SmoothnessKind::Holder { beta }, dim: d })
    }

    pub fn sobolev(r: u32, p: f64, d: usize) -> Result<Self> {
        if r == 0 {
            return Err(param("Sobolev smoothness r must be at least 1"));
        }
        check_p(p)?;
        check_dim(d)?;
        Ok(Self { kind: SmoothnessKind::SobolevIso { r, p }, dim: d })
    }

    pub fn lp(p: f64, d: usize) -> Result<Self> {
        check_p(p)?;
        check_dim(d)?;
        Ok(Self { kind: SmoothnessKind::Lp { p }, dim: d })
    }

    pub fn kind(&self) -> SmoothnessKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Integrability index; Hölder classes are sup-norm classes.
    pub fn p(&self) -> f64 {
        match self.kind {
            SmoothnessKind::Holder { .. } => f64::INFINITY,
            SmoothnessKind::SobolevIso { p, .. } | SmoothnessKind::Lp { p } => p,
        }
    }

    /// `q = min{p, 2}`.
    pub fn q(&self) -> f64 {
        self.p().min(2.0)
    }
}

#[derive(Debug, Clone)]
enum Shape {
    Constant(f64),
    CoordinateMean,
    HolderHat { beta: f64, coef: f64 },
    PolyBump { r: u32, coef: f64 },
    Fooling { bump: Arc<TestFunction>, m: usize, signs: Arc<Vec<i8>>, scale: f64 },
    FrolovCounterexample { bump: Arc<TestFunction>, n: usize, amplitude: f64 },
}

/// An integrand on `[0,1]^d` with exact integral and certified norm bound.
///
/// Immutable after construction; evaluation has no side effects.
#[derive(Debug, Clone)]
pub struct TestFunction {
    dim: usize,
    shape: Shape,
    exact_integral: f64,
    class: SmoothnessClass,
    norm_bound: f64,
    support_note: String,
    per_bump_integral: Option<f64>,
}

fn inside_unit_cube(x: &[f64]) -> bool {
    x.iter().all(|&t| (0.0..=1.0).contains(&t))
}

impl TestFunction {
    /// `f ≡ c` on the cube.
    pub fn constant(d: usize, c: f64) -> Result<Self> {
        check_dim(d)?;
        Ok(Self {
            dim: d,
            shape: Shape::Constant(c),
            exact_integral: c,
            class: SmoothnessClass::holder(1.0, d)?,
            norm_bound: 0.0,
            support_note: "whole cube".into(),
            per_bump_integral: None,
        })
    }

    /// `f(x) = (x_1 + ... + x_d) / d`, the identity for `d = 1`.
    pub fn coordinate_mean(d: usize) -> Result<Self> {
        check_dim(d)?;
        Ok(Self {
            dim: d,
            shape: Shape::CoordinateMean,
            exact_integral: 0.5,
            class: SmoothnessClass::holder(1.0, d)?,
            norm_bound: 1.0,
            support_note: "whole cube".into(),
            per_bump_integral: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn exact_integral(&self) -> f64 {
        self.exact_integral
    }

    pub fn class(&self) -> SmoothnessClass {
        self.class
    }

    pub fn norm_bound(&self) -> f64 {
        self.norm_bound
    }

    pub fn support_note(&self) -> &str {
        &self.support_note
    }

    /// Integral of a single scaled bump of a fooling sum.
    pub fn per_bump_integral(&self) -> Option<f64> {
        self.per_bump_integral
    }

    /// Normalization constant of a bump.
    pub fn coefficient(&self) -> Option<f64> {
        match self.shape {
            Shape::HolderHat { coef, .. } | Shape::PolyBump { coef, .. } => Some(coef),
            _ => None,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        match &self.shape {
            Shape::Constant(c) => {
                if inside_unit_cube(x) {
                    *c
                } else {
                    0.0
                }
            }
            Shape::CoordinateMean => {
                if inside_unit_cube(x) {
                    x.iter().sum::<f64>() / self.dim as f64
                } else {
                    0.0
                }
            }
            Shape::HolderHat { beta, coef } => {
                if !inside_unit_cube(x) {
                    return 0.0;
                }
                coef * x.iter().map(|&t| t.min(1.0 - t).powf(*beta)).product::<f64>()
            }
            Shape::PolyBump { r, coef } => {
                if !inside_unit_cube(x) {
                    return 0.0;
                }
                coef * x.iter().map(|&t| (t * (1.0 - t)).powi(*r as i32)).product::<f64>()
            }
            Shape::Fooling { bump, m, signs, scale } => eval_fooling(bump, *m, signs, *scale, x),
            Shape::FrolovCounterexample { bump, n, amplitude } => {
                let t = x[0];
                if !(0.0..=1.0).contains(&t) {
                    return 0.0;
                }
                let s = 2.0 * *n as f64 * t;
                let k = (s / 2.0).floor();
                if k >= *n as f64 {
                    return 0.0;
                }
                let local = s - 2.0 * k;
                if local >= 1.0 {
                    0.0
                } else {
                    amplitude * bump.eval(&[local])
                }
            }
        }
    }
}

fn eval_fooling(bump: &TestFunction, m: usize, signs: &[i8], scale: f64, x: &[f64]) -> f64 {
    // Half-open cells [i/m, (i+1)/m); points with a coordinate outside
    // [0,1) belong to no cell.
    let mf = m as f64;
    let mut flat = 0usize;
    let mut local = [0.0f64; 8];
    let mut local_vec;
    let local: &mut [f64] = if x.len() <= 8 {
        &mut local[..x.len()]
    } else {
        local_vec = vec![0.0; x.len()];
        &mut local_vec
    };
    for (j, &t) in x.iter().enumerate() {
        if !(0.0..1.0).contains(&t) {
            return 0.0;
        }
        let i = ((t * mf).floor() as usize).min(m - 1);
        flat = flat * m + i;
        local[j] = t * mf - i as f64;
    }
    match signs[flat] {
        0 => 0.0,
        s => s as f64 * scale * bump.eval(local),
    }
}

impl Integrand for TestFunction {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64]) -> f64 {
        TestFunction::eval(self, x)
    }

    fn exact_integral(&self) -> f64 {
        self.exact_integral
    }
}

/// Wraps an integrand and counts calls to `eval`.
pub struct Counting<'a, F: ?Sized> {
    inner: &'a F,
    calls: AtomicU64,
}

impl<'a, F: Integrand + ?Sized> Counting<'a, F> {
    pub fn new(inner: &'a F) -> Self {
        Self { inner, calls: AtomicU64::new(0) }
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }
}

impl<F: Integrand + ?Sized> Integrand for Counting<'_, F> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn eval(&self, x: &[f64]) -> f64 {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.inner.eval(x)
    }

    fn exact_integral(&self) -> f64 {
        self.inner.exact_integral()
    }
}

/// `f(x) = c ∏_j min(x_j, 1 − x_j)^β` with `c = 2^{β(d−1)} / d`.
///
/// `min(t, 1 − t)^β` is β-Hölder with constant 1 and bounded by `2^{−β}`,
/// so the product has seminorm at most `d · 2^{−β(d−1)}` in the sup-norm
/// metric; `c` rescales that to 1.
pub fn make_holder_bump(beta: f64, d: usize) -> Result<TestFunction> {
    let class = SmoothnessClass::holder(beta, d)?;
    let coef = 2f64.powf(beta * (d as f64 - 1.0)) / d as f64;
    let one_axis = 0.5f64.powf(beta) / (beta + 1.0);
    Ok(TestFunction {
        dim: d,
        shape: Shape::HolderHat { beta, coef },
        exact_integral: coef * one_axis.powi(d as i32),
        class,
        norm_bound: 1.0,
        support_note: "unit cube, vanishing on the boundary".into(),
        per_bump_integral: None,
    })
}

/// Coefficients (ascending powers) of `(x(1 − x))^r`.
pub(crate) fn poly_bump_coeffs(r: u32) -> Vec<f64> {
    let r = r as usize;
    let mut coeffs = vec![0.0; 2 * r + 1];
    let mut binom = 1.0f64;
    for k in 0..=r {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        coeffs[r + k] = sign * binom;
        binom = binom * (r - k) as f64 / (k + 1) as f64;
    }
    coeffs
}

fn derive(coeffs: &[f64]) -> Vec<f64> {
    if coeffs.len() <= 1 {
        return vec![0.0];
    }
    coeffs.iter().enumerate().skip(1).map(|(i, c)| c * i as f64).collect()
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// Per-order one-dimensional norms of `(x(1−x))^r` and its derivatives:
/// `sup |P^{(a)}|` on the grid for `p = ∞`, `∫|P^{(a)}|^p` by the midpoint
/// rule otherwise.
fn axis_norm_table(r: u32, p: f64) -> Vec<f64> {
    let mut poly = poly_bump_coeffs(r);
    let mut table = Vec::with_capacity(r as usize + 1);
    for _ in 0..=r {
        let value = if p.is_infinite() {
            (0..NORM_GRID).map(|j| horner(&poly, j as f64 / (NORM_GRID - 1) as f64).abs()).fold(0.0, f64::max)
        } else {
            let h = 1.0 / NORM_GRID as f64;
            (0..NORM_GRID).map(|j| horner(&poly, (j as f64 + 0.5) * h).abs().powf(p)).sum::<f64>() * h
        };
        table.push(value);
        poly = derive(&poly);
    }
    table
}

/// Visits every multi-index `α ∈ N_0^d` with `|α|_1 ≤ r`.
fn for_each_multi_index(d: usize, r: u32, mut visit: impl FnMut(&[u32])) {
    let mut alpha = vec![0u32; d];
    loop {
        if alpha.iter().sum::<u32>() <= r {
            visit(&alpha);
        }
        let mut j = 0;
        loop {
            if j == d {
                return;
            }
            alpha[j] += 1;
            if alpha[j] <= r {
                break;
            }
            alpha[j] = 0;
            j += 1;
        }
    }
}

/// Grid estimate of `‖∏_j (x_j(1−x_j))^r‖_{W_p^r([0,1]^d)}`.
pub fn poly_bump_grid_norm(r: u32, p: f64, d: usize) -> f64 {
    let table = axis_norm_table(r, p);
    if p.is_infinite() {
        let mut best = 0.0f64;
        for_each_multi_index(d, r, |alpha| {
            best = best.max(alpha.iter().map(|&a| table[a as usize]).product());
        });
        best
    } else {
        let mut total = 0.0;
        for_each_multi_index(d, r, |alpha| {
            total += alpha.iter().map(|&a| table[a as usize]).product::<f64>();
        });
        total.powf(1.0 / p)
    }
}

/// `B(r+1, r+1) = (r!)^2 / (2r+1)!`.
pub(crate) fn beta_integral(r: u32) -> f64 {
    (1..=r).fold(1.0, |acc, i| acc * i as f64 / (r + i) as f64) / (2 * r + 1) as f64
}

/// `φ(x) = c ∏_j (x_j(1−x_j))^r`, normalized so its certified
/// `W_p^r([0,1]^d)` norm bound is 1.
pub fn make_sobolev_poly_bump(r: u32, p: f64, d: usize) -> Result<TestFunction> {
    let class = SmoothnessClass::sobolev(r, p, d)?;
    let certified = NORM_INFLATION * poly_bump_grid_norm(r, p, d);
    let coef = 1.0 / certified;
    Ok(TestFunction {
        dim: d,
        shape: Shape::PolyBump { r, coef },
        exact_integral: coef * beta_integral(r).powi(d as i32),
        class,
        norm_bound: coef * certified,
        support_note: "unit cube, vanishing to order r on the boundary".into(),
        per_bump_integral: None,
    })
}

/// Cells and signs of a fooling sum.
#[derive(Debug, Clone, PartialEq)]
pub struct FoolingSpec {
    pub m: usize,
    pub signs: BTreeMap<Vec<usize>, i8>,
    pub scale: f64,
}

impl FoolingSpec {
    /// Uses the per-bump multiplier prescribed for `class`.
    pub fn for_class(class: &SmoothnessClass, m: usize, signs: BTreeMap<Vec<usize>, i8>) -> Result<Self> {
        let scale = fooling_scale(class, m, signs.len())?;
        Ok(Self { m, signs, scale })
    }

    /// First `cells` cells in lexicographic order, with signs from `sign_of(flat_index)`.
    pub fn leading_cells(
        class: &SmoothnessClass,
        m: usize,
        cells: usize,
        sign_of: impl Fn(usize) -> i8,
    ) -> Result<Self> {
        let d = class.dim();
        let total = cell_count(m, d)?;
        if cells == 0 || cells > total {
            return Err(param(format!("cell count must lie in [1, {total}], got {cells}")));
        }
        let signs = (0..cells).map(|flat| (unflatten(flat, m, d), sign_of(flat))).collect();
        Self::for_class(class, m, signs)
    }

    /// `M = |I|`.
    pub fn cells(&self) -> usize {
        self.signs.len()
    }

    pub fn sign_sum(&self) -> i64 {
        self.signs.values().map(|&s| s as i64).sum()
    }
}

fn cell_count(m: usize, d: usize) -> Result<usize> {
    if m == 0 {
        return Err(param("cells per axis must be at least 1"));
    }
    let mut n: usize = 1;
    for _ in 0..d {
        n = n
            .checked_mul(m)
            .filter(|&n| n <= MAX_FOOLING_CELLS)
            .ok_or_else(|| param(format!("m^d exceeds {MAX_FOOLING_CELLS} cells")))?;
    }
    Ok(n)
}

fn unflatten(mut flat: usize, m: usize, d: usize) -> Vec<usize> {
    let mut idx = vec![0; d];
    for j in (0..d).rev() {
        idx[j] = flat % m;
        flat /= m;
    }
    idx
}

/// Per-bump multiplier for a fooling sum with `cells` active cells out of `m^d`.
///
/// Sobolev `p ≥ 2`: `m^{-r}`; Sobolev `1 ≤ p < 2`: `m^{-r} (N/M)^{1/p}`;
/// Hölder: `m^{-β} / 2`.
pub fn fooling_scale(class: &SmoothnessClass, m: usize, cells: usize) -> Result<f64> {
    let total = cell_count(m, class.dim())?;
    if cells == 0 || cells > total {
        return Err(param(format!("number of active cells must lie in [1, {total}], got {cells}")));
    }
    let mf = m as f64;
    match class.kind() {
        SmoothnessKind::Holder { beta } => Ok(0.5 * mf.powf(-beta)),
        SmoothnessKind::SobolevIso { r, p } => {
            let base = mf.powi(-(r as i32));
            if p >= 2.0 {
                Ok(base)
            } else {
                Ok(base * (total as f64 / cells as f64).powf(1.0 / p))
            }
        }
        SmoothnessKind::Lp { .. } => {
            Err(Error::Construction("fooling sums are defined for Hölder and Sobolev classes only".into()))
        }
    }
}

/// `f(x) = Σ_{i∈I} s_i · scale · φ(m x − i)` over disjoint half-open cells.
pub fn make_fooling_sum(bump: &TestFunction, spec: &FoolingSpec, class: SmoothnessClass) -> Result<TestFunction> {
    let d = class.dim();
    if bump.dim() != d {
        return Err(Error::Construction(format!("bump has dimension {}, class has {d}", bump.dim())));
    }
    let bump_ok = match (class.kind(), &bump.shape) {
        (SmoothnessKind::Holder { beta }, Shape::HolderHat { beta: b, .. }) => *b == beta,
        (SmoothnessKind::SobolevIso { r, p }, Shape::PolyBump { r: br, .. }) => *br == r && bump.class.p() == p,
        _ => false,
    };
    if !bump_ok || bump.norm_bound() > 1.0 {
        return Err(Error::Construction("bump is not a unit-ball bump of the requested class".into()));
    }
    let total = cell_count(spec.m, d)?;
    let expected = fooling_scale(&class, spec.m, spec.cells())?;
    if (spec.scale - expected).abs() > 1e-12 * expected.abs() {
        return Err(Error::Construction(format!(
            "scale {} inconsistent with the class rule (expected {expected})",
            spec.scale
        )));
    }
    let mut table = vec![0i8; total];
    for (idx, &s) in &spec.signs {
        if idx.len() != d || idx.iter().any(|&i| i >= spec.m) {
            return Err(param(format!("cell index {idx:?} outside [{}]^{d}", spec.m)));
        }
        if s != 1 && s != -1 {
            return Err(param(format!("sign must be +1 or -1, got {s}")));
        }
        let flat = idx.iter().fold(0, |acc, &i| acc * spec.m + i);
        table[flat] = s;
    }
    let mf = spec.m as f64;
    let gamma0 = bump.exact_integral();
    let per_bump = spec.scale * mf.powi(-(d as i32)) * gamma0;
    let cells = spec.cells() as f64;
    let norm_bound = match class.kind() {
        SmoothnessKind::Holder { beta } => 2.0 * spec.scale * mf.powf(beta) * bump.norm_bound(),
        SmoothnessKind::SobolevIso { r, p } if p.is_infinite() => spec.scale * mf.powi(r as i32) * bump.norm_bound(),
        SmoothnessKind::SobolevIso { r, p } => {
            cells.powf(1.0 / p) * spec.scale * mf.powf(r as f64 - d as f64 / p) * bump.norm_bound()
        }
        SmoothnessKind::Lp { .. } => unreachable!("rejected by fooling_scale"),
    };
    Ok(TestFunction {
        dim: d,
        exact_integral: per_bump * spec.sign_sum() as f64,
        class,
        norm_bound,
        support_note: format!("{} of {} cells of a {}-per-axis grid", spec.cells(), total, spec.m),
        per_bump_integral: Some(per_bump),
        shape: Shape::Fooling { bump: Arc::new(bump.clone()), m: spec.m, signs: Arc::new(table), scale: spec.scale },
    })
}

/// `f_n(x) = (2n)^{-r} Σ_{k<n} φ(2nx − 2k)` with the one-dimensional
/// polynomial bump of order `r` normalized in `W_2^r`.
///
/// `f_n` vanishes on every `[(2k+1)/(2n), (k+1)/n]`.
pub fn make_frolov_counterexample(n: usize, r: u32) -> Result<TestFunction> {
    if n == 0 {
        return Err(param("n must be at least 1"));
    }
    let bump = make_sobolev_poly_bump(r, 2.0, 1)?;
    let amplitude = (2.0 * n as f64).powi(-(r as i32));
    let gamma0 = bump.exact_integral();
    Ok(TestFunction {
        dim: 1,
        exact_integral: gamma0 * 2f64.powi(-(r as i32 + 1)) * (n as f64).powi(-(r as i32)),
        class: SmoothnessClass::sobolev(r, 2.0, 1)?,
        norm_bound: bump.norm_bound() / std::f64::consts::SQRT_2,
        support_note: format!("{n} bumps on [k/n, (2k+1)/(2n)]"),
        per_bump_integral: Some(amplitude * gamma0 / (2.0 * n as f64)),
        shape: Shape::FrolovCounterexample { bump: Arc::new(bump), n, amplitude },
    })
}

/// Sign pattern for fooling sums built from a descriptor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignPattern {
    Plus,
    Alternating,
}

/// Bump family used by a fooling-sum descriptor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BumpSpec {
    Holder { beta: f64 },
    Poly { r: u32, p: f64 },
}

/// Textual factory descriptor, e.g. `holder:beta=1,d=1` or `frolov:n=8,r=1`.
#[derive(Debug, Clone, PartialEq)]
pub enum FunctionSpec {
    Constant { c: f64, d: usize },
    Linear { d: usize },
    Holder { beta: f64, d: usize },
    Poly { r: u32, p: f64, d: usize },
    Frolov { n: usize, r: u32 },
    Fooling { bump: BumpSpec, d: usize, m: usize, cells: Option<usize>, signs: SignPattern },
}

impl FunctionSpec {
    pub fn build(&self) -> Result<TestFunction> {
        match *self {
            FunctionSpec::Constant { c, d } => TestFunction::constant(d, c),
            FunctionSpec::Linear { d } => TestFunction::coordinate_mean(d),
            FunctionSpec::Holder { beta, d } => make_holder_bump(beta, d),
            FunctionSpec::Poly { r, p, d } => make_sobolev_poly_bump(r, p, d),
            FunctionSpec::Frolov { n, r } => make_frolov_counterexample(n, r),
            FunctionSpec::Fooling { bump, d, m, cells, signs } => {
                let (bump_fn, class) = match bump {
                    BumpSpec::Holder { beta } => (make_holder_bump(beta, d)?, SmoothnessClass::holder(beta, d)?),
                    BumpSpec::Poly { r, p } => (make_sobolev_poly_bump(r, p, d)?, SmoothnessClass::sobolev(r, p, d)?),
                };
                let total = cell_count(m, d)?;
                let spec = FoolingSpec::leading_cells(&class, m, cells.unwrap_or(total), |flat| match signs {
                    SignPattern::Plus => 1,
                    SignPattern::Alternating => {
                        if flat % 2 == 0 {
                            1
                        } else {
                            -1
                        }
                    }
                })?;
                make_fooling_sum(&bump_fn, &spec, class)
            }
        }
    }
}

fn fmt_p(p: f64) -> String {
    if p.is_infinite() {
        "inf".into()
    } else {
        format!("{p}")
    }
}

impl fmt::Display for FunctionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionSpec::Constant { c, d } => write!(f, "const:c={c},d={d}"),
            FunctionSpec::Linear { d } => write!(f, "linear:d={d}"),
            FunctionSpec::Holder { beta, d } => write!(f, "holder:beta={beta},d={d}"),
            FunctionSpec::Poly { r, p, d } => write!(f, "poly:r={r},p={},d={d}", fmt_p(*p)),
            FunctionSpec::Frolov { n, r } => write!(f, "frolov:n={n},r={r}"),
            FunctionSpec::Fooling { bump, d, m, cells, signs } => {
                match bump {
                    BumpSpec::Holder { beta } => write!(f, "fooling:bump=holder,beta={beta}")?,
                    BumpSpec::Poly { r, p } => write!(f, "fooling:bump=poly,r={r},p={}", fmt_p(*p))?,
                }
                write!(f, ",d={d},m={m}")?;
                if let Some(c) = cells {
                    write!(f, ",cells={c}")?;
                }
                let s = match signs {
                    SignPattern::Plus => "plus",
                    SignPattern::Alternating => "alt",
                };
                write!(f, ",signs={s}")
            }
        }
    }
}

struct Params<'a> {
    kind: &'a str,
    map: BTreeMap<&'a str, &'a str>,
}

impl<'a> Params<'a> {
    fn parse(s: &'a str) -> Result<Self> {
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut map = BTreeMap::new();
        for item in rest.split(',').filter(|t| !t.trim().is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| param(format!("expected key=value in function spec, got `{item}`")))?;
            if map.insert(k.trim(), v.trim()).is_some() {
                return Err(param(format!("duplicate key `{k}` in function spec")));
            }
        }
        Ok(Self { kind: kind.trim(), map })
    }

    fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.map.remove(key) {
            None => Ok(None),
            Some(v) => {
                v.parse().map(Some).map_err(|_| param(format!("cannot parse `{v}` for `{key}` in {} spec", self.kind)))
            }
        }
    }

    fn require<T: FromStr>(&mut self, key: &str) -> Result<T> {
        self.take(key)?.ok_or_else(|| param(format!("missing `{key}` in {} spec", self.kind)))
    }

    fn p(&mut self) -> Result<f64> {
        match self.map.remove("p") {
            None => Err(param(format!("missing `p` in {} spec", self.kind))),
            Some("inf") | Some("infinity") => Ok(f64::INFINITY),
            Some(v) => v.parse().map_err(|_| param(format!("cannot parse p=`{v}`"))),
        }
    }

    fn finish(self) -> Result<()> {
        match self.map.keys().next() {
            None => Ok(()),
            Some(k) => Err(param(format!("unknown key `{k}` in {} spec", self.kind))),
        }
    }
}

impl FromStr for FunctionSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut p = Params::parse(s)?;
        let spec = match p.kind {
            "const" | "constant" => FunctionSpec::Constant { c: p.require("c")?, d: p.take("d")?.unwrap_or(1) },
            "linear" => FunctionSpec::Linear { d: p.take("d")?.unwrap_or(1) },
            "holder" => FunctionSpec::Holder { beta: p.require("beta")?, d: p.require("d")? },
            "poly" => FunctionSpec::Poly { r: p.require("r")?, p: p.p()?, d: p.require("d")? },
            "frolov" => FunctionSpec::Frolov { n: p.require("n")?, r: p.take("r")?.unwrap_or(1) },
            "fooling" => {
                let bump_kind: String = p.require("bump")?;
                let bump = match bump_kind.as_str() {
                    "holder" => BumpSpec::Holder { beta: p.require("beta")? },
                    "poly" => BumpSpec::Poly { r: p.require("r")?, p: p.p()? },
                    other => return Err(param(format!("unknown bump `{other}`"))),
                };
                let signs = match p.take::<String>("signs")?.as_deref() {
                    None | Some("plus") => SignPattern::Plus,
                    Some("alt") | Some("alternating") => SignPattern::Alternating,
                    Some(other) => return Err(param(format!("unknown sign pattern `{other}`"))),
                };
                FunctionSpec::Fooling { bump, d: p.require("d")?, m: p.require("m")?, cells: p.take("cells")?, signs }
            }
            other => return Err(param(format!("unknown function kind `{other}`"))),
        };
        p.finish()?;
        Ok(spec)
    }
}
