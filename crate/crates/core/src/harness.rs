//! Repeated trials, empirical failure rates and budget sweeps.
//!
//! Trial `t` of a plan always runs on `RandomSource::new(master_seed).child(t)`
//! and results are gathered in trial order, so every output is independent
//! of the number of worker threads.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{param, Error, Result};
use crate::estimators::{Estimate, Estimator, EstimatorKind};
use crate::rng::RandomSource;
use crate::stats::{clopper_pearson, loglog_fit, CONFIDENCE};
use crate::testfn::{FunctionSpec, Integrand};

#[derive(Debug, Clone, PartialEq)]
pub struct TrialPlan {
    pub estimator: EstimatorKind,
    pub function: FunctionSpec,
    pub epsilon: f64,
    pub trials: u64,
    pub master_seed: u64,
}

impl TrialPlan {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(param("trials must be at least 1"));
        }
        if !(self.epsilon > 0.0) {
            return Err(param(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        self.estimator.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FailureStats {
    pub trials: u64,
    pub failures: u64,
    pub rate: f64,
    /// 99% Clopper–Pearson bounds.
    pub ci_low: f64,
    pub ci_high: f64,
}

impl FailureStats {
    pub fn from_counts(failures: u64, trials: u64) -> Result<Self> {
        let (ci_low, ci_high) = clopper_pearson(failures, trials, CONFIDENCE)?;
        Ok(Self { trials, failures, rate: failures as f64 / trials as f64, ci_low, ci_high })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: Vec<(u64, f64)>,
}

/// Absolute errors of `trials` runs, in trial order.
pub fn error_samples_with<E: Estimator + ?Sized>(
    estimator: &E,
    f: &dyn Integrand,
    trials: u64,
    master_seed: u64,
) -> Result<Vec<f64>> {
    if trials == 0 {
        return Err(param("trials must be at least 1"));
    }
    let root = RandomSource::new(master_seed);
    let exact = f.exact_integral();
    (0..trials)
        .into_par_iter()
        .map(|t| estimator.estimate(f, &root.child(t)).map(|e| (e.value - exact).abs()))
        .collect()
}

/// Counts trials whose estimate satisfies `event`.
pub fn count_events<E, P>(
    estimator: &E,
    f: &dyn Integrand,
    trials: u64,
    master_seed: u64,
    event: P,
) -> Result<FailureStats>
where
    E: Estimator + ?Sized,
    P: Fn(&Estimate) -> bool + Sync,
{
    if trials == 0 {
        return Err(param("trials must be at least 1"));
    }
    let root = RandomSource::new(master_seed);
    let hits = (0..trials)
        .into_par_iter()
        .map(|t| estimator.estimate(f, &root.child(t)).map(|e| event(&e) as u64))
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    FailureStats::from_counts(hits, trials)
}

/// Failure counts for any estimator; failure means `|error| > epsilon`.
pub fn empirical_failure_with<E: Estimator + ?Sized>(
    estimator: &E,
    f: &dyn Integrand,
    epsilon: f64,
    trials: u64,
    master_seed: u64,
) -> Result<FailureStats> {
    if !(epsilon > 0.0) {
        return Err(param(format!("epsilon must be positive, got {epsilon}")));
    }
    let exact = f.exact_integral();
    count_events(estimator, f, trials, master_seed, |e| (e.value - exact).abs() > epsilon)
}

pub fn empirical_failure(plan: &TrialPlan) -> Result<FailureStats> {
    plan.validate()?;
    let f = plan.function.build()?;
    empirical_failure_with(&plan.estimator, &f, plan.epsilon, plan.trials, plan.master_seed)
}

pub fn error_samples(plan: &TrialPlan) -> Result<Vec<f64>> {
    plan.validate()?;
    let f = plan.function.build()?;
    error_samples_with(&plan.estimator, &f, plan.trials, plan.master_seed)
}

/// Least-squares slope of `ln statistic` against `ln n`.
pub fn fit_rate(points: &[(u64, f64)]) -> Result<RateFit> {
    if points.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(param("budgets must be strictly increasing"));
    }
    let xy: Vec<(f64, f64)> = points.iter().map(|&(n, s)| (n as f64, s)).collect();
    let fit = loglog_fit(&xy)?;
    Ok(RateFit { slope: fit.slope, intercept: fit.intercept, r_squared: fit.r_squared, points: points.to_vec() })
}

/// Per-budget summary of the absolute errors.
#[derive(Clone)]
pub enum Statistic {
    MedianAbsError,
    Rmse,
    /// Fraction of runs with error above `epsilon(n)`.
    FailureRate(Arc<dyn Fn(u64) -> f64 + Send + Sync>),
}

impl Statistic {
    pub fn name(&self) -> &'static str {
        match self {
            Statistic::MedianAbsError => "median_abs_error",
            Statistic::Rmse => "rmse",
            Statistic::FailureRate(_) => "failure_rate",
        }
    }

    fn summarize(&self, n: u64, mut errors: Vec<f64>) -> f64 {
        match self {
            Statistic::MedianAbsError => {
                errors.sort_by(f64::total_cmp);
                let k = errors.len();
                if k % 2 == 1 {
                    errors[k / 2]
                } else {
                    0.5 * (errors[k / 2 - 1] + errors[k / 2])
                }
            }
            Statistic::Rmse => (errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64).sqrt(),
            Statistic::FailureRate(eps) => {
                let eps = eps(n);
                errors.iter().filter(|e| **e > eps).count() as f64 / errors.len() as f64
            }
        }
    }
}

impl std::fmt::Debug for Statistic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Row `i` uses master seed `RandomSource::new(master_seed).child(i).seed()`.
pub fn sweep<B>(
    ns: &[u64],
    factory: B,
    function: &FunctionSpec,
    reps: u64,
    statistic: &Statistic,
    master_seed: u64,
) -> Result<Vec<(u64, f64)>>
where
    B: Fn(u64) -> Result<EstimatorKind>,
{
    if ns.is_empty() {
        return Err(param("budget list must be nonempty"));
    }
    if ns.windows(2).any(|w| w[1] <= w[0]) {
        return Err(param("budgets must be strictly increasing"));
    }
    let f = function.build()?;
    let root = RandomSource::new(master_seed);
    let mut rows = Vec::with_capacity(ns.len());
    for (i, &n) in ns.iter().enumerate() {
        let est = factory(n)?;
        est.validate()?;
        let errors = error_samples_with(&est, &f, reps, root.child(i as u64).seed())?;
        rows.push((n, statistic.summarize(n, errors)));
    }
    Ok(rows)
}

/// Runs `job` on a dedicated pool of `threads` workers.
pub fn with_threads<T: Send>(threads: usize, job: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Parameter(format!("cannot start {threads} worker threads: {e}")))?;
    Ok(pool.install(job))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::strat_holder_epsilon;
    use crate::estimators::FailureInjector;
    use crate::testfn::TestFunction;

    fn plan(estimator: EstimatorKind, function: &str, epsilon: f64, trials: u64) -> TrialPlan {
        TrialPlan { estimator, function: function.parse().unwrap(), epsilon, trials, master_seed: 17 }
    }

    #[test]
    fn exact_estimator_never_fails() {
        let p = plan(EstimatorKind::Stratified { m: 5 }, "const:c=0.3,d=2", 1e-9, 200);
        let s = empirical_failure(&p).unwrap();
        assert_eq!(s.failures, 0);
        assert_eq!(s.ci_low, 0.0);
        let e = error_samples(&p).unwrap();
        assert_eq!(e.len(), 200);
        assert!(e.iter().all(|x| *x < 1e-15));
    }

    #[test]
    fn zero_trials_rejected() {
        let p = plan(EstimatorKind::PlainMc { n: 4 }, "linear:d=1", 0.1, 0);
        assert!(empirical_failure(&p).is_err());
        assert!(error_samples(&p).is_err());
    }

    #[test]
    fn injector_rate_concentrates() {
        let f = TestFunction::constant(1, 0.0).unwrap();
        let inj = FailureInjector::new(0.2, 1.0).unwrap();
        let s = empirical_failure_with(&inj, &f, 0.5, 100_000, 5).unwrap();
        let band = 4.0 * (0.16f64 / 1e5).sqrt();
        assert!((s.rate - 0.2).abs() <= band, "rate {}", s.rate);
        assert!(s.ci_low <= s.rate && s.rate <= s.ci_high);
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let p = plan(EstimatorKind::PlainMc { n: 32 }, "holder:beta=1,d=1", 0.01, 3000);
        let a = with_threads(1, || empirical_failure(&p).unwrap()).unwrap();
        let b = with_threads(4, || empirical_failure(&p).unwrap()).unwrap();
        assert_eq!(a, b);
        let ea = with_threads(1, || error_samples(&p).unwrap()).unwrap();
        let eb = with_threads(3, || error_samples(&p).unwrap()).unwrap();
        assert_eq!(ea, eb);
    }

    #[test]
    fn stratified_deterministic_cap() {
        let p = plan(EstimatorKind::Stratified { m: 256 }, "holder:beta=1,d=1", 1.0, 2000);
        let e = error_samples(&p).unwrap();
        assert!(e.iter().all(|x| *x <= 1.0 / 256.0));
    }

    #[test]
    fn fit_examples() {
        let pts: Vec<(u64, f64)> = [16u64, 64, 256].iter().map(|&n| (n, 7.0 * (n as f64).powf(-1.5))).collect();
        let fit = fit_rate(&pts).unwrap();
        assert!((fit.slope + 1.5).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert_eq!(fit_rate(&[(1, 2.0), (2, 2.0), (3, 2.0)]).unwrap().slope, 0.0);
        assert!(fit_rate(&[(1, 2.0), (2, 2.0)]).is_err());
        assert!(fit_rate(&[(1, 2.0), (2, -1.0), (3, 1.0)]).is_err());
        assert!(fit_rate(&[(3, 2.0), (2, 1.0), (4, 1.0)]).is_err());
    }

    #[test]
    fn sweep_exact_estimator_is_zero() {
        let f: FunctionSpec = "const:c=1.5,d=1".parse().unwrap();
        let rows =
            sweep(&[4, 8, 16], |n| Ok(EstimatorKind::PlainMc { n: n as usize }), &f, 1, &Statistic::MedianAbsError, 3)
                .unwrap();
        assert!(rows.iter().all(|r| r.1 == 0.0));
        assert!(sweep(&[], |n| Ok(EstimatorKind::PlainMc { n: n as usize }), &f, 1, &Statistic::Rmse, 3).is_err());
        assert!(sweep(&[8, 4], |n| Ok(EstimatorKind::PlainMc { n: n as usize }), &f, 1, &Statistic::Rmse, 3).is_err());
    }

    #[test]
    fn plain_mc_rmse_rate() {
        let f: FunctionSpec = "poly:r=1,p=2,d=1".parse().unwrap();
        let ns: Vec<u64> = (6..=14).step_by(2).map(|e| 1u64 << e).collect();
        let rows = sweep(&ns, |n| Ok(EstimatorKind::PlainMc { n: n as usize }), &f, 400, &Statistic::Rmse, 9).unwrap();
        let fit = fit_rate(&rows).unwrap();
        assert!((fit.slope + 0.5).abs() <= 0.1, "slope {}", fit.slope);
    }

    #[test]
    fn failure_rate_sweep_respects_guarantee() {
        let f: FunctionSpec = "holder:beta=1,d=1".parse().unwrap();
        let stat = Statistic::FailureRate(Arc::new(|n| strat_holder_epsilon(n, 1, 1.0, 0.05).unwrap().epsilon));
        let rows =
            sweep(&[16, 64, 256], |n| Ok(EstimatorKind::Stratified { m: n as usize }), &f, 2000, &stat, 4).unwrap();
        for (_, rate) in rows {
            let (lo, _) = clopper_pearson((rate * 2000.0).round() as u64, 2000, CONFIDENCE).unwrap();
            assert!(lo <= 0.05);
        }
    }
}
