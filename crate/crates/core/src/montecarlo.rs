//! Monte Carlo estimation of the exact-recovery probability of OMP, with
//! the matching lower bounds attached to every grid point.
//!
//! A trial is identified by `(m, K, trial)`; its key feeds the matrix,
//! support and signal substreams. All signal cases at the same `(m, K,
//! trial)` share the matrix and support, which pairs the case comparisons.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{new_bound, tropp_bound, BoundQuery};
use crate::error::{Error, Result};
use crate::omp::{check_exact_recovery, run_omp, EXACT_RECOVERY_TOLERANCE};
use crate::phi::PhiFunction;
use crate::signals::{
    generate_signal, sample_sensing_matrix, sample_support, Purpose, SensingMatrix, SignalCase,
    StreamKey,
};

/// Two-sided 95% normal quantile.
const Z_95: f64 = 1.959_963_984_540_054;

const MAX_M: usize = (1 << 24) - 1;
const MAX_K: usize = (1 << 16) - 1;
const MAX_TRIALS: u64 = (1 << 24) - 1;

/// Packs `(m, K, trial)` into a trial index: `m` in bits 40..64, `K` in
/// bits 24..40, `trial` in bits 0..24.
pub fn trial_key(master_seed: u64, m: usize, k: usize, trial: u64) -> StreamKey {
    debug_assert!(m <= MAX_M && k <= MAX_K && trial <= MAX_TRIALS);
    let index = ((m as u64) << 40) | ((k as u64) << 24) | trial;
    StreamKey::new(master_seed, index, Purpose::Matrix)
}

/// The disparity function that holds for each signal class.
pub fn attach_phi_for_case(case: SignalCase) -> PhiFunction {
    match case {
        SignalCase::Flat => PhiFunction::CauchySchwarz,
        SignalCase::Decaying { alpha } => PhiFunction::StronglyDecaying { alpha },
        SignalCase::Gaussian { .. } => PhiFunction::GaussianEmpirical,
    }
}

/// Draws a support and a signal from `key`, measures it with `a`, runs `K`
/// OMP iterations and reports exact recovery.
pub fn run_trial_on_matrix(
    a: &SensingMatrix,
    k: usize,
    case: SignalCase,
    key: StreamKey,
    tolerance: f64,
) -> Result<bool> {
    let n = a.cols();
    let support = sample_support(n, k, key.with_purpose(Purpose::Support))?;
    let x = generate_signal(n, &support, case, key.with_purpose(Purpose::Signal))?;
    let y = a.mul_vec(x.values())?;
    let result = run_omp(a, &y, k)?;
    Ok(check_exact_recovery(&result.estimate, &x, tolerance))
}

/// One full trial: a fresh `m x n` matrix, support and signal from `key`.
pub fn run_trial(
    m: usize,
    n: usize,
    k: usize,
    case: SignalCase,
    key: StreamKey,
    tolerance: f64,
) -> Result<bool> {
    if k >= m {
        return Err(Error::InvalidSparsity(format!("need K < m, got K={k}, m={m}")));
    }
    let a = sample_sensing_matrix(m, n, key.with_purpose(Purpose::Matrix))?;
    run_trial_on_matrix(&a, k, case, key, tolerance)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorPolicy {
    /// Abort the experiment on the first failing trial.
    #[default]
    FailFast,
    /// Log failing trials and leave them out of the counts.
    SkipAndLog,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n: usize,
    pub k_values: Vec<usize>,
    pub m_values: Vec<usize>,
    pub cases: Vec<SignalCase>,
    pub trials: u64,
    pub master_seed: u64,
    pub tolerance: f64,
    #[serde(default)]
    pub error_policy: ErrorPolicy,
}

impl ExperimentConfig {
    /// The reference grid: `m = 100, 150, ..., 1000`, `n = 1024`,
    /// `K in {15, 30}`, all four signal classes, 1000 trials.
    pub fn reference_grid(master_seed: u64) -> Self {
        Self {
            n: 1024,
            k_values: vec![15, 30],
            m_values: (100..=1000).step_by(50).collect(),
            cases: SignalCase::standard_cases().to_vec(),
            trials: 1000,
            master_seed,
            tolerance: EXACT_RECOVERY_TOLERANCE,
            error_policy: ErrorPolicy::FailFast,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidDimension("n must be >= 1".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be >= 1".into()));
        }
        if self.trials > MAX_TRIALS {
            return Err(Error::InvalidParameter(format!("trials must be <= {MAX_TRIALS}")));
        }
        if self.m_values.is_empty() || self.k_values.is_empty() || self.cases.is_empty() {
            return Err(Error::InvalidParameter(
                "m values, K values and cases must all be nonempty".into(),
            ));
        }
        if self.m_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("m values must be strictly increasing".into()));
        }
        if self.m_values[self.m_values.len() - 1] > MAX_M {
            return Err(Error::InvalidDimension(format!("m must be <= {MAX_M}")));
        }
        let min_m = self.m_values[0];
        for &k in &self.k_values {
            if k == 0 || k > MAX_K || k > self.n {
                return Err(Error::InvalidSparsity(format!(
                    "K={k} must satisfy 1 <= K <= min(n, {MAX_K})"
                )));
            }
            if k >= min_m {
                return Err(Error::InvalidSparsity(format!(
                    "K={k} must be smaller than every m (smallest m is {min_m})"
                )));
            }
        }
        for case in &self.cases {
            case.validate()?;
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::InvalidParameter("tolerance must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointResult {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub case: SignalCase,
    /// Completed trials (requested minus skipped).
    pub trials: u64,
    pub successes: u64,
    pub skipped: u64,
    pub empirical_prob: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub new_bound: f64,
    pub existing_bound: f64,
}

impl PointResult {
    /// Binomial standard error `sqrt(p (1 - p) / trials)`.
    pub fn std_error(&self) -> f64 {
        if self.trials == 0 {
            return 0.0;
        }
        let p = self.empirical_prob;
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub version: String,
    pub config: ExperimentConfig,
    /// Ordered by K, then case, then m.
    pub points: Vec<PointResult>,
}

impl ExperimentResult {
    pub const CSV_HEADER: &'static str =
        "m,n,K,case,trials,successes,empirical_prob,ci_low,ci_high,new_bound,existing_bound";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                p.m,
                p.n,
                p.k,
                p.case,
                p.trials,
                p.successes,
                p.empirical_prob,
                p.ci_low,
                p.ci_high,
                p.new_bound,
                p.existing_bound
            ));
        }
        out
    }

    pub fn point(&self, m: usize, k: usize, case: SignalCase) -> Option<&PointResult> {
        self.points.iter().find(|p| p.m == m && p.k == k && p.case == case)
    }

    /// Points for one `(K, case)` curve, ascending in `m`.
    pub fn curve(&self, k: usize, case: SignalCase) -> Vec<&PointResult> {
        self.points.iter().filter(|p| p.k == k && p.case == case).collect()
    }
}

/// Wilson score interval at 95% for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z_95 * Z_95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z_95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    // rounding can push an endpoint just past p at p = 0 or 1
    let low = (center - half).clamp(0.0, 1.0).min(p);
    let high = (center + half).clamp(0.0, 1.0).max(p);
    (low, high)
}

/// Runs every `(m, K, trial)` unit in parallel (each covers all cases on one
/// matrix) and aggregates per `(m, K, case)`. The output depends only on
/// `config`, never on the number of worker threads.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let n = config.n;
    let units: Vec<(usize, usize, u64)> = config
        .k_values
        .iter()
        .flat_map(|&k| {
            config
                .m_values
                .iter()
                .flat_map(move |&m| (0..config.trials).map(move |t| (m, k, t)))
        })
        .collect();

    let outcomes: Vec<Vec<Result<bool>>> = units
        .par_iter()
        .map(|&(m, k, trial)| {
            let key = trial_key(config.master_seed, m, k, trial);
            match sample_sensing_matrix(m, n, key) {
                Ok(a) => config
                    .cases
                    .iter()
                    .map(|&case| run_trial_on_matrix(&a, k, case, key, config.tolerance))
                    .collect(),
                Err(e) => vec![Err(e); config.cases.len()],
            }
        })
        .collect();

    // (k, m) -> per-case (successes, skipped)
    let cases = config.cases.len();
    let mut tallies = vec![(0u64, 0u64); config.k_values.len() * config.m_values.len() * cases];
    let per_k = config.m_values.len() * config.trials as usize;
    for (u, (&(m, k, trial), results)) in units.iter().zip(&outcomes).enumerate() {
        let ki = u / per_k;
        let mi = (u % per_k) / config.trials as usize;
        for (ci, r) in results.iter().enumerate() {
            let slot = &mut tallies[(ki * config.m_values.len() + mi) * cases + ci];
            match r {
                Ok(true) => slot.0 += 1,
                Ok(false) => {}
                Err(e) => {
                    let case = config.cases[ci];
                    let wrapped = Error::TrialFailed {
                        m,
                        k,
                        case: case.to_string(),
                        trial,
                        source: Box::new(e.clone()),
                    };
                    match config.error_policy {
                        ErrorPolicy::FailFast => return Err(wrapped),
                        ErrorPolicy::SkipAndLog => {
                            log::warn!("skipping trial: {wrapped}");
                            slot.1 += 1;
                        }
                    }
                }
            }
        }
    }

    let mut points = Vec::with_capacity(tallies.len());
    for (ki, &k) in config.k_values.iter().enumerate() {
        for (ci, &case) in config.cases.iter().enumerate() {
            let phi = attach_phi_for_case(case);
            for (mi, &m) in config.m_values.iter().enumerate() {
                let (successes, skipped) = tallies[(ki * config.m_values.len() + mi) * cases + ci];
                let trials = config.trials - skipped;
                let empirical_prob = if trials == 0 { 0.0 } else { successes as f64 / trials as f64 };
                let (ci_low, ci_high) = wilson_interval(successes, trials);
                points.push(PointResult {
                    m,
                    n,
                    k,
                    case,
                    trials,
                    successes,
                    skipped,
                    empirical_prob,
                    ci_low,
                    ci_high,
                    new_bound: new_bound(&BoundQuery::new(m, n, k, phi)?)?.value,
                    existing_bound: tropp_bound(m, n, k)?.value,
                });
            }
        }
    }

    Ok(ExperimentResult {
        version: crate::VERSION.to_string(),
        config: config.clone(),
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> ExperimentConfig {
        ExperimentConfig {
            n: 128,
            k_values: vec![4],
            m_values: vec![12, 40],
            cases: SignalCase::standard_cases().to_vec(),
            trials: 30,
            master_seed: 5,
            tolerance: EXACT_RECOVERY_TOLERANCE,
            error_policy: ErrorPolicy::FailFast,
        }
    }

    #[test]
    fn phi_assignment_per_case() {
        assert_eq!(attach_phi_for_case(SignalCase::Flat), PhiFunction::CauchySchwarz);
        assert_eq!(
            attach_phi_for_case(SignalCase::Decaying { alpha: 1.1 }),
            PhiFunction::StronglyDecaying { alpha: 1.1 }
        );
        assert_eq!(
            attach_phi_for_case(SignalCase::Gaussian { sigma: 1.0 }),
            PhiFunction::GaussianEmpirical
        );
    }

    #[test]
    fn identity_matrix_trial_always_recovers() {
        let a = SensingMatrix::identity(64).unwrap();
        for (t, case) in SignalCase::standard_cases().into_iter().enumerate() {
            let key = trial_key(3, 64, 8, t as u64);
            assert!(run_trial_on_matrix(&a, 8, case, key, EXACT_RECOVERY_TOLERANCE).unwrap());
        }
    }

    #[test]
    fn trial_is_deterministic() {
        let key = trial_key(11, 60, 6, 2);
        let a = run_trial(60, 200, 6, SignalCase::Flat, key, 1e-10).unwrap();
        let b = run_trial(60, 200, 6, SignalCase::Flat, key, 1e-10).unwrap();
        assert_eq!(a, b);
        assert!(run_trial(6, 200, 6, SignalCase::Flat, key, 1e-10).is_err());
    }

    #[test]
    fn trial_keys_are_distinct_across_grid() {
        let mut seen = std::collections::HashSet::new();
        for m in [100, 150, 1000] {
            for k in [15, 30] {
                for t in 0..50 {
                    assert!(seen.insert(trial_key(1, m, k, t).trial_index));
                }
            }
        }
    }

    #[test]
    fn wilson_contains_estimate() {
        for (s, n) in [(0, 10), (10, 10), (3, 10), (500, 1000), (1, 1)] {
            let (lo, hi) = wilson_interval(s, n);
            let p = s as f64 / n as f64;
            assert!(0.0 <= lo && lo <= p && p <= hi && hi <= 1.0);
        }
        // textbook value: 5/10 -> (0.2366, 0.7634)
        let (lo, hi) = wilson_interval(5, 10);
        assert!((lo - 0.236_593).abs() < 1e-5 && (hi - 0.763_407).abs() < 1e-5);
    }

    #[test]
    fn config_validation() {
        let mut c = small_config();
        c.trials = 0;
        assert!(c.validate().is_err());
        let mut c = small_config();
        c.m_values = vec![40, 12];
        assert!(c.validate().is_err());
        let mut c = small_config();
        c.k_values = vec![12];
        assert!(c.validate().is_err());
        let mut c = small_config();
        c.cases = vec![SignalCase::Decaying { alpha: 0.9 }];
        assert!(c.validate().is_err());
        assert!(small_config().validate().is_ok());
        assert!(ExperimentConfig::reference_grid(0).validate().is_ok());
    }

    #[test]
    fn experiment_is_deterministic_and_consistent() {
        let c = small_config();
        let a = run_experiment(&c).unwrap();
        let b = run_experiment(&c).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        assert_eq!(a.points.len(), 8);
        for p in &a.points {
            assert!(p.successes <= p.trials);
            assert_eq!(p.empirical_prob, p.successes as f64 / p.trials as f64);
            assert!(p.ci_low <= p.empirical_prob && p.empirical_prob <= p.ci_high);
        }
        let csv = a.to_csv();
        assert_eq!(csv.lines().next().unwrap(), ExperimentResult::CSV_HEADER);
        assert_eq!(csv.lines().count(), 9);
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let c = small_config();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let three = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let a = one.install(|| run_experiment(&c)).unwrap();
        let b = three.install(|| run_experiment(&c)).unwrap();
        assert_eq!(a, b);
    }
}
