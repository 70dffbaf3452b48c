//! Disparity functions bounding `||x_S||_1^2 / ||x_S||_2^2` over subsets
//! of a signal's support, and an empirical checker for the Gaussian one.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signals::{Purpose, SparseSignal, StreamKey};

/// `||v||_1^2 / ||v||_2^2` of a raw slice.
pub fn disparity_ratio_of(v: &[f64]) -> Result<f64> {
    if v.is_empty() {
        return Err(Error::UndefinedRatio("empty index set".into()));
    }
    let (l1, l2sq) = v
        .iter()
        .fold((0.0, 0.0), |(l1, l2), &x| (l1 + x.abs(), l2 + x * x));
    if l2sq == 0.0 {
        return Err(Error::UndefinedRatio("vector is zero on the index set".into()));
    }
    Ok(l1 * l1 / l2sq)
}

/// The disparity ratio of `x` restricted to `subset`, which must lie inside
/// the support of `x`.
pub fn disparity_ratio(x: &SparseSignal, subset: &[usize]) -> Result<f64> {
    if subset.is_empty() {
        return Err(Error::UndefinedRatio("empty index set".into()));
    }
    let support = x.support();
    let mut picked = Vec::with_capacity(subset.len());
    for &i in subset {
        if support.binary_search(&i).is_err() {
            return Err(Error::InvalidParameter(format!(
                "index {i} is not in the signal support"
            )));
        }
        picked.push(x.values()[i]);
    }
    disparity_ratio_of(&picked)
}

pub fn phi_cauchy_schwarz(t: usize) -> Result<f64> {
    if t == 0 {
        return Err(Error::Domain("phi is defined for t >= 1".into()));
    }
    Ok(t as f64)
}

/// `(a^t - 1)(a + 1) / ((a^t + 1)(a - 1))`, evaluated through `a^-t` so it
/// cannot overflow; large `t` lands on the limit `(a + 1)/(a - 1)`.
pub fn phi_strongly_decaying(t: usize, alpha: f64) -> Result<f64> {
    if t == 0 {
        return Err(Error::Domain("phi is defined for t >= 1".into()));
    }
    if !(alpha > 1.0) || !alpha.is_finite() {
        return Err(Error::Domain(format!(
            "strongly decaying phi needs alpha > 1, got {alpha} (use phi(t) = t for alpha = 1)"
        )));
    }
    if t == 1 {
        return Ok(1.0);
    }
    let inv_pow = alpha.powf(-(t as f64));
    let value = (1.0 - inv_pow) * (alpha + 1.0) / ((1.0 + inv_pow) * (alpha - 1.0));
    Ok(value.min(t as f64))
}

/// Piecewise table: `t` up to 24, flat at 24 on `25..=29`, then `0.8 t`.
pub fn phi_gaussian_empirical(t: usize) -> Result<f64> {
    match t {
        0 => Err(Error::Domain("phi is defined for t >= 1".into())),
        1..=24 => Ok(t as f64),
        25..=29 => Ok(24.0),
        _ => Ok(0.8 * t as f64),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PhiFunction {
    CauchySchwarz,
    StronglyDecaying { alpha: f64 },
    GaussianEmpirical,
}

impl PhiFunction {
    pub fn strongly_decaying(alpha: f64) -> Result<Self> {
        phi_strongly_decaying(1, alpha)?;
        Ok(PhiFunction::StronglyDecaying { alpha })
    }

    pub fn eval(&self, t: usize) -> Result<f64> {
        match *self {
            PhiFunction::CauchySchwarz => phi_cauchy_schwarz(t),
            PhiFunction::StronglyDecaying { alpha } => phi_strongly_decaying(t, alpha),
            PhiFunction::GaussianEmpirical => phi_gaussian_empirical(t),
        }
    }

    /// Evaluation for callers holding `t` as a real number; only positive
    /// integers are accepted.
    pub fn eval_real(&self, t: f64) -> Result<f64> {
        if !(t >= 1.0) || t.fract() != 0.0 || t > u32::MAX as f64 {
            return Err(Error::Domain(format!(
                "phi is defined on positive integers, got {t}"
            )));
        }
        self.eval(t as usize)
    }

    /// `phi(1), ..., phi(k)`.
    pub fn table(&self, k: usize) -> Result<Vec<f64>> {
        (1..=k).map(|t| self.eval(t)).collect()
    }

    /// Short variant name used in CSV output: `cs`, `decay` or `gauss`.
    pub fn variant_name(&self) -> &'static str {
        match self {
            PhiFunction::CauchySchwarz => "cs",
            PhiFunction::StronglyDecaying { .. } => "decay",
            PhiFunction::GaussianEmpirical => "gauss",
        }
    }

    pub fn param(&self) -> Option<f64> {
        match *self {
            PhiFunction::StronglyDecaying { alpha } => Some(alpha),
            _ => None,
        }
    }
}

impl fmt::Display for PhiFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.param() {
            Some(alpha) => write!(f, "{}({alpha})", self.variant_name()),
            None => f.write_str(self.variant_name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhiValidationRow {
    pub t: usize,
    pub trials: u64,
    pub successes: u64,
    pub empirical_probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhiValidationReport {
    pub phi: PhiFunction,
    pub master_seed: u64,
    pub rows: Vec<PhiValidationRow>,
}

impl PhiValidationReport {
    pub fn min_probability(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.empirical_probability)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,trials,successes,empirical_probability\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.t, r.trials, r.successes, r.empirical_probability
            ));
        }
        out
    }
}

/// For every `t` in `1..=t_max`, draws `trials` standard normal vectors of
/// length `t` and counts how often their disparity ratio is at most
/// `phi(t)`. Each `t` owns the substream `(master_seed, t, PhiValidation)`,
/// so the report does not depend on how the work is scheduled.
pub fn validate_phi_empirical(
    t_max: usize,
    trials: u64,
    master_seed: u64,
    phi: PhiFunction,
) -> Result<PhiValidationReport> {
    if t_max == 0 {
        return Err(Error::InvalidParameter("t_max must be >= 1".into()));
    }
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    let rows = (1..=t_max)
        .into_par_iter()
        .map(|t| {
            let bound = phi.eval(t)?;
            let mut stream = StreamKey::new(master_seed, t as u64, Purpose::PhiValidation).stream();
            let mut buf = vec![0.0; t];
            let mut successes = 0u64;
            for _ in 0..trials {
                buf.iter_mut().for_each(|v| *v = stream.std_normal());
                // An all-zero draw has probability zero; count it as satisfying
                // the condition since 0 <= phi * 0.
                let ok = match disparity_ratio_of(&buf) {
                    Ok(r) => r <= bound,
                    Err(_) => true,
                };
                successes += ok as u64;
            }
            Ok(PhiValidationRow {
                t,
                trials,
                successes,
                empirical_probability: successes as f64 / trials as f64,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PhiValidationReport {
        phi,
        master_seed,
        rows,
    })
}
