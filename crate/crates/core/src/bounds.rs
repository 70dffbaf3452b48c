//! Lower bounds on the probability that OMP recovers a K-sparse signal in K
//! iterations from `m` Gaussian measurements.
//!
//! Two bounds are evaluated, both maximized over a free parameter `eps`:
//!
//! * the disparity-aware bound
//!   `(1 - e^{-eps^2 m/2}) * prod_{k=1..K} (1 - e^{-eta^2 m/(2 phi(k))} / (sqrt(pi m/(2 phi(k))) eta))^(n-K)`
//!   with `eta = 1 - sqrt(K/m) - eps` and `eps` in
//!   `(0, 1 - sqrt(K/m) - sqrt(2 phi(K)/(m pi))]`;
//! * the sparsity-only baseline
//!   `(1 - e^{-eps^2 m/2}) * (1 - e^{-(sqrt(m/K) - 1 - eps)^2 / 2})^(K(n-K))`
//!   with `eps` in `(0, sqrt(m/K) - 1)`.
//!
//! Everything is accumulated as a natural logarithm; the factors are
//! routinely `1 - 1e-9` raised to powers in the tens of thousands.

use std::f64::consts::PI;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{ln_one_minus, ln_one_minus_exp};
use crate::optimize::{grid_then_golden_max, UpperEnd};
use crate::phi::PhiFunction;

/// Golden-section refinement stops once the bracket is this narrow.
pub const EPSILON_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundQuery {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub phi: PhiFunction,
}

impl BoundQuery {
    pub fn new(m: usize, n: usize, k: usize, phi: PhiFunction) -> Result<Self> {
        let q = Self { m, n, k, phi };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        validate_dims(self.m, self.n, self.k)?;
        self.phi.eval(self.k).map(|_| ())
    }
}

fn validate_dims(m: usize, n: usize, k: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::InvalidDimension("m must be >= 1".into()));
    }
    if k == 0 || k > n {
        return Err(Error::InvalidSparsity(format!("need 1 <= K <= n, got K={k}, n={n}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    /// The disparity-aware bound.
    New,
    /// The sparsity-only bound it is compared against.
    Baseline,
}

impl fmt::Display for BoundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundKind::New => "new",
            BoundKind::Baseline => "baseline",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundResult {
    pub kind: BoundKind,
    pub m: usize,
    pub n: usize,
    pub k: usize,
    /// `None` for the baseline, which does not depend on phi.
    pub phi: Option<PhiFunction>,
    pub value: f64,
    pub log_value: f64,
    pub epsilon_star: Option<f64>,
    pub interval_upper: f64,
    pub feasible: bool,
}

impl BoundResult {
    pub const CSV_HEADER: &'static str =
        "m,n,K,phi_variant,phi_param,bound_name,value,epsilon_star,interval_upper,feasible";

    fn infeasible(kind: BoundKind, m: usize, n: usize, k: usize, phi: Option<PhiFunction>, upper: f64) -> Self {
        Self {
            kind,
            m,
            n,
            k,
            phi,
            value: 0.0,
            log_value: f64::NEG_INFINITY,
            epsilon_star: None,
            interval_upper: upper,
            feasible: false,
        }
    }

    pub fn csv_row(&self) -> String {
        let (variant, param) = match self.phi {
            Some(phi) => (phi.variant_name(), phi.param().map(|a| a.to_string()).unwrap_or_default()),
            None => ("none", String::new()),
        };
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.m,
            self.n,
            self.k,
            variant,
            param,
            self.kind,
            self.value,
            self.epsilon_star.map(|e| e.to_string()).unwrap_or_default(),
            self.interval_upper,
            self.feasible
        )
    }
}

/// Renders results under [`BoundResult::CSV_HEADER`].
pub fn bounds_to_csv(results: &[BoundResult]) -> String {
    let mut out = String::from(BoundResult::CSV_HEADER);
    out.push('\n');
    for r in results {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

/// `1 - sqrt(K/m) - sqrt(2 phi(K) / (m pi))`; non-positive means the
/// disparity-aware bound has no feasible `eps`.
pub fn interval_upper(m: usize, k: usize, phi: PhiFunction) -> Result<f64> {
    if m == 0 || k == 0 {
        return Err(Error::InvalidDimension("need m >= 1 and K >= 1".into()));
    }
    let (m, kf) = (m as f64, k as f64);
    Ok(1.0 - (kf / m).sqrt() - (2.0 * phi.eval(k)? / (m * PI)).sqrt())
}

/// Pre-evaluated pieces of the disparity-aware objective for one query.
struct NewObjective {
    m: f64,
    exponent: f64,
    sqrt_k_over_m: f64,
    phis: Vec<f64>,
}

impl NewObjective {
    fn new(q: &BoundQuery) -> Result<Self> {
        Ok(Self {
            m: q.m as f64,
            exponent: (q.n - q.k) as f64,
            sqrt_k_over_m: (q.k as f64 / q.m as f64).sqrt(),
            phis: q.phi.table(q.k)?,
        })
    }

    fn ln_value(&self, eps: f64) -> f64 {
        let m = self.m;
        let eta = 1.0 - self.sqrt_k_over_m - eps;
        let first = ln_one_minus_exp(eps * eps * m / 2.0);
        if eta <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let mut sum = 0.0;
        for &phi in &self.phis {
            let ln_x = -eta * eta * m / (2.0 * phi) - ((PI * m / (2.0 * phi)).sqrt() * eta).ln();
            sum += ln_one_minus(ln_x);
        }
        if self.exponent == 0.0 {
            return first;
        }
        first + self.exponent * sum
    }
}

/// Natural log of the disparity-aware objective at `eps`.
pub fn new_bound_at(eps: f64, q: &BoundQuery) -> Result<f64> {
    q.validate()?;
    let upper = interval_upper(q.m, q.k, q.phi)?;
    if !(eps > 0.0 && eps <= upper) {
        return Err(Error::Domain(format!(
            "eps={eps} is outside the feasible interval (0, {upper}]"
        )));
    }
    Ok(NewObjective::new(q)?.ln_value(eps))
}

fn finish(kind: BoundKind, q: (usize, usize, usize), phi: Option<PhiFunction>, upper: f64, eps: f64, ln_v: f64) -> BoundResult {
    let value = ln_v.exp().clamp(0.0, 1.0);
    BoundResult {
        kind,
        m: q.0,
        n: q.1,
        k: q.2,
        phi,
        value,
        log_value: ln_v,
        epsilon_star: Some(eps),
        interval_upper: upper,
        feasible: true,
    }
}

/// Maximum of the disparity-aware bound over its feasible interval.
pub fn new_bound(q: &BoundQuery) -> Result<BoundResult> {
    q.validate()?;
    let upper = interval_upper(q.m, q.k, q.phi)?;
    if upper <= 0.0 {
        return Ok(BoundResult::infeasible(BoundKind::New, q.m, q.n, q.k, Some(q.phi), upper));
    }
    let objective = NewObjective::new(q)?;
    let (eps, ln_v) = grid_then_golden_max(|e| objective.ln_value(e), upper, UpperEnd::Closed, EPSILON_TOLERANCE);
    Ok(finish(BoundKind::New, (q.m, q.n, q.k), Some(q.phi), upper, eps, ln_v))
}

/// `sqrt(m/K) - 1`, the open right end of the baseline's interval.
pub fn baseline_interval_upper(m: usize, k: usize) -> Result<f64> {
    if m == 0 || k == 0 {
        return Err(Error::InvalidDimension("need m >= 1 and K >= 1".into()));
    }
    Ok((m as f64 / k as f64).sqrt() - 1.0)
}

fn baseline_ln_value(eps: f64, m: usize, n: usize, k: usize, upper: f64) -> f64 {
    let gap = upper - eps;
    let first = ln_one_minus_exp(eps * eps * m as f64 / 2.0);
    let exponent = (k * (n - k)) as f64;
    if exponent == 0.0 {
        return first;
    }
    first + exponent * ln_one_minus_exp(gap * gap / 2.0)
}

/// Natural log of the baseline objective at `eps`, implemented exactly as
/// written (the second exponent carries no factor of `m`).
pub fn tropp_bound_at(eps: f64, m: usize, n: usize, k: usize) -> Result<f64> {
    validate_dims(m, n, k)?;
    let upper = baseline_interval_upper(m, k)?;
    if !(eps > 0.0 && eps < upper) {
        return Err(Error::Domain(format!(
            "eps={eps} is outside the open interval (0, {upper})"
        )));
    }
    Ok(baseline_ln_value(eps, m, n, k, upper))
}

/// Maximum of the baseline bound; value 0 (infeasible) when `m <= K`.
pub fn tropp_bound(m: usize, n: usize, k: usize) -> Result<BoundResult> {
    validate_dims(m, n, k)?;
    let upper = baseline_interval_upper(m, k)?;
    if upper <= 0.0 {
        return Ok(BoundResult::infeasible(BoundKind::Baseline, m, n, k, None, upper));
    }
    let (eps, ln_v) = grid_then_golden_max(
        |e| baseline_ln_value(e, m, n, k, upper),
        upper,
        UpperEnd::Open,
        EPSILON_TOLERANCE,
    );
    Ok(finish(BoundKind::Baseline, (m, n, k), None, upper, eps, ln_v))
}

/// One bound per entry of `m_values`, in order. `phi` is ignored for the
/// baseline.
pub fn bound_curve(
    m_values: &[usize],
    n: usize,
    k: usize,
    phi: PhiFunction,
    which: BoundKind,
) -> Result<Vec<BoundResult>> {
    m_values
        .par_iter()
        .map(|&m| match which {
            BoundKind::New => new_bound(&BoundQuery::new(m, n, k, phi)?),
            BoundKind::Baseline => tropp_bound(m, n, k),
        })
        .collect()
}
