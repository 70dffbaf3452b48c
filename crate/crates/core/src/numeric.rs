//! Small dense-vector kernels and log-domain helpers shared by the solver
//! and the bound evaluators.

use std::f64::consts::LN_2;

/// Dot product with four independent accumulators so the compiler can keep
/// the loop in vector registers. The summation order is fixed, so results
/// are reproducible.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let chunks_a = a.chunks_exact(4);
    let chunks_b = b.chunks_exact(4);
    let tail: f64 = chunks_a
        .remainder()
        .iter()
        .zip(chunks_b.remainder())
        .map(|(x, y)| x * y)
        .sum();
    for (ca, cb) in chunks_a.zip(chunks_b) {
        acc[0] += ca[0] * cb[0];
        acc[1] += ca[1] * cb[1];
        acc[2] += ca[2] * cb[2];
        acc[3] += ca[3] * cb[3];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// `ln(1 - exp(-a))` for `a >= 0`, accurate both when `exp(-a)` is close to
/// one and when it is tiny. Returns `-inf` at `a == 0`.
#[inline]
pub fn ln_one_minus_exp(a: f64) -> f64 {
    debug_assert!(a >= 0.0 || a.is_nan());
    if a <= LN_2 {
        (-(-a).exp_m1()).ln()
    } else {
        (-(-a).exp()).ln_1p()
    }
}

/// `ln(1 - x)` given `ln x`, for `x` in `[0, 1)`. Returns `-inf` once
/// `x >= 1`.
#[inline]
pub fn ln_one_minus(ln_x: f64) -> f64 {
    if ln_x >= 0.0 {
        f64::NEG_INFINITY
    } else {
        ln_one_minus_exp(-ln_x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dot_matches_naive_sum() {
        let a: Vec<f64> = (0..11).map(|i| i as f64 * 0.5 - 2.0).collect();
        let b: Vec<f64> = (0..11).map(|i| (i * i) as f64 / 7.0).collect();
        let naive: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        assert!((dot(&a, &b) - naive).abs() < 1e-12);
    }

    #[test]
    fn ln_one_minus_exp_regimes() {
        assert_eq!(ln_one_minus_exp(0.0), f64::NEG_INFINITY);
        // tiny a: ln(1 - e^{-a}) ~ ln(a)
        let a = 1e-20;
        assert!((ln_one_minus_exp(a) - a.ln()).abs() < 1e-12);
        // large a: ~ -e^{-a}
        let a = 40.0;
        let expected = -(-a as f64).exp();
        assert!(((ln_one_minus_exp(a) - expected) / expected).abs() < 1e-12);
        // moderate: direct formula is fine here
        for a in [0.3, 0.69, 0.7, 2.0, 5.0] {
            let direct = (1.0 - (-a as f64).exp()).ln();
            assert!((ln_one_minus_exp(a) - direct).abs() < 1e-14, "a={a}");
        }
    }

    #[test]
    fn ln_one_minus_guards_at_one() {
        assert_eq!(ln_one_minus(0.0), f64::NEG_INFINITY);
        assert_eq!(ln_one_minus(0.5), f64::NEG_INFINITY);
        assert!((ln_one_minus(0.25f64.ln()) - 0.75f64.ln()).abs() < 1e-15);
    }
}
