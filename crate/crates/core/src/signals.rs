//! Seeded generation of Gaussian sensing matrices and K-sparse test signals.
//!
//! Every random object is drawn from a [`KeyedStream`] obtained from a
//! [`StreamKey`]. A key is the triple `(master_seed, trial_index, purpose)`
//! and is expanded into a 256-bit ChaCha8 seed as
//!
//! ```text
//! word0 = splitmix64(master_seed)
//! word1 = splitmix64(trial_index ^ 0x9E37_79B9_7F4A_7C15)
//! word2 = splitmix64(purpose_code ^ 0xD1B5_4A32_D192_ED03)
//! word3 = 0x6F6D_702D_6C61_6221
//! ```
//!
//! Each word is a bijection of one key field, so distinct keys always give
//! distinct ChaCha seeds, and no generator state is ever shared between
//! trials. This is what makes results independent of the worker count.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const TRIAL_SALT: u64 = 0x9E37_79B9_7F4A_7C15;
const PURPOSE_SALT: u64 = 0xD1B5_4A32_D192_ED03;
const DOMAIN_WORD: u64 = 0x6F6D_702D_6C61_6221;

/// The finalizer of SplitMix64; a bijection on `u64`.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Purpose {
    Matrix,
    Support,
    Signal,
    PhiValidation,
}

impl Purpose {
    fn code(self) -> u64 {
        match self {
            Purpose::Matrix => 1,
            Purpose::Support => 2,
            Purpose::Signal => 3,
            Purpose::PhiValidation => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StreamKey {
    pub master_seed: u64,
    pub trial_index: u64,
    pub purpose: Purpose,
}

impl StreamKey {
    pub fn new(master_seed: u64, trial_index: u64, purpose: Purpose) -> Self {
        Self {
            master_seed,
            trial_index,
            purpose,
        }
    }

    /// Same seed and trial, different purpose.
    pub fn with_purpose(self, purpose: Purpose) -> Self {
        Self { purpose, ..self }
    }

    fn seed_bytes(&self) -> [u8; 32] {
        let words = [
            splitmix64(self.master_seed),
            splitmix64(self.trial_index ^ TRIAL_SALT),
            splitmix64(self.purpose.code() ^ PURPOSE_SALT),
            DOMAIN_WORD,
        ];
        let mut seed = [0u8; 32];
        for (chunk, w) in seed.chunks_exact_mut(8).zip(words) {
            chunk.copy_from_slice(&w.to_le_bytes());
        }
        seed
    }

    pub fn stream(&self) -> KeyedStream {
        KeyedStream {
            rng: ChaCha8Rng::from_seed(self.seed_bytes()),
        }
    }
}

/// A deterministic random stream bound to one [`StreamKey`].
#[derive(Debug, Clone)]
pub struct KeyedStream {
    rng: ChaCha8Rng,
}

impl KeyedStream {
    /// One standard normal variate (ziggurat transform of the uniform stream).
    #[inline]
    pub fn std_normal(&mut self) -> f64 {
        sample_std_normal(&mut self.rng)
    }

    /// Uniform integer in `0..bound`.
    #[inline]
    pub fn below(&mut self, bound: usize) -> usize {
        self.rng.random_range(0..bound)
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

#[inline]
pub fn sample_std_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Dense `rows x cols` matrix stored column-major, so `column(j)` is a
/// contiguous slice.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl SensingMatrix {
    pub fn from_column_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidDimension(format!(
                "matrix must be at least 1x1, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::InvalidDimension(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "matrix entries must be finite".into(),
            ));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::InvalidDimension("ragged columns".into()));
        }
        Self::from_column_major(rows, columns.len(), columns.concat())
    }

    pub fn identity(size: usize) -> Result<Self> {
        let mut data = vec![0.0; size * size];
        for i in 0..size {
            data[i * size + i] = 1.0;
        }
        Self::from_column_major(size, size, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.rows + i]
    }

    pub fn as_column_major(&self) -> &[f64] {
        &self.data
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.rows)
    }

    /// `A x` for a dense `x` of length `cols`.
    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::InvalidDimension(format!(
                "vector length {} does not match {} columns",
                x.len(),
                self.cols
            )));
        }
        let mut y = vec![0.0; self.rows];
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0.0 {
                crate::numeric::axpy(xj, self.column(j), &mut y);
            }
        }
        Ok(y)
    }
}

/// Draws an `m x n` matrix with i.i.d. N(0, 1/m) entries, filled in
/// column-major order from the key's stream.
pub fn sample_sensing_matrix(m: usize, n: usize, key: StreamKey) -> Result<SensingMatrix> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidDimension(format!(
            "sensing matrix needs m >= 1 and n >= 1, got m={m}, n={n}"
        )));
    }
    let scale = 1.0 / (m as f64).sqrt();
    let mut stream = key.stream();
    let data = (0..m * n).map(|_| scale * stream.std_normal()).collect();
    SensingMatrix::from_column_major(m, n, data)
}

/// A uniformly random `k`-subset of `0..n`, sorted ascending.
pub fn sample_support(n: usize, k: usize, key: StreamKey) -> Result<Vec<usize>> {
    if k == 0 || k > n {
        return Err(Error::InvalidSparsity(format!(
            "need 1 <= K <= n, got K={k}, n={n}"
        )));
    }
    let mut stream = key.stream();
    // Partial Fisher-Yates: the first k slots end up a uniform k-subset.
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = i + stream.below(n - i);
        pool.swap(i, j);
    }
    pool.truncate(k);
    pool.sort_unstable();
    Ok(pool)
}

/// The distribution of the nonzero magnitudes of a test signal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SignalCase {
    /// Every nonzero equals one.
    Flat,
    /// Nonzeros `alpha^(K-1), ..., alpha, 1` along ascending support index.
    Decaying { alpha: f64 },
    /// I.i.d. N(0, sigma^2) nonzeros.
    Gaussian { sigma: f64 },
}

impl SignalCase {
    pub fn decaying(alpha: f64) -> Result<Self> {
        let case = SignalCase::Decaying { alpha };
        case.validate()?;
        Ok(case)
    }

    pub fn gaussian(sigma: f64) -> Result<Self> {
        let case = SignalCase::Gaussian { sigma };
        case.validate()?;
        Ok(case)
    }

    /// The four signal classes of the reference experiment.
    pub fn standard_cases() -> [SignalCase; 4] {
        [
            SignalCase::Flat,
            SignalCase::Decaying { alpha: 1.1 },
            SignalCase::Decaying { alpha: 1.2 },
            SignalCase::Gaussian { sigma: 1.0 },
        ]
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            SignalCase::Flat => Ok(()),
            SignalCase::Decaying { alpha } if alpha > 1.0 && alpha.is_finite() => Ok(()),
            SignalCase::Decaying { alpha } => Err(Error::InvalidParameter(format!(
                "decaying signals need alpha > 1, got {alpha}"
            ))),
            SignalCase::Gaussian { sigma } if sigma > 0.0 && sigma.is_finite() => Ok(()),
            SignalCase::Gaussian { sigma } => Err(Error::InvalidParameter(format!(
                "gaussian signals need sigma > 0, got {sigma}"
            ))),
        }
    }
}

impl fmt::Display for SignalCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            SignalCase::Flat => write!(f, "flat"),
            SignalCase::Decaying { alpha } if alpha == 1.1 => write!(f, "decay11"),
            SignalCase::Decaying { alpha } if alpha == 1.2 => write!(f, "decay12"),
            SignalCase::Decaying { alpha } => write!(f, "decay({alpha})"),
            SignalCase::Gaussian { sigma } if sigma == 1.0 => write!(f, "gauss"),
            SignalCase::Gaussian { sigma } => write!(f, "gauss({sigma})"),
        }
    }
}

impl FromStr for SignalCase {
    type Err = Error;

    /// Accepts `flat`, `decay11`, `decay12`, `gauss`, and the general forms
    /// `decay(<alpha>)`, `gauss(<sigma>)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let param = |prefix: &str| -> Option<Result<f64>> {
            let inner = s.strip_prefix(prefix)?.strip_prefix('(')?.strip_suffix(')')?;
            Some(inner.trim().parse::<f64>().map_err(|e| {
                Error::InvalidParameter(format!("bad parameter in {s:?}: {e}"))
            }))
        };
        match s {
            "flat" => Ok(SignalCase::Flat),
            "decay11" => Ok(SignalCase::Decaying { alpha: 1.1 }),
            "decay12" => Ok(SignalCase::Decaying { alpha: 1.2 }),
            "gauss" => Ok(SignalCase::Gaussian { sigma: 1.0 }),
            _ => {
                if let Some(alpha) = param("decay") {
                    SignalCase::decaying(alpha?)
                } else if let Some(sigma) = param("gauss") {
                    SignalCase::gaussian(sigma?)
                } else {
                    Err(Error::InvalidParameter(format!(
                        "unknown signal case {s:?} (expected flat, decay11, decay12, gauss, decay(a) or gauss(s))"
                    )))
                }
            }
        }
    }
}

/// A length-`n` vector whose nonzeros sit exactly on `support`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSignal {
    values: Vec<f64>,
    support: Vec<usize>,
}

impl SparseSignal {
    /// Builds a signal from dense values, taking the support to be the
    /// nonzero positions.
    pub fn from_dense(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidDimension("signal length must be >= 1".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("signal values must be finite".into()));
        }
        let support = values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, _)| i)
            .collect();
        Ok(Self { values, support })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn sparsity(&self) -> usize {
        self.support.len()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The nonzero values in ascending support order.
    pub fn nonzeros(&self) -> Vec<f64> {
        self.support.iter().map(|&i| self.values[i]).collect()
    }
}

/// Places the nonzeros of `case` on `support` (which must be sorted and
/// distinct). Only the Gaussian case consumes randomness from `key`.
pub fn generate_signal(
    n: usize,
    support: &[usize],
    case: SignalCase,
    key: StreamKey,
) -> Result<SparseSignal> {
    case.validate()?;
    let k = support.len();
    if k == 0 {
        return Err(Error::InvalidSparsity("support must be nonempty".into()));
    }
    if k > n || support.iter().any(|&i| i >= n) {
        return Err(Error::InvalidSparsity(format!(
            "support does not fit in a length-{n} signal"
        )));
    }
    if support.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidSparsity(
            "support must be strictly ascending".into(),
        ));
    }

    let mut values = vec![0.0; n];
    match case {
        SignalCase::Flat => {
            for &i in support {
                values[i] = 1.0;
            }
        }
        SignalCase::Decaying { alpha } => {
            for (pos, &i) in support.iter().enumerate() {
                values[i] = alpha.powi((k - 1 - pos) as i32);
            }
        }
        SignalCase::Gaussian { sigma } => {
            let mut stream = key.stream();
            for &i in support {
                // A zero draw would break the support invariant; it has
                // probability zero but is cheap to rule out.
                let mut v = 0.0;
                while v == 0.0 {
                    v = sigma * stream.std_normal();
                }
                values[i] = v;
            }
        }
    }
    Ok(SparseSignal {
        values,
        support: support.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key(trial: u64, purpose: Purpose) -> StreamKey {
        StreamKey::new(0xC0FFEE, trial, purpose)
    }

    #[test]
    fn matrix_is_deterministic() {
        let a = sample_sensing_matrix(4, 8, key(0, Purpose::Matrix)).unwrap();
        let b = sample_sensing_matrix(4, 8, key(0, Purpose::Matrix)).unwrap();
        assert_eq!(a, b);
        let c = sample_sensing_matrix(4, 8, key(1, Purpose::Matrix)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn matrix_rejects_zero_dimensions() {
        assert!(matches!(
            sample_sensing_matrix(0, 8, key(0, Purpose::Matrix)),
            Err(Error::InvalidDimension(_))
        ));
        assert!(matches!(
            sample_sensing_matrix(3, 0, key(0, Purpose::Matrix)),
            Err(Error::InvalidDimension(_))
        ));
    }

    #[test]
    fn every_key_field_changes_the_stream() {
        let base = StreamKey::new(1, 2, Purpose::Matrix);
        let first = |k: StreamKey| k.stream().std_normal();
        let x = first(base);
        assert_eq!(x, first(base));
        assert_ne!(x, first(StreamKey::new(2, 2, Purpose::Matrix)));
        assert_ne!(x, first(StreamKey::new(1, 3, Purpose::Matrix)));
        assert_ne!(x, first(base.with_purpose(Purpose::Signal)));
    }

    #[test]
    fn full_support_is_forced() {
        for t in 0..20 {
            assert_eq!(
                sample_support(5, 5, key(t, Purpose::Support)).unwrap(),
                vec![0, 1, 2, 3, 4]
            );
        }
    }

    #[test]
    fn support_cardinality_and_range() {
        let s = sample_support(1024, 15, key(0, Purpose::Support)).unwrap();
        assert_eq!(s.len(), 15);
        assert!(s.windows(2).all(|w| w[0] < w[1]));
        assert!(s.iter().all(|&i| i < 1024));
    }

    #[test]
    fn support_rejects_bad_sparsity() {
        assert!(matches!(
            sample_support(4, 5, key(0, Purpose::Support)),
            Err(Error::InvalidSparsity(_))
        ));
        assert!(matches!(
            sample_support(4, 0, key(0, Purpose::Support)),
            Err(Error::InvalidSparsity(_))
        ));
    }

    #[test]
    fn flat_signal() {
        let x = generate_signal(6, &[1, 3, 4], SignalCase::Flat, key(0, Purpose::Signal)).unwrap();
        assert_eq!(x.nonzeros(), vec![1.0, 1.0, 1.0]);
        assert_eq!(x.values(), &[0.0, 1.0, 0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn decaying_signal_uses_direct_powers() {
        let x = generate_signal(
            5,
            &[0, 2, 4],
            SignalCase::Decaying { alpha: 1.2 },
            key(0, Purpose::Signal),
        )
        .unwrap();
        assert_eq!(x.nonzeros(), vec![1.2f64.powi(2), 1.2, 1.0]);
        assert!((x.nonzeros()[0] - 1.44).abs() < 1e-15);
    }

    #[test]
    fn gaussian_signal_is_reproducible() {
        let k0 = key(9, Purpose::Signal);
        let case = SignalCase::Gaussian { sigma: 1.0 };
        let a = generate_signal(10, &[2, 7], case, k0).unwrap();
        let b = generate_signal(10, &[2, 7], case, k0).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.support(), &[2, 7]);
        assert!(a.nonzeros().iter().all(|v| v.is_finite() && *v != 0.0));
    }

    #[test]
    fn empty_support_is_rejected() {
        assert!(matches!(
            generate_signal(4, &[], SignalCase::Flat, key(0, Purpose::Signal)),
            Err(Error::InvalidSparsity(_))
        ));
    }

    #[test]
    fn case_validation() {
        assert!(SignalCase::decaying(1.0).is_err());
        assert!(SignalCase::decaying(0.5).is_err());
        assert!(SignalCase::gaussian(0.0).is_err());
        assert!(SignalCase::gaussian(2.0).is_ok());
    }

    #[test]
    fn case_labels_round_trip() {
        for case in SignalCase::standard_cases()
            .into_iter()
            .chain([SignalCase::Decaying { alpha: 2.5 }, SignalCase::Gaussian { sigma: 3.0 }])
        {
            let parsed: SignalCase = case.to_string().parse().unwrap();
            assert_eq!(parsed, case);
        }
        assert!("decay(0.9)".parse::<SignalCase>().is_err());
        assert!("uniform".parse::<SignalCase>().is_err());
    }
}
