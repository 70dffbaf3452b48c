//! Orthogonal matching pursuit with an incrementally grown QR factorization
//! of the selected columns, and an exhaustive-search oracle for small
//! instances.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::{axpy, dot, norm2};
use crate::signals::{SensingMatrix, SparseSignal};

/// `||x_hat - x||_2` at or below this counts as exact recovery.
pub const EXACT_RECOVERY_TOLERANCE: f64 = 1e-10;

/// Pursuit stops early once `||r|| <= EARLY_EXIT_RATIO * ||y||`.
pub const EARLY_EXIT_RATIO: f64 = 1e-12;

/// A new column whose component orthogonal to the current basis is shorter
/// than this fraction of its own norm is treated as linearly dependent.
pub const DEGENERACY_RATIO: f64 = 1e-12;

const MAX_BRUTE_FORCE_SUPPORTS: u64 = 1_000_000;

/// Least-squares fit of `y` over a growing set of columns.
///
/// Holds `A_S = Q R` with orthonormal `Q` (column-major, `m x k`), upper
/// triangular `R`, the projections `Q^T y`, and the residual
/// `y - Q Q^T y`. Each new column costs `O(m k)`.
#[derive(Debug, Clone)]
pub struct LeastSquaresState {
    rows: usize,
    basis: Vec<f64>,
    /// Column `j` of `R`, entries `0..=j`.
    r_columns: Vec<Vec<f64>>,
    projections: Vec<f64>,
    residual: Vec<f64>,
}

impl LeastSquaresState {
    pub fn new(y: &[f64]) -> Self {
        Self {
            rows: y.len(),
            basis: Vec::new(),
            r_columns: Vec::new(),
            projections: Vec::new(),
            residual: y.to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        self.r_columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r_columns.is_empty()
    }

    pub fn basis_vector(&self, j: usize) -> &[f64] {
        &self.basis[j * self.rows..(j + 1) * self.rows]
    }

    pub fn residual(&self) -> &[f64] {
        &self.residual
    }

    pub fn residual_norm(&self) -> f64 {
        norm2(&self.residual)
    }

    /// Appends `column`, orthogonalizing it against the basis with classical
    /// Gram-Schmidt plus one re-orthogonalization pass, and updates the
    /// residual. `iteration` and `index` only label a degeneracy error.
    pub fn push_column(&mut self, column: &[f64], iteration: usize, index: usize) -> Result<()> {
        if column.len() != self.rows {
            return Err(Error::InvalidDimension(format!(
                "column length {} does not match {} rows",
                column.len(),
                self.rows
            )));
        }
        let k = self.len();
        let mut v = column.to_vec();
        let mut r_col = vec![0.0; k + 1];
        for _pass in 0..2 {
            let h: Vec<f64> = (0..k).map(|j| dot(self.basis_vector(j), &v)).collect();
            for (j, hj) in h.into_iter().enumerate() {
                let q = &self.basis[j * self.rows..(j + 1) * self.rows];
                axpy(-hj, q, &mut v);
                r_col[j] += hj;
            }
        }
        let col_norm = norm2(column);
        let ortho_norm = norm2(&v);
        if col_norm == 0.0 || ortho_norm < DEGENERACY_RATIO * col_norm {
            return Err(Error::DegenerateSelection {
                iteration,
                column: index,
            });
        }
        v.iter_mut().for_each(|x| *x /= ortho_norm);
        r_col[k] = ortho_norm;

        let z = dot(&v, &self.residual);
        axpy(-z, &v, &mut self.residual);
        self.basis.extend_from_slice(&v);
        self.r_columns.push(r_col);
        self.projections.push(z);
        Ok(())
    }

    /// Solves `R c = Q^T y`; `c[j]` is the coefficient of the `j`-th pushed
    /// column.
    pub fn coefficients(&self) -> Vec<f64> {
        let k = self.len();
        let mut c = self.projections.clone();
        for j in (0..k).rev() {
            c[j] /= self.r_columns[j][j];
            let cj = c[j];
            for (i, ci) in c.iter_mut().enumerate().take(j) {
                *ci -= self.r_columns[j][i] * cj;
            }
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OmpResult {
    /// Chosen columns in selection order.
    pub selected: Vec<usize>,
    /// Length-`n` least-squares estimate supported on `selected`.
    pub estimate: Vec<f64>,
    /// `||r^k||_2` for `k = 0..=iterations`.
    pub residual_norms: Vec<f64>,
    pub iterations: usize,
}

/// Runs OMP for `max_iterations` selections, or fewer if the residual
/// vanishes relative to `||y||`. Each step picks the column with the largest
/// `|<r, A_i>|` (smallest index on ties) and re-fits `y` by least squares on
/// every selected column.
pub fn run_omp(a: &SensingMatrix, y: &[f64], max_iterations: usize) -> Result<OmpResult> {
    let (m, n) = (a.rows(), a.cols());
    if y.len() != m {
        return Err(Error::InvalidDimension(format!(
            "measurement length {} does not match {m} rows",
            y.len()
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("measurements must be finite".into()));
    }
    if max_iterations > m.min(n) {
        return Err(Error::InvalidParameter(format!(
            "max_iterations={max_iterations} exceeds min(m, n)={}",
            m.min(n)
        )));
    }

    let y_norm = norm2(y);
    let stop_below = EARLY_EXIT_RATIO * y_norm;
    let mut state = LeastSquaresState::new(y);
    let mut taken = vec![false; n];
    let mut selected = Vec::with_capacity(max_iterations);
    let mut residual_norms = Vec::with_capacity(max_iterations + 1);
    residual_norms.push(y_norm);

    while selected.len() < max_iterations && residual_norms[residual_norms.len() - 1] > stop_below {
        let residual = state.residual();
        let mut best = None;
        let mut best_corr = -1.0;
        for (j, col) in a.columns().enumerate() {
            // Selected columns are orthogonal to the residual.
            if taken[j] {
                continue;
            }
            let corr = dot(col, residual).abs();
            if corr > best_corr {
                best_corr = corr;
                best = Some(j);
            }
        }
        let Some(j) = best else { break };
        state.push_column(a.column(j), selected.len() + 1, j)?;
        taken[j] = true;
        selected.push(j);
        residual_norms.push(state.residual_norm());
    }

    let mut estimate = vec![0.0; n];
    for (&j, c) in selected.iter().zip(state.coefficients()) {
        estimate[j] = c;
    }
    Ok(OmpResult {
        iterations: selected.len(),
        selected,
        estimate,
        residual_norms,
    })
}

/// True iff `||estimate - truth||_2 <= tolerance`. Length mismatch is never
/// a recovery.
pub fn check_exact_recovery(estimate: &[f64], truth: &SparseSignal, tolerance: f64) -> bool {
    if estimate.len() != truth.len() {
        return false;
    }
    let err: f64 = estimate
        .iter()
        .zip(truth.values())
        .map(|(e, t)| (e - t) * (e - t))
        .sum::<f64>()
        .sqrt();
    err <= tolerance
}

#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceResult {
    pub support: Vec<usize>,
    pub estimate: Vec<f64>,
    pub residual_norm: f64,
}

/// `C(n, k)`, saturating at `u64::MAX`.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// Exhaustive minimization of `||y - A_S c||_2` over every `k`-subset `S`
/// (lexicographic order, first minimum wins). Uses the normal equations with
/// partial-pivot elimination, independent of the QR path in [`run_omp`].
/// Subsets whose Gram matrix is numerically singular are skipped.
pub fn brute_force_best_support(a: &SensingMatrix, y: &[f64], k: usize) -> Result<BruteForceResult> {
    let (m, n) = (a.rows(), a.cols());
    if y.len() != m {
        return Err(Error::InvalidDimension(format!(
            "measurement length {} does not match {m} rows",
            y.len()
        )));
    }
    if k == 0 || k > n {
        return Err(Error::InvalidSparsity(format!("need 1 <= K <= n, got K={k}, n={n}")));
    }
    if binomial(n, k) > MAX_BRUTE_FORCE_SUPPORTS {
        return Err(Error::InstanceTooLarge {
            n,
            k,
            limit: MAX_BRUTE_FORCE_SUPPORTS,
        });
    }

    let mut best: Option<(Vec<usize>, Vec<f64>, f64)> = None;
    let mut subset: Vec<usize> = (0..k).collect();
    loop {
        if let Some(coef) = solve_normal_equations(a, y, &subset) {
            let mut r = y.to_vec();
            for (&j, &c) in subset.iter().zip(&coef) {
                axpy(-c, a.column(j), &mut r);
            }
            let res = norm2(&r);
            if best.as_ref().is_none_or(|(_, _, b)| res < *b) {
                best = Some((subset.clone(), coef, res));
            }
        }
        if !next_combination(&mut subset, n) {
            break;
        }
    }

    let (support, coef, residual_norm) = best.ok_or_else(|| {
        Error::InvalidParameter("every candidate support is rank deficient".into())
    })?;
    let mut estimate = vec![0.0; n];
    for (&j, c) in support.iter().zip(coef) {
        estimate[j] = c;
    }
    Ok(BruteForceResult {
        support,
        estimate,
        residual_norm,
    })
}

fn next_combination(subset: &mut [usize], n: usize) -> bool {
    let k = subset.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if subset[i] < n - k + i {
            subset[i] += 1;
            for j in i + 1..k {
                subset[j] = subset[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn solve_normal_equations(a: &SensingMatrix, y: &[f64], subset: &[usize]) -> Option<Vec<f64>> {
    let k = subset.len();
    let mut g = vec![vec![0.0; k + 1]; k];
    for (r, &i) in subset.iter().enumerate() {
        for (c, &j) in subset.iter().enumerate() {
            g[r][c] = dot(a.column(i), a.column(j));
        }
        g[r][k] = dot(a.column(i), y);
    }
    let scale = (0..k).map(|i| g[i][i]).fold(0.0, f64::max);
    for col in 0..k {
        let pivot = (col..k).max_by(|&p, &q| g[p][col].abs().total_cmp(&g[q][col].abs()))?;
        if g[pivot][col].abs() <= 1e-13 * scale {
            return None;
        }
        g.swap(col, pivot);
        for row in col + 1..k {
            let f = g[row][col] / g[col][col];
            for c in col..=k {
                g[row][c] -= f * g[col][c];
            }
        }
    }
    let mut x = vec![0.0; k];
    for row in (0..k).rev() {
        let s: f64 = (row + 1..k).map(|c| g[row][c] * x[c]).sum();
        x[row] = (g[row][k] - s) / g[row][row];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::{sample_sensing_matrix, Purpose, StreamKey};

    fn gaussian(m: usize, n: usize, trial: u64) -> SensingMatrix {
        sample_sensing_matrix(m, n, StreamKey::new(17, trial, Purpose::Matrix)).unwrap()
    }

    #[test]
    fn identity_recovers_in_magnitude_order() {
        let a = SensingMatrix::identity(6).unwrap();
        let x = vec![0.0, -3.0, 0.0, 0.5, 2.0, 0.0];
        let res = run_omp(&a, &x, 3).unwrap();
        assert_eq!(res.selected, vec![1, 4, 3]);
        assert_eq!(res.estimate, x);
    }

    #[test]
    fn orthogonal_columns_recover_exactly() {
        // Scaled Hadamard columns: orthonormal.
        let h = [
            [1.0, 1.0, 1.0, 1.0],
            [1.0, -1.0, 1.0, -1.0],
            [1.0, 1.0, -1.0, -1.0],
            [1.0, -1.0, -1.0, 1.0],
        ];
        let cols: Vec<Vec<f64>> = h.iter().map(|c| c.iter().map(|v| v / 2.0).collect()).collect();
        let a = SensingMatrix::from_columns(&cols).unwrap();
        let x = vec![0.7, 0.0, -1.3, 0.2];
        let y = a.mul_vec(&x).unwrap();
        let res = run_omp(&a, &y, 3).unwrap();
        for (e, t) in res.estimate.iter().zip(&x) {
            assert!((e - t).abs() < 1e-12);
        }
    }

    #[test]
    fn ties_go_to_the_smallest_index() {
        let a = SensingMatrix::identity(3).unwrap();
        let res = run_omp(&a, &[1.0, -1.0, 1.0], 1).unwrap();
        assert_eq!(res.selected, vec![0]);
    }

    #[test]
    fn one_column_exact_fit() {
        let col = vec![1.0, -2.0, 0.5];
        let y: Vec<f64> = col.iter().map(|v| 2.0 * v).collect();
        let mut state = LeastSquaresState::new(&y);
        state.push_column(&col, 1, 0).unwrap();
        assert!(state.residual_norm() < 1e-14);
        assert!((state.coefficients()[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn orthogonal_columns_give_individual_projections() {
        let a1 = vec![1.0, 1.0, 0.0, 0.0];
        let a2 = vec![0.0, 0.0, 2.0, -2.0];
        let y = vec![3.0, 1.0, 5.0, 0.5];
        let mut state = LeastSquaresState::new(&y);
        state.push_column(&a1, 1, 0).unwrap();
        state.push_column(&a2, 2, 1).unwrap();
        let c = state.coefficients();
        assert!((c[0] - dot(&y, &a1) / dot(&a1, &a1)).abs() < 1e-14);
        assert!((c[1] - dot(&y, &a2) / dot(&a2, &a2)).abs() < 1e-14);
    }

    #[test]
    fn dependent_column_is_degenerate() {
        let y = vec![1.0, 2.0, 3.0];
        let mut state = LeastSquaresState::new(&y);
        state.push_column(&[1.0, 0.0, 1.0], 1, 4).unwrap();
        let err = state.push_column(&[2.0, 0.0, 2.0], 2, 9).unwrap_err();
        assert_eq!(err, Error::DegenerateSelection { iteration: 2, column: 9 });
        assert!(state.push_column(&[0.0, 0.0, 0.0], 2, 1).is_err());
    }

    #[test]
    fn duplicated_matrix_column_surfaces_as_degenerate_selection() {
        let a = SensingMatrix::from_columns(&[
            vec![1.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
        ])
        .unwrap();
        // After column 0 the residual is orthogonal to column 1, so column 1
        // can only be picked when nothing better remains.
        let res = run_omp(&a, &[1.0, 1.0, 0.0], 2).unwrap();
        assert_eq!(res.selected, vec![0, 2]);
        let err = run_omp(&a, &[1.0, 1.0, 1.0], 3).unwrap_err();
        assert!(matches!(err, Error::DegenerateSelection { iteration: 3, column: 1 }));
    }

    #[test]
    fn least_squares_matches_dense_solve() {
        let a = gaussian(5, 3, 1);
        let y = vec![0.3, -1.2, 0.8, 2.0, -0.4];
        let mut state = LeastSquaresState::new(&y);
        for j in 0..3 {
            state.push_column(a.column(j), j + 1, j).unwrap();
        }
        let dense = solve_normal_equations(&a, &y, &[0, 1, 2]).unwrap();
        let c = state.coefficients();
        for (u, v) in c.iter().zip(&dense) {
            assert!((u - v).abs() < 1e-10);
        }
        let mut r = y.clone();
        for (j, &cj) in dense.iter().enumerate() {
            axpy(-cj, a.column(j), &mut r);
        }
        for (u, v) in state.residual().iter().zip(&r) {
            assert!((u - v).abs() < 1e-10);
        }
        for j in 0..2 {
            for i in 0..=j {
                let d = dot(state.basis_vector(i), state.basis_vector(j));
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((d - expect).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn zero_measurement_stops_immediately() {
        let a = gaussian(4, 6, 2);
        let res = run_omp(&a, &[0.0; 4], 3).unwrap();
        assert_eq!(res.iterations, 0);
        assert!(res.estimate.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn early_exit_once_residual_vanishes() {
        let a = gaussian(20, 40, 3);
        let mut x = vec![0.0; 40];
        x[5] = 1.0;
        let y = a.mul_vec(&x).unwrap();
        let res = run_omp(&a, &y, 10).unwrap();
        assert_eq!(res.iterations, 1);
        assert_eq!(res.selected, vec![5]);
    }

    #[test]
    fn rejects_bad_arguments() {
        let a = gaussian(4, 6, 4);
        assert!(run_omp(&a, &[1.0; 3], 1).is_err());
        assert!(run_omp(&a, &[1.0; 4], 5).is_err());
        assert!(run_omp(&a, &[1.0, f64::NAN, 0.0, 0.0], 1).is_err());
    }

    #[test]
    fn recovery_threshold() {
        let truth = SparseSignal::from_dense(vec![0.0, 1.0, 0.0, 2.0]).unwrap();
        let t = EXACT_RECOVERY_TOLERANCE;
        assert!(check_exact_recovery(truth.values(), &truth, t));
        assert!(!check_exact_recovery(&[0.0, 1.0 + 1e-9, 0.0, 2.0], &truth, t));
        assert!(check_exact_recovery(&[0.0, 1.0 + 1e-11, 0.0, 2.0], &truth, t));
        assert!(!check_exact_recovery(&[0.0, 1.0, 0.0], &truth, t));
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(10, 2), 45);
        assert_eq!(binomial(1024, 1), 1024);
        assert_eq!(binomial(5, 6), 0);
        assert_eq!(binomial(1024, 15), u64::MAX);
    }

    #[test]
    fn brute_force_one_sparse() {
        let mut agreed = 0;
        for trial in 0..50 {
            let a = gaussian(2, 3, 100 + trial);
            let x = vec![0.0, 0.0, 1.5];
            let y = a.mul_vec(&x).unwrap();
            let bf = brute_force_best_support(&a, &y, 1).unwrap();
            assert_eq!(bf.support, vec![2]);
            assert!(bf.residual_norm < 1e-14);
            // Unnormalized correlations can favor a longer wrong column, so
            // OMP only has to agree when it actually fits y.
            let omp = run_omp(&a, &y, 1).unwrap();
            if omp.residual_norms[1] <= 1e-12 {
                assert_eq!(omp.selected, bf.support);
                assert!((omp.estimate[2] - bf.estimate[2]).abs() < 1e-12);
                agreed += 1;
            }
        }
        assert!(agreed > 10, "only {agreed} successful instances");
    }

    #[test]
    fn brute_force_guard() {
        let a = gaussian(3, 40, 6);
        assert!(matches!(
            brute_force_best_support(&a, &[0.0; 3], 10),
            Err(Error::InstanceTooLarge { .. })
        ));
    }

    #[test]
    fn combinations_are_lexicographic() {
        let mut s = vec![0, 1];
        let mut all = vec![s.clone()];
        while next_combination(&mut s, 4) {
            all.push(s.clone());
        }
        assert_eq!(all, vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]);
    }
}
