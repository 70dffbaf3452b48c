use omp_lab::numeric::dot;
use omp_lab::omp::{brute_force_best_support, check_exact_recovery, run_omp, EXACT_RECOVERY_TOLERANCE};
use omp_lab::signals::{
    generate_signal, sample_sensing_matrix, sample_support, Purpose, SensingMatrix, SignalCase,
    StreamKey,
};
use proptest::prelude::*;

fn instance(m: usize, n: usize, k: usize, seed: u64, case: SignalCase) -> (SensingMatrix, omp_lab::SparseSignal, Vec<f64>) {
    let key = StreamKey::new(seed, 0, Purpose::Matrix);
    let a = sample_sensing_matrix(m, n, key).unwrap();
    let support = sample_support(n, k, key.with_purpose(Purpose::Support)).unwrap();
    let x = generate_signal(n, &support, case, key.with_purpose(Purpose::Signal)).unwrap();
    let y = a.mul_vec(x.values()).unwrap();
    (a, x, y)
}

#[test]
fn omp_agrees_with_exhaustive_search_on_small_instances() {
    let mut recovered = 0;
    for seed in 0..100 {
        let (a, x, y) = instance(6, 10, 2, seed, SignalCase::Gaussian { sigma: 1.0 });
        let omp = run_omp(&a, &y, 2).unwrap();
        let bf = brute_force_best_support(&a, &y, 2).unwrap();
        assert_eq!(bf.support, x.support(), "seed {seed}: truth is the unique zero-residual support");
        assert!(bf.residual_norm < 1e-12);
        if *omp.residual_norms.last().unwrap() <= 1e-10 {
            let mut sel = omp.selected.clone();
            sel.sort_unstable();
            assert_eq!(sel, bf.support, "seed {seed}");
            recovered += 1;
        }
    }
    assert!(recovered > 20);
}

#[test]
fn orthonormal_columns_recover_every_sparse_signal() {
    // Columns of a 8x8 Haar-like orthonormal basis.
    let raw = [
        [1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0],
        [1.0, 1.0, 1.0, 1.0, -1.0, -1.0, -1.0, -1.0],
        [1.0, 1.0, -1.0, -1.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 1.0, 1.0, -1.0, -1.0],
        [1.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, -1.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 1.0, -1.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, -1.0],
    ];
    let cols: Vec<Vec<f64>> = raw
        .iter()
        .map(|c| {
            let norm = dot(c, c).sqrt();
            c.iter().map(|v| v / norm).collect()
        })
        .collect();
    let a = SensingMatrix::from_columns(&cols).unwrap();
    for seed in 0..50 {
        for k in 1..=8 {
            let support = sample_support(8, k, StreamKey::new(seed, k as u64, Purpose::Support)).unwrap();
            let x = generate_signal(8, &support, SignalCase::Gaussian { sigma: 2.0 }, StreamKey::new(seed, k as u64, Purpose::Signal))
                .unwrap();
            let y = a.mul_vec(x.values()).unwrap();
            let res = run_omp(&a, &y, k).unwrap();
            for (e, t) in res.estimate.iter().zip(x.values()) {
                assert!((e - t).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn recovery_indicator_matches_error_norm() {
    for seed in 0..100 {
        let (a, x, y) = instance(6, 10, 2, 1000 + seed, SignalCase::Flat);
        let res = run_omp(&a, &y, 2).unwrap();
        let err = res
            .estimate
            .iter()
            .zip(x.values())
            .map(|(e, t)| (e - t) * (e - t))
            .sum::<f64>()
            .sqrt();
        assert_eq!(check_exact_recovery(&res.estimate, &x, EXACT_RECOVERY_TOLERANCE), err <= 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn residual_is_orthogonal_and_shrinking(seed in any::<u64>(), m in 4usize..40, extra in 0usize..40, iters in 1usize..12) {
        let n = m + extra;
        let key = StreamKey::new(seed, 0, Purpose::Matrix);
        let a = sample_sensing_matrix(m, n, key).unwrap();
        let mut s = key.with_purpose(Purpose::Signal).stream();
        let y: Vec<f64> = (0..m).map(|_| s.std_normal()).collect();
        let iters = iters.min(m);
        let res = run_omp(&a, &y, iters).unwrap();
        let y_norm = dot(&y, &y).sqrt();

        let mut sel = res.selected.clone();
        sel.sort_unstable();
        sel.dedup();
        prop_assert_eq!(sel.len(), res.selected.len());
        prop_assert!(res.residual_norms.windows(2).all(|w| w[1] <= w[0]));

        let mut r = y.clone();
        for (j, xj) in res.estimate.iter().enumerate() {
            if *xj != 0.0 {
                for (ri, aij) in r.iter_mut().zip(a.column(j)) {
                    *ri -= xj * aij;
                }
            }
        }
        for &j in &res.selected {
            let col = a.column(j);
            prop_assert!(dot(&r, col).abs() <= 1e-8 * y_norm * dot(col, col).sqrt());
        }
        for j in 0..n {
            if !res.selected.contains(&j) {
                prop_assert_eq!(res.estimate[j], 0.0);
            }
        }
    }

    #[test]
    fn positive_rescaling_is_equivariant(seed in any::<u64>(), scale in 1e-3f64..1e3) {
        let (a, _, y) = instance(20, 60, 5, seed, SignalCase::Gaussian { sigma: 1.0 });
        let scaled: Vec<f64> = y.iter().map(|v| v * scale).collect();
        let r1 = run_omp(&a, &y, 5).unwrap();
        let r2 = run_omp(&a, &scaled, 5).unwrap();
        prop_assert_eq!(&r1.selected, &r2.selected);
        for (u, v) in r1.estimate.iter().zip(&r2.estimate) {
            prop_assert!((u * scale - v).abs() <= 1e-9 * (1.0 + v.abs()));
        }
    }
}
