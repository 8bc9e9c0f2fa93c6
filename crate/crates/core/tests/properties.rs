mod support;

use pcorder_core::data::Column;
use pcorder_core::detectors::{
    clear_grouping, density_change, fan, kde_density, neighborhood_probabilities, outliers,
    parallelism, pearson, skewness, std_dev,
};
use pcorder_core::windows::{make_windows, WindowSpec};
use proptest::prelude::*;

fn unit_vec(min: usize, max: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..=1.0, min..=max)
}

fn paired(min: usize, max: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (min..=max).prop_flat_map(|n| {
        (
            prop::collection::vec(0.0f64..=1.0, n),
            prop::collection::vec(0.0f64..=1.0, n),
        )
    })
}

fn shuffled<T: Clone>(v: &[T], perm: &[usize]) -> Vec<T> {
    perm.iter().map(|&i| v[i].clone()).collect()
}

fn perm_of(n: usize, key: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by_key(|&i| (i as u64).wrapping_mul(key | 1).rotate_left(17) ^ key);
    idx
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kl_family_is_nonnegative((xs, ys) in paired(2, 40)) {
        prop_assert!(density_change(&xs, &ys).unwrap() >= 0.0);
        prop_assert!(clear_grouping(&xs, &ys).unwrap() >= 0.0);
    }

    #[test]
    fn bounded_outputs((xs, ys) in paired(5, 40)) {
        let r = pearson(&xs, &ys).unwrap().r;
        prop_assert!((-1.0..=1.0).contains(&r));
        let p = parallelism(&xs, &ys).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
        let f = fan(&xs, &ys, 20).unwrap();
        prop_assert!((0.0..=1.0).contains(&f));
    }

    #[test]
    fn row_order_does_not_matter((xs, ys) in paired(5, 30), key in any::<u64>()) {
        let perm = perm_of(xs.len(), key);
        let (px, py) = (shuffled(&xs, &perm), shuffled(&ys, &perm));
        let tol = 1e-12;
        let a = pearson(&xs, &ys).unwrap();
        let b = pearson(&px, &py).unwrap();
        prop_assert!((a.r - b.r).abs() < tol);
        prop_assert!((a.covariance_numerator - b.covariance_numerator).abs() < tol);
        prop_assert!((skewness(&xs) - skewness(&px)).abs() < 1e-9);
        prop_assert_eq!(outliers(&xs), outliers(&px));
        prop_assert!((density_change(&xs, &ys).unwrap() - density_change(&px, &py).unwrap()).abs() < tol);
        prop_assert!((clear_grouping(&xs, &ys).unwrap() - clear_grouping(&px, &py).unwrap()).abs() < 1e-10);
        prop_assert_eq!(parallelism(&xs, &ys).unwrap(), parallelism(&px, &py).unwrap());
        prop_assert_eq!(fan(&xs, &ys, 20).unwrap(), fan(&px, &py, 20).unwrap());
    }

    #[test]
    fn marginal_detectors_ignore_secondary(xs in unit_vec(5, 30)) {
        // skewness and outliers only ever see the primary values
        let before = (skewness(&xs).to_bits(), outliers(&xs));
        let _ys: Vec<f64> = xs.iter().map(|x| 1.0 - x * x).collect();
        prop_assert_eq!(before, (skewness(&xs).to_bits(), outliers(&xs)));
    }

    #[test]
    fn kde_is_probability_vector(pts in unit_vec(5, 40), eval in unit_vec(1, 20)) {
        let h = std_dev(&pts).max(1e-3);
        let p = kde_density(&pts, &eval, h).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(p.iter().all(|v| v.is_finite() && *v >= 0.0));
    }

    #[test]
    fn neighbor_rows_are_stochastic(pts in unit_vec(2, 30)) {
        let m = neighborhood_probabilities(&pts, std_dev(&pts));
        for (i, row) in m.iter().enumerate() {
            prop_assert_eq!(row[i], 0.0);
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn normalization_is_idempotent(raw in prop::collection::vec(-1e6f64..1e6, 2..50)) {
        let once = Column::new("c", raw).unwrap();
        let twice = Column::new("c", once.normalized().to_vec()).unwrap();
        for (a, b) in once.normalized().iter().zip(twice.normalized()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        if !once.is_constant() {
            let n = once.normalized();
            prop_assert_eq!(n.iter().cloned().fold(f64::INFINITY, f64::min), 0.0);
            prop_assert_eq!(n.iter().cloned().fold(f64::NEG_INFINITY, f64::max), 1.0);
        }
    }

    #[test]
    fn windows_cover_and_match_brute_force(
        axis in unit_vec(1, 200),
        window in 0.05f64..=1.0,
        stride_share in 0.1f64..=1.0,
    ) {
        let spec = WindowSpec::new(window, window * stride_share).unwrap();
        let ws = make_windows(&axis, &spec);
        prop_assert_eq!(ws.first().unwrap().lo, 0.0);
        prop_assert_eq!(ws.last().unwrap().hi, 1.0);
        for pair in ws.windows(2) {
            prop_assert!(pair[0].lo < pair[1].lo);
            prop_assert!(pair[1].lo <= pair[0].hi);
        }
        let mut seen = vec![false; axis.len()];
        for w in &ws {
            let brute: Vec<usize> = (0..axis.len())
                .filter(|&r| w.lo <= axis[r] && axis[r] <= w.hi)
                .collect();
            prop_assert_eq!(&w.member_rows, &brute);
            for &r in &w.member_rows {
                seen[r] = true;
            }
        }
        prop_assert!(seen.into_iter().all(|s| s));
    }

    #[test]
    fn shrinking_window_never_adds_rows(axis in unit_vec(1, 100), w in 0.1f64..=1.0, shrink in 0.1f64..1.0) {
        let big = WindowSpec::new(w, w * 0.5).unwrap();
        let small = WindowSpec::new(w * shrink, w * shrink * 0.5).unwrap();
        let big_w = make_windows(&axis, &big);
        let small_w = make_windows(&axis, &small);
        for sw in &small_w {
            if let Some(bw) = big_w.iter().find(|b| b.lo == sw.lo) {
                for r in &sw.member_rows {
                    prop_assert!(bw.member_rows.contains(r));
                }
            }
        }
    }
}

#[test]
fn uniform_windows_hold_expected_share() {
    let mut r = support::rng(21);
    let axis = support::uniform(&mut r, 1000);
    let spec = WindowSpec::new(0.2, 0.1).unwrap();
    let ws = make_windows(&axis, &spec);
    assert_eq!(ws.len(), 9);
    for w in &ws {
        let brute = axis.iter().filter(|&&v| w.lo <= v && v <= w.hi).count();
        assert_eq!(w.len(), brute);
        assert!((150..=250).contains(&w.len()), "{}", w.len());
    }
}
