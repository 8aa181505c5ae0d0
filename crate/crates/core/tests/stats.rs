use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use regula_core::stats::*;

#[test]
fn a12_reference_cases() {
    let e = a12(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
    assert_eq!((e.a12, e.magnitude), (0.5, Magnitude::Negligible));
    let e = a12(&[4.0, 5.0, 6.0], &[1.0, 2.0, 3.0]).unwrap();
    assert_eq!((e.a12, e.scaled, e.magnitude), (1.0, 1.0, Magnitude::Large));
    assert_eq!(a12(&[1.0, 3.0], &[2.0, 2.0]).unwrap().a12, 0.5);
    assert!(a12(&[], &[1.0]).is_err());
}

#[test]
fn magnitude_boundaries() {
    for (s, m) in [
        (0.0, Magnitude::Negligible),
        (0.146_999_999, Magnitude::Negligible),
        (0.147, Magnitude::Small),
        (-0.147, Magnitude::Small),
        (0.329_999_999, Magnitude::Small),
        (0.33, Magnitude::Medium),
        (0.473_999_999, Magnitude::Medium),
        (0.474, Magnitude::Large),
        (-1.0, Magnitude::Large),
    ] {
        assert_eq!(Magnitude::of_scaled(s), m, "{s}");
    }
}

/// Textbook form for untied data: 12 / (N k (k+1)) * sum R_j^2 - 3 N (k+1),
/// with ranks assigned by counting smaller values in the row.
fn hand_friedman(m: &[Vec<f64>]) -> f64 {
    let n = m.len() as f64;
    let k = m[0].len();
    let mut sums = vec![0.0; k];
    for row in m {
        for j in 0..k {
            sums[j] += 1.0 + row.iter().filter(|v| **v < row[j]).count() as f64;
        }
    }
    let kf = k as f64;
    12.0 / (n * kf * (kf + 1.0)) * sums.iter().map(|r| r * r).sum::<f64>() - 3.0 * n * (kf + 1.0)
}

#[test]
fn friedman_matches_hand_ranks_on_fixture() {
    let m = vec![
        vec![7.0, 9.0, 8.0],
        vec![6.0, 5.0, 7.0],
        vec![9.0, 7.0, 6.0],
        vec![8.0, 5.0, 6.0],
    ];
    let r = friedman_test(&m, 12).unwrap();
    assert!((r.statistic - hand_friedman(&m)).abs() < 1e-9);
    assert!((r.statistic - 0.5).abs() < 1e-9);
    assert!(r.exact && r.p_value > 0.5 && r.p_value <= 1.0);
    assert_eq!(r.df, 2);
}

#[test]
fn friedman_tie_case_and_errors() {
    let m = vec![vec![3.0, 3.0, 3.0], vec![1.0, 1.0, 1.0], vec![2.0, 2.0, 2.0]];
    let r = friedman_test(&m, 12).unwrap();
    assert_eq!((r.statistic, r.p_value), (0.0, 1.0));
    assert!(matches!(
        friedman_test(&[vec![1.0, 2.0], vec![1.0]], 12),
        Err(StatError::Incomplete(1))
    ));
    assert!(friedman_test(&[vec![1.0, 2.0]], 12).is_err());
}

#[test]
fn exact_p_matches_sign_test_for_two_by_two() {
    let r = friedman_test(&[vec![2.0, 1.0], vec![5.0, 3.0]], 12).unwrap();
    assert!((r.statistic - 2.0).abs() < 1e-12);
    assert_eq!(r.p_value, 0.5);
}

#[test]
fn two_treatment_p_values_fall_as_wins_grow() {
    let n = 20;
    let mut last = 1.1;
    for wins in 10..=n {
        let m: Vec<Vec<f64>> = (0..n)
            .map(|i| if i < wins { vec![2.0, 1.0] } else { vec![1.0, 2.0] })
            .collect();
        let p = friedman_test(&m, 12).unwrap().p_value;
        assert!(p < last, "wins {wins}: {p} !< {last}");
        last = p;
    }
}

/// P(range of k standard normals <= q), by Simpson's rule.
fn range_cdf(q: f64, k: usize) -> f64 {
    let n = Normal::new(0.0, 1.0).unwrap();
    let (a, b, steps) = (-9.0, 9.0, 6000);
    let h = (b - a) / steps as f64;
    let f = |z: f64| n.pdf(z) * (n.cdf(z) - n.cdf(z - q)).powi(k as i32 - 1);
    let mut s = f(a) + f(b);
    for i in 1..steps {
        let z = a + i as f64 * h;
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(z);
    }
    k as f64 * s * h / 3.0
}

#[test]
fn critical_value_table_matches_numerical_integration() {
    for alpha in [0.05, 0.01] {
        for k in 2..=20 {
            let q = q_alpha(alpha, k).unwrap() * 2f64.sqrt();
            let cdf = range_cdf(q, k);
            assert!((cdf - (1.0 - alpha)).abs() < 2e-6, "alpha {alpha} k {k}: {cdf}");
        }
    }
    assert!(q_alpha(0.1, 3).is_err());
    assert!(q_alpha(0.05, 21).is_err());
}

#[test]
fn nemenyi_identical_dominant_and_symmetric() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let m: Vec<Vec<f64>> = (0..60)
        .map(|_| {
            let base: f64 = rng.random_range(0.0..1.0);
            let other: f64 = rng.random_range(0.0..1.0);
            vec![base, base, other, base + 100.0]
        })
        .collect();
    let r = nemenyi_posthoc(&m, 0.01).unwrap();
    assert!(!r.separated[0][1]);
    for j in 0..3 {
        assert!(r.separated[3][j]);
    }
    for i in 0..4 {
        for j in 0..4 {
            assert_eq!(r.separated[i][j], r.separated[j][i]);
        }
    }
    let cd = 3.113250 * (4.0 * 5.0 / (6.0 * 60.0_f64)).sqrt();
    assert!((r.critical_difference - cd).abs() < 1e-12);
}

#[test]
fn by_closed_forms() {
    assert_eq!(by_adjust(&[0.03]), vec![0.03]);
    let m = 5;
    let c: f64 = (1..=m).map(|i| 1.0 / i as f64).sum();
    for p0 in [0.001, 0.05, 0.5] {
        let adj = by_adjust(&vec![p0; m]);
        for a in adj {
            assert!((a - (p0 * c).min(1.0)).abs() < 1e-12);
        }
    }
}

#[test]
fn by_dominates_bh_on_random_vectors() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        let m = rng.random_range(1..40u32) as usize;
        let p: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..=1.0)).collect();
        let (by, bh) = (by_adjust(&p), bh_adjust(&p));
        for i in 0..m {
            assert!(by[i] >= bh[i] - 1e-15 && by[i] <= 1.0);
        }
    }
}

#[test]
fn decisions() {
    let hi: Vec<f64> = (0..10).map(|i| 10.0 + i as f64).collect();
    let lo: Vec<f64> = (0..10).map(|i| i as f64).collect();
    assert_eq!(decision(&hi, &lo, true).unwrap(), Decision::Better);
    assert_eq!(decision(&lo, &hi, true).unwrap(), Decision::Worse);
    assert_eq!(decision(&hi, &lo, false).unwrap(), Decision::Same);
    // 52 of 100 pairs won: scaled 0.04, negligible.
    let x = [1.0; 1];
    let y: Vec<f64> = (0..100).map(|i| if i < 52 { 0.0 } else { 2.0 }).collect();
    assert!((a12(&x, &y).unwrap().a12 - 0.52).abs() < 1e-12);
    assert_eq!(decision(&x, &y, true).unwrap(), Decision::Same);
}

proptest! {
    #[test]
    fn a12_complement(x in prop::collection::vec(-50i32..50, 1..20), y in prop::collection::vec(-50i32..50, 1..20)) {
        let x: Vec<f64> = x.into_iter().map(f64::from).collect();
        let y: Vec<f64> = y.into_iter().map(f64::from).collect();
        let s = a12(&x, &y).unwrap().a12 + a12(&y, &x).unwrap().a12;
        prop_assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn a12_invariant_under_monotone_transform(x in prop::collection::vec(-50i32..50, 1..20), y in prop::collection::vec(-50i32..50, 1..20)) {
        let f = |v: &i32| (f64::from(*v) / 10.0).exp() * 3.0 + 1.0;
        let (xa, ya): (Vec<f64>, Vec<f64>) = (x.iter().map(|v| f64::from(*v)).collect(), y.iter().map(|v| f64::from(*v)).collect());
        let (xb, yb): (Vec<f64>, Vec<f64>) = (x.iter().map(f).collect(), y.iter().map(f).collect());
        let (a, b) = (a12(&xa, &ya).unwrap(), a12(&xb, &yb).unwrap());
        prop_assert_eq!(a.magnitude, b.magnitude);
        prop_assert_eq!(a.a12.partial_cmp(&0.5), b.a12.partial_cmp(&0.5));
    }

    #[test]
    fn friedman_ignores_per_subject_shifts(
        m in prop::collection::vec(prop::collection::vec(0i32..20, 4), 3..10),
        row in 0usize..3,
        shift in -100i32..100,
    ) {
        let a: Vec<Vec<f64>> = m.iter().map(|r| r.iter().map(|v| f64::from(*v)).collect()).collect();
        let mut b = a.clone();
        for v in &mut b[row] { *v += f64::from(shift); }
        let (ra, rb) = (friedman_test(&a, 0).unwrap(), friedman_test(&b, 0).unwrap());
        prop_assert!((ra.statistic - rb.statistic).abs() < 1e-9);
    }

    #[test]
    fn by_is_monotone_in_sorted_order(p in prop::collection::vec(0.0f64..=1.0, 1..30)) {
        let adj = by_adjust(&p);
        let mut idx: Vec<usize> = (0..p.len()).collect();
        idx.sort_by(|&a, &b| p[a].total_cmp(&p[b]));
        for w in idx.windows(2) {
            prop_assert!(adj[w[0]] <= adj[w[1]] + 1e-15);
        }
    }
}
