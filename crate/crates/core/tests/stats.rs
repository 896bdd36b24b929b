use morphogrow::stats::{
    boxplot_data, mann_whitney_exact, mann_whitney_normal, mann_whitney_two_tailed, median_and_quartiles, MwMethod,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Brute-force two-tailed p: enumerate every way of assigning `n` of the
/// `n + m` pooled ranks to the first group.
fn oracle_p(a: &[f64], b: &[f64]) -> (f64, f64) {
    let (n, m) = (a.len(), b.len());
    let pairs_won = |x: &[f64], y: &[f64]| -> usize { x.iter().map(|p| y.iter().filter(|q| p > q).count()).sum() };
    let u_a = pairs_won(a, b);
    let u = u_a.min(n * m - u_a);
    let total_n = n + m;
    let (mut hits, mut total) = (0u64, 0u64);
    for mask in 0u32..(1 << total_n) {
        if mask.count_ones() as usize != n {
            continue;
        }
        // Ranks are 1..=N; U of the chosen group is its rank sum minus n(n+1)/2.
        let rank_sum: usize = (0..total_n).filter(|k| mask & (1 << k) != 0).map(|k| k + 1).sum();
        let u_mask = rank_sum - n * (n + 1) / 2;
        total += 1;
        hits += u64::from(u_mask <= u);
    }
    (u as f64, (2.0 * hits as f64 / total as f64).min(1.0))
}

fn tie_free(seed: u64, n: usize, m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pooled: Vec<f64> = (0..n + m).map(|k| 0.25 + 1.7 * k as f64).collect();
    pooled.shuffle(&mut rng);
    let b = pooled.split_off(n);
    (pooled, b)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1500))]

    #[test]
    fn exact_p_matches_enumeration_oracle(seed in any::<u64>(), n in 1usize..=7, m in 1usize..=7) {
        let (a, b) = tie_free(seed, n, m);
        let r = mann_whitney_two_tailed(&a, &b).unwrap();
        let (u, p) = oracle_p(&a, &b);
        prop_assert_eq!(r.method, MwMethod::Exact);
        prop_assert_eq!(r.u, u);
        prop_assert!((r.p - p).abs() <= 1e-12, "p {} vs oracle {}", r.p, p);
        prop_assert!(r.p > 0.0 && r.p <= 1.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn test_is_symmetric(a in prop::collection::vec(-50.0f64..50.0, 1..25), b in prop::collection::vec(-50.0f64..50.0, 1..25)) {
        let ab = mann_whitney_two_tailed(&a, &b).unwrap();
        let ba = mann_whitney_two_tailed(&b, &a).unwrap();
        prop_assert_eq!(ab.u, ba.u);
        prop_assert!((ab.p - ba.p).abs() <= 1e-15);
        prop_assert!(ab.u >= 0.0 && ab.u <= (a.len() * b.len()) as f64);
        prop_assert!(ab.p > 0.0 && ab.p <= 1.0);
    }

    #[test]
    fn u_ignores_monotone_transforms(
        a in prop::collection::vec(-3.0f64..3.0, 1..20),
        b in prop::collection::vec(-3.0f64..3.0, 1..20),
    ) {
        let f = |x: &f64| x.exp() * 3.0 + x.powi(3);
        let fa: Vec<f64> = a.iter().map(f).collect();
        let fb: Vec<f64> = b.iter().map(f).collect();
        let before = mann_whitney_two_tailed(&a, &b).unwrap();
        let after = mann_whitney_two_tailed(&fa, &fb).unwrap();
        prop_assert_eq!(before, after);
    }

    #[test]
    fn quantiles_are_monotone(mut v in prop::collection::vec(-10.0f64..10.0, 1..40), extra in 0.0f64..5.0) {
        let s = median_and_quartiles(&v).unwrap();
        prop_assert!(s.q25 <= s.median && s.median <= s.q75);
        let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        v.push(max + extra);
        let t = median_and_quartiles(&v).unwrap();
        prop_assert!(t.median >= s.median && t.q75 >= s.q75);
    }

    #[test]
    fn boxplot_whiskers_and_outliers_respect_fences(v in prop::collection::vec(-10.0f64..10.0, 1..40), spike in -100.0f64..100.0) {
        let mut v = v;
        v.push(spike);
        let bp = boxplot_data(&v).unwrap();
        let iqr = bp.q75 - bp.q25;
        prop_assert!(bp.whisker_lo >= bp.q25 - 1.5 * iqr && bp.whisker_hi <= bp.q75 + 1.5 * iqr);
        prop_assert!(v.contains(&bp.whisker_lo) && v.contains(&bp.whisker_hi));
        let inside = v.iter().filter(|&&x| x >= bp.whisker_lo && x <= bp.whisker_hi).count();
        prop_assert_eq!(inside + bp.outliers.len(), v.len());
    }
}

#[test]
fn normal_approximation_tracks_exact_at_eight_by_eight() {
    // Every one of the C(16, 8) = 12870 rank splits.
    let mut worst: f64 = 0.0;
    for mask in 0u32..(1 << 16) {
        if mask.count_ones() != 8 {
            continue;
        }
        let (a, b): (Vec<f64>, Vec<f64>) = {
            let a = (0..16).filter(|k| mask & (1 << k) != 0).map(f64::from).collect();
            let b = (0..16).filter(|k| mask & (1 << k) == 0).map(f64::from).collect();
            (a, b)
        };
        let exact = mann_whitney_exact(&a, &b).unwrap();
        let normal = mann_whitney_normal(&a, &b).unwrap();
        worst = worst.max((exact.p - normal.p).abs());
    }
    assert!(worst <= 0.01, "worst |Δp| = {worst}");
}

#[test]
fn comparison_examples() {
    let a: Vec<f64> = (1..=30).map(f64::from).collect();
    let b: Vec<f64> = (101..=130).map(f64::from).collect();
    let r = mann_whitney_two_tailed(&a, &b).unwrap();
    assert_eq!(r.method, MwMethod::NormalApproximation);
    assert_eq!(r.u, 0.0);
    assert!(r.p > 0.0 && r.p < 1e-9);
    let same = mann_whitney_two_tailed(&a, &a).unwrap();
    assert_eq!(same.p, 1.0);
}

#[test]
fn exact_refuses_ties() {
    assert!(mann_whitney_exact(&[1.0, 2.0], &[2.0, 3.0]).is_err());
    assert_eq!(
        mann_whitney_two_tailed(&[1.0, 2.0], &[2.0, 3.0]).unwrap().method,
        MwMethod::NormalApproximation
    );
}
