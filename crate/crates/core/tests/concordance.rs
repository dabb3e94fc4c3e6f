mod common;

use proptest::prelude::*;
use rand::Rng;

use common::{pair_concordance, rng};
use repro_survival::survival::{concordance, concordance_counts};

fn random_case(r: &mut rand_chacha::ChaCha8Rng, n: usize) -> (Vec<f64>, Vec<f64>) {
    // coarse values so both risks and times tie
    let risk = (0..n).map(|_| r.random_range(0..6) as f64 * 0.5).collect();
    let labels = (0..n)
        .map(|_| {
            let t = r.random_range(1..10) as f64;
            if r.random_bool(0.3) { -t } else { t }
        })
        .collect();
    (risk, labels)
}

#[test]
fn matches_pair_enumeration_on_random_sets() {
    let mut r = rng(20);
    for case in 0..100 {
        let (risk, labels) = random_case(&mut r, 1 + case % 40);
        let got = concordance(&risk, &labels).unwrap();
        let want = pair_concordance(&risk, &labels);
        assert!((got - want).abs() < 1e-12, "case {case}: {got} vs {want}");
    }
}

#[test]
fn signed_label_rule_examples() {
    assert_eq!(concordance(&[3.0, 2.0, 1.0], &[1.0, 2.0, 3.0]).unwrap(), 1.0);
    assert_eq!(concordance(&[1.0, 1.0, 1.0], &[1.0, 2.0, -3.0]).unwrap(), 0.5);
    // only (i=2, j=0) is comparable: 10 > 5 and risk 2 > 1
    assert_eq!(concordance(&[2.0, 9.0, 1.0], &[5.0, -3.0, 10.0]).unwrap(), 1.0);
    assert_eq!(pair_concordance(&[2.0, 9.0, 1.0], &[5.0, -3.0, 10.0]), 1.0);
    // censored rows never anchor a pair
    assert_eq!(concordance(&[1.0, 2.0], &[-1.0, -2.0]).unwrap(), 0.5);
    // equal event times are not comparable
    let c = concordance_counts(&[1.0, 2.0], &[4.0, 4.0]);
    assert_eq!(c.comparable(), 0);
}

#[test]
fn length_mismatch_is_rejected() {
    assert!(concordance(&[1.0, 2.0], &[1.0]).is_err());
}

proptest! {
    #[test]
    fn reversing_untied_risk_complements(seed in 0u64..100_000, n in 2usize..40) {
        let mut r = rng(seed);
        let (_, labels) = random_case(&mut r, n);
        let risk: Vec<f64> = (0..n).map(|i| i as f64 + r.random_range(0.0..0.5)).collect();
        let neg: Vec<f64> = risk.iter().map(|v| -v).collect();
        let counts = concordance_counts(&risk, &labels);
        prop_assume!(counts.comparable() > 0);
        let total = concordance(&risk, &labels).unwrap() + concordance(&neg, &labels).unwrap();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn monotone_transform_keeps_index(seed in 0u64..100_000, n in 1usize..40) {
        let mut r = rng(seed);
        let (risk, labels) = random_case(&mut r, n);
        let warped: Vec<f64> = risk.iter().map(|v| (v * 3.0).exp() + v.powi(3)).collect();
        prop_assert_eq!(concordance(&risk, &labels).unwrap(), concordance(&warped, &labels).unwrap());
    }
}
