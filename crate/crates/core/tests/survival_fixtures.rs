mod common;

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;

use common::rng;
use repro_survival::cox::{cox_gradient, cox_hessian};
use repro_survival::survival::{kaplan_meier, log_rank_test, SurvivalSample};
use repro_survival::EncodedDataset;

fn ev(t: f64) -> SurvivalSample {
    SurvivalSample::event(t)
}

fn cens(t: f64) -> SurvivalSample {
    SurvivalSample::censored(t)
}

#[test]
fn log_rank_hand_computed_table() {
    // t=1: n=4, nA=2 → E=1/2, V=1/4. t=2: n=3, nA=1 → E=1/3, V=2/9.
    // t=3,4: group A has left the risk set.
    let r = log_rank_test(&[ev(1.0), ev(2.0)], &[ev(3.0), ev(4.0)]).unwrap();
    assert_eq!(r.observed_a, 2.0);
    assert!((r.expected_a - 5.0 / 6.0).abs() < 1e-15);
    assert!((r.variance - 17.0 / 36.0).abs() < 1e-15);
    assert!((r.statistic - 49.0 / 17.0).abs() < 1e-14);
}

#[test]
fn log_rank_with_group_censored_early() {
    // group B censored at 0.5 before any event: no time has both risk sets
    // populated, so there is no information.
    let r = log_rank_test(&[ev(1.0), ev(2.0)], &[cens(0.5), cens(0.5)]).unwrap();
    assert_eq!(r.variance, 0.0);
    assert_eq!(r.statistic, 0.0);
    assert_eq!(r.p_value, 1.0);
}

#[test]
fn km_hand_computed_with_ties_and_censoring() {
    // at t=2: 5 at risk, 2 events → 4/5 * 3/5 ; censored at 3 ; t=4: 2 at risk
    let s = [ev(1.0), ev(2.0), ev(2.0), cens(3.0), ev(4.0), cens(5.0)];
    let c = kaplan_meier(&s).unwrap();
    let s1 = 5.0 / 6.0;
    let s2 = s1 * 3.0 / 5.0;
    let s4 = s2 * 1.0 / 2.0;
    assert!((c.survival_at(1.0) - s1).abs() < 1e-15);
    assert!((c.survival_at(3.5) - s2).abs() < 1e-15);
    assert!((c.survival_at(10.0) - s4).abs() < 1e-15);
    // censoring times appear as steps without events
    let table: Vec<(usize, usize)> = c.steps.iter().map(|s| (s.at_risk, s.events)).collect();
    assert_eq!(table, vec![(6, 1), (5, 2), (3, 0), (2, 1), (1, 0)]);
}

#[test]
fn log_rank_equals_cox_score_test_without_ties() {
    let mut r = rng(30);
    for case in 0..20 {
        let n = 10 + case * 3;
        let mut times: Vec<f64> = (0..n).map(|i| i as f64 + 1.0).collect();
        for i in (1..n).rev() {
            times.swap(i, r.random_range(0..=i));
        }
        let group: Vec<bool> = (0..n).map(|i| i % 2 == 0 || r.random_bool(0.2)).collect();
        let events: Vec<bool> = (0..n).map(|_| r.random_bool(0.8)).collect();
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for i in 0..n {
            let s = SurvivalSample { duration: times[i], event: events[i] };
            if group[i] { a.push(s) } else { b.push(s) }
        }
        if a.is_empty() || b.is_empty() || !events.iter().any(|&e| e) {
            continue;
        }
        let lr = log_rank_test(&a, &b).unwrap();
        let x = DMatrix::from_fn(n, 1, |i, _| if group[i] { 1.0 } else { 0.0 });
        let data = EncodedDataset::new(x, times, events, vec!["g".into()]).unwrap();
        let u = cox_gradient(&data, &[0.0]).unwrap()[0];
        let info = -cox_hessian(&data, &[0.0]).unwrap()[(0, 0)];
        let score = u * u / info;
        assert!((score - lr.statistic).abs() <= 1e-6 * lr.statistic.max(1.0), "{score} vs {}", lr.statistic);
    }
}

fn samples_strategy() -> impl Strategy<Value = Vec<SurvivalSample>> {
    prop::collection::vec((1u32..20, any::<bool>()), 1..40).prop_map(|v| {
        v.into_iter()
            .map(|(t, e)| SurvivalSample { duration: t as f64, event: e })
            .collect()
    })
}

proptest! {
    #[test]
    fn km_without_censoring_is_empirical(times in prop::collection::vec(1u32..30, 1..50)) {
        let s: Vec<SurvivalSample> = times.iter().map(|&t| ev(t as f64)).collect();
        let c = kaplan_meier(&s).unwrap();
        let n = times.len() as f64;
        for probe in 0..32 {
            let t = probe as f64;
            let surviving = times.iter().filter(|&&x| x as f64 > t).count() as f64;
            prop_assert!((c.survival_at(t) - surviving / n).abs() < 1e-12);
        }
    }

    #[test]
    fn km_is_monotone_in_unit_interval(s in samples_strategy()) {
        let c = kaplan_meier(&s).unwrap();
        let mut prev = 1.0;
        for step in &c.steps {
            prop_assert!(step.survival <= prev && step.survival >= 0.0);
            prev = step.survival;
        }
    }

    #[test]
    fn log_rank_is_symmetric(a in samples_strategy(), b in samples_strategy()) {
        let ab = log_rank_test(&a, &b).unwrap();
        let ba = log_rank_test(&b, &a).unwrap();
        prop_assert!((ab.statistic - ba.statistic).abs() <= 1e-9 * ab.statistic.max(1.0));
        prop_assert!((0.0..=1.0).contains(&ab.p_value));
    }
}
