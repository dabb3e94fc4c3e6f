mod common;

use nalgebra::DMatrix;
use proptest::prelude::*;

use common::{brute_force_interactions, brute_force_shap, ensemble, random_rows, random_tree, rng};
use repro_survival::boost::{fit_boosted, predict_margin, BoostConfig, Tree, TreeNode};
use repro_survival::ingest::{encode, read_csv, FeatureSchema, Imputation};
use repro_survival::shap::{dependence_export, shap_interactions, summary_ranking, tree_shap};
use repro_survival::synth::{synthetic_study_csv, StudyConfig};

fn split(feature: usize, threshold: f64, left: usize, right: usize) -> TreeNode {
    TreeNode::Split {
        feature,
        threshold,
        left,
        right,
    }
}

fn leaf(weight: f64) -> TreeNode {
    TreeNode::Leaf { weight }
}

fn tree(nodes: Vec<TreeNode>) -> Tree {
    let cover = vec![0.0; nodes.len()];
    Tree { nodes, cover }
}

#[test]
fn matches_exhaustive_shapley_on_random_trees() {
    let mut r = rng(1);
    let mut worst: f64 = 0.0;
    for case in 0..40 {
        let d = 2 + case % 5;
        let n_trees = 1 + case % 3;
        let trees = (0..n_trees).map(|_| random_tree(&mut r, d, 5)).collect();
        let model = ensemble(trees, d, 0.7, 0.1);
        let background = random_rows(&mut r, 15, d);
        let rows = random_rows(&mut r, 6, d);
        let attr = tree_shap(&model, &background, &rows).unwrap();
        for i in 0..rows.nrows() {
            let x: Vec<f64> = rows.row(i).iter().copied().collect();
            let (base, phi) = brute_force_shap(&model, &background, &x);
            worst = worst.max((attr.base_value - base).abs());
            for (j, p) in phi.iter().enumerate() {
                worst = worst.max((attr.values[(i, j)] - p).abs());
            }
        }
    }
    assert!(worst <= 1e-8, "largest deviation {worst:e}");
}

#[test]
fn interactions_match_exhaustive_enumeration() {
    let mut r = rng(2);
    let mut worst: f64 = 0.0;
    for case in 0..25 {
        let d = 2 + case % 4;
        let trees = (0..2).map(|_| random_tree(&mut r, d, 4)).collect();
        let model = ensemble(trees, d, 1.0, 0.0);
        let background = random_rows(&mut r, 12, d);
        let rows = random_rows(&mut r, 4, d);
        let attr = shap_interactions(&model, &background, &rows).unwrap();
        let inter = attr.interactions.as_ref().unwrap();
        for (i, got) in inter.iter().enumerate() {
            let x: Vec<f64> = rows.row(i).iter().copied().collect();
            let expect = brute_force_interactions(&model, &background, &x);
            worst = worst.max((got - &expect).abs().max());
        }
    }
    assert!(worst <= 1e-8, "largest deviation {worst:e}");
}

#[test]
fn stump_on_second_feature_matches_enumeration() {
    let model = ensemble(vec![tree(vec![split(1, 0.0, 1, 2), leaf(-0.5), leaf(1.5)])], 3, 1.0, 0.0);
    let background = DMatrix::from_row_slice(4, 3, &[0., -1., 0., 0., -1., 0., 0., 1., 0., 0., -1., 0.]);
    let rows = DMatrix::from_row_slice(1, 3, &[3.0, 2.0, 3.0]);
    let attr = tree_shap(&model, &background, &rows).unwrap();
    let (base, phi) = brute_force_shap(&model, &background, &[3.0, 2.0, 3.0]);
    // E[f] = 3/4 * -0.5 + 1/4 * 1.5 = 0
    assert_eq!(base, 0.0);
    assert_eq!(phi, vec![0.0, 1.5, 0.0]);
    assert!((attr.values[(0, 1)] - 1.5).abs() < 1e-15);
    assert_eq!(attr.values[(0, 0)], 0.0);
    assert_eq!(attr.values[(0, 2)], 0.0);
}

#[test]
fn additive_model_has_no_interaction() {
    let a = tree(vec![split(0, 0.0, 1, 2), leaf(-1.0), leaf(1.0)]);
    let b = tree(vec![split(1, 0.0, 1, 2), leaf(0.5), leaf(-0.25)]);
    let model = ensemble(vec![a, b], 2, 1.0, 0.0);
    let mut r = rng(3);
    let background = random_rows(&mut r, 20, 2);
    let rows = random_rows(&mut r, 8, 2);
    let attr = shap_interactions(&model, &background, &rows).unwrap();
    for (i, m) in attr.interactions.as_ref().unwrap().iter().enumerate() {
        let x: Vec<f64> = rows.row(i).iter().copied().collect();
        let oracle = brute_force_interactions(&model, &background, &x);
        assert!(oracle[(0, 1)].abs() < 1e-12);
        assert!(m[(0, 1)].abs() < 1e-12 && m[(1, 0)].abs() < 1e-12);
        assert!((m[(0, 0)] - attr.values[(i, 0)]).abs() < 1e-12);
    }
}

#[test]
fn nested_splits_interact() {
    // split on feature 0, then feature 1 on the right only
    let t = tree(vec![
        split(0, 0.0, 1, 2),
        leaf(0.0),
        split(1, 0.0, 3, 4),
        leaf(0.0),
        leaf(2.0),
    ]);
    let model = ensemble(vec![t], 2, 1.0, 0.0);
    let background = DMatrix::from_row_slice(4, 2, &[-1., -1., -1., 1., 1., -1., 1., 1.]);
    let rows = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
    let attr = shap_interactions(&model, &background, &rows).unwrap();
    let m = &attr.interactions.as_ref().unwrap()[0];
    let oracle = brute_force_interactions(&model, &background, &[1.0, 1.0]);
    // v(∅)=0.5, v({0})=1, v({1})=1, v({0,1})=2 → Φ01 = (2-1-1+0.5)/2
    assert!((oracle[(0, 1)] - 0.25).abs() < 1e-15);
    assert!((m[(0, 1)] - 0.25).abs() < 1e-12);
    assert!((m[(1, 0)] - 0.25).abs() < 1e-12);
}

#[test]
fn ensemble_attribution_is_sum_over_trees() {
    let mut r = rng(4);
    let d = 4;
    let t1 = random_tree(&mut r, d, 4);
    let t2 = random_tree(&mut r, d, 4);
    let background = random_rows(&mut r, 25, d);
    let rows = random_rows(&mut r, 10, d);
    let both = tree_shap(&ensemble(vec![t1.clone(), t2.clone()], d, 1.0, 0.0), &background, &rows).unwrap();
    let one = tree_shap(&ensemble(vec![t1], d, 1.0, 0.0), &background, &rows).unwrap();
    let two = tree_shap(&ensemble(vec![t2], d, 1.0, 0.0), &background, &rows).unwrap();
    assert!((&both.values - (&one.values + &two.values)).abs().max() < 1e-12);
    assert!((both.base_value - one.base_value - two.base_value).abs() < 1e-12);
}

#[test]
fn symmetric_features_share_credit() {
    let a = tree(vec![split(0, 0.5, 1, 2), leaf(0.0), leaf(1.0)]);
    let b = tree(vec![split(1, 0.5, 1, 2), leaf(0.0), leaf(1.0)]);
    let model = ensemble(vec![a, b], 3, 1.0, 0.0);
    let background = DMatrix::from_row_slice(3, 3, &[0., 0., 4., 1., 1., 5., 0., 0., 6.]);
    let rows = DMatrix::from_row_slice(2, 3, &[1., 1., 0., 0., 0., 9.]);
    let attr = tree_shap(&model, &background, &rows).unwrap();
    for i in 0..2 {
        assert!((attr.values[(i, 0)] - attr.values[(i, 1)]).abs() < 1e-15);
        assert_eq!(attr.values[(i, 2)], 0.0);
    }
}

#[test]
fn trained_model_attributions_are_locally_accurate() {
    let schema = FeatureSchema::paper_ordinal();
    let csv = synthetic_study_csv(&StudyConfig::default()).unwrap();
    let data = encode(&read_csv(csv.as_bytes(), &schema).unwrap(), &schema, Imputation::Mean).unwrap();
    let model = fit_boosted(&data, &BoostConfig { rounds: 40, ..BoostConfig::paper_preset() }).unwrap();
    let attr = shap_interactions(&model, data.x(), data.x()).unwrap();
    let margins = predict_margin(&model, data.x()).unwrap();
    let inter = attr.interactions.as_ref().unwrap();
    for (i, m) in margins.iter().enumerate() {
        let recon = attr.base_value + attr.values.row(i).sum();
        assert!((recon - m).abs() <= 1e-6, "row {i}: {recon} vs {m}");
        let full = inter[i].sum();
        assert!((attr.base_value + full - m).abs() <= 1e-6);
        for j in 0..data.n_cols() {
            assert!((inter[i].row(j).sum() - attr.values[(i, j)]).abs() <= 1e-5);
        }
        assert!((&inter[i] - inter[i].transpose()).abs().max() <= 1e-8);
    }
    let dep = dependence_export(&attr, data.x(), "Pages", None).unwrap();
    assert_eq!(dep.rows.len(), data.n_rows());
    assert_ne!(dep.color_feature, "Pages");
}

#[test]
fn one_feature_model_ranks_that_feature_first() {
    let model = ensemble(vec![tree(vec![split(2, 0.0, 1, 2), leaf(-1.0), leaf(1.0)])], 4, 1.0, 0.0);
    let mut r = rng(5);
    let rows = random_rows(&mut r, 10, 4);
    let attr = tree_shap(&model, &rows, &rows).unwrap();
    let ranking = summary_ranking(&attr).unwrap();
    assert_eq!(ranking[0].feature, "f2");
    assert!(ranking[1..].iter().all(|f| f.mean_abs == 0.0));
    assert_eq!(ranking[1].feature, "f0");
}

#[test]
fn row_order_does_not_change_attributions() {
    let mut r = rng(6);
    let model = ensemble(vec![random_tree(&mut r, 3, 4), random_tree(&mut r, 3, 4)], 3, 0.5, 0.0);
    let background = random_rows(&mut r, 20, 3);
    let rows = random_rows(&mut r, 7, 3);
    let reversed = DMatrix::from_fn(7, 3, |i, j| rows[(6 - i, j)]);
    let a = tree_shap(&model, &background, &rows).unwrap();
    let b = tree_shap(&model, &background, &reversed).unwrap();
    for i in 0..7 {
        assert_eq!(a.values.row(i), b.values.row(6 - i));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn local_accuracy_holds(seed in 0u64..10_000, d in 1usize..7, n_trees in 1usize..4, depth in 0usize..7) {
        let mut r = rng(seed);
        let trees = (0..n_trees).map(|_| random_tree(&mut r, d, depth)).collect();
        let model = ensemble(trees, d, 0.3, -0.2);
        let background = random_rows(&mut r, 10, d);
        let rows = random_rows(&mut r, 5, d);
        let attr = tree_shap(&model, &background, &rows).unwrap();
        let margins = predict_margin(&model, &rows).unwrap();
        for (recon, m) in attr.reconstructed_margins().iter().zip(&margins) {
            prop_assert!((recon - m).abs() <= 1e-6);
        }
    }
}
