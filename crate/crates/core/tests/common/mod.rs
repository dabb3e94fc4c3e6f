//! Independent oracles shared by the integration tests. Nothing here calls
//! into the code paths it is used to check.
#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use repro_survival::boost::{Tree, TreeEnsemble, TreeNode};
use repro_survival::EncodedDataset;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Small survival dataset with integer durations in `1..=max_time`, so ties
/// are common, and roughly a quarter of rows censored.
pub fn random_dataset(rng: &mut ChaCha8Rng, n: usize, d: usize, max_time: u32) -> EncodedDataset {
    let x = DMatrix::from_fn(n, d, |_, _| rng.random_range(-1.5..1.5));
    let durations = (0..n).map(|_| rng.random_range(1..=max_time) as f64).collect();
    let mut events: Vec<bool> = (0..n).map(|_| rng.random_bool(0.75)).collect();
    events[0] = true;
    let columns = (0..d).map(|j| format!("x{j}")).collect();
    EncodedDataset::new(x, durations, events, columns).unwrap()
}

/// Efron log partial likelihood straight from its definition, O(n²).
pub fn efron_loglik(x: &DMatrix<f64>, durations: &[f64], events: &[bool], beta: &[f64]) -> f64 {
    let n = durations.len();
    let eta: Vec<f64> = (0..n)
        .map(|i| (0..beta.len()).map(|j| x[(i, j)] * beta[j]).sum())
        .collect();
    let mut times: Vec<f64> = (0..n).filter(|&i| events[i]).map(|i| durations[i]).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let mut ll = 0.0;
    for t in times {
        let deaths: Vec<usize> = (0..n).filter(|&i| events[i] && durations[i] == t).collect();
        let risk: f64 = (0..n).filter(|&i| durations[i] >= t).map(|i| eta[i].exp()).sum();
        let tied: f64 = deaths.iter().map(|&i| eta[i].exp()).sum();
        let d = deaths.len() as f64;
        for &i in &deaths {
            ll += eta[i];
        }
        for l in 0..deaths.len() {
            ll -= (risk - l as f64 / d * tied).ln();
        }
    }
    ll
}

/// Negative Breslow log partial likelihood in the margins, O(n²).
pub fn breslow_loss(durations: &[f64], events: &[bool], margins: &[f64]) -> f64 {
    let n = durations.len();
    let mut loss = 0.0;
    for i in (0..n).filter(|&i| events[i]) {
        let risk: f64 = (0..n)
            .filter(|&j| durations[j] >= durations[i])
            .map(|j| margins[j].exp())
            .sum();
        loss -= margins[i] - risk.ln();
    }
    loss
}

/// Central differences of `f` at `x`.
pub fn fd_gradient<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|k| {
            let mut up = x.to_vec();
            let mut down = x.to_vec();
            up[k] += h;
            down[k] -= h;
            (f(&up) - f(&down)) / (2.0 * h)
        })
        .collect()
}

/// max |a - b| / max(max |b|, floor)
pub fn max_rel_err(a: &[f64], b: &[f64], floor: f64) -> f64 {
    let scale = b.iter().fold(floor, |m, v| m.max(v.abs()));
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale
}

/// Harrell's C by enumerating every ordered pair under the signed-label
/// rule: `j` must be an event and `|label_i| > label_j`.
pub fn pair_concordance(risk: &[f64], labels: &[f64]) -> f64 {
    let (mut c, mut d, mut t) = (0.0, 0.0, 0.0);
    for i in 0..risk.len() {
        for j in 0..risk.len() {
            if labels[j] > 0.0 && labels[i].abs() > labels[j] {
                if risk[j] > risk[i] {
                    c += 1.0;
                } else if risk[j] < risk[i] {
                    d += 1.0;
                } else {
                    t += 1.0;
                }
            }
        }
    }
    if c + d + t == 0.0 {
        0.5
    } else {
        (2.0 * c + t) / (2.0 * (c + d + t))
    }
}

/// Random tree over `d` features, at most `depth` deep, thresholds in
/// `[-1, 1)`. Nodes are laid out depth-first.
pub fn random_tree(rng: &mut ChaCha8Rng, d: usize, depth: usize) -> Tree {
    fn grow(rng: &mut ChaCha8Rng, nodes: &mut Vec<TreeNode>, d: usize, depth: usize) -> usize {
        let id = nodes.len();
        if depth == 0 || rng.random_bool(0.2) {
            nodes.push(TreeNode::Leaf {
                weight: rng.random_range(-1.0..1.0),
            });
            return id;
        }
        nodes.push(TreeNode::Leaf { weight: 0.0 });
        let feature = rng.random_range(0..d);
        let threshold = rng.random_range(-1.0..1.0);
        let left = grow(rng, nodes, d, depth - 1);
        let right = grow(rng, nodes, d, depth - 1);
        nodes[id] = TreeNode::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }
    let mut nodes = Vec::new();
    grow(rng, &mut nodes, d, depth);
    let cover = vec![0.0; nodes.len()];
    Tree { nodes, cover }
}

pub fn ensemble(trees: Vec<Tree>, d: usize, learning_rate: f64, base: f64) -> TreeEnsemble {
    TreeEnsemble {
        base_margin: base,
        learning_rate,
        trees,
        feature_names: (0..d).map(|j| format!("f{j}")).collect(),
    }
}

/// Rows with a few repeated values per column so some tree nodes see no
/// background rows.
pub fn random_rows(rng: &mut ChaCha8Rng, n: usize, d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, d, |_, _| (rng.random_range(-4..4) as f64) / 3.0)
}

fn child_for(node: &TreeNode, x: &[f64]) -> (usize, usize) {
    match node {
        TreeNode::Split {
            feature,
            threshold,
            left,
            right,
        } => {
            if x[*feature] < *threshold {
                (*left, *right)
            } else {
                (*right, *left)
            }
        }
        TreeNode::Leaf { .. } => unreachable!(),
    }
}

fn reach_counts(tree: &Tree, background: &DMatrix<f64>) -> Vec<f64> {
    let mut counts = vec![0.0; tree.nodes.len()];
    for i in 0..background.nrows() {
        let row: Vec<f64> = background.row(i).iter().copied().collect();
        let mut k = 0;
        loop {
            counts[k] += 1.0;
            if let TreeNode::Leaf { .. } = tree.nodes[k] {
                break;
            }
            k = child_for(&tree.nodes[k], &row).0;
        }
    }
    counts
}

/// E[f(x) | x_S] with features outside `known` integrated out by background
/// reach fractions (one half at nodes no background row reaches).
fn conditional_value(tree: &Tree, counts: &[f64], k: usize, x: &[f64], known: u32) -> f64 {
    match &tree.nodes[k] {
        TreeNode::Leaf { weight } => *weight,
        node @ TreeNode::Split { feature, left, right, .. } => {
            if known & (1 << feature) != 0 {
                conditional_value(tree, counts, child_for(node, x).0, x, known)
            } else {
                let frac = |c: usize| if counts[k] > 0.0 { counts[c] / counts[k] } else { 0.5 };
                frac(*left) * conditional_value(tree, counts, *left, x, known)
                    + frac(*right) * conditional_value(tree, counts, *right, x, known)
            }
        }
    }
}

/// Value function of the whole ensemble for every subset of `d` features.
fn subset_values(model: &TreeEnsemble, background: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
    let d = x.len();
    let counts: Vec<Vec<f64>> = model.trees.iter().map(|t| reach_counts(t, background)).collect();
    (0..1u32 << d)
        .map(|s| {
            model.base_margin
                + model.learning_rate
                    * model
                        .trees
                        .iter()
                        .zip(&counts)
                        .map(|(t, c)| conditional_value(t, c, 0, x, s))
                        .sum::<f64>()
        })
        .collect()
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Shapley values by summing over all 2^d coalitions.
pub fn brute_force_shap(model: &TreeEnsemble, background: &DMatrix<f64>, x: &[f64]) -> (f64, Vec<f64>) {
    let d = x.len();
    let v = subset_values(model, background, x);
    let phi = (0..d)
        .map(|i| {
            let mut total = 0.0;
            for s in 0..(1u32 << d) {
                if s & (1 << i) != 0 {
                    continue;
                }
                let size = s.count_ones() as usize;
                let w = factorial(size) * factorial(d - size - 1) / factorial(d);
                total += w * (v[(s | (1 << i)) as usize] - v[s as usize]);
            }
            total
        })
        .collect();
    (v[0], phi)
}

/// Shapley interaction index for every pair, with main effects on the
/// diagonal so each row sums to the Shapley value.
pub fn brute_force_interactions(model: &TreeEnsemble, background: &DMatrix<f64>, x: &[f64]) -> DMatrix<f64> {
    let d = x.len();
    let v = subset_values(model, background, x);
    let (_, phi) = brute_force_shap(model, background, x);
    let mut out = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            if i == j {
                continue;
            }
            let mut total = 0.0;
            for s in 0..(1u32 << d) {
                if s & (1 << i) != 0 || s & (1 << j) != 0 {
                    continue;
                }
                let size = s.count_ones() as usize;
                let w = factorial(size) * factorial(d - size - 2) / (2.0 * factorial(d - 1));
                let (si, sj, sij) = (s | (1 << i), s | (1 << j), s | (1 << i) | (1 << j));
                total += w * (v[sij as usize] - v[si as usize] - v[sj as usize] + v[s as usize]);
            }
            out[(i, j)] = total;
        }
    }
    for i in 0..d {
        let off: f64 = (0..d).filter(|&j| j != i).map(|j| out[(i, j)]).sum();
        out[(i, i)] = phi[i] - off;
    }
    out
}
