//! Regression trees on (gradient, hessian) pairs with second-order gain.

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A node of a regression tree. Rows with `x[feature] < threshold` go left.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        weight: f64,
    },
}

/// Nodes stored flat; index 0 is the root. `cover` holds the training
/// hessian sum reaching each node.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
    pub cover: Vec<f64>,
}

impl Tree {
    pub fn leaf(weight: f64, cover: f64) -> Self {
        Self {
            nodes: vec![TreeNode::Leaf { weight }],
            cover: vec![cover],
        }
    }

    /// Index of the leaf a row falls into.
    pub fn leaf_index(&self, row: &[f64]) -> usize {
        let mut k = 0;
        loop {
            match self.nodes[k] {
                TreeNode::Leaf { .. } => return k,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => k = if row[feature] < threshold { left } else { right },
            }
        }
    }

    /// Unscaled leaf weight for a row.
    pub fn predict(&self, row: &[f64]) -> f64 {
        match self.nodes[self.leaf_index(row)] {
            TreeNode::Leaf { weight } => weight,
            TreeNode::Split { .. } => unreachable!("leaf_index returns a leaf"),
        }
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, k: usize) -> usize {
            match t.nodes[k] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + go(t, left).max(go(t, right)),
            }
        }
        go(self, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Leaf { .. }))
            .count()
    }

    pub(crate) fn validate(&self, n_features: usize) -> Result<()> {
        if self.nodes.is_empty() || self.cover.len() != self.nodes.len() {
            return Err(Error::Argument("tree has no nodes or mismatched cover".into()));
        }
        for (k, node) in self.nodes.iter().enumerate() {
            match *node {
                TreeNode::Leaf { weight } if !weight.is_finite() => {
                    return Err(Error::Argument(format!("node {k}: non-finite leaf weight")))
                }
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    if feature >= n_features || !threshold.is_finite() {
                        return Err(Error::Argument(format!("node {k}: invalid split")));
                    }
                    if left <= k || right <= k || left >= self.nodes.len() || right >= self.nodes.len() {
                        return Err(Error::Argument(format!("node {k}: invalid children")));
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Struct-of-arrays JSON form of a tree. Leaves have `feature = -1` and
/// `left = right = -1`; splits have `leaf_weight = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeArrays {
    pub feature: Vec<i64>,
    pub threshold: Vec<f64>,
    pub left: Vec<i64>,
    pub right: Vec<i64>,
    pub leaf_weight: Vec<f64>,
    pub cover: Vec<f64>,
}

impl From<&Tree> for TreeArrays {
    fn from(t: &Tree) -> Self {
        let mut a = TreeArrays {
            feature: Vec::new(),
            threshold: Vec::new(),
            left: Vec::new(),
            right: Vec::new(),
            leaf_weight: Vec::new(),
            cover: t.cover.clone(),
        };
        for node in &t.nodes {
            match *node {
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    a.feature.push(feature as i64);
                    a.threshold.push(threshold);
                    a.left.push(left as i64);
                    a.right.push(right as i64);
                    a.leaf_weight.push(0.0);
                }
                TreeNode::Leaf { weight } => {
                    a.feature.push(-1);
                    a.threshold.push(0.0);
                    a.left.push(-1);
                    a.right.push(-1);
                    a.leaf_weight.push(weight);
                }
            }
        }
        a
    }
}

impl TryFrom<TreeArrays> for Tree {
    type Error = Error;

    fn try_from(a: TreeArrays) -> Result<Self> {
        let n = a.feature.len();
        if [a.threshold.len(), a.left.len(), a.right.len(), a.leaf_weight.len(), a.cover.len()]
            .iter()
            .any(|&l| l != n)
        {
            return Err(Error::Argument("tree arrays differ in length".into()));
        }
        let nodes = (0..n)
            .map(|k| {
                if a.feature[k] < 0 {
                    Ok(TreeNode::Leaf {
                        weight: a.leaf_weight[k],
                    })
                } else if a.left[k] < 0 || a.right[k] < 0 {
                    Err(Error::Argument(format!("split node {k} lacks children")))
                } else {
                    Ok(TreeNode::Split {
                        feature: a.feature[k] as usize,
                        threshold: a.threshold[k],
                        left: a.left[k] as usize,
                        right: a.right[k] as usize,
                    })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Tree {
            nodes,
            cover: a.cover,
        })
    }
}

pub(crate) struct TreeParams {
    pub max_depth: usize,
    pub lambda: f64,
    pub min_child_hessian: f64,
    pub colsample_bylevel: f64,
}

pub(crate) fn leaf_weight(g: f64, h: f64, lambda: f64) -> f64 {
    let den = h + lambda;
    if den > 0.0 {
        -g / den
    } else {
        0.0
    }
}

fn score(g: f64, h: f64, lambda: f64) -> f64 {
    let den = h + lambda;
    if den > 0.0 {
        g * g / den
    } else {
        0.0
    }
}

/// Second-order gain of splitting (G, H) into (G_L, H_L) and the remainder.
pub fn split_gain(g_left: f64, h_left: f64, g: f64, h: f64, lambda: f64) -> f64 {
    0.5 * (score(g_left, h_left, lambda) + score(g - g_left, h - h_left, lambda)
        - score(g, h, lambda))
}

/// `max(1, round(frac · n))` indices out of `pool`, sorted ascending.
pub(crate) fn sample_features<R: Rng>(rng: &mut R, pool: &[usize], frac: f64) -> Vec<usize> {
    if frac >= 1.0 || pool.len() <= 1 {
        return pool.to_vec();
    }
    let k = ((frac * pool.len() as f64).round() as usize).clamp(1, pool.len());
    let mut picked: Vec<usize> = sample(rng, pool.len(), k).into_iter().map(|i| pool[i]).collect();
    picked.sort_unstable();
    picked
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    feature: usize,
    threshold: f64,
    gain: f64,
}

/// Exact greedy search over every feature in `features`. Ties keep the
/// earlier feature and the lower threshold.
fn best_split(
    x: &DMatrix<f64>,
    rows: &[usize],
    grad: &[f64],
    hess: &[f64],
    features: &[usize],
    params: &TreeParams,
) -> Option<Candidate> {
    let g_total: f64 = rows.iter().map(|&i| grad[i]).sum();
    let h_total: f64 = rows.iter().map(|&i| hess[i]).sum();
    let mut best: Option<Candidate> = None;
    let mut sorted: Vec<(f64, usize)> = Vec::with_capacity(rows.len());
    for &f in features {
        let col = x.column(f);
        sorted.clear();
        sorted.extend(rows.iter().map(|&i| (col[i], i)));
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let (mut gl, mut hl) = (0.0, 0.0);
        for k in 0..sorted.len().saturating_sub(1) {
            let i = sorted[k].1;
            gl += grad[i];
            hl += hess[i];
            let (v, next) = (sorted[k].0, sorted[k + 1].0);
            if v == next {
                continue;
            }
            if hl < params.min_child_hessian || h_total - hl < params.min_child_hessian {
                continue;
            }
            let gain = split_gain(gl, hl, g_total, h_total, params.lambda);
            if gain > 0.0 && best.is_none_or(|b| gain > b.gain) {
                let mut threshold = 0.5 * (v + next);
                // midpoint can round onto `next` for adjacent floats
                if threshold <= v || threshold > next {
                    threshold = next;
                }
                best = Some(Candidate {
                    feature: f,
                    threshold,
                    gain,
                });
            }
        }
    }
    best
}

/// Grows one tree depth-first on `rows`. Per-level feature subsets are drawn
/// up front, one per depth, from `tree_features`.
pub(crate) fn grow_tree<R: Rng>(
    x: &DMatrix<f64>,
    rows: &[usize],
    grad: &[f64],
    hess: &[f64],
    tree_features: &[usize],
    params: &TreeParams,
    rng: &mut R,
) -> Tree {
    let level_features: Vec<Vec<usize>> = (0..params.max_depth)
        .map(|_| sample_features(rng, tree_features, params.colsample_bylevel))
        .collect();
    let mut tree = Tree {
        nodes: Vec::new(),
        cover: Vec::new(),
    };
    grow_node(x, rows.to_vec(), grad, hess, &level_features, params, 0, &mut tree);
    tree
}

#[allow(clippy::too_many_arguments)]
fn grow_node(
    x: &DMatrix<f64>,
    rows: Vec<usize>,
    grad: &[f64],
    hess: &[f64],
    level_features: &[Vec<usize>],
    params: &TreeParams,
    depth: usize,
    tree: &mut Tree,
) -> usize {
    let g: f64 = rows.iter().map(|&i| grad[i]).sum();
    let h: f64 = rows.iter().map(|&i| hess[i]).sum();
    let me = tree.nodes.len();
    tree.nodes.push(TreeNode::Leaf {
        weight: leaf_weight(g, h, params.lambda),
    });
    tree.cover.push(h);
    if depth >= params.max_depth || rows.len() < 2 {
        return me;
    }
    let Some(split) = best_split(x, &rows, grad, hess, &level_features[depth], params) else {
        return me;
    };
    let col = x.column(split.feature);
    let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
        rows.into_iter().partition(|&i| col[i] < split.threshold);
    let left = grow_node(x, left_rows, grad, hess, level_features, params, depth + 1, tree);
    let right = grow_node(x, right_rows, grad, hess, level_features, params, depth + 1, tree);
    tree.nodes[me] = TreeNode::Split {
        feature: split.feature,
        threshold: split.threshold,
        left,
        right,
    };
    me
}
