//! Exact path-dependent TreeSHAP for [`TreeEnsemble`] models, with SHAP
//! interaction values and the summary/dependence tables built from them.
//!
//! Conditional expectations follow the tree structure: at a split on a
//! feature outside the coalition, children are averaged by the share of
//! background rows that reached them.

use std::collections::BTreeSet;
use std::io::Write;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::boost::{Tree, TreeEnsemble, TreeNode};
use crate::error::{Error, Result};
use crate::stats::quantile_sorted;

#[derive(Debug, Clone, Copy)]
struct PathElement {
    feature: isize,
    zero: f64,
    one: f64,
    pweight: f64,
}

fn extend_path(path: &mut Vec<PathElement>, zero: f64, one: f64, feature: isize) {
    let depth = path.len();
    path.push(PathElement {
        feature,
        zero,
        one,
        pweight: if depth == 0 { 1.0 } else { 0.0 },
    });
    let dp1 = (depth + 1) as f64;
    for i in (0..depth).rev() {
        path[i + 1].pweight += one * path[i].pweight * (i + 1) as f64 / dp1;
        path[i].pweight = zero * path[i].pweight * (depth - i) as f64 / dp1;
    }
}

fn unwind_path(path: &mut Vec<PathElement>, index: usize) {
    let depth = path.len() - 1;
    let (one, zero) = (path[index].one, path[index].zero);
    let dp1 = (depth + 1) as f64;
    let mut next_one = path[depth].pweight;
    for i in (0..depth).rev() {
        if one != 0.0 {
            let tmp = path[i].pweight;
            path[i].pweight = next_one * dp1 / ((i + 1) as f64 * one);
            next_one = tmp - path[i].pweight * zero * (depth - i) as f64 / dp1;
        } else {
            path[i].pweight = path[i].pweight * dp1 / (zero * (depth - i) as f64);
        }
    }
    for i in index..depth {
        path[i].feature = path[i + 1].feature;
        path[i].zero = path[i + 1].zero;
        path[i].one = path[i + 1].one;
    }
    path.pop();
}

/// Total permutation weight of the path with element `index` removed.
fn unwound_path_sum(path: &[PathElement], index: usize) -> f64 {
    let depth = path.len() - 1;
    let (one, zero) = (path[index].one, path[index].zero);
    let mut next_one = path[depth].pweight;
    let mut total = 0.0;
    if one != 0.0 {
        for i in (0..depth).rev() {
            let tmp = next_one / ((i + 1) as f64 * one);
            total += tmp;
            next_one = path[i].pweight - tmp * zero * (depth - i) as f64;
        }
    } else {
        for i in (0..depth).rev() {
            total += path[i].pweight / (zero * (depth - i) as f64);
        }
    }
    total * (depth + 1) as f64
}

/// Background row counts per node, used as covers.
fn background_cover(tree: &Tree, background: &DMatrix<f64>) -> Vec<f64> {
    let mut cover = vec![0.0; tree.nodes.len()];
    let mut row = vec![0.0; background.ncols()];
    for i in 0..background.nrows() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = background[(i, j)];
        }
        let mut k = 0;
        loop {
            cover[k] += 1.0;
            match tree.nodes[k] {
                TreeNode::Leaf { .. } => break,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => k = if row[feature] < threshold { left } else { right },
            }
        }
    }
    cover
}

/// Share of `node`'s background that went to `child`. Unvisited nodes split
/// evenly so shares still sum to one.
fn share(cover: &[f64], node: usize, child: usize) -> f64 {
    if cover[node] > 0.0 {
        cover[child] / cover[node]
    } else {
        0.5
    }
}

/// Cover-weighted mean leaf value: E[f] for a single tree.
fn expected_value(tree: &Tree, cover: &[f64], k: usize) -> f64 {
    match tree.nodes[k] {
        TreeNode::Leaf { weight } => weight,
        TreeNode::Split { left, right, .. } => {
            share(cover, k, left) * expected_value(tree, cover, left)
                + share(cover, k, right) * expected_value(tree, cover, right)
        }
    }
}

/// Conditioning for interaction passes: the feature is always present
/// (`On`), always absent (`Off`), or ordinary (`None`).
#[derive(Clone, Copy, PartialEq)]
enum Condition {
    None,
    On(usize),
    Off(usize),
}

struct Explainer<'a> {
    tree: &'a Tree,
    cover: &'a [f64],
    x: &'a [f64],
    condition: Condition,
}

impl Explainer<'_> {
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        &self,
        phi: &mut [f64],
        node: usize,
        parent_path: &[PathElement],
        zero: f64,
        one: f64,
        feature: isize,
        condition_fraction: f64,
    ) {
        if condition_fraction == 0.0 || (zero == 0.0 && one == 0.0) {
            return;
        }
        let mut path = parent_path.to_vec();
        let conditioned = match self.condition {
            Condition::On(c) | Condition::Off(c) => feature == c as isize,
            Condition::None => false,
        };
        if !conditioned {
            extend_path(&mut path, zero, one, feature);
        }

        match self.tree.nodes[node] {
            TreeNode::Leaf { weight } => {
                for i in 1..path.len() {
                    let w = unwound_path_sum(&path, i);
                    let el = path[i];
                    phi[el.feature as usize] += w * (el.one - el.zero) * weight * condition_fraction;
                }
            }
            TreeNode::Split {
                feature: split,
                threshold,
                left,
                right,
            } => {
                let (hot, cold) = if self.x[split] < threshold {
                    (left, right)
                } else {
                    (right, left)
                };
                let hot_zero = share(self.cover, node, hot);
                let cold_zero = share(self.cover, node, cold);
                let (mut in_zero, mut in_one) = (1.0, 1.0);
                if let Some(k) = path.iter().position(|e| e.feature == split as isize) {
                    in_zero = path[k].zero;
                    in_one = path[k].one;
                    unwind_path(&mut path, k);
                }
                let (mut hot_cf, mut cold_cf) = (condition_fraction, condition_fraction);
                match self.condition {
                    Condition::On(c) if c == split => cold_cf = 0.0,
                    Condition::Off(c) if c == split => {
                        hot_cf *= hot_zero;
                        cold_cf *= cold_zero;
                    }
                    _ => {}
                }
                let f = split as isize;
                self.recurse(phi, hot, &path, hot_zero * in_zero, in_one, f, hot_cf);
                self.recurse(phi, cold, &path, cold_zero * in_zero, 0.0, f, cold_cf);
            }
        }
    }

    fn run(&self, phi: &mut [f64]) {
        self.recurse(phi, 0, &[], 1.0, 1.0, -1, 1.0);
    }
}

fn tree_features(tree: &Tree) -> BTreeSet<usize> {
    tree.nodes
        .iter()
        .filter_map(|n| match n {
            TreeNode::Split { feature, .. } => Some(*feature),
            TreeNode::Leaf { .. } => None,
        })
        .collect()
}

/// Per-row additive attributions of the log-hazard margin.
#[derive(Debug, Clone)]
pub struct ShapAttribution {
    /// Expected margin under the background covers.
    pub base_value: f64,
    /// rows × features.
    pub values: DMatrix<f64>,
    /// One features × features matrix per row, when requested.
    pub interactions: Option<Vec<DMatrix<f64>>>,
    pub feature_names: Vec<String>,
}

impl ShapAttribution {
    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|f| f == name)
    }

    /// base + Σφ for each row.
    pub fn reconstructed_margins(&self) -> Vec<f64> {
        self.values
            .row_iter()
            .map(|r| self.base_value + r.iter().sum::<f64>())
            .collect()
    }

    /// Mean |Φ_ij| over rows for every pair.
    pub fn mean_abs_interactions(&self) -> Option<DMatrix<f64>> {
        let inter = self.interactions.as_ref()?;
        let d = self.feature_names.len();
        let mut acc = DMatrix::zeros(d, d);
        for m in inter {
            acc += m.abs();
        }
        Some(acc / inter.len().max(1) as f64)
    }
}

fn check_widths(model: &TreeEnsemble, background: &DMatrix<f64>, rows: &DMatrix<f64>) -> Result<()> {
    let d = model.n_features();
    if background.nrows() == 0 {
        return Err(Error::Argument("background set is empty".into()));
    }
    if background.ncols() != d || rows.ncols() != d {
        return Err(Error::Argument(format!(
            "model has {d} features; background has {}, rows have {}",
            background.ncols(),
            rows.ncols()
        )));
    }
    Ok(())
}

struct Prepared<'a> {
    model: &'a TreeEnsemble,
    covers: Vec<Vec<f64>>,
    features: Vec<BTreeSet<usize>>,
    base_value: f64,
}

fn prepare<'a>(model: &'a TreeEnsemble, background: &DMatrix<f64>) -> Prepared<'a> {
    let covers: Vec<Vec<f64>> = model
        .trees
        .iter()
        .map(|t| background_cover(t, background))
        .collect();
    let base_value = model.base_margin
        + model.learning_rate
            * model
                .trees
                .iter()
                .zip(&covers)
                .map(|(t, c)| expected_value(t, c, 0))
                .sum::<f64>();
    Prepared {
        model,
        covers,
        features: model.trees.iter().map(tree_features).collect(),
        base_value,
    }
}

impl Prepared<'_> {
    fn phi(&self, x: &[f64], condition: Condition) -> Vec<f64> {
        let mut phi = vec![0.0; x.len()];
        for (tree, cover) in self.model.trees.iter().zip(&self.covers) {
            Explainer {
                tree,
                cover,
                x,
                condition,
            }
            .run(&mut phi);
        }
        phi.iter_mut().for_each(|v| *v *= self.model.learning_rate);
        phi
    }

    fn interactions(&self, x: &[f64], phi: &[f64]) -> DMatrix<f64> {
        let d = x.len();
        let mut out = DMatrix::zeros(d, d);
        let mut on = vec![0.0; d];
        let mut off = vec![0.0; d];
        for (t, (tree, cover)) in self.model.trees.iter().zip(&self.covers).enumerate() {
            for &j in &self.features[t] {
                on.iter_mut().for_each(|v| *v = 0.0);
                off.iter_mut().for_each(|v| *v = 0.0);
                let ex = |condition| Explainer {
                    tree,
                    cover,
                    x,
                    condition,
                };
                ex(Condition::On(j)).run(&mut on);
                ex(Condition::Off(j)).run(&mut off);
                for i in 0..d {
                    if i != j {
                        out[(j, i)] += 0.5 * self.model.learning_rate * (on[i] - off[i]);
                    }
                }
            }
        }
        for j in 0..d {
            let off_diag: f64 = (0..d).filter(|&i| i != j).map(|i| out[(j, i)]).sum();
            out[(j, j)] = phi[j] - off_diag;
        }
        out
    }
}

fn row_of(rows: &DMatrix<f64>, i: usize) -> Vec<f64> {
    rows.row(i).iter().copied().collect()
}

/// Path-dependent TreeSHAP values for every row. Rows are independent and
/// computed in parallel; output order follows input order.
pub fn tree_shap(
    model: &TreeEnsemble,
    background: &DMatrix<f64>,
    rows: &DMatrix<f64>,
) -> Result<ShapAttribution> {
    check_widths(model, background, rows)?;
    let prep = prepare(model, background);
    let phis: Vec<Vec<f64>> = (0..rows.nrows())
        .into_par_iter()
        .map(|i| prep.phi(&row_of(rows, i), Condition::None))
        .collect();
    let d = model.n_features();
    Ok(ShapAttribution {
        base_value: prep.base_value,
        values: DMatrix::from_fn(rows.nrows(), d, |i, j| phis[i][j]),
        interactions: None,
        feature_names: model.feature_names.clone(),
    })
}

/// TreeSHAP values plus SHAP interaction values. The diagonal holds main
/// effects, and each row of an interaction matrix sums to that feature's φ.
pub fn shap_interactions(
    model: &TreeEnsemble,
    background: &DMatrix<f64>,
    rows: &DMatrix<f64>,
) -> Result<ShapAttribution> {
    check_widths(model, background, rows)?;
    let prep = prepare(model, background);
    let results: Vec<(Vec<f64>, DMatrix<f64>)> = (0..rows.nrows())
        .into_par_iter()
        .map(|i| {
            let x = row_of(rows, i);
            let phi = prep.phi(&x, Condition::None);
            let inter = prep.interactions(&x, &phi);
            (phi, inter)
        })
        .collect();
    let d = model.n_features();
    Ok(ShapAttribution {
        base_value: prep.base_value,
        values: DMatrix::from_fn(rows.nrows(), d, |i, j| results[i].0[j]),
        interactions: Some(results.into_iter().map(|(_, m)| m).collect()),
        feature_names: model.feature_names.clone(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureImportance {
    pub feature: String,
    pub mean_abs: f64,
}

/// Features by descending mean |φ|; ties keep feature order.
pub fn summary_ranking(attr: &ShapAttribution) -> Result<Vec<FeatureImportance>> {
    if attr.n_rows() == 0 {
        return Err(Error::Argument("attribution has no rows".into()));
    }
    let n = attr.n_rows() as f64;
    let mut ranked: Vec<FeatureImportance> = attr
        .feature_names
        .iter()
        .enumerate()
        .map(|(j, f)| FeatureImportance {
            feature: f.clone(),
            mean_abs: attr.values.column(j).iter().map(|v| v.abs()).sum::<f64>() / n,
        })
        .collect();
    ranked.sort_by(|a, b| b.mean_abs.total_cmp(&a.mean_abs));
    Ok(ranked)
}

/// CSV `feature,mean_abs_shap,q05,q25,q50,q75,q95` in ranking order.
pub fn write_summary_csv<W: Write>(attr: &ShapAttribution, writer: W) -> Result<()> {
    let ranking = summary_ranking(attr)?;
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["feature", "mean_abs_shap", "q05", "q25", "q50", "q75", "q95"])?;
    for r in ranking {
        let j = attr.feature_index(&r.feature).expect("ranked from names");
        let mut col: Vec<f64> = attr.values.column(j).iter().copied().collect();
        col.sort_by(f64::total_cmp);
        let mut rec = vec![r.feature.clone(), r.mean_abs.to_string()];
        rec.extend([0.05, 0.25, 0.5, 0.75, 0.95].iter().map(|&q| quantile_sorted(&col, q).to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

/// One point per row: the feature's value, its φ, and a second feature's value.
#[derive(Debug, Clone, PartialEq)]
pub struct DependenceTable {
    pub feature: String,
    pub color_feature: String,
    pub rows: Vec<(f64, f64, f64)>,
}

impl DependenceTable {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["feature_value", "shap", "color_value"])?;
        for (v, phi, c) in &self.rows {
            w.write_record([v.to_string(), phi.to_string(), c.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}

/// Dependence data for `feature`. Without an explicit `color_feature`, the
/// feature with the largest mean |interaction| is used, which needs
/// interaction values in `attr`.
pub fn dependence_export(
    attr: &ShapAttribution,
    rows: &DMatrix<f64>,
    feature: &str,
    color_feature: Option<&str>,
) -> Result<DependenceTable> {
    let j = attr
        .feature_index(feature)
        .ok_or_else(|| Error::Argument(format!("unknown feature `{feature}`")))?;
    if rows.nrows() != attr.n_rows() || rows.ncols() != attr.feature_names.len() {
        return Err(Error::Argument("rows do not match the attribution".into()));
    }
    let c = match color_feature {
        Some(name) => attr
            .feature_index(name)
            .ok_or_else(|| Error::Argument(format!("unknown feature `{name}`")))?,
        None => {
            let mean = attr.mean_abs_interactions().ok_or_else(|| {
                Error::Argument("choosing a color feature needs interaction values".into())
            })?;
            let d = attr.feature_names.len();
            let mut best = if j == 0 && d > 1 { 1 } else { 0 };
            for k in 0..d {
                if k != j && mean[(j, k)] > mean[(j, best)] {
                    best = k;
                }
            }
            best
        }
    };
    Ok(DependenceTable {
        feature: feature.to_string(),
        color_feature: attr.feature_names[c].clone(),
        rows: (0..rows.nrows())
            .map(|i| (rows[(i, j)], attr.values[(i, j)], rows[(i, c)]))
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stump(feature: usize, threshold: f64, left: f64, right: f64) -> Tree {
        Tree {
            nodes: vec![
                TreeNode::Split {
                    feature,
                    threshold,
                    left: 1,
                    right: 2,
                },
                TreeNode::Leaf { weight: left },
                TreeNode::Leaf { weight: right },
            ],
            cover: vec![0.0; 3],
        }
    }

    fn model(trees: Vec<Tree>, d: usize) -> TreeEnsemble {
        TreeEnsemble {
            base_margin: 0.25,
            learning_rate: 1.0,
            trees,
            feature_names: (0..d).map(|j| format!("f{j}")).collect(),
        }
    }

    #[test]
    fn stump_puts_everything_on_its_feature() {
        let m = model(vec![stump(1, 0.5, -1.0, 2.0)], 3);
        // background: 3 rows left, 1 row right of the split
        let bg = DMatrix::from_row_slice(4, 3, &[0., 0., 0., 0., 0., 0., 0., 0., 0., 0., 1., 0.]);
        let rows = DMatrix::from_row_slice(1, 3, &[9.0, 1.0, -4.0]);
        let a = tree_shap(&m, &bg, &rows).unwrap();
        let expected = 0.25 - 0.75 + 0.25 * 2.0;
        assert!((a.base_value - expected).abs() < 1e-15);
        assert!((a.values[(0, 1)] - (2.25 - expected)).abs() < 1e-15);
        assert_eq!(a.values[(0, 0)], 0.0);
        assert_eq!(a.values[(0, 2)], 0.0);
    }

    #[test]
    fn constant_model_has_no_attribution() {
        let m = TreeEnsemble::constant(1.5, vec!["a".into(), "b".into()]);
        let bg = DMatrix::from_row_slice(2, 2, &[0., 1., 2., 3.]);
        let a = shap_interactions(&m, &bg, &bg).unwrap();
        assert_eq!(a.base_value, 1.5);
        assert!(a.values.iter().all(|&v| v == 0.0));
        let ranking = summary_ranking(&a).unwrap();
        assert_eq!(ranking[0].feature, "a");
        assert_eq!(ranking[1].mean_abs, 0.0);
        let dep = dependence_export(&a, &bg, "b", None).unwrap();
        assert!(dep.rows.iter().all(|r| r.1 == 0.0));
    }

    #[test]
    fn width_mismatch_is_rejected() {
        let m = model(vec![stump(0, 0.5, 0.0, 1.0)], 2);
        let bg = DMatrix::zeros(2, 2);
        assert!(tree_shap(&m, &bg, &DMatrix::zeros(1, 3)).is_err());
        assert!(tree_shap(&m, &DMatrix::zeros(0, 2), &bg).is_err());
    }

    #[test]
    fn explicit_color_feature_is_kept() {
        let m = model(vec![stump(0, 0.5, 0.0, 1.0), stump(1, 0.5, 0.0, 1.0)], 3);
        let bg = DMatrix::from_row_slice(2, 3, &[0., 1., 5., 1., 0., 6.]);
        let a = tree_shap(&m, &bg, &bg).unwrap();
        let dep = dependence_export(&a, &bg, "f0", Some("f2")).unwrap();
        assert_eq!(dep.color_feature, "f2");
        assert_eq!(dep.rows[1], (1.0, a.values[(1, 0)], 6.0));
        assert!(dependence_export(&a, &bg, "nope", None).is_err());
        assert!(dependence_export(&a, &bg, "f0", None).is_err());
    }
}
