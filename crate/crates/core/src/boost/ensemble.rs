use std::io::{Read, Write};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::EncodedDataset;
use crate::error::{Error, Result};

use super::config::BoostConfig;
use super::objective::{cox_grad_hess, cox_loss};
use super::tree::{grow_tree, sample_features, Tree, TreeArrays, TreeParams};

/// Additive tree model of the log-hazard margin:
/// `f(x) = base_margin + learning_rate · Σ_trees leaf(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeEnsemble {
    pub base_margin: f64,
    pub learning_rate: f64,
    pub trees: Vec<Tree>,
    pub feature_names: Vec<String>,
}

const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct EnsembleJson {
    format_version: u32,
    base_margin: f64,
    learning_rate: f64,
    feature_names: Vec<String>,
    trees: Vec<TreeArrays>,
}

impl TreeEnsemble {
    pub fn constant(base_margin: f64, feature_names: Vec<String>) -> Self {
        Self {
            base_margin,
            learning_rate: 1.0,
            trees: Vec::new(),
            feature_names,
        }
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// Margin for a single row; the caller guarantees the width.
    pub fn margin(&self, row: &[f64]) -> f64 {
        self.base_margin + self.learning_rate * self.trees.iter().map(|t| t.predict(row)).sum::<f64>()
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = EnsembleJson {
            format_version: FORMAT_VERSION,
            base_margin: self.base_margin,
            learning_rate: self.learning_rate,
            feature_names: self.feature_names.clone(),
            trees: self.trees.iter().map(TreeArrays::from).collect(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn write_json<W: Write>(&self, mut writer: W) -> Result<()> {
        writer
            .write_all(self.to_json()?.as_bytes())
            .map_err(|e| Error::io("<model writer>", e))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: EnsembleJson = serde_json::from_str(text)?;
        if doc.format_version != FORMAT_VERSION {
            return Err(Error::Argument(format!(
                "unsupported model format version {}",
                doc.format_version
            )));
        }
        let trees = doc
            .trees
            .into_iter()
            .map(Tree::try_from)
            .collect::<Result<Vec<_>>>()?;
        let model = Self {
            base_margin: doc.base_margin,
            learning_rate: doc.learning_rate,
            trees,
            feature_names: doc.feature_names,
        };
        for t in &model.trees {
            t.validate(model.n_features())?;
        }
        Ok(model)
    }

    pub fn read_json<R: Read>(mut reader: R) -> Result<Self> {
        let mut s = String::new();
        reader
            .read_to_string(&mut s)
            .map_err(|e| Error::io("<model reader>", e))?;
        Self::from_json(&s)
    }
}

/// Log-hazard margins for each row. Higher means shorter expected time.
pub fn predict_margin(model: &TreeEnsemble, rows: &DMatrix<f64>) -> Result<Vec<f64>> {
    if rows.ncols() != model.n_features() {
        return Err(Error::Argument(format!(
            "rows have {} columns, model expects {}",
            rows.ncols(),
            model.n_features()
        )));
    }
    let mut buf = vec![0.0; rows.ncols()];
    Ok((0..rows.nrows())
        .map(|i| {
            for (j, v) in buf.iter_mut().enumerate() {
                *v = rows[(i, j)];
            }
            model.margin(&buf)
        })
        .collect())
}

/// Fits the boosted Cox model. See [`fit_boosted_traced`].
pub fn fit_boosted(data: &EncodedDataset, config: &BoostConfig) -> Result<TreeEnsemble> {
    fit_boosted_traced(data, config).map(|(m, _)| m)
}

/// Fits the boosted Cox model and returns the training loss (negative log
/// partial likelihood) before the first round and after every round.
pub fn fit_boosted_traced(
    data: &EncodedDataset,
    config: &BoostConfig,
) -> Result<(TreeEnsemble, Vec<f64>)> {
    config.validate()?;
    if data.n_events() == 0 {
        return Err(Error::Model("boosting needs at least one event".into()));
    }
    let n = data.n_rows();
    let x = data.x();
    let all_features: Vec<usize> = (0..data.n_cols()).collect();
    let params = TreeParams {
        max_depth: config.max_depth,
        lambda: config.lambda,
        min_child_hessian: config.min_child_hessian,
        colsample_bylevel: config.colsample_bylevel,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = TreeEnsemble {
        base_margin: 0.0,
        learning_rate: config.eta,
        trees: Vec::with_capacity(config.rounds),
        feature_names: data.columns().to_vec(),
    };
    let mut margins = vec![model.base_margin; n];
    let mut trace = vec![cox_loss(data.durations(), data.events(), &margins)?];

    for _ in 0..config.rounds {
        let (grad, hess) = cox_grad_hess(data.durations(), data.events(), &margins)?;
        let rows: Vec<usize> = if config.subsample >= 1.0 {
            (0..n).collect()
        } else {
            (0..n).filter(|_| rng.random::<f64>() < config.subsample).collect()
        };
        let tree_features = sample_features(&mut rng, &all_features, config.colsample_bytree);
        let tree = if rows.is_empty() {
            Tree::leaf(0.0, 0.0)
        } else {
            grow_tree(x, &rows, &grad, &hess, &tree_features, &params, &mut rng)
        };
        let mut row = vec![0.0; data.n_cols()];
        for (i, m) in margins.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = x[(i, j)];
            }
            *m += config.eta * tree.predict(&row);
        }
        model.trees.push(tree);
        trace.push(cox_loss(data.durations(), data.events(), &margins)?);
    }
    Ok((model, trace))
}
