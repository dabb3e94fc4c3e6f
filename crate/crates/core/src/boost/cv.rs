//! K-fold cross-validated concordance.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cox::{fit_cox, CoxOptions};
use crate::data::EncodedDataset;
use crate::error::{Error, Result};
use crate::survival::concordance;

use super::config::BoostConfig;
use super::ensemble::{fit_boosted, predict_margin};

#[derive(Debug, Clone, PartialEq)]
pub struct FoldScore {
    pub fold: usize,
    pub train_rows: usize,
    pub test_rows: usize,
    /// `None` when the fold was skipped because its training part had no events.
    pub concordance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    pub folds: Vec<FoldScore>,
    /// Mean over the folds that were scored.
    pub mean: f64,
}

impl CvReport {
    pub fn skipped(&self) -> Vec<usize> {
        self.folds
            .iter()
            .filter(|f| f.concordance.is_none())
            .map(|f| f.fold)
            .collect()
    }
}

/// Seeded shuffle split into `k` folds whose sizes differ by at most one.
pub fn fold_indices(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 || k > n {
        return Err(Error::Argument(format!("cannot form {k} folds from {n} rows")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let len = base + usize::from(f < extra);
        folds.push(idx[start..start + len].to_vec());
        start += len;
    }
    Ok(folds)
}

/// Cross-validates any model given as `fit_predict(train, test) -> risks`.
/// Folds run in parallel; results are ordered by fold.
pub fn cross_validate_with<F>(data: &EncodedDataset, k: usize, seed: u64, fit_predict: F) -> Result<CvReport>
where
    F: Fn(&EncodedDataset, &EncodedDataset) -> Result<Vec<f64>> + Sync,
{
    let folds = fold_indices(data.n_rows(), k, seed)?;
    let scores = folds
        .par_iter()
        .enumerate()
        .map(|(f, test_idx)| {
            let train_idx: Vec<usize> = folds
                .iter()
                .enumerate()
                .filter(|&(g, _)| g != f)
                .flat_map(|(_, v)| v.iter().copied())
                .collect();
            let train = data.subset(&train_idx);
            let test = data.subset(test_idx);
            if train.n_events() == 0 {
                log::warn!("fold {f}: no events in the training part, skipped");
                return Ok(FoldScore {
                    fold: f,
                    train_rows: train.n_rows(),
                    test_rows: test.n_rows(),
                    concordance: None,
                });
            }
            let risk = fit_predict(&train, &test)?;
            let c = concordance(&risk, &test.signed_labels())?;
            Ok(FoldScore {
                fold: f,
                train_rows: train.n_rows(),
                test_rows: test.n_rows(),
                concordance: Some(c),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let scored: Vec<f64> = scores.iter().filter_map(|s| s.concordance).collect();
    if scored.is_empty() {
        return Err(Error::Model("every fold was skipped".into()));
    }
    Ok(CvReport {
        mean: scored.iter().sum::<f64>() / scored.len() as f64,
        folds: scores,
    })
}

/// K-fold concordance of the boosted Cox model.
pub fn cross_validate(
    data: &EncodedDataset,
    config: &BoostConfig,
    k: usize,
    seed: u64,
) -> Result<CvReport> {
    config.validate()?;
    cross_validate_with(data, k, seed, |train, test| {
        let model = fit_boosted(train, config)?;
        predict_margin(&model, test.x())
    })
}

/// K-fold concordance of the linear Cox model.
pub fn cross_validate_cox(
    data: &EncodedDataset,
    options: CoxOptions,
    k: usize,
    seed: u64,
) -> Result<CvReport> {
    cross_validate_with(data, k, seed, |train, test| {
        let fit = fit_cox(train, options)?;
        fit.predict_risk(test.x())
    })
}
