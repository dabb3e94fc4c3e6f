//! Seeded random search over the boosted-model hyperparameters.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::EncodedDataset;
use crate::error::{Error, Result};

use super::config::BoostConfig;
use super::cv::cross_validate;

/// Ranges sampled per trial. Integer ranges are inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchSpace {
    pub max_depth: (usize, usize),
    /// Sampled log-uniformly.
    pub eta: (f64, f64),
    pub subsample: (f64, f64),
    pub rounds: (usize, usize),
    pub colsample_bytree: (f64, f64),
    pub colsample_bylevel: (f64, f64),
    pub lambda: (f64, f64),
}

impl Default for SearchSpace {
    fn default() -> Self {
        Self {
            max_depth: (3, 10),
            eta: (0.003, 0.5),
            subsample: (0.2, 0.7),
            rounds: (10, 300),
            colsample_bytree: (0.3, 1.0),
            colsample_bylevel: (0.5, 1.0),
            lambda: (0.1, 2.0),
        }
    }
}

impl SearchSpace {
    pub fn sample<R: Rng>(&self, rng: &mut R, seed: u64) -> BoostConfig {
        let uniform = |rng: &mut R, (lo, hi): (f64, f64)| lo + (hi - lo) * rng.random::<f64>();
        let max_depth = rng.random_range(self.max_depth.0..=self.max_depth.1);
        let eta = uniform(rng, (self.eta.0.ln(), self.eta.1.ln())).exp();
        let subsample = uniform(rng, self.subsample);
        let rounds = rng.random_range(self.rounds.0..=self.rounds.1);
        let colsample_bytree = uniform(rng, self.colsample_bytree);
        let colsample_bylevel = uniform(rng, self.colsample_bylevel);
        let lambda = uniform(rng, self.lambda);
        BoostConfig {
            eta,
            max_depth,
            subsample,
            colsample_bytree,
            colsample_bylevel,
            lambda,
            rounds,
            seed,
            ..BoostConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub index: usize,
    pub config: BoostConfig,
    pub mean_concordance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchReport {
    pub best: BoostConfig,
    pub best_score: f64,
    pub trials: Vec<Trial>,
}

impl SearchReport {
    /// Best score after each trial.
    pub fn running_best(&self) -> Vec<f64> {
        self.trials
            .iter()
            .scan(f64::NEG_INFINITY, |best, t| {
                *best = best.max(t.mean_concordance);
                Some(*best)
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "trial",
            "eta",
            "max_depth",
            "subsample",
            "rounds",
            "colsample_bytree",
            "colsample_bylevel",
            "lambda",
            "mean_concordance",
        ])?;
        for t in &self.trials {
            let c = &t.config;
            w.write_record([
                t.index.to_string(),
                c.eta.to_string(),
                c.max_depth.to_string(),
                c.subsample.to_string(),
                c.rounds.to_string(),
                c.colsample_bytree.to_string(),
                c.colsample_bylevel.to_string(),
                c.lambda.to_string(),
                t.mean_concordance.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}

/// Samples `budget` configurations and keeps the one with the best mean
/// k-fold concordance (earliest wins ties). Every trial trains and splits
/// folds with `seed`, so trials differ only in their hyperparameters.
pub fn hyperparameter_search(
    data: &EncodedDataset,
    space: &SearchSpace,
    budget: usize,
    folds: usize,
    seed: u64,
) -> Result<SearchReport> {
    if budget == 0 {
        return Err(Error::Argument("search budget must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trials = Vec::with_capacity(budget);
    let mut best: Option<(BoostConfig, f64)> = None;
    for index in 0..budget {
        let config = space.sample(&mut rng, seed);
        let cv = cross_validate(data, &config, folds, seed)?;
        log::info!("trial {index}: mean concordance {:.4}", cv.mean);
        if best.is_none_or(|(_, s)| cv.mean > s) {
            best = Some((config, cv.mean));
        }
        trials.push(Trial {
            index,
            config,
            mean_concordance: cv.mean,
        });
    }
    let (best, best_score) = best.expect("budget >= 1");
    Ok(SearchReport {
        best,
        best_score,
        trials,
    })
}
