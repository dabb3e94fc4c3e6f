use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hyperparameters of the boosted Cox model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoostConfig {
    /// Learning rate applied to every tree's leaf weights.
    pub eta: f64,
    pub max_depth: usize,
    /// Fraction of rows drawn (Bernoulli) for each tree.
    pub subsample: f64,
    pub colsample_bytree: f64,
    pub colsample_bylevel: f64,
    /// L2 penalty on leaf weights.
    pub lambda: f64,
    pub rounds: usize,
    pub seed: u64,
    /// Both children of a split must carry at least this much hessian.
    #[serde(default = "default_min_child_hessian")]
    pub min_child_hessian: f64,
}

fn default_min_child_hessian() -> f64 {
    1e-6
}

impl Default for BoostConfig {
    fn default() -> Self {
        Self {
            eta: 0.3,
            max_depth: 6,
            subsample: 1.0,
            colsample_bytree: 1.0,
            colsample_bylevel: 1.0,
            lambda: 1.0,
            rounds: 100,
            seed: 42,
            min_child_hessian: default_min_child_hessian(),
        }
    }
}

impl BoostConfig {
    /// The tuned configuration reported for the study data (120 rounds).
    pub fn paper_preset() -> Self {
        Self {
            eta: 0.021_268_448_927_318_46,
            max_depth: 8,
            subsample: 0.202_100_013_792_978_54,
            colsample_bytree: 0.370_022_037_825_893_16,
            colsample_bylevel: 0.708_552_897_430_012_4,
            lambda: 1.497_998_138_207_469,
            rounds: 120,
            seed: 42,
            min_child_hessian: default_min_child_hessian(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if v > 0.0 && v <= 1.0 {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} = {v} must lie in (0, 1]")))
            }
        };
        unit("eta", self.eta)?;
        unit("subsample", self.subsample)?;
        unit("colsample_bytree", self.colsample_bytree)?;
        unit("colsample_bylevel", self.colsample_bylevel)?;
        if self.rounds == 0 {
            return Err(Error::Config("rounds must be >= 1".into()));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config(format!("lambda = {} must be >= 0", self.lambda)));
        }
        if !(self.min_child_hessian >= 0.0) {
            return Err(Error::Config("min_child_hessian must be >= 0".into()));
        }
        Ok(())
    }
}
