//! Gradient-boosted regression trees fitted to the Cox partial likelihood.

mod config;
mod cv;
mod ensemble;
mod objective;
mod search;
mod tree;

pub use config::BoostConfig;
pub use cv::{cross_validate, cross_validate_cox, cross_validate_with, fold_indices, CvReport, FoldScore};
pub use ensemble::{fit_boosted, fit_boosted_traced, predict_margin, TreeEnsemble};
pub use objective::{cox_grad_hess, cox_loss};
pub use search::{hyperparameter_search, SearchReport, SearchSpace, Trial};
pub use tree::{split_gain, Tree, TreeArrays, TreeNode};
