//! Survival analysis of how long research papers take to reproduce.
//!
//! The crate covers the whole path from a survey CSV to figures: schema-driven
//! ingest and censoring imputation ([`ingest`]), Kaplan-Meier curves, the
//! log-rank test and Harrell's concordance ([`survival`]), a ridge Cox model
//! with robust errors, Wald tests and Schoenfeld-based proportional-hazards
//! checks ([`cox`]), gradient-boosted Cox trees with cross-validation and
//! random search ([`boost`]), exact TreeSHAP attributions ([`shap`]) and the
//! report pipeline that writes every table and plot ([`report`]).
//!
//! ```
//! use repro_survival::survival::{kaplan_meier, SurvivalSample};
//!
//! let samples = [
//!     SurvivalSample::event(3.0),
//!     SurvivalSample::censored(4.0),
//!     SurvivalSample::event(5.0),
//! ];
//! let km = kaplan_meier(&samples).unwrap();
//! assert!((km.survival_at(3.0) - 2.0 / 3.0).abs() < 1e-12);
//! assert_eq!(km.survival_at(5.0), 0.0);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boost;
pub mod cox;
pub mod data;
pub mod error;
pub mod ingest;
pub mod report;
pub mod shap;
pub mod stats;
pub mod synth;
pub mod survival;

pub use data::{EncodedDataset, FeatureGroup};
pub use error::{Error, Result};
