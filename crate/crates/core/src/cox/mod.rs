//! Linear Cox proportional hazards regression and its diagnostics.

mod fit;
mod likelihood;
mod logistic;
mod residuals;
mod wald;

use std::io::Write;

use crate::error::{Error, Result};

pub use fit::{fit_cox, robust_covariance, CoxFit, CoxOptions};
pub use likelihood::{cox_gradient, cox_hessian, cox_partial_loglik};
pub use logistic::{fit_logistic, LogisticFit};
pub use residuals::{
    ph_assumption_test, schoenfeld_residuals, PhTestResult, PhTestRow, SchoenfeldResiduals,
    TimeTransform,
};
pub use wald::{wald_pvalues, FeatureTest};

pub(crate) use residuals::ph_test_from_residuals;

/// One row of the coefficient report: β, exp(β) and the (robust) standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientRow {
    pub feature: String,
    pub beta: f64,
    pub exp_beta: f64,
    pub std_err: f64,
}

pub fn coefficient_table(fit: &CoxFit) -> Vec<CoefficientRow> {
    let se = fit.standard_errors(true);
    fit.columns
        .iter()
        .enumerate()
        .map(|(j, c)| CoefficientRow {
            feature: c.clone(),
            beta: fit.beta[j],
            exp_beta: fit.beta[j].exp(),
            std_err: se[j],
        })
        .collect()
}

pub fn write_coefficients_csv<W: Write>(rows: &[CoefficientRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["feature", "beta", "exp_beta", "std_err"])?;
    for r in rows {
        w.write_record([
            r.feature.clone(),
            r.beta.to_string(),
            r.exp_beta.to_string(),
            r.std_err.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

/// Aligned plain-text rendering with two decimals.
pub fn format_coefficients(rows: &[CoefficientRow]) -> String {
    let width = rows.iter().map(|r| r.feature.len()).max().unwrap_or(7).max(7);
    let mut out = format!(
        "{:<width$}  {:>7}  {:>7}  {:>9}\n",
        "Feature", "beta", "exp(b)", "stnd. err"
    );
    for r in rows {
        out.push_str(&format!(
            "{:<width$}  {:>7.2}  {:>7.2}  {:>9.2}\n",
            r.feature, r.beta, r.exp_beta, r.std_err
        ));
    }
    out
}
