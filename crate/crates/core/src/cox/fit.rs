use nalgebra::{DMatrix, DVector};

use crate::data::{EncodedDataset, FeatureGroup};
use crate::error::{Error, Result};
use crate::stats::Standardizer;

use super::likelihood::{efron, RiskOrder};
use super::residuals::score_residuals;

/// Newton-Raphson settings for [`fit_cox`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoxOptions {
    /// L2 penalty on the standardized coefficients.
    pub ridge: f64,
    /// Stop once the penalized gradient norm falls to this value.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for CoxOptions {
    fn default() -> Self {
        Self {
            ridge: 1e-3,
            tol: 1e-7,
            max_iter: 100,
        }
    }
}

impl CoxOptions {
    pub fn with_ridge(ridge: f64) -> Self {
        Self {
            ridge,
            ..Self::default()
        }
    }
}

/// A fitted linear Cox model. Coefficients and covariances are in the raw
/// units of the encoded columns.
#[derive(Debug, Clone)]
pub struct CoxFit {
    pub beta: Vec<f64>,
    pub model_covariance: DMatrix<f64>,
    pub robust_covariance: DMatrix<f64>,
    /// Unpenalized log partial likelihood at the optimum.
    pub log_partial_likelihood: f64,
    pub loglik_trace: Vec<f64>,
    pub iterations: usize,
    pub gradient_norm: f64,
    pub ridge: f64,
    pub columns: Vec<String>,
    pub groups: Vec<FeatureGroup>,
    pub(crate) standardizer: Standardizer,
    pub(crate) beta_std: DVector<f64>,
}

impl CoxFit {
    pub fn hazard_ratios(&self) -> Vec<f64> {
        self.beta.iter().map(|b| b.exp()).collect()
    }

    pub fn standard_errors(&self, robust: bool) -> Vec<f64> {
        let cov = if robust {
            &self.robust_covariance
        } else {
            &self.model_covariance
        };
        (0..cov.nrows()).map(|j| cov[(j, j)].max(0.0).sqrt()).collect()
    }

    /// Linear predictor x·β for each row.
    pub fn predict_risk(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.beta.len() {
            return Err(Error::Argument(format!(
                "rows have {} columns, model has {}",
                x.ncols(),
                self.beta.len()
            )));
        }
        let b = DVector::from_column_slice(&self.beta);
        Ok((x * b).iter().copied().collect())
    }

    pub fn coefficient(&self, column: &str) -> Option<f64> {
        self.columns.iter().position(|c| c == column).map(|j| self.beta[j])
    }
}

/// Solves `a · x = b` for symmetric positive definite `a`.
pub(crate) fn spd_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    a.clone().cholesky().map(|c| c.solve(b))
}

pub(crate) fn spd_inverse(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    a.clone().cholesky().map(|c| c.inverse())
}

/// Penalized information: -H + ridge·I.
fn penalized_information(hessian: &DMatrix<f64>, ridge: f64) -> DMatrix<f64> {
    let mut a = -hessian;
    for j in 0..a.nrows() {
        a[(j, j)] += ridge;
    }
    a
}

/// Ridge-penalized Cox regression by Newton-Raphson with step halving.
///
/// Columns are standardized internally; the penalty `ridge/2·‖β‖²` applies to
/// the standardized coefficients.
pub fn fit_cox(data: &EncodedDataset, options: CoxOptions) -> Result<CoxFit> {
    if !(options.ridge >= 0.0 && options.ridge.is_finite()) {
        return Err(Error::Argument(format!("ridge {} must be >= 0", options.ridge)));
    }
    if !(options.tol > 0.0) || options.max_iter == 0 {
        return Err(Error::Argument("tol must be positive and max_iter >= 1".into()));
    }
    if data.n_rows() < 2 {
        return Err(Error::Model("need at least two subjects".into()));
    }
    if data.n_events() == 0 {
        return Err(Error::Model("no events: the partial likelihood is empty".into()));
    }

    let standardizer = Standardizer::fit(data.x());
    let z = standardizer.transform(data.x());
    let order = RiskOrder::new(data.durations());
    let ridge = options.ridge;
    let d = z.ncols();

    let objective = |beta: &DVector<f64>| -> Option<f64> {
        let ll = efron(&z, data.events(), &order, beta, false).ok()?.loglik;
        let q = ll - 0.5 * ridge * beta.norm_squared();
        q.is_finite().then_some(q)
    };

    let mut beta = DVector::zeros(d);
    let mut trace = Vec::new();
    let mut iterations = 0;
    let (derivs, grad_norm) = loop {
        let derivs = efron(&z, data.events(), &order, &beta, true)?;
        let q = derivs.loglik - 0.5 * ridge * beta.norm_squared();
        trace.push(derivs.loglik);
        let score = &derivs.gradient - &beta * ridge;
        let grad_norm = score.norm();
        if grad_norm <= options.tol {
            break (derivs, grad_norm);
        }
        if iterations >= options.max_iter {
            return Err(Error::Convergence {
                iterations,
                gradient_norm: grad_norm,
                last_beta: standardizer.raw_coefficients(&beta).iter().copied().collect(),
            });
        }
        let info = penalized_information(derivs.hessian.as_ref().expect("requested"), ridge);
        let step = spd_solve(&info, &score).ok_or_else(|| {
            Error::Numeric("information matrix is singular; increase the ridge penalty".into())
        })?;
        iterations += 1;

        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let candidate = &beta + &step * scale;
            if let Some(q_new) = objective(&candidate) {
                if q_new >= q - 1e-12 * (1.0 + q.abs()) {
                    accepted = Some(candidate);
                    break;
                }
            }
            scale *= 0.5;
        }
        match accepted {
            Some(b) => beta = b,
            None => {
                return Err(Error::Convergence {
                    iterations,
                    gradient_norm: grad_norm,
                    last_beta: standardizer.raw_coefficients(&beta).iter().copied().collect(),
                })
            }
        }
    };

    let info = penalized_information(derivs.hessian.as_ref().expect("requested"), ridge);
    let cov_std = spd_inverse(&info).ok_or_else(|| {
        Error::Numeric("information matrix is singular; increase the ridge penalty".into())
    })?;
    let robust_std = sandwich(&cov_std, &score_residuals(&z, data.events(), &order, &beta)?);

    Ok(CoxFit {
        beta: standardizer.raw_coefficients(&beta).iter().copied().collect(),
        model_covariance: standardizer.raw_covariance(&cov_std),
        robust_covariance: standardizer.raw_covariance(&robust_std),
        log_partial_likelihood: derivs.loglik,
        loglik_trace: trace,
        iterations,
        gradient_norm: grad_norm,
        ridge,
        columns: data.columns().to_vec(),
        groups: data.groups().to_vec(),
        standardizer,
        beta_std: beta,
    })
}

/// `bread · (Σ uᵢuᵢᵀ) · bread`, symmetrized.
pub(crate) fn sandwich(bread: &DMatrix<f64>, residuals: &DMatrix<f64>) -> DMatrix<f64> {
    let meat = residuals.transpose() * residuals;
    let s = bread * meat * bread;
    (&s + s.transpose()) * 0.5
}

/// Lin-Wei sandwich covariance `H⁻¹ (Σ uᵢuᵢᵀ) H⁻¹` for a converged fit.
pub fn robust_covariance(data: &EncodedDataset, fit: &CoxFit) -> Result<DMatrix<f64>> {
    if data.n_cols() != fit.beta.len() {
        return Err(Error::Argument("dataset and fit disagree on column count".into()));
    }
    let z = fit.standardizer.transform(data.x());
    let order = RiskOrder::new(data.durations());
    let derivs = efron(&z, data.events(), &order, &fit.beta_std, true)?;
    let info = penalized_information(derivs.hessian.as_ref().expect("requested"), fit.ridge);
    let bread = spd_inverse(&info).ok_or_else(|| {
        Error::Numeric("information matrix is singular; increase the ridge penalty".into())
    })?;
    let resid = score_residuals(&z, data.events(), &order, &fit.beta_std)?;
    Ok(fit.standardizer.raw_covariance(&sandwich(&bread, &resid)))
}
