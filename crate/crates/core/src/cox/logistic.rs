//! Ridge-penalized logistic regression of the event flag, the binary
//! baseline the Cox model is compared against.

use nalgebra::{DMatrix, DVector};

use crate::data::{EncodedDataset, FeatureGroup};
use crate::error::{Error, Result};
use crate::stats::Standardizer;

use super::fit::{spd_inverse, spd_solve};
use super::wald::{grouped_wald, FeatureTest};

#[derive(Debug, Clone)]
pub struct LogisticFit {
    pub intercept: f64,
    /// Slopes in raw column units.
    pub coefficients: Vec<f64>,
    /// Model-based covariance of the slopes, raw units.
    pub covariance: DMatrix<f64>,
    pub columns: Vec<String>,
    pub groups: Vec<FeatureGroup>,
    pub iterations: usize,
    pub ridge: f64,
    pub p_values: Vec<FeatureTest>,
}

impl LogisticFit {
    pub fn p_value(&self, feature: &str) -> Option<f64> {
        self.p_values.iter().find(|t| t.feature == feature)?.p_value
    }
}

fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

/// Newton-Raphson on the penalized log-likelihood of `event ~ x`. The
/// intercept is not penalized.
pub fn fit_logistic(data: &EncodedDataset, ridge: f64) -> Result<LogisticFit> {
    if !(ridge >= 0.0 && ridge.is_finite()) {
        return Err(Error::Argument(format!("ridge {ridge} must be >= 0")));
    }
    let n_pos = data.n_events();
    if n_pos == 0 || n_pos == data.n_rows() {
        return Err(Error::Model("logistic regression needs both classes".into()));
    }
    let standardizer = Standardizer::fit(data.x());
    let z = standardizer.transform(data.x());
    let (n, d) = (z.nrows(), z.ncols());
    // design with a leading intercept column
    let design = DMatrix::from_fn(n, d + 1, |i, j| if j == 0 { 1.0 } else { z[(i, j - 1)] });
    let y = DVector::from_fn(n, |i, _| if data.events()[i] { 1.0 } else { 0.0 });
    let penalty = DVector::from_fn(d + 1, |j, _| if j == 0 { 0.0 } else { ridge });

    let objective = |theta: &DVector<f64>| -> f64 {
        let eta = &design * theta;
        let ll: f64 = eta
            .iter()
            .zip(y.iter())
            .map(|(&e, &yi)| {
                // y·η − log(1 + e^η), evaluated stably
                yi * e - if e > 0.0 { e + (-e).exp().ln_1p() } else { e.exp().ln_1p() }
            })
            .sum();
        ll - 0.5 * theta.iter().zip(penalty.iter()).map(|(t, p)| p * t * t).sum::<f64>()
    };

    let mut theta = DVector::<f64>::zeros(d + 1);
    let mut iterations = 0;
    let max_iter = 200;
    let info = loop {
        let eta = &design * &theta;
        let p = eta.map(sigmoid);
        let wts = p.map(|v| v * (1.0 - v));
        let grad = design.transpose() * (&y - &p) - penalty.component_mul(&theta);
        let mut info = design.transpose() * DMatrix::from_diagonal(&wts) * &design;
        for j in 0..=d {
            info[(j, j)] += penalty[j];
        }
        if grad.norm() <= 1e-8 {
            break info;
        }
        if iterations >= max_iter {
            return Err(Error::Convergence {
                iterations,
                gradient_norm: grad.norm(),
                last_beta: theta.iter().skip(1).copied().collect(),
            });
        }
        iterations += 1;
        let step = spd_solve(&info, &grad).ok_or_else(|| {
            Error::Numeric("logistic information is singular; increase the ridge penalty".into())
        })?;
        let q = objective(&theta);
        let mut scale = 1.0;
        let mut moved = false;
        for _ in 0..40 {
            let cand = &theta + &step * scale;
            let q_new = objective(&cand);
            if q_new.is_finite() && q_new >= q - 1e-12 * (1.0 + q.abs()) {
                theta = cand;
                moved = true;
                break;
            }
            scale *= 0.5;
        }
        if !moved {
            return Err(Error::Convergence {
                iterations,
                gradient_norm: grad.norm(),
                last_beta: theta.iter().skip(1).copied().collect(),
            });
        }
    };

    let cov_full = spd_inverse(&info).ok_or_else(|| {
        Error::Numeric("logistic information is singular; increase the ridge penalty".into())
    })?;
    let cov_std = cov_full.view((1, 1), (d, d)).into_owned();
    let slopes_std = theta.rows(1, d).into_owned();
    let coefficients: Vec<f64> = standardizer.raw_coefficients(&slopes_std).iter().copied().collect();
    let covariance = standardizer.raw_covariance(&cov_std);
    let intercept = theta[0]
        - (0..d)
            .map(|j| slopes_std[j] * standardizer.means[j] / standardizer.scales[j])
            .sum::<f64>();
    let p_values = grouped_wald(&coefficients, &covariance, data.groups());
    Ok(LogisticFit {
        intercept,
        coefficients,
        covariance,
        columns: data.columns().to_vec(),
        groups: data.groups().to_vec(),
        iterations,
        ridge,
        p_values,
    })
}
