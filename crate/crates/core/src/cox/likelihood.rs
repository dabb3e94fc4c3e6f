//! Cox log partial likelihood with Efron's tie correction, and its exact
//! first and second derivatives.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};

use crate::data::EncodedDataset;
use crate::error::{Error, Result};

/// Subjects sorted by descending time, chunked into groups of equal time.
#[derive(Debug, Clone)]
pub(crate) struct RiskOrder {
    pub order: Vec<usize>,
    pub groups: Vec<Range<usize>>,
}

impl RiskOrder {
    pub fn new(durations: &[f64]) -> Self {
        let mut order: Vec<usize> = (0..durations.len()).collect();
        order.sort_by(|&a, &b| durations[b].total_cmp(&durations[a]).then(a.cmp(&b)));
        let mut groups = Vec::new();
        let mut start = 0;
        for k in 1..=order.len() {
            if k == order.len() || durations[order[k]] != durations[order[start]] {
                groups.push(start..k);
                start = k;
            }
        }
        Self { order, groups }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Derivatives {
    pub loglik: f64,
    pub gradient: DVector<f64>,
    pub hessian: Option<DMatrix<f64>>,
}

/// Linear predictor x·β, rejecting non-finite values.
pub(crate) fn linear_predictor(x: &DMatrix<f64>, beta: &DVector<f64>) -> Result<DVector<f64>> {
    let eta = x * beta;
    if eta.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("linear predictor overflowed".into()));
    }
    Ok(eta)
}

/// Risk weights exp(η - max η) and the shift that was removed.
pub(crate) fn shifted_weights(eta: &DVector<f64>) -> (Vec<f64>, f64) {
    let shift = eta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let shift = if shift.is_finite() { shift } else { 0.0 };
    (eta.iter().map(|&e| (e - shift).exp()).collect(), shift)
}

pub(crate) fn efron(
    x: &DMatrix<f64>,
    events: &[bool],
    order: &RiskOrder,
    beta: &DVector<f64>,
    with_hessian: bool,
) -> Result<Derivatives> {
    let d = x.ncols();
    let eta = linear_predictor(x, beta)?;
    let (w, shift) = shifted_weights(&eta);

    let mut loglik = 0.0;
    let mut grad = DVector::zeros(d);
    let mut hess = if with_hessian { Some(DMatrix::zeros(d, d)) } else { None };

    let mut s0 = 0.0;
    let mut s1 = DVector::<f64>::zeros(d);
    let mut s2 = DMatrix::<f64>::zeros(if with_hessian { d } else { 0 }, if with_hessian { d } else { 0 });
    let mut xi = DVector::<f64>::zeros(d);

    for g in &order.groups {
        let mut t0 = 0.0;
        let mut t1 = DVector::<f64>::zeros(d);
        let mut t2 = DMatrix::<f64>::zeros(s2.nrows(), s2.ncols());
        let mut deaths = 0usize;
        for &i in &order.order[g.clone()] {
            xi.copy_from(&x.row(i).transpose());
            let wi = w[i];
            s0 += wi;
            s1.axpy(wi, &xi, 1.0);
            if with_hessian {
                s2.ger(wi, &xi, &xi, 1.0);
            }
            if events[i] {
                deaths += 1;
                t0 += wi;
                t1.axpy(wi, &xi, 1.0);
                if with_hessian {
                    t2.ger(wi, &xi, &xi, 1.0);
                }
                loglik += eta[i];
                grad += &xi;
            }
        }
        if deaths == 0 {
            continue;
        }
        let m = deaths as f64;
        for l in 0..deaths {
            let a = l as f64 / m;
            let den = s0 - a * t0;
            if !(den > 0.0) {
                return Err(Error::Numeric("risk-set sum underflowed to zero".into()));
            }
            loglik -= den.ln() + shift;
            let num = &s1 - &t1 * a;
            let mean = &num / den;
            grad -= &mean;
            if let Some(h) = hess.as_mut() {
                let second = (&s2 - &t2 * a) / den;
                *h -= second - &mean * mean.transpose();
            }
        }
    }
    if !loglik.is_finite() {
        return Err(Error::Numeric("log partial likelihood is not finite".into()));
    }
    Ok(Derivatives {
        loglik,
        gradient: grad,
        hessian: hess,
    })
}

fn check_beta(data: &EncodedDataset, beta: &[f64]) -> Result<DVector<f64>> {
    if beta.len() != data.n_cols() {
        return Err(Error::Argument(format!(
            "beta has {} entries for {} columns",
            beta.len(),
            data.n_cols()
        )));
    }
    if beta.iter().any(|b| !b.is_finite()) {
        return Err(Error::Argument("beta must be finite".into()));
    }
    Ok(DVector::from_column_slice(beta))
}

/// Log partial likelihood at `beta` (Efron ties).
pub fn cox_partial_loglik(data: &EncodedDataset, beta: &[f64]) -> Result<f64> {
    let b = check_beta(data, beta)?;
    let order = RiskOrder::new(data.durations());
    Ok(efron(data.x(), data.events(), &order, &b, false)?.loglik)
}

/// Gradient of [`cox_partial_loglik`] with respect to `beta`.
pub fn cox_gradient(data: &EncodedDataset, beta: &[f64]) -> Result<Vec<f64>> {
    let b = check_beta(data, beta)?;
    let order = RiskOrder::new(data.durations());
    Ok(efron(data.x(), data.events(), &order, &b, false)?
        .gradient
        .iter()
        .copied()
        .collect())
}

/// Hessian of [`cox_partial_loglik`] (negative semi-definite).
pub fn cox_hessian(data: &EncodedDataset, beta: &[f64]) -> Result<DMatrix<f64>> {
    let b = check_beta(data, beta)?;
    let order = RiskOrder::new(data.durations());
    Ok(efron(data.x(), data.events(), &order, &b, true)?
        .hessian
        .expect("requested"))
}
