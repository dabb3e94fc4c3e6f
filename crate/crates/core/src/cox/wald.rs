use nalgebra::{DMatrix, DVector};

use crate::data::FeatureGroup;
use crate::stats::{chi2_sf, symmetric_pinv};

use super::fit::CoxFit;

/// Wald test of one source feature (one or several encoded columns).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTest {
    pub feature: String,
    pub statistic: f64,
    pub df: usize,
    /// `None` when the covariance gives no information about the feature.
    pub p_value: Option<f64>,
}

/// Joint Wald tests `βᵀ V⁻ β ~ χ²(rank V)` per feature group. One-hot blocks
/// are usually rank deficient; the pseudo-inverse handles that.
pub(crate) fn grouped_wald(
    beta: &[f64],
    cov: &DMatrix<f64>,
    groups: &[FeatureGroup],
) -> Vec<FeatureTest> {
    groups
        .iter()
        .map(|g| {
            let cols: Vec<usize> = g.columns.clone().collect();
            let k = cols.len();
            let b = DVector::from_fn(k, |a, _| beta[cols[a]]);
            let v = DMatrix::from_fn(k, k, |a, c| cov[(cols[a], cols[c])]);
            if k == 1 {
                let var = v[(0, 0)];
                if !(var > 0.0) || !var.is_finite() {
                    return FeatureTest {
                        feature: g.name.clone(),
                        statistic: f64::NAN,
                        df: 1,
                        p_value: None,
                    };
                }
                let stat = b[0] * b[0] / var;
                return FeatureTest {
                    feature: g.name.clone(),
                    statistic: stat,
                    df: 1,
                    p_value: Some(chi2_sf(stat, 1.0)),
                };
            }
            let (vinv, rank) = symmetric_pinv(&v);
            if rank == 0 {
                return FeatureTest {
                    feature: g.name.clone(),
                    statistic: f64::NAN,
                    df: 0,
                    p_value: None,
                };
            }
            let stat = (b.transpose() * vinv * &b)[(0, 0)].max(0.0);
            FeatureTest {
                feature: g.name.clone(),
                statistic: stat,
                df: rank,
                p_value: Some(chi2_sf(stat, rank as f64)),
            }
        })
        .collect()
}

/// Per-feature Wald p-values for a Cox fit, from the robust or the
/// model-based covariance.
pub fn wald_pvalues(fit: &CoxFit, use_robust: bool) -> Vec<FeatureTest> {
    let cov = if use_robust {
        &fit.robust_covariance
    } else {
        &fit.model_covariance
    };
    grouped_wald(&fit.beta, cov, &fit.groups)
}
