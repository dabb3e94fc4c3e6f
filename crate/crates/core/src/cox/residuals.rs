//! Score and Schoenfeld residuals, and the Grambsch-Therneau test of the
//! proportional hazards assumption built on them.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::data::EncodedDataset;
use crate::error::{Error, Result};
use crate::stats::{average_ranks, chi2_sf};
use crate::survival::kaplan_meier;

use super::fit::CoxFit;
use super::likelihood::{linear_predictor, shifted_weights, RiskOrder};

/// Per tie group quantities shared by the residual computations.
struct GroupTerms {
    /// Σ_l 1/den_l and Σ_l xbar_l/den_l, for subjects that did not die here.
    a_alive: f64,
    b_alive: DVector<f64>,
    /// Same with the Efron weights (1 - l/m), for the subjects that died here.
    a_dead: f64,
    b_dead: DVector<f64>,
    /// (1/m) Σ_l xbar_l: the mean a death at this time is compared against.
    event_mean: DVector<f64>,
    deaths: usize,
}

fn group_terms(
    x: &DMatrix<f64>,
    events: &[bool],
    order: &RiskOrder,
    w: &[f64],
) -> Result<Vec<GroupTerms>> {
    let d = x.ncols();
    let mut s0 = 0.0;
    let mut s1 = DVector::<f64>::zeros(d);
    let mut out = Vec::with_capacity(order.groups.len());
    for g in &order.groups {
        let mut t0 = 0.0;
        let mut t1 = DVector::<f64>::zeros(d);
        let mut deaths = 0;
        for &i in &order.order[g.clone()] {
            let xi = x.row(i).transpose();
            s0 += w[i];
            s1.axpy(w[i], &xi, 1.0);
            if events[i] {
                deaths += 1;
                t0 += w[i];
                t1.axpy(w[i], &xi, 1.0);
            }
        }
        let mut terms = GroupTerms {
            a_alive: 0.0,
            b_alive: DVector::zeros(d),
            a_dead: 0.0,
            b_dead: DVector::zeros(d),
            event_mean: DVector::zeros(d),
            deaths,
        };
        let m = deaths as f64;
        for l in 0..deaths {
            let a = l as f64 / m;
            let den = s0 - a * t0;
            if !(den > 0.0) {
                return Err(Error::Numeric("risk-set sum underflowed to zero".into()));
            }
            let xbar = (&s1 - &t1 * a) / den;
            terms.a_alive += 1.0 / den;
            terms.b_alive.axpy(1.0 / den, &xbar, 1.0);
            terms.a_dead += (1.0 - a) / den;
            terms.b_dead.axpy((1.0 - a) / den, &xbar, 1.0);
            terms.event_mean.axpy(1.0 / m, &xbar, 1.0);
        }
        out.push(terms);
    }
    Ok(out)
}

/// Per-subject score residuals (n × d) under Efron ties. Their column sums
/// equal the gradient of the log partial likelihood.
pub(crate) fn score_residuals(
    x: &DMatrix<f64>,
    events: &[bool],
    order: &RiskOrder,
    beta: &DVector<f64>,
) -> Result<DMatrix<f64>> {
    let (n, d) = (x.nrows(), x.ncols());
    let eta = linear_predictor(x, beta)?;
    let (w, _) = shifted_weights(&eta);
    let terms = group_terms(x, events, order, &w)?;

    // suffix sums over groups at or before (in time) each group
    let ng = terms.len();
    let mut a_suffix = vec![0.0; ng + 1];
    let mut b_suffix = vec![DVector::<f64>::zeros(d); ng + 1];
    for k in (0..ng).rev() {
        a_suffix[k] = a_suffix[k + 1] + terms[k].a_alive;
        b_suffix[k] = &b_suffix[k + 1] + &terms[k].b_alive;
    }

    let mut u = DMatrix::zeros(n, d);
    for (k, g) in order.groups.iter().enumerate() {
        let t = &terms[k];
        for &i in &order.order[g.clone()] {
            let xi = x.row(i).transpose();
            let (a_own, b_own) = if events[i] {
                (t.a_dead, &t.b_dead)
            } else {
                (t.a_alive, &t.b_alive)
            };
            let a = a_suffix[k + 1] + a_own;
            let b = &b_suffix[k + 1] + b_own;
            let mut ui = (&xi * a - b) * (-w[i]);
            if events[i] {
                ui += &xi - &t.event_mean;
            }
            u.set_row(i, &ui.transpose());
        }
    }
    Ok(u)
}

/// Schoenfeld residuals: one row per event, `x_i - x̄(t_i)` in raw units.
#[derive(Debug, Clone)]
pub struct SchoenfeldResiduals {
    pub times: Vec<f64>,
    /// Index of the subject each row belongs to.
    pub subjects: Vec<usize>,
    pub residuals: DMatrix<f64>,
    pub columns: Vec<String>,
}

impl SchoenfeldResiduals {
    pub fn n_events(&self) -> usize {
        self.times.len()
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.residuals.column(j).iter().copied().collect())
    }

    /// Scaled residuals `D · r · V + β` (D = events, V = model covariance).
    pub fn scaled(&self, fit: &CoxFit) -> DMatrix<f64> {
        let d_events = self.n_events() as f64;
        let mut s = &self.residuals * &fit.model_covariance * d_events;
        for mut row in s.row_iter_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                *v += fit.beta[j];
            }
        }
        s
    }

    /// CSV `time,residual,scaled_residual` for one column.
    pub fn write_column_csv<W: Write>(&self, fit: &CoxFit, column: &str, writer: W) -> Result<()> {
        let j = self
            .columns
            .iter()
            .position(|c| c == column)
            .ok_or_else(|| Error::Argument(format!("unknown column `{column}`")))?;
        let scaled = self.scaled(fit);
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["time", "residual", "scaled_residual"])?;
        for k in 0..self.n_events() {
            w.write_record([
                self.times[k].to_string(),
                self.residuals[(k, j)].to_string(),
                scaled[(k, j)].to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}

pub fn schoenfeld_residuals(data: &EncodedDataset, fit: &CoxFit) -> Result<SchoenfeldResiduals> {
    if data.n_cols() != fit.beta.len() {
        return Err(Error::Argument("dataset and fit disagree on column count".into()));
    }
    let z = fit.standardizer.transform(data.x());
    let order = RiskOrder::new(data.durations());
    let eta = linear_predictor(&z, &fit.beta_std)?;
    let (w, _) = shifted_weights(&eta);
    let terms = group_terms(&z, data.events(), &order, &w)?;

    // rows in ascending time, subjects in index order within a time
    let mut rows: Vec<(f64, usize, DVector<f64>)> = Vec::new();
    for (k, g) in order.groups.iter().enumerate() {
        if terms[k].deaths == 0 {
            continue;
        }
        for &i in &order.order[g.clone()] {
            if data.events()[i] {
                let r = z.row(i).transpose() - &terms[k].event_mean;
                rows.push((data.durations()[i], i, r));
            }
        }
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let d = data.n_cols();
    let scales = &fit.standardizer.scales;
    let residuals = DMatrix::from_fn(rows.len(), d, |k, j| rows[k].2[j] * scales[j]);
    Ok(SchoenfeldResiduals {
        times: rows.iter().map(|r| r.0).collect(),
        subjects: rows.iter().map(|r| r.1).collect(),
        residuals,
        columns: data.columns().to_vec(),
    })
}

/// Time transform correlated against the scaled residuals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TimeTransform {
    /// 1 - KM(t), the Kaplan-Meier estimate over all subjects.
    Km,
    /// Rank of the event time among event times.
    Rank,
}

impl TimeTransform {
    pub fn name(self) -> &'static str {
        match self {
            TimeTransform::Km => "km",
            TimeTransform::Rank => "rank",
        }
    }
}

impl fmt::Display for TimeTransform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TimeTransform {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "km" => Ok(TimeTransform::Km),
            "rank" => Ok(TimeTransform::Rank),
            other => Err(Error::Argument(format!("unknown time transform `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhTestRow {
    pub feature: String,
    pub transform: TimeTransform,
    pub statistic: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhTestResult {
    pub transform: TimeTransform,
    pub rows: Vec<PhTestRow>,
}

impl PhTestResult {
    pub fn get(&self, feature: &str) -> Option<&PhTestRow> {
        self.rows.iter().find(|r| r.feature == feature)
    }

    pub fn rejected(&self, alpha: f64) -> Vec<&PhTestRow> {
        self.rows.iter().filter(|r| r.p_value < alpha).collect()
    }
}

/// Per-column score test of a time-varying coefficient, `β_j(t) = β_j + θ g(t)`.
///
/// Statistic: `(Σ_k g̃_k s_kj)² / (D · V_jj · Σ_k g̃_k²)` where `s` are the
/// scaled Schoenfeld residuals, `g̃` the centered transformed event times,
/// `D` the number of events and `V` the model-based covariance. Chi-square(1).
pub fn ph_assumption_test(
    data: &EncodedDataset,
    fit: &CoxFit,
    transform: TimeTransform,
) -> Result<PhTestResult> {
    if data.n_events() < 2 {
        return Err(Error::Model("the PH test needs at least two events".into()));
    }
    let resid = schoenfeld_residuals(data, fit)?;
    ph_test_from_residuals(data, fit, &resid, transform)
}

pub(crate) fn ph_test_from_residuals(
    data: &EncodedDataset,
    fit: &CoxFit,
    resid: &SchoenfeldResiduals,
    transform: TimeTransform,
) -> Result<PhTestResult> {
    let g: Vec<f64> = match transform {
        TimeTransform::Rank => average_ranks(&resid.times),
        TimeTransform::Km => {
            let curve = kaplan_meier(&data.samples())?;
            resid.times.iter().map(|&t| 1.0 - curve.survival_at(t)).collect()
        }
    };
    let mean = g.iter().sum::<f64>() / g.len() as f64;
    let g: Vec<f64> = g.iter().map(|v| v - mean).collect();
    let gg: f64 = g.iter().map(|v| v * v).sum();
    let d_events = resid.n_events() as f64;
    let scaled = resid.scaled(fit);

    let rows = (0..data.n_cols())
        .map(|j| {
            let num: f64 = g.iter().enumerate().map(|(k, gk)| gk * scaled[(k, j)]).sum();
            let var = fit.model_covariance[(j, j)];
            let statistic = if gg > 0.0 && var > 0.0 {
                num * num / (d_events * var * gg)
            } else {
                0.0
            };
            PhTestRow {
                feature: data.columns()[j].clone(),
                transform,
                statistic,
                p_value: chi2_sf(statistic, 1.0),
            }
        })
        .collect();
    Ok(PhTestResult { transform, rows })
}
