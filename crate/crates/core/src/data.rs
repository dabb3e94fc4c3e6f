//! The encoded design matrix shared by every model in the crate.

use std::io::Write;
use std::ops::Range;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::survival::SurvivalSample;

/// A source feature and the contiguous block of encoded columns it produced.
///
/// One-hot features span several columns; every other encoding spans one.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureGroup {
    pub name: String,
    pub columns: Range<usize>,
}

/// Design matrix plus right-censored survival labels.
#[derive(Debug, Clone)]
pub struct EncodedDataset {
    x: DMatrix<f64>,
    durations: Vec<f64>,
    events: Vec<bool>,
    columns: Vec<String>,
    groups: Vec<FeatureGroup>,
    censor_time: Option<f64>,
}

impl EncodedDataset {
    /// Builds a dataset where each column is its own feature group.
    pub fn new(
        x: DMatrix<f64>,
        durations: Vec<f64>,
        events: Vec<bool>,
        columns: Vec<String>,
    ) -> Result<Self> {
        let groups = columns
            .iter()
            .enumerate()
            .map(|(j, c)| FeatureGroup {
                name: c.clone(),
                columns: j..j + 1,
            })
            .collect();
        Self::with_groups(x, durations, events, columns, groups)
    }

    pub fn with_groups(
        x: DMatrix<f64>,
        durations: Vec<f64>,
        events: Vec<bool>,
        columns: Vec<String>,
        groups: Vec<FeatureGroup>,
    ) -> Result<Self> {
        let n = x.nrows();
        if durations.len() != n || events.len() != n {
            return Err(Error::Argument(format!(
                "design has {n} rows but {} durations and {} event flags",
                durations.len(),
                events.len()
            )));
        }
        if columns.len() != x.ncols() {
            return Err(Error::Argument(format!(
                "design has {} columns but {} names",
                x.ncols(),
                columns.len()
            )));
        }
        if let Some(i) = durations.iter().position(|&t| !(t > 0.0 && t.is_finite())) {
            return Err(Error::Argument(format!(
                "row {i}: duration {} is not a positive finite number",
                durations[i]
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Argument("design matrix has non-finite entries".into()));
        }
        let mut next = 0;
        for g in &groups {
            if g.columns.start != next || g.columns.end <= g.columns.start {
                return Err(Error::Argument(format!(
                    "feature group `{}` does not tile the columns",
                    g.name
                )));
            }
            next = g.columns.end;
        }
        if next != columns.len() {
            return Err(Error::Argument("feature groups do not cover every column".into()));
        }
        Ok(Self {
            x,
            durations,
            events,
            columns,
            groups,
            censor_time: None,
        })
    }

    pub(crate) fn set_censor_time(&mut self, t: Option<f64>) {
        self.censor_time = t;
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn durations(&self) -> &[f64] {
        &self.durations
    }

    pub fn events(&self) -> &[bool] {
        &self.events
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn groups(&self) -> &[FeatureGroup] {
        &self.groups
    }

    /// The duration assigned to censored rows, when the dataset came from ingest.
    pub fn censor_time(&self) -> Option<f64> {
        self.censor_time
    }

    pub fn n_rows(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.x.ncols()
    }

    pub fn n_events(&self) -> usize {
        self.events.iter().filter(|&&e| e).count()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.x.row(i).iter().copied().collect()
    }

    /// Rows as owned vectors, in dataset order.
    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n_rows()).map(|i| self.row(i)).collect()
    }

    /// Labels in the signed convention: `+t` for an event at `t`, `-t` for censoring at `t`.
    pub fn signed_labels(&self) -> Vec<f64> {
        self.durations
            .iter()
            .zip(&self.events)
            .map(|(&t, &e)| if e { t } else { -t })
            .collect()
    }

    pub fn samples(&self) -> Vec<SurvivalSample> {
        self.durations
            .iter()
            .zip(&self.events)
            .map(|(&duration, &event)| SurvivalSample { duration, event })
            .collect()
    }

    /// A new dataset holding the given rows, in the given order.
    pub fn subset(&self, rows: &[usize]) -> Self {
        let x = DMatrix::from_fn(rows.len(), self.n_cols(), |i, j| self.x[(rows[i], j)]);
        Self {
            x,
            durations: rows.iter().map(|&i| self.durations[i]).collect(),
            events: rows.iter().map(|&i| self.events[i]).collect(),
            columns: self.columns.clone(),
            groups: self.groups.clone(),
            censor_time: self.censor_time,
        }
    }

    /// Same rows with every duration multiplied by `factor` (unit change).
    pub fn rescale_durations(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::Argument(format!("invalid time scale {factor}")));
        }
        let mut out = self.clone();
        out.durations.iter_mut().for_each(|t| *t *= factor);
        out.censor_time = self.censor_time.map(|t| t * factor);
        Ok(out)
    }

    /// Writes `duration,event,<columns...>` as CSV for auditing the encoding.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["duration".to_string(), "event".to_string()];
        header.extend(self.columns.iter().cloned());
        w.write_record(&header)?;
        for i in 0..self.n_rows() {
            let mut rec = vec![
                self.durations[i].to_string(),
                u8::from(self.events[i]).to_string(),
            ];
            rec.extend(self.x.row(i).iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}
