//! CSV ingestion, feature encoding and censoring-time imputation.

mod schema;

use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::{EncodedDataset, FeatureGroup};
use crate::error::{Error, Result};

pub use schema::{Encoding, FeatureSchema, FeatureSpec};

/// A cell as read from the CSV.
#[derive(Debug, Clone, PartialEq)]
pub enum CellValue {
    Number(f64),
    Category(String),
}

impl CellValue {
    fn parse(raw: &str) -> Self {
        let s = raw.trim();
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() => CellValue::Number(v),
            _ => CellValue::Category(s.to_string()),
        }
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            CellValue::Number(v) => Some(*v),
            CellValue::Category(_) => None,
        }
    }
}

impl fmt::Display for CellValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CellValue::Number(v) => write!(f, "{v}"),
            CellValue::Category(s) => f.write_str(s),
        }
    }
}

/// One paper from the study CSV, before encoding.
#[derive(Debug, Clone, PartialEq)]
pub struct RawPaperRecord {
    /// 1-based data row in the source file (header excluded).
    pub row: usize,
    pub features: BTreeMap<String, CellValue>,
    pub reproduced: bool,
    /// Observed reproduction time in days; only reproduced papers carry one.
    pub duration_days: Option<f64>,
}

/// How censored (non-reproduced) papers get a duration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Imputation {
    Mean,
    Median,
    Constant(f64),
}

impl FromStr for Imputation {
    type Err = Error;

    /// Accepts `mean`, `median`, `const:N` or a bare number.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s.to_ascii_lowercase().as_str() {
            "mean" => return Ok(Imputation::Mean),
            "median" => return Ok(Imputation::Median),
            _ => {}
        }
        let num = s.strip_prefix("const:").unwrap_or(s);
        match num.trim().parse::<f64>() {
            Ok(c) if c > 0.0 && c.is_finite() => Ok(Imputation::Constant(c)),
            _ => Err(Error::Config(format!(
                "imputation `{s}`: expected mean, median or const:<positive days>"
            ))),
        }
    }
}

impl TryFrom<String> for Imputation {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Imputation> for String {
    fn from(i: Imputation) -> String {
        i.to_string()
    }
}

impl fmt::Display for Imputation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Imputation::Mean => f.write_str("mean"),
            Imputation::Median => f.write_str("median"),
            Imputation::Constant(c) => write!(f, "const:{c}"),
        }
    }
}

fn parse_reproduced(raw: &str) -> Option<bool> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "1" | "yes" | "y" | "true" | "t" | "reproduced" => Some(true),
        "0" | "no" | "n" | "false" | "f" | "not reproduced" => Some(false),
        _ => None,
    }
}

/// Reads the study CSV at `path`. See [`read_csv`].
pub fn load_csv(path: impl AsRef<Path>, schema: &FeatureSchema) -> Result<Vec<RawPaperRecord>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, schema)
}

/// Parses study rows and drops reproduced papers that have no recorded
/// reproduction time (they carry neither an event time nor a censoring time).
pub fn read_csv<R: Read>(reader: R, schema: &FeatureSchema) -> Result<Vec<RawPaperRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let index_of = |name: &str| headers.iter().position(|h| h == name);

    let mut columns = Vec::new();
    for name in schema.required_columns() {
        let idx = index_of(name)
            .ok_or_else(|| Error::Schema(format!("missing required column `{name}`")))?;
        columns.push((name.to_string(), idx));
    }
    let dur_idx = index_of(&schema.duration_column).expect("checked above");
    let event_idx = index_of(&schema.event_column).expect("checked above");

    let mut records = Vec::new();
    let mut untimed = 0usize;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        let cell = |idx: usize| rec.get(idx).unwrap_or("");

        let event_raw = cell(event_idx);
        let reproduced = parse_reproduced(event_raw).ok_or_else(|| Error::Parse {
            row,
            column: schema.event_column.clone(),
            message: format!("`{event_raw}` is not a yes/no value"),
        })?;

        let dur_raw = cell(dur_idx).trim();
        let mut duration_days = if dur_raw.is_empty() || dur_raw.eq_ignore_ascii_case("na") {
            None
        } else {
            let d: f64 = dur_raw.parse().map_err(|_| Error::Parse {
                row,
                column: schema.duration_column.clone(),
                message: format!("`{dur_raw}` is not a number"),
            })?;
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::Parse {
                    row,
                    column: schema.duration_column.clone(),
                    message: format!("duration {d} must be positive"),
                });
            }
            Some(d)
        };

        if reproduced && duration_days.is_none() {
            untimed += 1;
            continue;
        }
        if !reproduced && duration_days.is_some() {
            log::warn!("row {row}: ignoring duration on a non-reproduced paper");
            duration_days = None;
        }

        let mut features = BTreeMap::new();
        for (name, idx) in &columns {
            if *idx == dur_idx || *idx == event_idx {
                continue;
            }
            let raw = cell(*idx);
            if raw.trim().is_empty() {
                return Err(Error::Parse {
                    row,
                    column: name.clone(),
                    message: "empty cell".into(),
                });
            }
            features.insert(name.clone(), CellValue::parse(raw));
        }
        records.push(RawPaperRecord {
            row,
            features,
            reproduced,
            duration_days,
        });
    }
    if untimed > 0 {
        log::info!("dropped {untimed} reproduced rows without a reproduction time");
    }
    Ok(records)
}

/// Durations and event flags for every record, with censored papers assigned
/// the strategy's constant. Returns the labels and the constant used.
pub fn impute_censoring(
    records: &[RawPaperRecord],
    strategy: Imputation,
) -> Result<(Vec<f64>, Vec<bool>, f64)> {
    let observed: Vec<f64> = records.iter().filter_map(|r| r.duration_days).collect();
    let constant = match strategy {
        Imputation::Constant(c) => {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::Config(format!("censoring constant {c} must be positive")));
            }
            c
        }
        Imputation::Mean | Imputation::Median if observed.is_empty() => {
            return Err(Error::Config(format!(
                "{strategy} imputation needs at least one observed duration"
            )));
        }
        Imputation::Mean => observed.iter().sum::<f64>() / observed.len() as f64,
        Imputation::Median => median(&observed),
    };
    let mut durations = Vec::with_capacity(records.len());
    let mut events = Vec::with_capacity(records.len());
    for r in records {
        match (r.reproduced, r.duration_days) {
            (true, Some(d)) => {
                durations.push(d);
                events.push(true);
            }
            (true, None) => {
                return Err(Error::Argument(format!(
                    "row {}: reproduced paper without a duration",
                    r.row
                )))
            }
            (false, _) => {
                durations.push(constant);
                events.push(false);
            }
        }
    }
    Ok((durations, events, constant))
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn category_of(record: &RawPaperRecord, spec: &FeatureSpec) -> Result<String> {
    let cell = record.features.get(&spec.source).ok_or_else(|| {
        Error::Schema(format!("row {}: no value for `{}`", record.row, spec.source))
    })?;
    Ok(spec.canonical(&cell.to_string()).to_string())
}

fn numeric_of(record: &RawPaperRecord, source: &str) -> Result<f64> {
    let cell = record
        .features
        .get(source)
        .ok_or_else(|| Error::Schema(format!("row {}: no value for `{source}`", record.row)))?;
    cell.as_number().ok_or_else(|| Error::Parse {
        row: record.row,
        column: source.to_string(),
        message: format!("`{cell}` is not a number"),
    })
}

/// Encodes features into the design matrix described by `schema`.
pub fn encode_features(
    records: &[RawPaperRecord],
    schema: &FeatureSchema,
) -> Result<(DMatrix<f64>, Vec<String>, Vec<FeatureGroup>)> {
    let columns = schema.column_names();
    let mut x = DMatrix::zeros(records.len(), columns.len());
    let mut groups = Vec::with_capacity(schema.features.len());
    let mut col = 0;
    for spec in &schema.features {
        let width = spec.column_names().len();
        for (i, rec) in records.iter().enumerate() {
            match &spec.encoding {
                Encoding::Numeric => x[(i, col)] = numeric_of(rec, &spec.source)?,
                Encoding::PerPage => {
                    let page_col = schema.page_column.as_deref().expect("validated");
                    let pages = numeric_of(rec, page_col)?;
                    if pages <= 0.0 {
                        return Err(Error::Parse {
                            row: rec.row,
                            column: page_col.to_string(),
                            message: format!("page count {pages} cannot normalize `{}`", spec.source),
                        });
                    }
                    x[(i, col)] = numeric_of(rec, &spec.source)? / pages;
                }
                Encoding::Ordinal { mapping } => {
                    let cat = category_of(rec, spec)?;
                    x[(i, col)] = *mapping.get(&cat).ok_or_else(|| Error::Encoding {
                        feature: spec.feature_name().to_string(),
                        value: cat.clone(),
                    })?;
                }
                Encoding::OneHot { categories } => {
                    let cat = category_of(rec, spec)?;
                    let k = categories.iter().position(|c| *c == cat).ok_or_else(|| {
                        Error::Encoding {
                            feature: spec.feature_name().to_string(),
                            value: cat.clone(),
                        }
                    })?;
                    x[(i, col + k)] = 1.0;
                }
            }
        }
        groups.push(FeatureGroup {
            name: spec.feature_name().to_string(),
            columns: col..col + width,
        });
        col += width;
    }
    Ok((x, columns, groups))
}

/// Full ingest step: encode features and impute censored durations.
pub fn encode(
    records: &[RawPaperRecord],
    schema: &FeatureSchema,
    strategy: Imputation,
) -> Result<EncodedDataset> {
    let (x, columns, groups) = encode_features(records, schema)?;
    let (durations, events, constant) = impute_censoring(records, strategy)?;
    let mut data = EncodedDataset::with_groups(x, durations, events, columns, groups)?;
    data.set_censor_time(Some(constant));
    Ok(data)
}

/// Recovers the category of a one-hot feature for one encoded row.
pub fn decode_one_hot(
    data: &EncodedDataset,
    schema: &FeatureSchema,
    feature: &str,
    row: usize,
) -> Option<String> {
    let spec = schema.features.iter().find(|f| f.feature_name() == feature)?;
    let group = data.groups().iter().find(|g| g.name == feature)?;
    match &spec.encoding {
        Encoding::OneHot { categories } => group
            .columns
            .clone()
            .position(|j| data.x()[(row, j)] == 1.0)
            .map(|k| categories[k].clone()),
        _ => None,
    }
}
