//! End-to-end pipeline: ingest, linear and boosted analyses, SHAP, and the
//! CSV/JSON/SVG files they produce.

mod plots;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::boost::{
    cross_validate, cross_validate_cox, fit_boosted, hyperparameter_search, BoostConfig, CvReport,
    SearchReport, SearchSpace, TreeEnsemble,
};
use crate::cox::{
    coefficient_table, fit_cox, fit_logistic, format_coefficients, ph_test_from_residuals,
    schoenfeld_residuals, wald_pvalues, write_coefficients_csv, CoxFit, CoxOptions, FeatureTest,
    LogisticFit, PhTestResult, TimeTransform,
};
use crate::data::EncodedDataset;
use crate::error::{Error, Result};
use crate::ingest::{encode, load_csv, FeatureSchema, Imputation};
use crate::shap::{dependence_export, shap_interactions, write_summary_csv, ShapAttribution};
use crate::survival::kaplan_meier;

pub use plots::{emit_plots, PlotSummary};

/// Encoded columns that get a dependence export by default.
pub const DEPENDENCE_FEATURES: [&str; 9] = [
    "Normalized Number of Equations",
    "Pages",
    "Normalized Number of Proofs",
    "Normalized Num References",
    "Normalized Number of Tables",
    "Normalized Number of Graphs/Plots",
    "Year",
    "Year Attempted",
    "Normalized Conceptualization Figures",
];

/// Everything a run depends on. With the same values (seed included) every
/// output file is byte-identical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: PathBuf,
    pub impute: Imputation,
    pub ridge: f64,
    pub folds: usize,
    pub seed: u64,
    /// Random-search budget; without one the tuned preset (or `boost`) is used.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    pub out: PathBuf,
    /// Significance level for flagging PH violations.
    pub alpha: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub linear_schema: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boosted_schema: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boost: Option<BoostConfig>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data: PathBuf::new(),
            impute: Imputation::Mean,
            ridge: CoxOptions::default().ridge,
            folds: 10,
            seed: 42,
            trials: None,
            out: PathBuf::from("out"),
            alpha: 0.05,
            linear_schema: None,
            boosted_schema: None,
            boost: None,
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("run config: {e}")))
    }

    /// Keys present in `text` replace the current values.
    pub fn with_overrides(&self, text: &str) -> Result<Self> {
        let mut base = toml::Table::try_from(self)
            .map_err(|e| Error::Config(format!("run config: {e}")))?;
        let overrides: toml::Table =
            toml::from_str(text).map_err(|e| Error::Config(format!("run config: {e}")))?;
        for (k, v) in overrides {
            base.insert(k, v);
        }
        toml::Value::Table(base)
            .try_into()
            .map_err(|e| Error::Config(format!("run config: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        if self.data.as_os_str().is_empty() {
            return Err(Error::Argument("no dataset path given".into()));
        }
        if self.out.as_os_str().is_empty() {
            return Err(Error::Argument("no output directory given".into()));
        }
        if !(self.ridge >= 0.0 && self.ridge.is_finite()) {
            return Err(Error::Config(format!("ridge = {} must be non-negative", self.ridge)));
        }
        if self.folds < 2 {
            return Err(Error::Config(format!("folds = {} must be at least 2", self.folds)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha = {} must lie in (0, 1)", self.alpha)));
        }
        if self.trials == Some(0) {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if let Some(b) = &self.boost {
            b.validate()?;
        }
        Ok(())
    }

    pub fn linear_schema(&self) -> Result<FeatureSchema> {
        match &self.linear_schema {
            Some(p) => FeatureSchema::from_file(p),
            None => Ok(FeatureSchema::paper_one_hot()),
        }
    }

    pub fn boosted_schema(&self) -> Result<FeatureSchema> {
        match &self.boosted_schema {
            Some(p) => FeatureSchema::from_file(p),
            None => Ok(FeatureSchema::paper_ordinal()),
        }
    }

    /// Boosting hyperparameters when no search runs: `boost` if given,
    /// otherwise the tuned preset seeded with the run seed.
    pub fn boost_config(&self) -> BoostConfig {
        self.boost.unwrap_or(BoostConfig {
            seed: self.seed,
            ..BoostConfig::paper_preset()
        })
    }

    pub fn load(&self, schema: &FeatureSchema) -> Result<EncodedDataset> {
        self.validate()?;
        let records = load_csv(&self.data, schema)?;
        encode(&records, schema, self.impute)
    }
}

/// File name for a column: anything outside `[A-Za-z0-9_-]` becomes `_`.
pub fn file_stem(column: &str) -> String {
    column
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

pub(crate) fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

fn finish(mut w: BufWriter<File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_with<F>(path: &Path, files: &mut Vec<PathBuf>, body: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<()>,
{
    let mut w = create(path)?;
    body(&mut w)?;
    finish(w, path)?;
    files.push(path.to_path_buf());
    Ok(())
}

fn write_cv_csv<W: Write>(cv: &CvReport, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["fold", "train_rows", "test_rows", "concordance"])?;
    for f in &cv.folds {
        w.write_record([
            f.fold.to_string(),
            f.train_rows.to_string(),
            f.test_rows.to_string(),
            f.concordance.map(|c| c.to_string()).unwrap_or_default(),
        ])?;
    }
    w.write_record(["mean".to_string(), String::new(), String::new(), cv.mean.to_string()])?;
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map(|p| p.to_string()).unwrap_or_default()
}

/// Observed (reproduced) durations binned into `bins` equal-width bins.
pub fn duration_histogram(data: &EncodedDataset, bins: usize) -> Vec<(f64, f64, usize)> {
    let observed: Vec<f64> = data
        .durations()
        .iter()
        .zip(data.events())
        .filter(|(_, &e)| e)
        .map(|(&d, _)| d)
        .collect();
    if observed.is_empty() || bins == 0 {
        return Vec::new();
    }
    let hi = observed.iter().copied().fold(f64::MIN, f64::max);
    let width = (hi / bins as f64).max(f64::MIN_POSITIVE);
    let mut counts = vec![0usize; bins];
    for d in observed {
        counts[((d / width) as usize).min(bins - 1)] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(b, c)| (b as f64 * width, (b + 1) as f64 * width, c))
        .collect()
}

#[derive(Debug, Clone)]
pub struct LinearReport {
    pub fit: CoxFit,
    pub cox_tests: Vec<FeatureTest>,
    pub cox_tests_model: Vec<FeatureTest>,
    pub logistic: LogisticFit,
    pub ph_km: PhTestResult,
    pub ph_rank: PhTestResult,
    /// Columns flagged by either transform at the configured alpha.
    pub flagged: Vec<String>,
    pub cv: CvReport,
    pub files: Vec<PathBuf>,
}

/// Cox and logistic fits on the linear schema, Wald and PH tests, residual
/// exports for flagged columns, a KM curve and the linear CV score.
pub fn run_linear_report(config: &RunConfig) -> Result<LinearReport> {
    let schema = config.linear_schema()?;
    let data = config.load(&schema)?;
    linear_report_for(config, &data)
}

pub fn linear_report_for(config: &RunConfig, data: &EncodedDataset) -> Result<LinearReport> {
    let out = &config.out;
    let options = CoxOptions::with_ridge(config.ridge);
    let fit = fit_cox(data, options)?;
    let cox_tests = wald_pvalues(&fit, true);
    let cox_tests_model = wald_pvalues(&fit, false);
    let logistic = fit_logistic(data, config.ridge)?;
    let resid = schoenfeld_residuals(data, &fit)?;
    let ph_km = ph_test_from_residuals(data, &fit, &resid, TimeTransform::Km)?;
    let ph_rank = ph_test_from_residuals(data, &fit, &resid, TimeTransform::Rank)?;
    let cv = cross_validate_cox(data, options, config.folds, config.seed)?;

    let mut flagged: Vec<String> = Vec::new();
    for row in ph_km.rows.iter().chain(&ph_rank.rows) {
        if row.p_value < config.alpha && !flagged.contains(&row.feature) {
            flagged.push(row.feature.clone());
        }
    }
    flagged.sort_by_key(|f| data.column_index(f));

    let mut files = Vec::new();
    let table = coefficient_table(&fit);
    write_with(&out.join("coefficients.csv"), &mut files, |w| write_coefficients_csv(&table, w))?;
    write_with(&out.join("coefficients.txt"), &mut files, |w| {
        w.write_all(format_coefficients(&table).as_bytes())
            .map_err(|e| Error::io("coefficients.txt", e))
    })?;
    write_with(&out.join("pvalues.csv"), &mut files, |w| {
        let mut c = csv::Writer::from_writer(w);
        c.write_record(["feature", "df", "logistic_p", "cox_p", "cox_p_model", "cox_statistic"])?;
        for (t, m) in cox_tests.iter().zip(&cox_tests_model) {
            c.write_record([
                t.feature.clone(),
                t.df.to_string(),
                opt(logistic.p_value(&t.feature)),
                opt(t.p_value),
                opt(m.p_value),
                t.statistic.to_string(),
            ])?;
        }
        c.flush().map_err(|e| Error::io("pvalues.csv", e))
    })?;
    write_with(&out.join("ph_tests.csv"), &mut files, |w| {
        let mut c = csv::Writer::from_writer(w);
        c.write_record(["feature", "transform", "statistic", "p_value", "flagged"])?;
        for (k, r) in ph_km.rows.iter().zip(&ph_rank.rows) {
            for row in [k, r] {
                c.write_record([
                    row.feature.clone(),
                    row.transform.to_string(),
                    row.statistic.to_string(),
                    row.p_value.to_string(),
                    (row.p_value < config.alpha).to_string(),
                ])?;
            }
        }
        c.flush().map_err(|e| Error::io("ph_tests.csv", e))
    })?;
    for column in &flagged {
        let path = out.join("residuals").join(format!("{}.csv", file_stem(column)));
        write_with(&path, &mut files, |w| resid.write_column_csv(&fit, column, w))?;
    }
    let km = kaplan_meier(&data.samples())?;
    write_with(&out.join("km_curve.csv"), &mut files, |w| km.write_csv(w))?;
    write_with(&out.join("duration_histogram.csv"), &mut files, |w| {
        let mut c = csv::Writer::from_writer(w);
        c.write_record(["bin_start", "bin_end", "count"])?;
        for (a, b, n) in duration_histogram(data, 20) {
            c.write_record([a.to_string(), b.to_string(), n.to_string()])?;
        }
        c.flush().map_err(|e| Error::io("duration_histogram.csv", e))
    })?;
    write_with(&out.join("linear_cv_scores.csv"), &mut files, |w| write_cv_csv(&cv, w))?;

    Ok(LinearReport {
        fit,
        cox_tests,
        cox_tests_model,
        logistic,
        ph_km,
        ph_rank,
        flagged,
        cv,
        files,
    })
}

#[derive(Debug, Clone)]
pub struct BoostedReport {
    pub config: BoostConfig,
    pub search: Option<SearchReport>,
    pub cv: CvReport,
    pub model: TreeEnsemble,
    pub attribution: ShapAttribution,
    pub files: Vec<PathBuf>,
}

/// Boosted Cox on the ordinal schema: optional search, CV, a final fit on
/// all rows, and SHAP summary and dependence exports.
pub fn run_boosted_report(config: &RunConfig) -> Result<BoostedReport> {
    let schema = config.boosted_schema()?;
    let data = config.load(&schema)?;
    boosted_report_for(config, &data)
}

pub fn boosted_report_for(config: &RunConfig, data: &EncodedDataset) -> Result<BoostedReport> {
    let out = &config.out;
    let mut files = Vec::new();
    let search = match config.trials {
        Some(budget) => Some(hyperparameter_search(
            data,
            &SearchSpace::default(),
            budget,
            config.folds,
            config.seed,
        )?),
        None => None,
    };
    let boost = search.as_ref().map_or_else(|| config.boost_config(), |s| s.best);
    if let Some(s) = &search {
        write_with(&out.join("trials.csv"), &mut files, |w| s.write_csv(w))?;
    }
    let cv = cross_validate(data, &boost, config.folds, config.seed)?;
    write_with(&out.join("cv_scores.csv"), &mut files, |w| write_cv_csv(&cv, w))?;
    let model = fit_boosted(data, &boost)?;
    write_with(&out.join("model.json"), &mut files, |w| model.write_json(w))?;
    write_with(&out.join("boost_config.toml"), &mut files, |w| {
        let text = toml::to_string(&boost).map_err(|e| Error::Config(e.to_string()))?;
        w.write_all(text.as_bytes()).map_err(|e| Error::io("boost_config.toml", e))
    })?;
    let (attribution, shap_files) = write_shap(&model, data, out)?;
    files.extend(shap_files);
    Ok(BoostedReport {
        config: boost,
        search,
        cv,
        model,
        attribution,
        files,
    })
}

/// SHAP values of `model` on `data` (which is also the background): summary,
/// per-row values and dependence exports for [`DEPENDENCE_FEATURES`].
pub fn write_shap(
    model: &TreeEnsemble,
    data: &EncodedDataset,
    out: &Path,
) -> Result<(ShapAttribution, Vec<PathBuf>)> {
    let attribution = shap_interactions(model, data.x(), data.x())?;
    let mut files = Vec::new();
    write_with(&out.join("shap_summary.csv"), &mut files, |w| write_summary_csv(&attribution, w))?;
    write_with(&out.join("shap_values.csv"), &mut files, |w| {
        let mut c = csv::Writer::from_writer(w);
        c.write_record(&attribution.feature_names)?;
        for row in attribution.values.row_iter() {
            c.write_record(row.iter().map(|v| v.to_string()))?;
        }
        c.flush().map_err(|e| Error::io("shap_values.csv", e))
    })?;
    for feature in DEPENDENCE_FEATURES {
        if attribution.feature_index(feature).is_none() {
            log::warn!("no column `{feature}`; skipping its dependence export");
            continue;
        }
        let table = dependence_export(&attribution, data.x(), feature, None)?;
        let path = out.join("shap_dependence").join(format!("{}.csv", file_stem(feature)));
        write_with(&path, &mut files, |w| table.write_csv(w))?;
    }
    Ok((attribution, files))
}

#[derive(Debug, Clone)]
pub struct FullReport {
    pub linear: LinearReport,
    pub boosted: BoostedReport,
    /// The same analyses with median imputation, under `out/median`.
    pub median_linear: LinearReport,
    pub median_boosted: BoostedReport,
    pub plots: PlotSummary,
    pub files: Vec<PathBuf>,
}

/// Encoded datasets, both analyses under the configured imputation and under
/// median imputation, then plots for every table written.
pub fn run_all(config: &RunConfig) -> Result<FullReport> {
    config.validate()?;
    let linear_schema = config.linear_schema()?;
    let boosted_schema = config.boosted_schema()?;
    let mut files = Vec::new();
    let run = |cfg: &RunConfig, files: &mut Vec<PathBuf>| -> Result<(LinearReport, BoostedReport)> {
        let lin_data = cfg.load(&linear_schema)?;
        let boost_data = cfg.load(&boosted_schema)?;
        write_with(&cfg.out.join("encoded_linear.csv"), files, |w| lin_data.write_csv(w))?;
        write_with(&cfg.out.join("encoded_boosted.csv"), files, |w| boost_data.write_csv(w))?;
        let linear = linear_report_for(cfg, &lin_data)?;
        let boosted = boosted_report_for(cfg, &boost_data)?;
        files.extend(linear.files.iter().cloned());
        files.extend(boosted.files.iter().cloned());
        Ok((linear, boosted))
    };
    let (linear, boosted) = run(config, &mut files)?;
    let median_cfg = RunConfig {
        impute: Imputation::Median,
        out: config.out.join("median"),
        ..config.clone()
    };
    let (median_linear, median_boosted) = run(&median_cfg, &mut files)?;
    let mut plots = emit_plots(&config.out)?;
    let median_plots = emit_plots(&median_cfg.out)?;
    plots.written.extend(median_plots.written);
    plots.missing.extend(median_plots.missing);
    write_with(&config.out.join("run_config.toml"), &mut files, |w| {
        let text = toml::to_string(config).map_err(|e| Error::Config(e.to_string()))?;
        w.write_all(text.as_bytes()).map_err(|e| Error::io("run_config.toml", e))
    })?;
    Ok(FullReport {
        linear,
        boosted,
        median_linear,
        median_boosted,
        plots,
        files,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_replace_only_given_keys() {
        let base = RunConfig {
            data: "a.csv".into(),
            folds: 5,
            ..RunConfig::default()
        };
        let c = base.with_overrides("seed = 9\nimpute = \"median\"").unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.impute, Imputation::Median);
        assert_eq!(c.folds, 5);
        assert_eq!(c.data, PathBuf::from("a.csv"));
        assert!(base.with_overrides("nope = 1").is_err());
        assert!(base.with_overrides("impute = \"mode\"").is_err());
    }

    #[test]
    fn empty_data_path_is_an_argument_error() {
        let err = RunConfig::default().validate().unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn config_round_trips_through_toml() {
        let c = RunConfig {
            data: "d.csv".into(),
            trials: Some(3),
            boost: Some(BoostConfig::paper_preset()),
            ..RunConfig::default()
        };
        let text = toml::to_string(&c).unwrap();
        assert_eq!(RunConfig::from_toml_str(&text).unwrap(), c);
    }

    #[test]
    fn stems_are_filesystem_safe() {
        assert_eq!(file_stem("Normalized Number of Graphs/Plots"), "Normalized_Number_of_Graphs_Plots");
    }
}
