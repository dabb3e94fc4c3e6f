//! Seeded synthetic data: a stand-in for the reproducibility survey with the
//! same raw CSV layout, and small simulators with known hazard structure.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal, Poisson};

use crate::data::EncodedDataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyConfig {
    pub n_papers: usize,
    pub seed: u64,
    /// Mean reproduction time of an average paper, in days.
    pub baseline_days: f64,
    /// Papers whose attempt outlasts this many days (on average) are
    /// abandoned and recorded as not reproduced.
    pub patience_days: f64,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            n_papers: 180,
            seed: 7,
            baseline_days: 90.0,
            patience_days: 250.0,
        }
    }
}

const HEADER: [&str; 24] = [
    "Year",
    "Year Attempted",
    "Has Appendix",
    "Uses Exemplar Toy Problem",
    "Exact Compute Used",
    "Looks Intimidating",
    "Data Available",
    "Code Available",
    "Number of Authors",
    "Pages",
    "Num References",
    "Number of Equations",
    "Number of Proofs",
    "Number of Tables",
    "Number of Graphs/Plots",
    "Number of Other Figures",
    "Conceptualization Figures",
    "Hyperparameters Specified",
    "Paper Readability",
    "Algorithm Difficulty",
    "Pseudo Code",
    "Rigor vs Empirical",
    "Compute Needed",
    "Reproduced",
];

fn pick<'a, R: Rng>(rng: &mut R, options: &[&'a str]) -> &'a str {
    options[rng.random_range(0..options.len())]
}

fn poisson<R: Rng>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive mean").sample(rng) as u64
}

fn quote(field: &str) -> String {
    if field.contains([',', '"', '/']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// A survey-shaped CSV. Readability, pseudo code, hyperparameter reporting
/// and equation density drive the hazard; most other columns are noise.
pub fn synthetic_study_csv(config: &StudyConfig) -> Result<String> {
    if config.n_papers == 0 || !(config.baseline_days > 0.0) || !(config.patience_days > 0.0) {
        return Err(Error::Argument("synthetic study needs papers and positive day scales".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let noise = Normal::new(0.0, 0.3).expect("valid normal");
    let mut out = String::new();
    let header: Vec<String> = HEADER
        .iter()
        .copied()
        .chain(["Reproduction Days"])
        .map(quote)
        .collect();
    writeln!(out, "{}", header.join(",")).expect("string write");

    for _ in 0..config.n_papers {
        let year = rng.random_range(1985..=2019);
        let attempted = rng.random_range(2011..=2019).max(year);
        let pages = rng.random_range(6..=40);
        let p = pages as f64;
        let eq_rate = rng.random_range(0.0..3.0);
        let equations = poisson(&mut rng, eq_rate * p);
        let proofs = poisson(&mut rng, 0.1 * p);
        let readability = pick(&mut rng, &["Excellent", "Good", "Good", "Ok", "Ok", "Low"]);
        let pseudo = pick(&mut rng, &["Code-Like", "Code-like", "Yes", "Step-Code", "No", "None"]);
        let hyper = pick(&mut rng, &["No", "Partial", "Yes"]);

        let read_score = match readability {
            "Excellent" => 1.4,
            "Good" => 0.7,
            "Ok" => 0.0,
            _ => -0.8,
        };
        let pseudo_score = match pseudo {
            "Code-Like" | "Code-like" => 0.3,
            "Yes" => 0.6,
            "Step-Code" => 0.2,
            _ => -0.4,
        };
        let hyper_score = match hyper {
            "Yes" => 0.3,
            "Partial" => 0.1,
            _ => -0.2,
        };
        let eta = read_score + pseudo_score + hyper_score - 0.25 * (equations as f64 / p)
            + noise.sample(&mut rng);
        let t = Exp::new(eta.exp() / config.baseline_days)
            .expect("positive rate")
            .sample(&mut rng);
        let patience = Exp::new(1.0 / config.patience_days)
            .expect("positive rate")
            .sample(&mut rng);
        let reproduced = t <= patience;

        let yes_no = |rng: &mut ChaCha8Rng, p_yes: f64| if rng.random_bool(p_yes) { "Yes" } else { "No" };
        let fields: Vec<String> = vec![
            year.to_string(),
            attempted.to_string(),
            yes_no(&mut rng, 0.5).into(),
            yes_no(&mut rng, 0.3).into(),
            yes_no(&mut rng, 0.2).into(),
            yes_no(&mut rng, 0.4).into(),
            yes_no(&mut rng, 0.8).into(),
            yes_no(&mut rng, 0.2).into(),
            rng.random_range(1..=8).to_string(),
            pages.to_string(),
            poisson(&mut rng, 1.5 * p).to_string(),
            equations.to_string(),
            proofs.to_string(),
            poisson(&mut rng, 0.15 * p).to_string(),
            poisson(&mut rng, 0.3 * p).to_string(),
            poisson(&mut rng, 0.05 * p).to_string(),
            poisson(&mut rng, 0.04 * p).to_string(),
            hyper.into(),
            readability.into(),
            pick(&mut rng, &["High", "Medium", "Low"]).into(),
            pseudo.into(),
            pick(&mut rng, &["Balance", "Balanced", "Empirical", "Theory"]).into(),
            pick(&mut rng, &["Low", "Medium", "High"]).into(),
            if reproduced { "1" } else { "0" }.into(),
            if reproduced { (t.ceil().max(1.0) as u64).to_string() } else { String::new() },
        ];
        let line: Vec<String> = fields.iter().map(|f| quote(f)).collect();
        writeln!(out, "{}", line.join(",")).expect("string write");
    }
    Ok(out)
}

pub fn write_synthetic_study(path: impl AsRef<Path>, config: &StudyConfig) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, synthetic_study_csv(config)?).map_err(|e| Error::io(path, e))
}

fn standard_normal_matrix<R: Rng>(rng: &mut R, n: usize, d: usize) -> DMatrix<f64> {
    let normal = Normal::new(0.0, 1.0).expect("valid normal");
    DMatrix::from_fn(n, d, |_, _| normal.sample(rng))
}

/// Proportional hazards data: `x ~ N(0, I)`, event times exponential with
/// rate `exp(xᵀβ)`, independent exponential censoring with rate `censor_rate`.
/// Times are continuous, so ties have probability zero.
pub fn simulate_ph(n: usize, beta: &[f64], censor_rate: f64, seed: u64) -> Result<EncodedDataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = beta.len();
    let x = standard_normal_matrix(&mut rng, n, d);
    let mut durations = Vec::with_capacity(n);
    let mut events = Vec::with_capacity(n);
    for i in 0..n {
        let eta: f64 = (0..d).map(|j| x[(i, j)] * beta[j]).sum();
        let t = Exp::new(eta.exp()).expect("positive rate").sample(&mut rng);
        let c = if censor_rate > 0.0 {
            Exp::new(censor_rate).expect("positive rate").sample(&mut rng)
        } else {
            f64::INFINITY
        };
        durations.push(t.min(c));
        events.push(t <= c);
    }
    let columns = (0..d).map(|j| format!("x{j}")).collect();
    EncodedDataset::new(x, durations, events, columns)
}

/// Two groups whose hazard ratio crosses over: group 1 has hazard `ratio`
/// before `t = 1` and `1 / ratio` after; group 0 has hazard 1 throughout.
/// Column `group` is the indicator, column `noise` is independent N(0, 1).
pub fn simulate_crossover(n: usize, ratio: f64, seed: u64) -> Result<EncodedDataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("valid normal");
    let unit = Exp::new(1.0).expect("positive rate");
    let mut x = DMatrix::zeros(n, 2);
    let mut durations = Vec::with_capacity(n);
    for i in 0..n {
        let group = i % 2 == 1;
        x[(i, 0)] = if group { 1.0 } else { 0.0 };
        x[(i, 1)] = normal.sample(&mut rng);
        // invert the cumulative hazard at a unit exponential draw
        let e: f64 = unit.sample(&mut rng);
        let t = if !group {
            e
        } else if e <= ratio {
            e / ratio
        } else {
            1.0 + (e - ratio) * ratio
        };
        durations.push(t);
    }
    EncodedDataset::new(x, durations, vec![true; n], vec!["group".into(), "noise".into()])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{encode, read_csv, FeatureSchema, Imputation};

    #[test]
    fn study_parses_under_both_schemas() {
        let csv = synthetic_study_csv(&StudyConfig::default()).unwrap();
        for schema in [FeatureSchema::paper_one_hot(), FeatureSchema::paper_ordinal()] {
            let records = read_csv(csv.as_bytes(), &schema).unwrap();
            assert_eq!(records.len(), 180);
            let data = encode(&records, &schema, Imputation::Mean).unwrap();
            assert_eq!(data.n_cols(), schema.n_columns());
            assert!(data.n_events() > 40 && data.n_events() < 170);
        }
    }

    #[test]
    fn study_is_seed_deterministic() {
        let a = StudyConfig::default();
        let b = StudyConfig { seed: 8, ..a };
        assert_eq!(synthetic_study_csv(&a).unwrap(), synthetic_study_csv(&a).unwrap());
        assert_ne!(synthetic_study_csv(&a).unwrap(), synthetic_study_csv(&b).unwrap());
    }

    #[test]
    fn crossover_groups_alternate() {
        let d = simulate_crossover(10, 3.0, 1).unwrap();
        assert_eq!(d.x()[(0, 0)], 0.0);
        assert_eq!(d.x()[(1, 0)], 1.0);
        assert_eq!(d.n_events(), 10);
    }
}
