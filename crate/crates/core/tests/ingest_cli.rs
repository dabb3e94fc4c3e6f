use std::path::Path;
use std::process::Command;

use repro_survival::ingest::{decode_one_hot, encode, read_csv, FeatureSchema, Imputation};
use repro_survival::synth::{synthetic_study_csv, StudyConfig};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_repro-survival"))
}

fn study(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("study.csv");
    std::fs::write(&path, synthetic_study_csv(&StudyConfig::default()).unwrap()).unwrap();
    path
}

/// Observed reproduction days, read with a plain split rather than the csv crate.
fn observed_days(text: &str) -> Vec<f64> {
    text.lines()
        .skip(1)
        .filter_map(|line| line.rsplit(',').next().filter(|s| !s.is_empty()))
        .map(|s| s.parse().unwrap())
        .collect()
}

#[test]
fn censoring_constants_match_the_observed_days() {
    let text = synthetic_study_csv(&StudyConfig::default()).unwrap();
    let mut days = observed_days(&text);
    let records = read_csv(text.as_bytes(), &FeatureSchema::paper_one_hot()).unwrap();
    let schema = FeatureSchema::paper_one_hot();

    let mean = days.iter().sum::<f64>() / days.len() as f64;
    let data = encode(&records, &schema, Imputation::Mean).unwrap();
    assert!((data.censor_time().unwrap() - mean).abs() < 1e-9);
    assert_eq!(data.n_events(), days.len());

    days.sort_by(f64::total_cmp);
    let n = days.len();
    let median = if n % 2 == 1 { days[n / 2] } else { 0.5 * (days[n / 2 - 1] + days[n / 2]) };
    let data = encode(&records, &schema, Imputation::Median).unwrap();
    assert_eq!(data.censor_time(), Some(median));
    for (d, e) in data.durations().iter().zip(data.events()) {
        if !e {
            assert_eq!(*d, median);
        }
    }
}

#[test]
fn one_hot_columns_decode_to_the_source_category() {
    let text = synthetic_study_csv(&StudyConfig { n_papers: 40, ..StudyConfig::default() }).unwrap();
    let schema = FeatureSchema::paper_one_hot();
    let records = read_csv(text.as_bytes(), &schema).unwrap();
    let data = encode(&records, &schema, Imputation::Mean).unwrap();
    for (i, rec) in records.iter().enumerate() {
        let raw = rec.features["Rigor vs Empirical"].to_string();
        let expected = if raw == "Balanced" { "Balance".to_string() } else { raw };
        assert_eq!(decode_one_hot(&data, &schema, "Rigor vs Empirical", i), Some(expected));
    }
}

#[test]
fn encoding_is_deterministic_and_row_order_free() {
    let text = synthetic_study_csv(&StudyConfig { n_papers: 30, ..StudyConfig::default() }).unwrap();
    let schema = FeatureSchema::paper_ordinal();
    let records = read_csv(text.as_bytes(), &schema).unwrap();
    let a = encode(&records, &schema, Imputation::Mean).unwrap();
    let b = encode(&records, &schema, Imputation::Mean).unwrap();
    assert_eq!(a.x(), b.x());

    let mut lines: Vec<&str> = text.lines().collect();
    lines[1..].reverse();
    let shuffled = read_csv(lines.join("\n").as_bytes(), &schema).unwrap();
    let c = encode(&shuffled, &schema, Imputation::Mean).unwrap();
    assert_eq!(c.columns(), a.columns());
    let n = a.n_rows();
    for i in 0..n {
        assert_eq!(c.row(n - 1 - i), a.row(i));
    }
}

#[test]
fn extra_feature_can_be_added_through_a_schema_file() {
    let dir = tempfile::tempdir().unwrap();
    let data = study(dir.path());
    let mut schema = FeatureSchema::paper_one_hot().to_toml_string().unwrap();
    schema.push_str(
        "\n[[feature]]\nsource = \"Compute Needed\"\nencoding = \"ordinal\"\nmapping = { Low = 0, Medium = 1, High = 2 }\n",
    );
    let schema_path = dir.path().join("with_compute.toml");
    std::fs::write(&schema_path, schema).unwrap();
    let config = dir.path().join("run.toml");
    std::fs::write(&config, format!("linear_schema = {:?}\n", schema_path.display().to_string())).unwrap();
    let out = dir.path().join("out");

    let status = bin()
        .args(["ingest", "--data"])
        .arg(&data)
        .arg("--out")
        .arg(&out)
        .arg("--config")
        .arg(&config)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let encoded = std::fs::read_to_string(out.join("encoded_linear.csv")).unwrap();
    let header = encoded.lines().next().unwrap();
    assert!(header.contains("Compute Needed"));
    let base = FeatureSchema::paper_one_hot().n_columns();
    assert!(header.split(',').count() > base);
}

#[test]
fn exit_codes_follow_the_error_kind() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");

    let missing_flag = bin().args(["linear", "--out"]).arg(&out).output().unwrap();
    assert_eq!(missing_flag.status.code(), Some(2));

    let missing_file = bin()
        .args(["linear", "--data"])
        .arg(dir.path().join("nope.csv"))
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(missing_file.status.code(), Some(3));

    let data = study(dir.path());
    let bad_impute = bin()
        .args(["linear", "--impute", "mode", "--data"])
        .arg(&data)
        .output()
        .unwrap();
    assert_eq!(bad_impute.status.code(), Some(2));

    let bad_config = dir.path().join("bad.toml");
    std::fs::write(&bad_config, "foldz = 3\n").unwrap();
    let unknown_key = bin()
        .args(["linear", "--data"])
        .arg(&data)
        .arg("--config")
        .arg(&bad_config)
        .output()
        .unwrap();
    assert_eq!(unknown_key.status.code(), Some(2));
}

#[test]
fn linear_subcommand_writes_its_tables() {
    let dir = tempfile::tempdir().unwrap();
    let data = study(dir.path());
    let out = dir.path().join("out");
    let run = bin()
        .args(["linear", "--folds", "5", "--data"])
        .arg(&data)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    for name in ["coefficients.csv", "pvalues.csv", "ph_tests.csv", "km_curve.csv", "linear_cv_scores.csv"] {
        assert!(out.join(name).is_file(), "{name}");
    }
    assert!(String::from_utf8_lossy(&run.stdout).contains("linear CV concordance"));
}
