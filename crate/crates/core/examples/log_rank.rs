//! Log-rank comparison of papers with and without pseudo code.

use repro_survival::ingest::{decode_one_hot, encode, read_csv, FeatureSchema, Imputation};
use repro_survival::survival::log_rank_test;
use repro_survival::synth::{synthetic_study_csv, StudyConfig};

fn main() -> repro_survival::Result<()> {
    let schema = FeatureSchema::paper_one_hot();
    let csv = synthetic_study_csv(&StudyConfig::default())?;
    let data = encode(&read_csv(csv.as_bytes(), &schema)?, &schema, Imputation::Mean)?;

    let samples = data.samples();
    let (mut with, mut without) = (Vec::new(), Vec::new());
    for (i, s) in samples.into_iter().enumerate() {
        match decode_one_hot(&data, &schema, "Pseudo Code", i).as_deref() {
            Some("No") => without.push(s),
            _ => with.push(s),
        }
    }
    let r = log_rank_test(&with, &without)?;
    println!("papers with pseudo code: {}, without: {}", with.len(), without.len());
    println!(
        "observed {:.0} vs expected {:.2} reproductions in the first group",
        r.observed_a, r.expected_a
    );
    println!("chi-square {:.3}, p = {:.4}", r.statistic, r.p_value);
    Ok(())
}
