//! Reading a study CSV through a schema, comparing censoring imputations,
//! and writing a custom schema to TOML.
//!
//! ```text
//! cargo run --example ingest_schema -- path/to/study.csv
//! ```
//! Without an argument a synthetic study is used.

use repro_survival::ingest::{encode, load_csv, read_csv, FeatureSchema, Imputation};
use repro_survival::synth::{synthetic_study_csv, StudyConfig};

fn main() -> repro_survival::Result<()> {
    let schema = FeatureSchema::paper_one_hot();
    let records = match std::env::args().nth(1) {
        Some(path) => load_csv(path, &schema)?,
        None => read_csv(synthetic_study_csv(&StudyConfig::default())?.as_bytes(), &schema)?,
    };
    println!("{} papers, {} reproduced", records.len(), records.iter().filter(|r| r.reproduced).count());

    for strategy in [Imputation::Mean, Imputation::Median, Imputation::Constant(365.0)] {
        let data = encode(&records, &schema, strategy)?;
        println!(
            "{strategy:>10}: censored papers at {:7.1} days, {} columns",
            data.censor_time().unwrap_or(f64::NAN),
            data.n_cols()
        );
    }

    let ordinal = FeatureSchema::paper_ordinal();
    let data = encode(&records, &ordinal, Imputation::Mean)?;
    println!("ordinal schema: {} columns", data.n_cols());
    let j = data.column_index("Paper Readability").expect("ordinal readability column");
    println!("first paper's readability score: {}", data.x()[(0, j)]);

    // schemas are plain TOML; this prints the start of the bundled one
    for line in schema.to_toml_string()?.lines().take(12) {
        println!("  {line}");
    }
    Ok(())
}
