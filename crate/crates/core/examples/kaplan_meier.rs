//! Kaplan-Meier curve for the synthetic study, written as CSV to stdout.
//!
//! ```text
//! cargo run --example kaplan_meier
//! ```

use repro_survival::ingest::{encode, read_csv, FeatureSchema, Imputation};
use repro_survival::survival::kaplan_meier;
use repro_survival::synth::{synthetic_study_csv, StudyConfig};

fn main() -> repro_survival::Result<()> {
    let schema = FeatureSchema::paper_one_hot();
    let csv = synthetic_study_csv(&StudyConfig::default())?;
    let data = encode(&read_csv(csv.as_bytes(), &schema)?, &schema, Imputation::Mean)?;

    let curve = kaplan_meier(&data.samples())?;
    for day in [7.0, 30.0, 90.0, 180.0] {
        eprintln!("S({day:>5}) = {:.3}", curve.survival_at(day));
    }
    curve.write_csv(std::io::stdout())
}
