//! Seeded random search over the boosting hyperparameters.
//!
//! ```text
//! cargo run --release --example hyperparameter_search -- 20
//! ```

use repro_survival::boost::{hyperparameter_search, SearchSpace};
use repro_survival::ingest::{encode, read_csv, FeatureSchema, Imputation};
use repro_survival::synth::{synthetic_study_csv, StudyConfig};

fn main() -> repro_survival::Result<()> {
    let budget: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(8);
    let schema = FeatureSchema::paper_ordinal();
    let csv = synthetic_study_csv(&StudyConfig::default())?;
    let data = encode(&read_csv(csv.as_bytes(), &schema)?, &schema, Imputation::Mean)?;

    let report = hyperparameter_search(&data, &SearchSpace::default(), budget, 5, 42)?;
    for (t, best) in report.trials.iter().zip(report.running_best()) {
        println!(
            "trial {:>3}: depth {:>2} eta {:.4} rounds {:>3} -> {:.4} (best {:.4})",
            t.index, t.config.max_depth, t.config.eta, t.config.rounds, t.mean_concordance, best
        );
    }
    println!("best configuration: {:?}", report.best);
    Ok(())
}
