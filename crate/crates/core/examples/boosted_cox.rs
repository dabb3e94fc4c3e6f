//! Boosted Cox trees with the tuned preset: training loss, CV concordance,
//! and the JSON model format.

use repro_survival::boost::{cross_validate, fit_boosted_traced, predict_margin, BoostConfig, TreeEnsemble};
use repro_survival::ingest::{encode, read_csv, FeatureSchema, Imputation};
use repro_survival::synth::{synthetic_study_csv, StudyConfig};

fn main() -> repro_survival::Result<()> {
    let schema = FeatureSchema::paper_ordinal();
    let csv = synthetic_study_csv(&StudyConfig::default())?;
    let data = encode(&read_csv(csv.as_bytes(), &schema)?, &schema, Imputation::Mean)?;

    let config = BoostConfig::paper_preset();
    let (model, trace) = fit_boosted_traced(&data, &config)?;
    for round in [0, 1, 10, 60, config.rounds] {
        println!("loss after {round:>3} rounds: {:.4}", trace[round]);
    }
    let depths: Vec<usize> = model.trees.iter().map(|t| t.depth()).collect();
    println!("{} trees, deepest {}", model.trees.len(), depths.iter().max().unwrap_or(&0));

    let cv = cross_validate(&data, &config, 10, 42)?;
    println!("10-fold concordance: {:.3}", cv.mean);

    let json = model.to_json()?;
    let restored = TreeEnsemble::from_json(&json)?;
    assert_eq!(predict_margin(&restored, data.x())?, predict_margin(&model, data.x())?);
    println!("model JSON: {} bytes, round trip exact", json.len());
    Ok(())
}
