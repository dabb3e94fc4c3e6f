//! TreeSHAP attributions and interaction values for a boosted model:
//! global ranking, local accuracy, and one dependence table.

use repro_survival::boost::{fit_boosted, predict_margin, BoostConfig};
use repro_survival::ingest::{encode, read_csv, FeatureSchema, Imputation};
use repro_survival::shap::{dependence_export, shap_interactions, summary_ranking};
use repro_survival::synth::{synthetic_study_csv, StudyConfig};

fn main() -> repro_survival::Result<()> {
    let schema = FeatureSchema::paper_ordinal();
    let csv = synthetic_study_csv(&StudyConfig::default())?;
    let data = encode(&read_csv(csv.as_bytes(), &schema)?, &schema, Imputation::Mean)?;
    let model = fit_boosted(&data, &BoostConfig::paper_preset())?;

    let attr = shap_interactions(&model, data.x(), data.x())?;
    println!("base value {:.4}", attr.base_value);
    for (rank, f) in summary_ranking(&attr)?.iter().take(8).enumerate() {
        println!("{:>2}. {:<38} {:.4}", rank + 1, f.feature, f.mean_abs);
    }

    let margins = predict_margin(&model, data.x())?;
    let worst = attr
        .reconstructed_margins()
        .iter()
        .zip(&margins)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    println!("largest |base + sum(phi) - margin|: {worst:.2e}");

    let table = dependence_export(&attr, data.x(), "Normalized Number of Equations", None)?;
    println!("equations per page, colored by {}:", table.color_feature);
    for (v, phi, c) in table.rows.iter().take(5) {
        println!("  x = {v:.3}  phi = {phi:+.4}  color = {c}");
    }
    Ok(())
}
