//! Harrell's concordance with signed labels: positive values are observed
//! event times, negative values are censoring times.

use repro_survival::survival::{concordance, concordance_counts};

fn main() -> repro_survival::Result<()> {
    let labels = [5.0, -8.0, 3.0, 12.0, -2.0, 9.0];
    // higher risk should mean an earlier event
    let risk = [0.4, -0.1, 1.3, -0.9, 0.2, 0.0];

    let counts = concordance_counts(&risk, &labels);
    println!(
        "concordant {}, discordant {}, tied {} of {} comparable pairs",
        counts.concordant,
        counts.discordant,
        counts.tied,
        counts.comparable()
    );
    println!("C = {:.4}", concordance(&risk, &labels)?);

    let reversed: Vec<f64> = risk.iter().map(|r| -r).collect();
    println!("reversed risk: C = {:.4}", concordance(&reversed, &labels)?);
    Ok(())
}
