//! The whole report: linear and boosted analyses under mean and median
//! imputation, SHAP exports and SVG plots.
//!
//! ```text
//! cargo run --release --example full_pipeline -- [study.csv] [out-dir]
//! ```
//! Without a CSV the synthetic study is written next to the outputs and used.

use std::path::PathBuf;

use repro_survival::report::{run_all, RunConfig};
use repro_survival::synth::{write_synthetic_study, StudyConfig};

fn main() -> repro_survival::Result<()> {
    let mut args = std::env::args().skip(1);
    let data = args.next().map(PathBuf::from);
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| PathBuf::from("target/report"));

    let data = match data {
        Some(p) => p,
        None => {
            std::fs::create_dir_all(&out).map_err(|e| repro_survival::Error::io(&out, e))?;
            let p = out.join("synthetic_study.csv");
            write_synthetic_study(&p, &StudyConfig::default())?;
            p
        }
    };
    let config = RunConfig {
        data,
        out: out.clone(),
        ..RunConfig::default()
    };
    let report = run_all(&config)?;
    println!("linear concordance   {:.3}", report.linear.cv.mean);
    println!("boosted concordance  {:.3}", report.boosted.cv.mean);
    println!("median imputation    {:.3} / {:.3}", report.median_linear.cv.mean, report.median_boosted.cv.mean);
    println!("PH violations        {}", report.linear.flagged.join(", "));
    println!("{} tables and {} plots under {}", report.files.len(), report.plots.written.len(), out.display());
    Ok(())
}
