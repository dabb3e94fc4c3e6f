use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use repro_survival::boost::TreeEnsemble;
use repro_survival::ingest::Imputation;
use repro_survival::report::{
    emit_plots, run_all, run_boosted_report, run_linear_report, write_shap, RunConfig,
};
use repro_survival::{Error, Result};

#[derive(Parser)]
#[command(name = "repro-survival", version, about = "Survival analysis of paper reproduction times")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Study CSV.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Censoring time for non-reproduced papers: mean, median or const:N.
    #[arg(long, default_value = "mean")]
    impute: Imputation,
    #[arg(long)]
    ridge: Option<f64>,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Random-search budget for the boosted model.
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// TOML run config; its keys override the flags above.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let defaults = RunConfig::default();
        let base = RunConfig {
            data: self.data.clone().unwrap_or_default(),
            impute: self.impute,
            ridge: self.ridge.unwrap_or(defaults.ridge),
            folds: self.folds,
            seed: self.seed,
            trials: self.trials,
            out: self.out.clone(),
            ..defaults
        };
        let config = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.clone(), e))?;
                base.with_overrides(&text)?
            }
            None => base,
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Encode the study CSV under both schemas and report label statistics.
    Ingest(RunArgs),
    /// Cox and logistic fits, Wald and PH tests, residual exports.
    Linear(RunArgs),
    /// Boosted Cox model with CV and SHAP exports.
    Boost(RunArgs),
    /// Random hyperparameter search, then the boosted report with the winner.
    Search(RunArgs),
    /// SHAP exports for a saved model.
    Shap {
        #[command(flatten)]
        run: RunArgs,
        /// model.json written by `boost`.
        #[arg(long)]
        model: PathBuf,
    },
    /// Everything, under mean (or configured) and median imputation, plus plots.
    ReportAll(RunArgs),
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest(args) => {
            let config = args.resolve()?;
            for (name, schema) in [("linear", config.linear_schema()?), ("boosted", config.boosted_schema()?)] {
                let data = config.load(&schema)?;
                let path = config.out.join(format!("encoded_{name}.csv"));
                std::fs::create_dir_all(&config.out).map_err(|e| Error::io(&config.out, e))?;
                let file = std::fs::File::create(&path).map_err(|e| Error::io(path.clone(), e))?;
                data.write_csv(file)?;
                println!(
                    "{name}: {} rows, {} columns, {} reproduced, censored at {:.1} days -> {}",
                    data.n_rows(),
                    data.n_cols(),
                    data.n_events(),
                    data.censor_time().unwrap_or(f64::NAN),
                    path.display()
                );
            }
        }
        Command::Linear(args) => {
            let report = run_linear_report(&args.resolve()?)?;
            print!("{}", repro_survival::cox::format_coefficients(&repro_survival::cox::coefficient_table(&report.fit)));
            println!("linear CV concordance: {:.3}", report.cv.mean);
            println!("PH violations: {}", report.flagged.join(", "));
        }
        Command::Boost(args) => {
            let report = run_boosted_report(&args.resolve()?)?;
            println!("boosted CV concordance: {:.3}", report.cv.mean);
        }
        Command::Search(args) => {
            let mut config = args.resolve()?;
            config.trials.get_or_insert(100);
            let report = run_boosted_report(&config)?;
            let search = report.search.as_ref().expect("search requested");
            println!("best search score: {:.3} over {} trials", search.best_score, search.trials.len());
            println!("boosted CV concordance: {:.3}", report.cv.mean);
        }
        Command::Shap { run, model } => {
            let config = run.resolve()?;
            let file = std::fs::File::open(&model).map_err(|e| Error::io(&model, e))?;
            let model = TreeEnsemble::read_json(file)?;
            let data = config.load(&config.boosted_schema()?)?;
            let (_, files) = write_shap(&model, &data, &config.out)?;
            let plots = emit_plots(&config.out)?;
            println!("wrote {} tables and {} plots", files.len(), plots.written.len());
        }
        Command::ReportAll(args) => {
            let report = run_all(&args.resolve()?)?;
            println!("linear CV concordance: {:.3}", report.linear.cv.mean);
            println!("boosted CV concordance: {:.3}", report.boosted.cv.mean);
            println!("median imputation: linear {:.3}, boosted {:.3}", report.median_linear.cv.mean, report.median_boosted.cv.mean);
            println!("PH violations: {}", report.linear.flagged.join(", "));
            println!("wrote {} tables and {} plots", report.files.len(), report.plots.written.len());
            if !report.plots.missing.is_empty() {
                for m in &report.plots.missing {
                    eprintln!("missing table: {}", m.display());
                }
                return Err(Error::Schema("some plot inputs were missing".into()));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
