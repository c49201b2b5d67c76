//! `fairmiss` command-line interface.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;

use fairmiss::datasets::{schema_for, validate_path, DatasetId};
use fairmiss::fairness::Metric;
use fairmiss::harness::plot::{emit_boxplots, Layout};
use fairmiss::harness::report::emit_anova_report;
use fairmiss::harness::summary::{parse_factors, render_text, summarize};
use fairmiss::harness::{load_records, run_baseline, run_experiment, write_json, write_run, BaselineRecord, ExperimentConfig};

#[derive(Parser)]
#[command(name = "fairmiss", version, about = "Fairness of classifiers under generated missingness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the mechanism x handler x model experiment and write results.csv.
    Run(RunArgs),
    /// Fit every model on complete data and write baseline.json.
    Baseline(RunArgs),
    /// Grouped descriptive statistics of a results file.
    Summarize {
        #[arg(long)]
        results: PathBuf,
        /// Comma-separated factors: iteration, mechanism, handler, model, sensitive, metric.
        #[arg(long, default_value = "sensitive,metric,mechanism,handler,model")]
        group_by: String,
        /// Use magnitudes of the fairness metrics.
        #[arg(long)]
        abs: bool,
        /// Write JSON here instead of printing a table.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// ANOVA / Welch report per metric and sensitive variant.
    Report {
        #[arg(long)]
        results: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Boxplot SVG plus JSON sidecar.
    Plot {
        #[arg(long)]
        results: PathBuf,
        #[arg(long, default_value = "handler-model")]
        layout: Layout,
        #[arg(long, default_value = "dp")]
        metric: Metric,
        /// Sensitive variant; defaults to the first one in the file.
        #[arg(long)]
        sensitive: Option<String>,
        /// baseline.json from the `baseline` subcommand.
        #[arg(long)]
        baseline: Option<PathBuf>,
        /// Output path without extension.
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a data file against a dataset schema; exits nonzero on problems.
    ValidateData {
        #[arg(long)]
        dataset: DatasetId,
        #[arg(long)]
        path: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<DatasetId>,
    /// Data file (overrides the config).
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Sensitive variant(s), comma separated.
    #[arg(long)]
    sensitive: Option<String>,
    #[arg(long)]
    iterations: Option<usize>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

impl RunArgs {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut c = match (&self.config, self.dataset) {
            (Some(p), _) => ExperimentConfig::from_path(p).with_context(|| format!("reading {}", p.display()))?,
            (None, Some(d)) => ExperimentConfig::new(d, None),
            (None, None) => bail!("either --config or --dataset is required"),
        };
        if let Some(d) = self.dataset {
            c.dataset = d;
        }
        if let Some(p) = &self.data {
            c.data_path = Some(p.clone());
        }
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(o) = &self.out {
            c.out_dir = o.clone();
        }
        if let Some(s) = &self.sensitive {
            c.sensitive = s.split(',').map(|v| v.trim().to_string()).collect();
        }
        if let Some(i) = self.iterations {
            c.iterations = Some(i);
        }
        c.validate()?;
        if let Some(n) = self.threads {
            rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
        }
        Ok(c)
    }
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => {
            let config = args.resolve()?;
            let out = run_experiment(&config)?;
            write_run(&config, &out)?;
            info!(
                "{} records, {} failed cells written to {}",
                out.records.len(),
                out.failures.len(),
                config.out_dir.display()
            );
        }
        Command::Baseline(args) => {
            let config = args.resolve()?;
            let base = run_baseline(&config)?;
            std::fs::create_dir_all(&config.out_dir)?;
            let path = config.out_dir.join("baseline.json");
            write_json(&path, &base)?;
            info!("baseline written to {}", path.display());
        }
        Command::Summarize {
            results,
            group_by,
            abs,
            out,
        } => {
            let records = load_records(&results)?;
            let rows = summarize(&records, &parse_factors(&group_by)?, abs)?;
            match out {
                Some(p) => write_json(p, &rows)?,
                None => print!("{}", render_text(&rows)),
            }
        }
        Command::Report { results, out } => {
            let records = load_records(&results)?;
            let sections = emit_anova_report(&records, &out)?;
            info!("{} report sections written to {}", sections.len(), out.display());
        }
        Command::Plot {
            results,
            layout,
            metric,
            sensitive,
            baseline,
            out,
        } => {
            let records = load_records(&results)?;
            let sensitive = match sensitive {
                Some(s) => s,
                None => records.first().context("empty results file")?.sensitive.clone(),
            };
            let base: Option<Vec<BaselineRecord>> = match baseline {
                Some(p) => Some(serde_json::from_str(&std::fs::read_to_string(&p)?)?),
                None => None,
            };
            emit_boxplots(&records, layout, metric, &sensitive, base.as_deref(), &out)?;
        }
        Command::ValidateData { dataset, path } => {
            let schema = schema_for(dataset)?;
            let report = validate_path(&path, &schema)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            if !report.is_clean() {
                bail!("{} does not match the {dataset} schema", path.display());
            }
        }
    }
    Ok(())
}
