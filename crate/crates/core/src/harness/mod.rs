//! Experiment orchestration.
//!
//! Every iteration draws one train/test split, shared by all sensitive
//! variants, mechanisms, handlers and models of that iteration. Only the
//! training twin is amputed and repaired; each model is tuned by
//! cross-validation on the repaired training data and scored on the
//! complete test twin. Each step draws from its own stream derived from the
//! master seed and the step's labels, so results do not depend on thread
//! count or scheduling.

pub mod plot;
pub mod report;
pub mod store;
pub mod summary;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ampute::{ampute, AmputeConfig, Mechanism};
use crate::classify::{cross_validate, fit, predict, HyperGrid, ModelKind};
use crate::datasets::{schema_for, synth_classification, DatasetId, DatasetSchema};
use crate::error::{Error, Result};
use crate::fairness::{evaluate, Metric};
use crate::impute::{handle, HandlerKind, DEFAULT_KNN_K};
use crate::rng::{derive, derive_str, stream};
use crate::table::{apply_indices, split_rows, Table};

pub use store::{load_records, save_records, Factor, FairnessRecord};

/// Declarative experiment description, read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetId,
    /// CSV file; optional for the synthetic dataset, which is generated
    /// when absent.
    #[serde(default)]
    pub data_path: Option<PathBuf>,
    /// Sensitive variants to analyse; empty means all variants of the dataset.
    #[serde(default)]
    pub sensitive: Vec<String>,
    /// Defaults per dataset: german 100, compas 50, adult 20.
    #[serde(default)]
    pub iterations: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_mechanisms")]
    pub mechanisms: Vec<Mechanism>,
    #[serde(default = "default_handlers")]
    pub handlers: Vec<String>,
    #[serde(default = "default_knn_k")]
    pub knn_k: usize,
    #[serde(default = "default_models")]
    pub models: Vec<ModelKind>,
    #[serde(default = "default_proportion")]
    pub proportion: f64,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default)]
    pub grids: HyperGrid,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub baseline: bool,
    /// Row count of the generated table for the synthetic dataset.
    #[serde(default = "default_synthetic_rows")]
    pub synthetic_rows: usize,
}

fn default_mechanisms() -> Vec<Mechanism> {
    Mechanism::ALL.to_vec()
}

fn default_handlers() -> Vec<String> {
    store::HANDLER_ORDER.iter().map(|s| s.to_string()).collect()
}

fn default_knn_k() -> usize {
    DEFAULT_KNN_K
}

fn default_models() -> Vec<ModelKind> {
    ModelKind::ALL.to_vec()
}

fn default_proportion() -> f64 {
    0.5
}

fn default_test_fraction() -> f64 {
    1.0 / 3.0
}

fn default_folds() -> usize {
    5
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_synthetic_rows() -> usize {
    1000
}

impl ExperimentConfig {
    /// Full default grid for a dataset.
    pub fn new(dataset: DatasetId, data_path: Option<PathBuf>) -> Self {
        Self {
            dataset,
            data_path,
            sensitive: Vec::new(),
            iterations: None,
            seed: 0,
            mechanisms: default_mechanisms(),
            handlers: default_handlers(),
            knn_k: DEFAULT_KNN_K,
            models: default_models(),
            proportion: default_proportion(),
            test_fraction: default_test_fraction(),
            folds: default_folds(),
            grids: HyperGrid::default(),
            out_dir: default_out_dir(),
            baseline: false,
            synthetic_rows: default_synthetic_rows(),
        }
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn iterations(&self) -> usize {
        self.iterations.unwrap_or_else(|| self.dataset.default_iterations())
    }

    pub fn handler_kinds(&self) -> Result<Vec<HandlerKind>> {
        self.handlers.iter().map(|h| HandlerKind::parse(h, self.knn_k)).collect()
    }

    pub fn schema(&self) -> Result<DatasetSchema> {
        schema_for(self.dataset)
    }

    /// Active sensitive variants, in the order given (or schema order).
    pub fn variants(&self, schema: &DatasetSchema) -> Result<Vec<String>> {
        if self.sensitive.is_empty() {
            return Ok(schema.variant_names());
        }
        for v in &self.sensitive {
            schema.variant(v)?;
        }
        Ok(self.sensitive.clone())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.iterations() < 2 {
            return bad("at least 2 iterations are needed".into());
        }
        if self.mechanisms.is_empty() || self.handlers.is_empty() || self.models.is_empty() {
            return bad("mechanisms, handlers and models must be nonempty".into());
        }
        if !has_unique(&self.mechanisms) || !has_unique(&self.handlers) || !has_unique(&self.models) {
            return bad("duplicate factor level".into());
        }
        if !(self.proportion > 0.0 && self.proportion < 1.0) {
            return bad(format!("proportion {} outside (0, 1)", self.proportion));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return bad(format!("test fraction {} outside (0, 1)", self.test_fraction));
        }
        if self.folds < 2 {
            return bad("at least 2 folds are needed".into());
        }
        self.handler_kinds()?;
        for &m in &self.models {
            self.grids.validate(m)?;
        }
        if self.dataset != DatasetId::Synthetic && self.data_path.is_none() {
            return bad(format!("{} needs a data_path", self.dataset));
        }
        let schema = self.schema()?;
        let vs = self.variants(&schema)?;
        if !has_unique(&vs) {
            return bad("duplicate sensitive variant".into());
        }
        Ok(())
    }

    /// The raw table: the data file if one is given, otherwise a generated
    /// table for the synthetic dataset.
    pub fn load_table(&self, schema: &DatasetSchema) -> Result<Table> {
        match (&self.data_path, self.dataset) {
            (Some(p), _) => schema.load(p),
            (None, DatasetId::Synthetic) => synth_classification(
                self.synthetic_rows,
                0.6,
                0.4,
                0.5,
                &mut stream(derive_str(self.seed, "data")),
            ),
            (None, _) => Err(Error::InvalidArgument(format!("{} needs a data_path", self.dataset))),
        }
    }
}

fn has_unique<T: PartialEq>(v: &[T]) -> bool {
    v.iter().enumerate().all(|(i, a)| !v[..i].contains(a))
}

/// A (mechanism, handler, model, variant) cell that produced no predictions
/// in one iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub iteration: usize,
    pub mechanism: Mechanism,
    pub handler: String,
    pub model: ModelKind,
    pub sensitive: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunOutput {
    pub records: Vec<FairnessRecord>,
    pub failures: Vec<CellFailure>,
}

/// Analysis tables for each variant, prepared once.
fn prepared_tables(config: &ExperimentConfig) -> Result<(DatasetSchema, Vec<(String, Table)>)> {
    config.validate()?;
    let schema = config.schema()?;
    let raw = config.load_table(&schema)?;
    let tables = config
        .variants(&schema)?
        .into_iter()
        .map(|v| {
            let t = schema.prepare(&raw, &v)?;
            Ok((v, t))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((schema, tables))
}

fn iteration_seed(config: &ExperimentConfig, i: usize) -> u64 {
    derive(config.seed, i as u64)
}

/// Split of iteration `i`, identical for every variant and mechanism.
fn iteration_split(config: &ExperimentConfig, n: usize, i: usize) -> Result<crate::table::SplitIndices> {
    split_rows(n, config.test_fraction, &mut stream(derive_str(iteration_seed(config, i), "split")))
}

fn tune_fit_evaluate(
    config: &ExperimentConfig,
    model: ModelKind,
    train: &Table,
    test: &Table,
    y_test: &[u8],
    s_test: &[u8],
    seed: u64,
) -> Result<[(Metric, Option<f64>); 4]> {
    let cv = cross_validate(model, train, &config.grids, config.folds, &mut stream(derive_str(seed, "cv")))?;
    let m = fit(model, &cv.best, train, derive_str(seed, "fit"))?;
    let pred = predict(&m, test)?;
    evaluate(y_test, &pred, s_test)
}

fn run_task(
    config: &ExperimentConfig,
    schema: &DatasetSchema,
    handlers: &[HandlerKind],
    variant: &str,
    table: &Table,
    i: usize,
) -> Result<RunOutput> {
    let split = iteration_split(config, table.n_rows(), i)?;
    let (train, test) = apply_indices(table, &split)?;
    let test_sum = test.checksum();
    let y_test = test.outcome_labels()?;
    let s_test = test.sensitive_labels()?;
    let sens_col = test.spec(test.sensitive_index()?).name.clone();
    let mar_col = schema.mar_dependency.clone().unwrap_or(sens_col);
    let vseed = derive_str(iteration_seed(config, i), variant);
    let mut out = RunOutput::default();
    for &mech in &config.mechanisms {
        let mseed = derive_str(vseed, mech.as_str());
        let cfg = AmputeConfig::for_variables(&train, &schema.amputed_variables, mech, &mar_col)?
            .with_proportion(config.proportion);
        let amputed = ampute(&train, &cfg, &mut stream(mseed))?;
        for &h in handlers {
            let repaired = handle(&amputed.table, h);
            for &model in &config.models {
                let cseed = derive_str(derive_str(mseed, h.name()), model.as_str());
                let result = repaired
                    .as_ref()
                    .map_err(|e| e.to_string())
                    .and_then(|t| {
                        tune_fit_evaluate(config, model, t, &test, &y_test, &s_test, cseed).map_err(|e| e.to_string())
                    });
                let metrics: Vec<(Metric, Option<f64>)> = match result {
                    Ok(m) => m.to_vec(),
                    Err(reason) => {
                        warn!("iteration {i} {variant}/{mech}/{h}/{model} failed: {reason}");
                        out.failures.push(CellFailure {
                            iteration: i,
                            mechanism: mech,
                            handler: h.name().to_string(),
                            model,
                            sensitive: variant.to_string(),
                            reason,
                        });
                        Metric::ALL.iter().map(|&m| (m, None)).collect()
                    }
                };
                for (metric, value) in metrics {
                    out.records.push(FairnessRecord {
                        iteration: i,
                        mechanism: mech,
                        handler: h.name().to_string(),
                        model,
                        sensitive: variant.to_string(),
                        metric,
                        value: value.map(store::canonical),
                    });
                }
            }
        }
    }
    if test.checksum() != test_sum {
        return Err(Error::TestDataModified);
    }
    Ok(out)
}

/// Runs the full mechanism × handler × model grid for every iteration and
/// sensitive variant. Records come back ordered by iteration, variant,
/// mechanism, handler, model and metric. Fails if any cell lost more than
/// 20% of its iterations.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunOutput> {
    let (schema, tables) = prepared_tables(config)?;
    let handlers = config.handler_kinds()?;
    let iterations = config.iterations();
    let tasks: Vec<(usize, usize)> = (0..iterations)
        .flat_map(|i| (0..tables.len()).map(move |v| (i, v)))
        .collect();
    let parts: Vec<RunOutput> = tasks
        .par_iter()
        .map(|&(i, v)| {
            let (name, t) = &tables[v];
            let r = run_task(config, &schema, &handlers, name, t, i);
            info!("iteration {i} variant {name} done");
            r
        })
        .collect::<Result<_>>()?;
    let mut out = RunOutput::default();
    for p in parts {
        out.records.extend(p.records);
        out.failures.extend(p.failures);
    }
    check_failures(&out.failures, iterations)?;
    Ok(out)
}

fn check_failures(failures: &[CellFailure], iterations: usize) -> Result<()> {
    let mut per_cell: BTreeMap<String, usize> = BTreeMap::new();
    for f in failures {
        let key = format!("{}/{}/{}/{}", f.sensitive, f.mechanism, f.handler, f.model);
        *per_cell.entry(key).or_default() += 1;
    }
    for (cell, failed) in per_cell {
        if failed * 5 > iterations {
            return Err(Error::TooManyFailures {
                cell,
                failed,
                iterations,
            });
        }
    }
    Ok(())
}

/// Metric distribution of one model on complete data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineRecord {
    pub sensitive: String,
    pub model: ModelKind,
    pub metric: Metric,
    /// Iterations with a defined value.
    pub n: usize,
    pub undefined: usize,
    pub mean: Option<f64>,
    /// Sample standard deviation (n − 1 denominator).
    pub sd: Option<f64>,
    pub abs_mean: Option<f64>,
    pub abs_sd: Option<f64>,
}

fn mean_sd(v: &[f64]) -> (Option<f64>, Option<f64>) {
    let mean = (!v.is_empty()).then(|| crate::stats::mean(v));
    let sd = (v.len() >= 2).then(|| crate::stats::std_dev(v));
    (mean, sd)
}

/// Fits each model on the complete training split of every iteration (the
/// same splits as [`run_experiment`]) and summarizes each metric.
pub fn run_baseline(config: &ExperimentConfig) -> Result<Vec<BaselineRecord>> {
    let (_, tables) = prepared_tables(config)?;
    let iterations = config.iterations();
    let tasks: Vec<(usize, usize)> = (0..iterations)
        .flat_map(|i| (0..tables.len()).map(move |v| (i, v)))
        .collect();
    let values: Vec<Vec<(ModelKind, [(Metric, Option<f64>); 4])>> = tasks
        .par_iter()
        .map(|&(i, v)| {
            let (name, t) = &tables[v];
            let split = iteration_split(config, t.n_rows(), i)?;
            let (train, test) = apply_indices(t, &split)?;
            let y = test.outcome_labels()?;
            let s = test.sensitive_labels()?;
            let seed = derive_str(derive_str(iteration_seed(config, i), name), "baseline");
            config
                .models
                .iter()
                .map(|&m| {
                    let r = tune_fit_evaluate(config, m, &train, &test, &y, &s, derive_str(seed, m.as_str()))?;
                    Ok((m, r))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    for (v, (name, _)) in tables.iter().enumerate() {
        for &model in &config.models {
            for metric in Metric::ALL {
                let mut vals = Vec::new();
                let mut undefined = 0;
                for (k, &(_, tv)) in tasks.iter().enumerate() {
                    if tv != v {
                        continue;
                    }
                    for (m, metrics) in &values[k] {
                        if *m == model {
                            match metrics.iter().find(|x| x.0 == metric).and_then(|x| x.1) {
                                Some(x) => vals.push(x),
                                None => undefined += 1,
                            }
                        }
                    }
                }
                let (mean, sd) = mean_sd(&vals);
                let abs: Vec<f64> = vals.iter().map(|x| x.abs()).collect();
                let (abs_mean, abs_sd) = mean_sd(&abs);
                out.push(BaselineRecord {
                    sensitive: name.clone(),
                    model,
                    metric,
                    n: vals.len(),
                    undefined,
                    mean,
                    sd,
                    abs_mean,
                    abs_sd,
                });
            }
        }
    }
    Ok(out)
}

/// Writes `results.csv`, `failures.json`, `summary.json` and the resolved
/// `config.json` into the configured output directory.
pub fn write_run(config: &ExperimentConfig, out: &RunOutput) -> Result<()> {
    let dir = &config.out_dir;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    save_records(dir.join("results.csv"), &out.records)?;
    write_json(dir.join("failures.json"), &out.failures)?;
    let groups = [Factor::Sensitive, Factor::Metric, Factor::Mechanism, Factor::Handler, Factor::Model];
    write_json(dir.join("summary.json"), &summary::summarize(&out.records, &groups, false)?)?;
    let mut resolved = config.clone();
    resolved.iterations = Some(config.iterations());
    write_json(dir.join("config.json"), &resolved)
}

pub fn write_json<T: Serialize + ?Sized>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}
