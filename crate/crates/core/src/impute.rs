//! Missing-data handlers: listwise deletion, mode/mean imputation,
//! regression imputation and k-nearest-neighbour imputation.
//!
//! Every imputer writes only masked predictor cells, never reads the outcome
//! column, and is deterministic.

use std::fmt;
use std::str::FromStr;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::classify::logistic::{fit_logistic, linear_predictor};
use crate::error::{Error, Result};
use crate::matrix::{cholesky_solve, weighted_gram_with_intercept, Matrix};
use crate::table::{complete_cases, ColumnData, ColumnSpec, Encoding, Role, Table};

pub const DEFAULT_KNN_K: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HandlerKind {
    #[serde(rename = "ld")]
    ListwiseDeletion,
    Mode,
    #[serde(rename = "reg")]
    Regression,
    Knn(usize),
}

impl HandlerKind {
    /// Short name used in results files and plots.
    pub fn name(self) -> &'static str {
        match self {
            HandlerKind::ListwiseDeletion => "ld",
            HandlerKind::Mode => "mode",
            HandlerKind::Regression => "reg",
            HandlerKind::Knn(_) => "knn",
        }
    }

    /// Parses a short name; `k` is used for `knn`.
    pub fn parse(name: &str, k: usize) -> Result<Self> {
        match name {
            "ld" => Ok(HandlerKind::ListwiseDeletion),
            "mode" => Ok(HandlerKind::Mode),
            "reg" => Ok(HandlerKind::Regression),
            "knn" if k >= 1 => Ok(HandlerKind::Knn(k)),
            "knn" => Err(Error::InvalidArgument("k must be at least 1".into())),
            _ => Err(Error::InvalidArgument(format!("unknown handler `{name}`"))),
        }
    }
}

impl fmt::Display for HandlerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for HandlerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s, DEFAULT_KNN_K)
    }
}

/// Repairs a training table with the given handler.
pub fn handle(t: &Table, kind: HandlerKind) -> Result<Table> {
    match kind {
        HandlerKind::ListwiseDeletion => listwise_delete(t),
        HandlerKind::Mode => mode_impute(t),
        HandlerKind::Regression => fit_regression_imputer(t)?.apply(t),
        HandlerKind::Knn(k) => knn_impute(t, k),
    }
}

/// Drops every row with a masked cell.
pub fn listwise_delete(t: &Table) -> Result<Table> {
    let out = complete_cases(t);
    if out.n_rows() == 0 && t.n_rows() > 0 {
        return Err(Error::EmptyAfterDeletion);
    }
    Ok(out)
}

/// Writes `fill(col, row)` into every masked cell of the listed columns.
fn fill_cells(
    t: &Table,
    cols: &[usize],
    mut fill: impl FnMut(usize, usize) -> f64,
) -> Result<Table> {
    let mut columns: Vec<ColumnData> = (0..t.n_cols()).map(|j| t.column(j).clone()).collect();
    for &j in cols {
        let mask = t.mask(j);
        match &mut columns[j] {
            ColumnData::Numeric(v) => {
                for (i, x) in v.iter_mut().enumerate() {
                    if !mask[i] {
                        *x = fill(j, i);
                    }
                }
            }
            ColumnData::Categorical(v) => {
                for (i, x) in v.iter_mut().enumerate() {
                    if !mask[i] {
                        *x = fill(j, i) as u32;
                    }
                }
            }
        }
    }
    let masks = (0..t.n_cols())
        .map(|j| {
            if cols.contains(&j) {
                vec![true; t.n_rows()]
            } else {
                t.mask(j).to_vec()
            }
        })
        .collect();
    Table::new(t.schema().to_vec(), columns, masks)
}

fn incomplete_columns(t: &Table) -> Vec<usize> {
    (0..t.n_cols()).filter(|&j| t.missing_count(j) > 0).collect()
}

/// Most frequent observed code; ties go to the first declared level.
fn mode_code(codes: &[u32], mask: &[bool], n_levels: usize) -> Option<u32> {
    let mut counts = vec![0usize; n_levels];
    for (&c, &o) in codes.iter().zip(mask) {
        if o {
            counts[c as usize] += 1;
        }
    }
    let (best, &n) = counts
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))?;
    (n > 0).then_some(best as u32)
}

/// Categorical cells take the most frequent observed level, numeric cells
/// the mean of the observed values.
pub fn mode_impute(t: &Table) -> Result<Table> {
    let cols = incomplete_columns(t);
    let mut fills = vec![0.0; t.n_cols()];
    for &j in &cols {
        let spec = t.spec(j);
        let mask = t.mask(j);
        fills[j] = match t.column(j) {
            ColumnData::Numeric(v) => {
                let obs: Vec<f64> = v.iter().zip(mask).filter(|(_, &o)| o).map(|(x, _)| *x).collect();
                if obs.is_empty() {
                    return Err(Error::FullyMissing(spec.name.clone()));
                }
                obs.iter().sum::<f64>() / obs.len() as f64
            }
            ColumnData::Categorical(v) => {
                let n_levels = spec.levels().map_or(0, <[String]>::len);
                f64::from(
                    mode_code(v, mask, n_levels)
                        .ok_or_else(|| Error::FullyMissing(spec.name.clone()))?,
                )
            }
        };
    }
    fill_cells(t, &cols, |j, _| fills[j])
}

#[derive(Debug, Clone, PartialEq)]
enum ColumnImputer {
    Constant(f64),
    Linear(Vec<f64>),
    /// Binary target: probability of level 1.
    Logistic(Vec<f64>),
    /// One-vs-rest models for the levels seen in the fit rows.
    OneVsRest(Vec<(u32, Vec<f64>)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnModel {
    pub column: String,
    model: ColumnImputer,
}

/// Regression imputer fitted on the complete cases of a training table.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedImputer {
    pub kind: HandlerKind,
    /// Complete predictor and sensitive columns used as inputs.
    pub inputs: Vec<String>,
    pub models: Vec<ColumnModel>,
    pub fit_rows: usize,
    pub ridge_applied: bool,
    encoding: Encoding,
}

/// Ridge strength (per observation) used when the design is rank deficient,
/// and always for the logistic fits, which may face separated data.
const RIDGE: f64 = 1e-8;

fn least_squares(x: &Matrix, y: &[f64]) -> (Vec<f64>, bool) {
    let p = x.cols() + 1;
    let ones = vec![1.0; x.rows()];
    let (mut gram, rhs) = weighted_gram_with_intercept(x, &ones, y);
    if let Some(b) = cholesky_solve(&gram, &rhs, p) {
        return (b, false);
    }
    let lambda = RIDGE * x.rows() as f64;
    for j in 0..p {
        gram[j * p + j] += lambda;
    }
    let b = cholesky_solve(&gram, &rhs, p).unwrap_or_else(|| {
        let mut b = vec![0.0; p];
        b[0] = y.iter().sum::<f64>() / y.len() as f64;
        b
    });
    (b, true)
}

/// Fits one model per incomplete column: least squares for numeric columns,
/// logistic regression for binary ones and one-vs-rest logistic regression
/// for multi-level ones. Inputs are the fully observed predictor and
/// sensitive columns; the outcome is never used. Fit rows are the complete
/// cases.
pub fn fit_regression_imputer(train: &Table) -> Result<FittedImputer> {
    let targets = incomplete_columns(train);
    let input_specs: Vec<ColumnSpec> = (0..train.n_cols())
        .filter(|j| !targets.contains(j) && train.spec(*j).role != Role::Outcome)
        .map(|j| train.spec(j).clone())
        .collect();
    let encoding = Encoding::new(&input_specs, &[]);
    let cc: Vec<usize> = (0..train.n_rows()).filter(|&i| train.row_complete(i)).collect();
    if cc.is_empty() && !targets.is_empty() {
        return Err(Error::EmptyAfterDeletion);
    }
    let fit_table = train.select_rows(&cc)?;
    let x = encoding.encode(&fit_table)?;
    let mut ridge_applied = false;
    let mut models = Vec::with_capacity(targets.len());
    for &j in &targets {
        let spec = train.spec(j);
        let model = match fit_table.column(j) {
            ColumnData::Numeric(y) => {
                if y.iter().all(|&v| v == y[0]) {
                    ColumnImputer::Constant(y[0])
                } else {
                    let (b, ridged) = least_squares(&x, y);
                    if ridged {
                        warn!("rank-deficient design imputing `{}`; ridge applied", spec.name);
                        ridge_applied = true;
                    }
                    ColumnImputer::Linear(b)
                }
            }
            ColumnData::Categorical(codes) => {
                let n_levels = spec.levels().map_or(0, <[String]>::len);
                let mut present: Vec<u32> = codes.to_vec();
                present.sort_unstable();
                present.dedup();
                if present.len() == 1 {
                    ColumnImputer::Constant(f64::from(present[0]))
                } else if n_levels == 2 {
                    let y: Vec<f64> = codes.iter().map(|&c| f64::from(c)).collect();
                    ColumnImputer::Logistic(fit_logistic(&x, &y, RIDGE, None).coef)
                } else {
                    let fits = present
                        .iter()
                        .map(|&level| {
                            let y: Vec<f64> =
                                codes.iter().map(|&c| f64::from(u8::from(c == level))).collect();
                            (level, fit_logistic(&x, &y, RIDGE, None).coef)
                        })
                        .collect();
                    ColumnImputer::OneVsRest(fits)
                }
            }
        };
        models.push(ColumnModel {
            column: spec.name.clone(),
            model,
        });
    }
    Ok(FittedImputer {
        kind: HandlerKind::Regression,
        inputs: input_specs.iter().map(|s| s.name.clone()).collect(),
        models,
        fit_rows: cc.len(),
        ridge_applied,
        encoding,
    })
}

impl FittedImputer {
    /// Fills the masked cells of the modelled columns.
    pub fn apply(&self, t: &Table) -> Result<Table> {
        let x = self.encoding.encode(t)?;
        let mut cols = Vec::with_capacity(self.models.len());
        for m in &self.models {
            cols.push(t.require_column(&m.column)?);
        }
        if let Some(j) = incomplete_columns(t).into_iter().find(|j| !cols.contains(j)) {
            return Err(Error::SchemaMismatch(format!(
                "column `{}` has missing cells but no imputation model",
                t.spec(j).name
            )));
        }
        let by_col: Vec<(usize, &ColumnImputer)> =
            cols.iter().copied().zip(self.models.iter().map(|m| &m.model)).collect();
        fill_cells(t, &cols, |j, i| {
            let model = by_col.iter().find(|(c, _)| *c == j).map(|(_, m)| *m).unwrap();
            let row = x.row(i);
            match model {
                ColumnImputer::Constant(v) => *v,
                ColumnImputer::Linear(b) => linear_predictor(b, row),
                ColumnImputer::Logistic(b) => f64::from(u8::from(linear_predictor(b, row) >= 0.0)),
                ColumnImputer::OneVsRest(fits) => {
                    // highest score wins; the first listed (lowest) level on ties
                    let mut best = (fits[0].0, f64::NEG_INFINITY);
                    for (level, b) in fits {
                        let z = linear_predictor(b, row);
                        if z > best.1 {
                            best = (*level, z);
                        }
                    }
                    f64::from(best.0)
                }
            }
        })
    }
}

/// k-nearest-neighbour imputation with Gower distance.
///
/// Donors are the complete cases. For each incomplete row the distance to a
/// donor averages, over the predictor and sensitive columns observed in that
/// row, |a − b| / range for numeric columns (range over the observed values
/// of the table) and a 0/1 mismatch for categorical ones. Ties in distance
/// go to the lower row index. Numeric cells take the donors' mean,
/// categorical cells their most frequent level (first declared level on
/// ties).
pub fn knn_impute(t: &Table, k: usize) -> Result<Table> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let targets = incomplete_columns(t);
    if targets.is_empty() {
        return Ok(t.clone());
    }
    let features: Vec<usize> = (0..t.n_cols())
        .filter(|&j| t.spec(j).role != Role::Outcome)
        .collect();
    let donors: Vec<usize> = (0..t.n_rows()).filter(|&i| t.row_complete(i)).collect();
    if donors.len() < k {
        return Err(Error::NotEnoughDonors {
            needed: k,
            found: donors.len(),
        });
    }

    // Per feature: values scaled so a numeric |a - b| is already divided by
    // the range; categorical codes compared for equality.
    enum Feature<'a> {
        Numeric(Vec<f64>),
        Categorical(&'a [u32]),
    }
    let feats: Vec<Feature> = features
        .iter()
        .map(|&j| match t.column(j) {
            ColumnData::Numeric(v) => {
                let obs = v.iter().zip(t.mask(j)).filter(|(_, &o)| o).map(|(x, _)| *x);
                let (lo, hi) = obs.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
                    (lo.min(x), hi.max(x))
                });
                let range = hi - lo;
                let scale = if range > 0.0 { 1.0 / range } else { 0.0 };
                Feature::Numeric(v.iter().map(|x| x * scale).collect())
            }
            ColumnData::Categorical(c) => Feature::Categorical(c),
        })
        .collect();

    let recipients: Vec<usize> = (0..t.n_rows()).filter(|&i| !t.row_complete(i)).collect();
    let mut neighbours: Vec<Vec<usize>> = vec![Vec::new(); t.n_rows()];
    let mut dist: Vec<(f64, usize)> = Vec::with_capacity(donors.len());
    for &r in &recipients {
        let usable: Vec<usize> = (0..features.len()).filter(|&f| t.is_observed(r, features[f])).collect();
        dist.clear();
        for &d in &donors {
            let mut sum = 0.0;
            for &f in &usable {
                sum += match &feats[f] {
                    Feature::Numeric(v) => (v[r] - v[d]).abs(),
                    Feature::Categorical(c) => f64::from(u8::from(c[r] != c[d])),
                };
            }
            dist.push((sum / usable.len().max(1) as f64, d));
        }
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < dist.len() {
            dist.select_nth_unstable_by(k - 1, cmp);
            dist.truncate(k);
        }
        dist.sort_by(cmp);
        neighbours[r] = dist.iter().map(|&(_, d)| d).collect();
    }

    fill_cells(t, &targets, |j, i| {
        let nb = &neighbours[i];
        match t.column(j) {
            ColumnData::Numeric(v) => nb.iter().map(|&d| v[d]).sum::<f64>() / nb.len() as f64,
            ColumnData::Categorical(c) => {
                let n_levels = t.spec(j).levels().map_or(0, <[String]>::len);
                let codes: Vec<u32> = nb.iter().map(|&d| c[d]).collect();
                let observed = vec![true; codes.len()];
                f64::from(mode_code(&codes, &observed, n_levels).expect("k >= 1"))
            }
        }
    })
}
