//! Classifiers and cross-validated tuning.
//!
//! Four model kinds share one entry point: logistic regression, random
//! forest, gradient-boosted trees and an RBF support vector machine. Every
//! model sees the design matrix built from the predictor columns only; the
//! sensitive and outcome columns never enter it. Numeric predictors are
//! standardized with training statistics for logistic regression and the
//! SVM.

pub mod boost;
pub mod forest;
pub mod logistic;
pub mod svm;
pub mod tree;

use std::fmt;
use std::str::FromStr;

use log::warn;
use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::{derive, Rng};
use crate::table::{Encoding, Role, Table};

use boost::{fit_boost, Booster};
use forest::{fit_forest, Forest};
use logistic::{fit_logistic, linear_predictor, LogisticFit};
use svm::{fit_svm, signed_labels, solve_smo, squared_distances, CachedKernel, DenseKernel, Svm, DENSE_LIMIT, KKT_TOL};
use tree::RankedFeatures;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Lr,
    Rf,
    Boost,
    #[serde(alias = "svm_rbf")]
    Svm,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::Lr, ModelKind::Rf, ModelKind::Boost, ModelKind::Svm];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Lr => "lr",
            ModelKind::Rf => "rf",
            ModelKind::Boost => "boost",
            ModelKind::Svm => "svm",
        }
    }

    /// Short label used on plot axes.
    pub fn short_label(self) -> &'static str {
        match self {
            ModelKind::Boost => "b",
            k => k.as_str(),
        }
    }

    fn standardizes(self) -> bool {
        matches!(self, ModelKind::Lr | ModelKind::Svm)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lr" => Ok(ModelKind::Lr),
            "rf" => Ok(ModelKind::Rf),
            "boost" | "b" => Ok(ModelKind::Boost),
            "svm" | "svm_rbf" => Ok(ModelKind::Svm),
            _ => Err(Error::InvalidArgument(format!("unknown model `{s}`"))),
        }
    }
}

/// Features examined per random-forest split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mtry {
    /// `max(1, ⌊√p⌋)`.
    Sqrt,
    All,
    Count(usize),
}

impl Mtry {
    pub fn resolve(self, p: usize) -> usize {
        let m = match self {
            Mtry::Sqrt => (p as f64).sqrt().floor() as usize,
            Mtry::All => p,
            Mtry::Count(k) => k,
        };
        m.clamp(1, p.max(1))
    }
}

/// One grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum Hyper {
    Lr {
        lambda: f64,
    },
    Rf {
        trees: usize,
        max_depth: Option<usize>,
        mtry: Mtry,
    },
    Boost {
        trees: usize,
        rate: f64,
        depth: usize,
    },
    /// `gamma = gamma_per_feature / p` for a design of width `p`.
    Svm {
        c: f64,
        gamma_per_feature: f64,
    },
}

impl Hyper {
    pub fn kind(&self) -> ModelKind {
        match self {
            Hyper::Lr { .. } => ModelKind::Lr,
            Hyper::Rf { .. } => ModelKind::Rf,
            Hyper::Boost { .. } => ModelKind::Boost,
            Hyper::Svm { .. } => ModelKind::Svm,
        }
    }
}

impl fmt::Display for Hyper {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Hyper::Lr { lambda } => write!(f, "lr(lambda={lambda})"),
            Hyper::Rf { trees, max_depth, mtry } => {
                let depth = max_depth.map_or_else(|| "inf".to_string(), |d| d.to_string());
                write!(f, "rf(trees={trees}, depth={depth}, mtry={mtry:?})")
            }
            Hyper::Boost { trees, rate, depth } => write!(f, "boost(trees={trees}, rate={rate}, depth={depth})"),
            Hyper::Svm { c, gamma_per_feature } => write!(f, "svm(C={c}, gamma={gamma_per_feature}/p)"),
        }
    }
}

/// Candidate values per model kind; grid points are the cartesian product
/// in field order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HyperGrid {
    pub lr_lambda: Vec<f64>,
    pub rf_trees: Vec<usize>,
    pub rf_max_depth: Vec<Option<usize>>,
    pub rf_mtry: Vec<Mtry>,
    pub boost_trees: Vec<usize>,
    pub boost_rate: Vec<f64>,
    pub boost_depth: Vec<usize>,
    pub svm_c: Vec<f64>,
    pub svm_gamma_per_feature: Vec<f64>,
}

impl Default for HyperGrid {
    fn default() -> Self {
        Self {
            lr_lambda: vec![0.0, 0.01, 0.1, 1.0],
            rf_trees: vec![200],
            rf_max_depth: vec![None, Some(8)],
            rf_mtry: vec![Mtry::Sqrt],
            boost_trees: vec![100, 300],
            boost_rate: vec![0.1],
            boost_depth: vec![2, 3],
            svm_c: vec![0.1, 1.0, 10.0],
            svm_gamma_per_feature: vec![1.0, 2.0],
        }
    }
}

impl HyperGrid {
    /// A grid holding exactly one point.
    pub fn single(h: Hyper) -> Self {
        let mut g = HyperGrid::default();
        match h {
            Hyper::Lr { lambda } => g.lr_lambda = vec![lambda],
            Hyper::Rf { trees, max_depth, mtry } => {
                g.rf_trees = vec![trees];
                g.rf_max_depth = vec![max_depth];
                g.rf_mtry = vec![mtry];
            }
            Hyper::Boost { trees, rate, depth } => {
                g.boost_trees = vec![trees];
                g.boost_rate = vec![rate];
                g.boost_depth = vec![depth];
            }
            Hyper::Svm { c, gamma_per_feature } => {
                g.svm_c = vec![c];
                g.svm_gamma_per_feature = vec![gamma_per_feature];
            }
        }
        g
    }

    pub fn points(&self, kind: ModelKind) -> Vec<Hyper> {
        let mut out = Vec::new();
        match kind {
            ModelKind::Lr => out.extend(self.lr_lambda.iter().map(|&lambda| Hyper::Lr { lambda })),
            ModelKind::Rf => {
                for &trees in &self.rf_trees {
                    for &max_depth in &self.rf_max_depth {
                        for &mtry in &self.rf_mtry {
                            out.push(Hyper::Rf { trees, max_depth, mtry });
                        }
                    }
                }
            }
            ModelKind::Boost => {
                for &trees in &self.boost_trees {
                    for &rate in &self.boost_rate {
                        for &depth in &self.boost_depth {
                            out.push(Hyper::Boost { trees, rate, depth });
                        }
                    }
                }
            }
            ModelKind::Svm => {
                for &c in &self.svm_c {
                    for &gamma_per_feature in &self.svm_gamma_per_feature {
                        out.push(Hyper::Svm { c, gamma_per_feature });
                    }
                }
            }
        }
        out
    }

    pub fn validate(&self, kind: ModelKind) -> Result<()> {
        let pts = self.points(kind);
        if pts.is_empty() {
            return Err(Error::InvalidArgument(format!("empty grid for {kind}")));
        }
        pts.iter().try_for_each(validate_hyper)
    }
}

fn validate_hyper(h: &Hyper) -> Result<()> {
    let ok = match *h {
        Hyper::Lr { lambda } => lambda >= 0.0 && lambda.is_finite(),
        Hyper::Rf { trees, max_depth, mtry } => {
            trees > 0 && max_depth != Some(0) && mtry != Mtry::Count(0)
        }
        Hyper::Boost { trees, rate, depth } => trees > 0 && rate > 0.0 && rate.is_finite() && depth > 0,
        Hyper::Svm { c, gamma_per_feature } => {
            c > 0.0 && c.is_finite() && gamma_per_feature > 0.0 && gamma_per_feature.is_finite()
        }
    };
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("invalid hyperparameters {h}")))
    }
}

/// Predictor encoding plus optional standardization of numeric columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub encoding: Encoding,
    center: Vec<f64>,
    scale: Vec<f64>,
}

impl Design {
    /// Fits the design on `train` and returns it with the encoded training
    /// matrix. Zero-variance numeric columns are centred but not scaled.
    pub fn fit(train: &Table, standardize: bool) -> Result<(Design, Matrix)> {
        let encoding = Encoding::new(train.schema(), &[Role::Sensitive, Role::Outcome]);
        if encoding.width() == 0 {
            return Err(Error::Empty("predictor columns"));
        }
        let mut x = encoding.encode(train)?;
        let p = x.cols();
        let mut center = vec![0.0; p];
        let mut scale = vec![1.0; p];
        if standardize && x.rows() > 1 {
            for j in encoding.numeric_positions() {
                let col = x.column(j);
                let m = crate::stats::mean(&col);
                let sd = crate::stats::std_dev(&col);
                center[j] = m;
                if sd > 0.0 {
                    scale[j] = sd;
                }
            }
        }
        let design = Design { encoding, center, scale };
        design.standardize_in_place(&mut x);
        Ok((design, x))
    }

    fn standardize_in_place(&self, x: &mut Matrix) {
        if self.center.iter().all(|&c| c == 0.0) && self.scale.iter().all(|&s| s == 1.0) {
            return;
        }
        for i in 0..x.rows() {
            for (j, v) in x.row_mut(i).iter_mut().enumerate() {
                *v = (*v - self.center[j]) / self.scale[j];
            }
        }
    }

    pub fn width(&self) -> usize {
        self.encoding.width()
    }

    pub fn transform(&self, t: &Table) -> Result<Matrix> {
        let mut x = self.encoding.encode(t)?;
        self.standardize_in_place(&mut x);
        Ok(x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Params {
    Lr(LogisticFit),
    Rf(Forest),
    Boost(Booster),
    Svm(Svm),
}

/// A fitted classifier. Labels come from a fixed 0.5 probability threshold
/// (lr, boost), a majority vote with ties to 1 (rf) or the sign of the
/// decision function with 0 mapped to 1 (svm).
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub kind: ModelKind,
    pub hyper: Hyper,
    pub design: Design,
    pub params: Params,
    /// False when an iterative fit stopped at its iteration cap.
    pub converged: bool,
}

fn labels_with_both_classes(t: &Table) -> Result<Vec<u8>> {
    let y = t.outcome_labels()?;
    if y.is_empty() {
        return Err(Error::Empty("training rows"));
    }
    if y.iter().all(|&v| v == y[0]) {
        return Err(Error::SingleClass);
    }
    Ok(y)
}

fn fit_matrix(hyper: &Hyper, x: &Matrix, y: &[u8], seed: u64) -> (Params, bool) {
    match *hyper {
        Hyper::Lr { lambda } => {
            let yf: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
            let fit = fit_logistic(x, &yf, lambda, None);
            let conv = fit.converged;
            (Params::Lr(fit), conv)
        }
        Hyper::Rf { trees, max_depth, mtry } => {
            let data = RankedFeatures::new(x);
            let f = fit_forest(&data, y, trees, max_depth, mtry.resolve(x.cols()), seed);
            (Params::Rf(f), true)
        }
        Hyper::Boost { trees, rate, depth } => {
            let data = RankedFeatures::new(x);
            (Params::Boost(fit_boost(x, &data, y, trees, rate, depth)), true)
        }
        Hyper::Svm { c, gamma_per_feature } => {
            let m = fit_svm(x, y, c, gamma_per_feature / x.cols() as f64);
            let conv = m.converged;
            (Params::Svm(m), conv)
        }
    }
}

/// Fits `hyper` (which must be of `kind`) on a fully observed table with
/// both classes present. `seed` drives the random forest only.
pub fn fit(kind: ModelKind, hyper: &Hyper, train: &Table, seed: u64) -> Result<TrainedModel> {
    if hyper.kind() != kind {
        return Err(Error::InvalidArgument(format!("{hyper} is not a {kind} grid point")));
    }
    validate_hyper(hyper)?;
    let y = labels_with_both_classes(train)?;
    let (design, x) = Design::fit(train, kind.standardizes())?;
    let (params, converged) = fit_matrix(hyper, &x, &y, seed);
    if !converged {
        warn!("{hyper} stopped at its iteration cap");
    }
    Ok(TrainedModel {
        kind,
        hyper: *hyper,
        design,
        params,
        converged,
    })
}

fn predict_matrix(params: &Params, x: &Matrix) -> Vec<u8> {
    (0..x.rows())
        .map(|i| {
            let r = x.row(i);
            match params {
                Params::Lr(fit) => u8::from(linear_predictor(&fit.coef, r) >= 0.0),
                Params::Rf(f) => f.predict(r),
                Params::Boost(b) => b.predict(r),
                Params::Svm(s) => s.predict(r),
            }
        })
        .collect()
}

/// Labels for every row of `rows`, which must be fully observed in the
/// predictor columns and share the training schema.
pub fn predict(model: &TrainedModel, rows: &Table) -> Result<Vec<u8>> {
    let x = model.design.transform(rows)?;
    Ok(predict_matrix(&model.params, &x))
}

/// Normalized mean decrease in Gini impurity, one entry per design column.
pub fn rf_variable_importance(model: &TrainedModel) -> Result<Vec<(String, f64)>> {
    let Params::Rf(f) = &model.params else {
        return Err(Error::WrongModelKind("variable importance"));
    };
    Ok(model
        .design
        .encoding
        .columns()
        .iter()
        .zip(&f.importance)
        .map(|(c, &v)| (c.name.clone(), v))
        .collect())
}

/// Outcome of a grid search.
#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub best: Hyper,
    /// Mean fold accuracy per grid point, in grid order.
    pub scores: Vec<(Hyper, f64)>,
    /// Folds actually used after merging folds that lacked a class.
    pub folds: usize,
}

/// Partitions rows into `k` folds by shuffled position; any fold missing a
/// class is merged into a neighbour.
pub fn assign_folds(y: &[u8], k: usize, rng: &mut Rng) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..y.len()).collect();
    order.shuffle(rng);
    let mut folds = vec![Vec::new(); k.min(y.len()).max(1)];
    let nf = folds.len();
    for (pos, &i) in order.iter().enumerate() {
        folds[pos % nf].push(i);
    }
    let both = |f: &[usize]| f.iter().any(|&i| y[i] == 1) && f.iter().any(|&i| y[i] == 0);
    while folds.len() > 1 {
        let Some(bad) = folds.iter().position(|f| !both(f)) else {
            break;
        };
        warn!("fold {bad} lacks a class; merged with a neighbour");
        let f = folds.remove(bad);
        let target = bad.min(folds.len() - 1);
        folds[target].extend(f);
        folds[target].sort_unstable();
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    folds
}

fn accuracy(pred: &[u8], y: &[u8]) -> f64 {
    pred.iter().zip(y).filter(|(a, b)| a == b).count() as f64 / y.len() as f64
}

/// Selects the grid point with the highest mean fold accuracy; ties go to
/// the earliest point.
pub fn cross_validate(kind: ModelKind, train: &Table, grid: &HyperGrid, folds: usize, rng: &mut Rng) -> Result<CvResult> {
    if folds < 2 {
        return Err(Error::InvalidArgument("cross-validation needs at least 2 folds".into()));
    }
    grid.validate(kind)?;
    let y = labels_with_both_classes(train)?;
    let points = grid.points(kind);
    let parts = assign_folds(&y, folds, rng);
    if parts.len() < 2 {
        return Err(Error::InvalidArgument("too few rows of each class for cross-validation".into()));
    }
    let cv_seed: u64 = rng.random();
    let mut totals = vec![0.0; points.len()];
    for (fi, val_idx) in parts.iter().enumerate() {
        let mut in_val = vec![false; y.len()];
        val_idx.iter().for_each(|&i| in_val[i] = true);
        let tr_idx: Vec<usize> = (0..y.len()).filter(|&i| !in_val[i]).collect();
        let fold_train = train.select_rows(&tr_idx)?;
        let fold_val = train.select_rows(val_idx)?;
        let y_tr: Vec<u8> = tr_idx.iter().map(|&i| y[i]).collect();
        let y_val: Vec<u8> = val_idx.iter().map(|&i| y[i]).collect();
        if y_tr.iter().all(|&v| v == y_tr[0]) {
            return Err(Error::SingleClass);
        }
        let (design, x_tr) = Design::fit(&fold_train, kind.standardizes())?;
        let x_val = design.transform(&fold_val)?;
        let acc = fold_accuracies(&points, &x_tr, &y_tr, &x_val, &y_val, derive(cv_seed, fi as u64));
        for (t, a) in totals.iter_mut().zip(acc) {
            *t += a;
        }
    }
    let scores: Vec<(Hyper, f64)> = points
        .iter()
        .zip(&totals)
        .map(|(h, t)| (*h, t / parts.len() as f64))
        .collect();
    let mut best = 0;
    for (k, s) in scores.iter().enumerate() {
        if s.1 > scores[best].1 {
            best = k;
        }
    }
    Ok(CvResult {
        best: scores[best].0,
        scores,
        folds: parts.len(),
    })
}

/// Validation accuracy of every grid point on one fold. Grid points that
/// differ only in a staged or path parameter share work: logistic fits are
/// warm-started along decreasing λ, boosting fits the largest tree count
/// once and scores its prefixes, and the SVM reuses one kernel per γ.
fn fold_accuracies(points: &[Hyper], x_tr: &Matrix, y_tr: &[u8], x_val: &Matrix, y_val: &[u8], seed: u64) -> Vec<f64> {
    let mut acc = vec![0.0; points.len()];
    match points[0].kind() {
        ModelKind::Lr => {
            let yf: Vec<f64> = y_tr.iter().map(|&v| f64::from(v)).collect();
            let mut order: Vec<usize> = (0..points.len()).collect();
            let lambda = |k: usize| match points[k] {
                Hyper::Lr { lambda } => lambda,
                _ => unreachable!(),
            };
            order.sort_by(|&a, &b| lambda(b).total_cmp(&lambda(a)).then(a.cmp(&b)));
            let mut warm: Option<Vec<f64>> = None;
            for k in order {
                let fit = fit_logistic(x_tr, &yf, lambda(k), warm.as_deref());
                acc[k] = accuracy(&predict_matrix(&Params::Lr(fit.clone()), x_val), y_val);
                warm = Some(fit.coef);
            }
        }
        ModelKind::Rf => {
            let data = RankedFeatures::new(x_tr);
            for (k, h) in points.iter().enumerate() {
                let (params, _) = fit_matrix_ranked(h, x_tr, &data, y_tr, derive(seed, k as u64));
                acc[k] = accuracy(&predict_matrix(&params, x_val), y_val);
            }
        }
        ModelKind::Boost => {
            let data = RankedFeatures::new(x_tr);
            let mut done = vec![false; points.len()];
            for k in 0..points.len() {
                if done[k] {
                    continue;
                }
                let Hyper::Boost { rate, depth, .. } = points[k] else { unreachable!() };
                let group: Vec<(usize, usize)> = points
                    .iter()
                    .enumerate()
                    .filter_map(|(m, h)| match *h {
                        Hyper::Boost { trees, rate: r, depth: d } if r == rate && d == depth => Some((m, trees)),
                        _ => None,
                    })
                    .collect();
                let mut stages: Vec<usize> = group.iter().map(|g| g.1).collect();
                stages.sort_unstable();
                stages.dedup();
                let b = fit_boost(x_tr, &data, y_tr, *stages.last().unwrap(), rate, depth);
                let mut correct = vec![0usize; stages.len()];
                for i in 0..x_val.rows() {
                    for (s, f) in b.scores_at(x_val.row(i), &stages).iter().enumerate() {
                        if u8::from(*f >= 0.0) == y_val[i] {
                            correct[s] += 1;
                        }
                    }
                }
                for (m, trees) in group {
                    let s = stages.binary_search(&trees).unwrap();
                    acc[m] = correct[s] as f64 / y_val.len() as f64;
                    done[m] = true;
                }
            }
        }
        ModelKind::Svm => {
            let p = x_tr.cols() as f64;
            let ys = signed_labels(y_tr);
            let n = x_tr.rows();
            let dense = n <= DENSE_LIMIT;
            let d_tr = if dense { squared_distances(x_tr, x_tr) } else { Vec::new() };
            let d_val = squared_distances(x_val, x_tr);
            let mut gammas: Vec<f64> = Vec::new();
            for h in points {
                if let Hyper::Svm { gamma_per_feature, .. } = *h {
                    if !gammas.contains(&gamma_per_feature) {
                        gammas.push(gamma_per_feature);
                    }
                }
            }
            for gpf in gammas {
                let gamma = gpf / p;
                let k_val: Vec<f64> = d_val.iter().map(|v| (-gamma * v).exp()).collect();
                let mut dense_k = dense.then(|| DenseKernel::from_distances(&d_tr, n, gamma));
                for (k, h) in points.iter().enumerate() {
                    let Hyper::Svm { c, gamma_per_feature } = *h else { unreachable!() };
                    if gamma_per_feature != gpf {
                        continue;
                    }
                    let sol = match dense_k.as_mut() {
                        Some(kern) => solve_smo(kern, &ys, c, KKT_TOL),
                        None => solve_smo(&mut CachedKernel::new(x_tr, gamma), &ys, c, KKT_TOL),
                    };
                    let mut correct = 0;
                    for (i, &yv) in y_val.iter().enumerate() {
                        let row = &k_val[i * n..(i + 1) * n];
                        let f: f64 = sol.alpha.iter().zip(&ys).zip(row).map(|((a, y), kv)| a * y * kv).sum::<f64>()
                            - sol.rho;
                        if u8::from(f >= 0.0) == yv {
                            correct += 1;
                        }
                    }
                    acc[k] = correct as f64 / y_val.len() as f64;
                }
            }
        }
    }
    acc
}

fn fit_matrix_ranked(h: &Hyper, x: &Matrix, data: &RankedFeatures, y: &[u8], seed: u64) -> (Params, bool) {
    match *h {
        Hyper::Rf { trees, max_depth, mtry } => {
            (Params::Rf(fit_forest(data, y, trees, max_depth, mtry.resolve(x.cols()), seed)), true)
        }
        _ => fit_matrix(h, x, y, seed),
    }
}

/// Convenience: tune on `train` with `folds`-fold CV, then refit the chosen
/// point on all of `train`.
pub fn tune_and_fit(kind: ModelKind, train: &Table, grid: &HyperGrid, folds: usize, rng: &mut Rng) -> Result<TrainedModel> {
    let cv = cross_validate(kind, train, grid, folds, rng)?;
    let seed: u64 = rng.random();
    fit(kind, &cv.best, train, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::table::{ColumnData, ColumnSpec};

    fn table(x: &[f64], s: &[u32], y: &[u32]) -> Table {
        let schema = vec![
            ColumnSpec::numeric("x", Role::Predictor),
            ColumnSpec::categorical("s", &["a", "b"], Role::Sensitive),
            ColumnSpec::categorical("y", &["0", "1"], Role::Outcome),
        ];
        Table::from_columns(
            schema,
            vec![
                ColumnData::Numeric(x.to_vec()),
                ColumnData::Categorical(s.to_vec()),
                ColumnData::Categorical(y.to_vec()),
            ],
        )
        .unwrap()
    }

    #[test]
    fn default_grid_sizes() {
        let g = HyperGrid::default();
        assert_eq!(g.points(ModelKind::Lr).len(), 4);
        assert_eq!(g.points(ModelKind::Rf).len(), 2);
        assert_eq!(g.points(ModelKind::Boost).len(), 4);
        assert_eq!(g.points(ModelKind::Svm).len(), 6);
        assert_eq!(g.points(ModelKind::Boost)[1], Hyper::Boost { trees: 100, rate: 0.1, depth: 3 });
    }

    #[test]
    fn grid_roundtrips_through_json() {
        let g = HyperGrid::default();
        let s = serde_json::to_string(&g).unwrap();
        assert_eq!(serde_json::from_str::<HyperGrid>(&s).unwrap(), g);
        let partial: HyperGrid = serde_json::from_str(r#"{"lr_lambda":[0.5]}"#).unwrap();
        assert_eq!(partial.lr_lambda, vec![0.5]);
        assert_eq!(partial.svm_c, g.svm_c);
    }

    #[test]
    fn model_names_parse() {
        for k in ModelKind::ALL {
            assert_eq!(k.as_str().parse::<ModelKind>().unwrap(), k);
        }
        assert_eq!("svm_rbf".parse::<ModelKind>().unwrap(), ModelKind::Svm);
        assert_eq!(ModelKind::Boost.short_label(), "b");
    }

    #[test]
    fn mtry_resolution() {
        assert_eq!(Mtry::Sqrt.resolve(10), 3);
        assert_eq!(Mtry::Sqrt.resolve(1), 1);
        assert_eq!(Mtry::Count(50).resolve(4), 4);
    }

    #[test]
    fn constant_labels_rejected() {
        let t = table(&[1.0, 2.0, 3.0], &[0, 1, 0], &[1, 1, 1]);
        let err = fit(ModelKind::Lr, &Hyper::Lr { lambda: 0.0 }, &t, 0).unwrap_err();
        assert!(matches!(err, Error::SingleClass));
    }

    #[test]
    fn empty_prediction() {
        let t = table(&[-2.0, -1.0, 1.0, 2.0], &[0, 1, 0, 1], &[0, 0, 1, 1]);
        let m = fit(ModelKind::Lr, &Hyper::Lr { lambda: 0.1 }, &t, 0).unwrap();
        let empty = t.select_rows(&[]).unwrap();
        assert!(predict(&m, &empty).unwrap().is_empty());
        assert_eq!(predict(&m, &t).unwrap(), vec![0, 0, 1, 1]);
    }

    #[test]
    fn importance_rejects_other_kinds() {
        let t = table(&[-2.0, -1.0, 1.0, 2.0], &[0, 1, 0, 1], &[0, 0, 1, 1]);
        let m = fit(ModelKind::Lr, &Hyper::Lr { lambda: 0.1 }, &t, 0).unwrap();
        assert!(matches!(rf_variable_importance(&m), Err(Error::WrongModelKind(_))));
    }

    #[test]
    fn folds_cover_rows_once() {
        let y: Vec<u8> = (0..103).map(|i| u8::from(i % 2 == 0)).collect();
        let folds = assign_folds(&y, 5, &mut stream(4));
        assert_eq!(folds.len(), 5);
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        assert_eq!(all, (0..103).collect::<Vec<_>>());
    }

    #[test]
    fn folds_lacking_a_class_are_merged() {
        let mut y = vec![0u8; 20];
        y[3] = 1;
        y[11] = 1;
        let folds = assign_folds(&y, 5, &mut stream(0));
        assert!(folds.len() <= 2);
        for f in &folds {
            assert!(f.iter().any(|&i| y[i] == 1) && f.iter().any(|&i| y[i] == 0));
        }
    }
}
