//! Multivariate amputation.
//!
//! Rows are first assigned to one missingness pattern each. Within a pattern,
//! each candidate row is amputed with probability `logistic(±score + b)`,
//! where the score is a weighted sum of standardized column values and the
//! shift `b` is solved so the mean probability equals the target proportion.
//! MCAR skips the scores and uses the target proportion directly. Amputing a
//! row masks every column of its pattern.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use log::warn;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::table::{ColumnData, Role, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mechanism {
    #[serde(rename = "MCAR", alias = "mcar")]
    Mcar,
    #[serde(rename = "MAR", alias = "mar")]
    Mar,
    #[serde(rename = "MNAR", alias = "mnar")]
    Mnar,
}

impl Mechanism {
    pub const ALL: [Mechanism; 3] = [Mechanism::Mcar, Mechanism::Mar, Mechanism::Mnar];

    pub fn as_str(self) -> &'static str {
        match self {
            Mechanism::Mcar => "MCAR",
            Mechanism::Mar => "MAR",
            Mechanism::Mnar => "MNAR",
        }
    }
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mechanism {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "MCAR" => Ok(Mechanism::Mcar),
            "MAR" => Ok(Mechanism::Mar),
            "MNAR" => Ok(Mechanism::Mnar),
            _ => Err(Error::InvalidArgument(format!("unknown mechanism `{s}`"))),
        }
    }
}

/// Which tail of the score distribution is amputed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// High scores are more likely to be amputed.
    #[default]
    Right,
    Left,
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "right" => Ok(Direction::Right),
            "left" => Ok(Direction::Left),
            _ => Err(Error::InvalidArgument(format!("unknown direction `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissingnessPattern {
    pub missing_columns: Vec<String>,
    pub frequency: f64,
    #[serde(default)]
    pub weights: BTreeMap<String, f64>,
    #[serde(default)]
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmputeConfig {
    pub mechanism: Mechanism,
    pub proportion: f64,
    pub patterns: Vec<MissingnessPattern>,
}

impl AmputeConfig {
    /// One pattern per variable with equal frequencies, proportion 0.5 and
    /// right-tail amputation.
    ///
    /// MAR weights the `mar_column` by −1, which after standardization is the
    /// same score as +1 on `1 − S`: the unprivileged group scores high. MNAR
    /// weights each variable itself, +1 for numeric columns and −1 on the
    /// ordinal rank for categorical ones so lower ranks score high.
    pub fn for_variables(
        t: &Table,
        variables: &[String],
        mechanism: Mechanism,
        mar_column: &str,
    ) -> Result<Self> {
        if variables.is_empty() {
            return Err(Error::InvalidArgument("no variables to ampute".into()));
        }
        let frequency = 1.0 / variables.len() as f64;
        let mut patterns = Vec::with_capacity(variables.len());
        for v in variables {
            let j = t.require_column(v)?;
            let weights = match mechanism {
                Mechanism::Mcar => BTreeMap::new(),
                Mechanism::Mar => {
                    t.require_column(mar_column)?;
                    BTreeMap::from([(mar_column.to_string(), -1.0)])
                }
                Mechanism::Mnar => {
                    let w = if t.spec(j).is_numeric() { 1.0 } else { -1.0 };
                    BTreeMap::from([(v.clone(), w)])
                }
            };
            patterns.push(MissingnessPattern {
                missing_columns: vec![v.clone()],
                frequency,
                weights,
                direction: Direction::Right,
            });
        }
        Ok(Self {
            mechanism,
            proportion: 0.5,
            patterns,
        })
    }

    pub fn with_proportion(mut self, proportion: f64) -> Self {
        self.proportion = proportion;
        self
    }

    pub fn with_direction(mut self, direction: Direction) -> Self {
        for p in &mut self.patterns {
            p.direction = direction;
        }
        self
    }

    pub fn validate(&self, t: &Table) -> Result<()> {
        if !(self.proportion > 0.0 && self.proportion < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "proportion {} outside (0, 1)",
                self.proportion
            )));
        }
        if self.patterns.is_empty() {
            return Err(Error::InvalidArgument("no missingness patterns".into()));
        }
        let total: f64 = self.patterns.iter().map(|p| p.frequency).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "pattern frequencies sum to {total}, not 1"
            )));
        }
        for p in &self.patterns {
            if !(p.frequency > 0.0 && p.frequency <= 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "pattern frequency {} outside (0, 1]",
                    p.frequency
                )));
            }
            if p.missing_columns.is_empty() {
                return Err(Error::InvalidArgument("pattern without columns".into()));
            }
            for c in &p.missing_columns {
                let j = t.require_column(c)?;
                if t.spec(j).role != Role::Predictor {
                    return Err(Error::InvalidArgument(format!(
                        "cannot ampute {} column `{c}`",
                        t.spec(j).role.as_str()
                    )));
                }
            }
            for c in p.weights.keys() {
                t.require_column(c)?;
            }
            let any_weight = p.weights.values().any(|&w| w != 0.0);
            match self.mechanism {
                Mechanism::Mcar if any_weight => {
                    return Err(Error::InvalidArgument("MCAR patterns take no weights".into()))
                }
                Mechanism::Mar => {
                    if let Some(c) = p
                        .weights
                        .iter()
                        .find(|(c, &w)| w != 0.0 && p.missing_columns.contains(c))
                    {
                        return Err(Error::InvalidArgument(format!(
                            "MAR pattern weights its own missing column `{}`",
                            c.0
                        )));
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternCount {
    pub candidates: usize,
    pub amputed: usize,
}

#[derive(Debug, Clone)]
pub struct AmputedTable {
    pub table: Table,
    /// Amputed rows over all rows.
    pub realized_proportion: f64,
    /// Masked predictor cells over all predictor cells.
    pub cell_proportion: f64,
    pub per_pattern_counts: Vec<PatternCount>,
    /// Row → whether it was amputed.
    pub amputed: Vec<bool>,
}

/// Assigns each row one pattern index with probability equal to the
/// pattern frequencies.
pub fn assign_patterns(
    n: usize,
    patterns: &[MissingnessPattern],
    rng: &mut Rng,
) -> Result<Vec<usize>> {
    if patterns.is_empty() {
        return Err(Error::InvalidArgument("no missingness patterns".into()));
    }
    let total: f64 = patterns.iter().map(|p| p.frequency).sum();
    let mut cum = Vec::with_capacity(patterns.len());
    let mut acc = 0.0;
    for p in patterns {
        acc += p.frequency / total;
        cum.push(acc);
    }
    let last = patterns.len() - 1;
    Ok((0..n)
        .map(|_| {
            let u: f64 = rng.random();
            cum.iter().position(|&c| u < c).unwrap_or(last)
        })
        .collect())
}

/// Column values used for scoring: numeric values as is, categorical
/// columns through their ordinal encoding.
fn score_values(t: &Table, col: usize) -> Result<Vec<f64>> {
    let spec = t.spec(col);
    if t.mask(col).iter().any(|&o| !o) {
        return Err(Error::InvalidArgument(format!(
            "weighted column `{}` has missing cells",
            spec.name
        )));
    }
    match t.column(col) {
        ColumnData::Numeric(v) => Ok(v.clone()),
        ColumnData::Categorical(codes) => {
            let enc = spec.ordinal_encoding.as_ref().ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "categorical column `{}` needs an ordinal encoding to be scored",
                    spec.name
                ))
            })?;
            let levels = spec.levels().unwrap_or_default();
            let ranks: Vec<f64> = levels.iter().map(|l| enc[l]).collect();
            Ok(codes.iter().map(|&c| ranks[c as usize]).collect())
        }
    }
}

/// Weighted sum of column z-scores over `rows`, standardized with the
/// population standard deviation of those rows.
pub fn weighted_sum_scores_for(
    t: &Table,
    weights: &BTreeMap<String, f64>,
    rows: &[usize],
) -> Result<Vec<f64>> {
    let mut scores = vec![0.0; rows.len()];
    if rows.is_empty() {
        return Ok(scores);
    }
    for (name, &w) in weights {
        if w == 0.0 {
            continue;
        }
        let col = t.require_column(name)?;
        let values = score_values(t, col)?;
        let x: Vec<f64> = rows.iter().map(|&i| values[i]).collect();
        let m = x.iter().sum::<f64>() / x.len() as f64;
        let sd = (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64).sqrt();
        if !(sd > 0.0) {
            warn!("weighted column `{name}` has zero variance among candidates; ignored");
            continue;
        }
        for (s, v) in scores.iter_mut().zip(&x) {
            *s += w * (v - m) / sd;
        }
    }
    Ok(scores)
}

/// [`weighted_sum_scores_for`] over all rows.
pub fn weighted_sum_scores(t: &Table, weights: &BTreeMap<String, f64>) -> Result<Vec<f64>> {
    let rows: Vec<usize> = (0..t.n_rows()).collect();
    weighted_sum_scores_for(t, weights, &rows)
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

const SHIFT_TOL: f64 = 1e-6;
const SHIFT_MAX_STEPS: usize = 200;

/// Shift `b` with `mean(logistic(score + b)) = target` within 1e-6, by
/// bisection on [−50, 50].
pub fn solve_probability_shift(scores: &[f64], target: f64) -> Result<f64> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::InvalidArgument(format!("target {target} outside (0, 1)")));
    }
    if scores.is_empty() {
        return Err(Error::Empty("scores"));
    }
    let gap = |b: f64| scores.iter().map(|s| logistic(s + b)).sum::<f64>() / scores.len() as f64 - target;
    let (mut lo, mut hi) = (-50.0f64, 50.0f64);
    // bisect to a narrow bracket rather than stopping at the first point
    // inside the tolerance, so the shift does not depend on the tolerance
    for _ in 0..SHIFT_MAX_STEPS {
        let mid = 0.5 * (lo + hi);
        let g = gap(mid);
        if g == 0.0 || hi - lo < 1e-12 {
            return if g.abs() <= SHIFT_TOL {
                Ok(mid)
            } else {
                Err(Error::NoConvergence(SHIFT_MAX_STEPS))
            };
        }
        if g < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NoConvergence(SHIFT_MAX_STEPS))
}

/// Per-row amputation probabilities for one pattern's candidate rows.
fn pattern_probabilities(
    t: &Table,
    mechanism: Mechanism,
    pattern: &MissingnessPattern,
    proportion: f64,
    rows: &[usize],
) -> Result<Vec<f64>> {
    if mechanism == Mechanism::Mcar || rows.is_empty() {
        return Ok(vec![proportion; rows.len()]);
    }
    let mut scores = weighted_sum_scores_for(t, &pattern.weights, rows)?;
    if pattern.direction == Direction::Left {
        scores.iter_mut().for_each(|s| *s = -*s);
    }
    let b = solve_probability_shift(&scores, proportion)?;
    Ok(scores.iter().map(|s| logistic(s + b)).collect())
}

/// Applies the configured missingness to a fully observed table.
pub fn ampute(t: &Table, config: &AmputeConfig, rng: &mut Rng) -> Result<AmputedTable> {
    config.validate(t)?;
    if !t.is_complete() {
        return Err(Error::InvalidArgument("amputation needs a fully observed table".into()));
    }
    let n = t.n_rows();
    let assignment = assign_patterns(n, &config.patterns, rng)?;
    let mut prob = vec![0.0; n];
    let mut counts = Vec::with_capacity(config.patterns.len());
    for (k, pattern) in config.patterns.iter().enumerate() {
        let rows: Vec<usize> = (0..n).filter(|&i| assignment[i] == k).collect();
        let p = pattern_probabilities(t, config.mechanism, pattern, config.proportion, &rows)?;
        for (&i, pi) in rows.iter().zip(p) {
            prob[i] = pi;
        }
        counts.push(PatternCount {
            candidates: rows.len(),
            amputed: 0,
        });
    }

    let pattern_cols: Vec<Vec<usize>> = config
        .patterns
        .iter()
        .map(|p| p.missing_columns.iter().map(|c| t.require_column(c)).collect())
        .collect::<Result<_>>()?;
    let mut amputed = vec![false; n];
    let mut cells = Vec::new();
    for i in 0..n {
        let u: f64 = rng.random();
        if u < prob[i] {
            amputed[i] = true;
            counts[assignment[i]].amputed += 1;
            cells.extend(pattern_cols[assignment[i]].iter().map(|&j| (i, j)));
        }
    }
    let table = t.with_masked(&cells)?;
    let amputed_rows = amputed.iter().filter(|&&a| a).count();
    let predictor_cells = t.columns_with_role(Role::Predictor).len() * n;
    Ok(AmputedTable {
        table,
        realized_proportion: if n == 0 { 0.0 } else { amputed_rows as f64 / n as f64 },
        cell_proportion: if predictor_cells == 0 {
            0.0
        } else {
            cells.len() as f64 / predictor_cells as f64
        },
        per_pattern_counts: counts,
        amputed,
    })
}
