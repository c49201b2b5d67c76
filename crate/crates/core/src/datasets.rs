//! Benchmark dataset schemas and a synthetic generator.
//!
//! The German credit, Adult income and COMPAS schemas ship as JSON under
//! `schemas/` and are embedded at compile time; a schema file on disk can be
//! loaded instead with [`DatasetSchema::from_path`]. Data files themselves
//! are user supplied (see `scripts/prepare_datasets.py`).

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::table::{
    self, binarize_sensitive, complete_cases, BinarizeRule, ColumnData, ColumnKind, ColumnSpec, Role, Table,
    DEFAULT_NA_TOKENS,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetId {
    German,
    Adult,
    Compas,
    Synthetic,
}

impl DatasetId {
    pub fn as_str(self) -> &'static str {
        match self {
            DatasetId::German => "german",
            DatasetId::Adult => "adult",
            DatasetId::Compas => "compas",
            DatasetId::Synthetic => "synthetic",
        }
    }

    /// Iterations per experiment when the config does not say: smaller
    /// datasets get more replicates.
    pub fn default_iterations(self) -> usize {
        match self {
            DatasetId::German => 100,
            DatasetId::Compas => 50,
            DatasetId::Adult => 20,
            DatasetId::Synthetic => 20,
        }
    }
}

impl fmt::Display for DatasetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DatasetId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "german" => Ok(DatasetId::German),
            "adult" => Ok(DatasetId::Adult),
            "compas" => Ok(DatasetId::Compas),
            "synthetic" => Ok(DatasetId::Synthetic),
            _ => Err(Error::UnknownDataset(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitiveVariant {
    pub name: String,
    pub column: String,
    pub rule: BinarizeRule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSchema {
    pub id: DatasetId,
    pub columns: Vec<ColumnSpec>,
    pub sensitive_variants: Vec<SensitiveVariant>,
    /// Outcome level mapped to 1.
    pub positive_outcome: String,
    pub amputed_variables: Vec<String>,
    /// Column MAR missingness depends on; `None` means the active sensitive variant.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mar_dependency: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_rows: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_complete_rows: Option<usize>,
}

const GERMAN_JSON: &str = include_str!("../schemas/german.json");
const ADULT_JSON: &str = include_str!("../schemas/adult.json");
const COMPAS_JSON: &str = include_str!("../schemas/compas.json");

/// The frozen schema for a dataset.
pub fn schema_for(id: DatasetId) -> Result<DatasetSchema> {
    let schema = match id {
        DatasetId::German => serde_json::from_str(GERMAN_JSON)?,
        DatasetId::Adult => serde_json::from_str(ADULT_JSON)?,
        DatasetId::Compas => serde_json::from_str(COMPAS_JSON)?,
        DatasetId::Synthetic => synthetic_schema(),
    };
    DatasetSchema::validate(&schema)?;
    Ok(schema)
}

impl DatasetSchema {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let schema: DatasetSchema = serde_json::from_str(&text)?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<()> {
        table::validate_schema(&self.columns)?;
        let find = |name: &str| self.columns.iter().find(|c| c.name == name);
        if self.amputed_variables.len() > 2 {
            return Err(Error::Schema("at most two amputed variables".into()));
        }
        for v in &self.amputed_variables {
            let c = find(v).ok_or_else(|| Error::MissingColumn(v.clone()))?;
            if c.role != Role::Predictor {
                return Err(Error::Schema(format!(
                    "amputed variable `{v}` must be a predictor"
                )));
            }
        }
        if self.sensitive_variants.is_empty() {
            return Err(Error::Schema("no sensitive variants".into()));
        }
        for sv in &self.sensitive_variants {
            let c = find(&sv.column).ok_or_else(|| Error::MissingColumn(sv.column.clone()))?;
            if c.role != Role::Sensitive {
                return Err(Error::Schema(format!(
                    "variant `{}` points at non-sensitive column `{}`",
                    sv.name, sv.column
                )));
            }
        }
        if let Some(dep) = &self.mar_dependency {
            find(dep).ok_or_else(|| Error::MissingColumn(dep.clone()))?;
        }
        let outcome = self.columns.iter().find(|c| c.role == Role::Outcome).unwrap();
        if outcome.level_code(&self.positive_outcome).is_none() {
            return Err(Error::Schema(format!(
                "positive outcome `{}` is not a level of `{}`",
                self.positive_outcome, outcome.name
            )));
        }
        Ok(())
    }

    pub fn variant(&self, name: &str) -> Result<&SensitiveVariant> {
        self.sensitive_variants
            .iter()
            .find(|v| v.name == name)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown sensitive variant `{name}` for {}", self.id)))
    }

    pub fn variant_names(&self) -> Vec<String> {
        self.sensitive_variants.iter().map(|v| v.name.clone()).collect()
    }

    pub fn predictor_count(&self) -> usize {
        self.columns.iter().filter(|c| c.role != Role::Outcome).count()
    }

    pub fn load(&self, path: impl AsRef<Path>) -> Result<Table> {
        table::load_csv(path, &self.columns, &DEFAULT_NA_TOKENS)
    }

    /// Turns a raw table into the analysis table for one sensitive variant:
    /// the outcome becomes `["0", "1"]`, the variant's column becomes a
    /// numeric 0/1 sensitive column, and the other sensitive columns are
    /// demoted to ordinary predictors. Rows with values already missing in
    /// the raw file are removed first.
    pub fn prepare(&self, raw: &Table, variant: &str) -> Result<Table> {
        let v = self.variant(variant)?;
        let t = binarize_outcome(&complete_cases(raw), &self.positive_outcome)?;
        let demote: Vec<(usize, Role)> = t
            .columns_with_role(Role::Sensitive)
            .into_iter()
            .filter(|&j| t.spec(j).name != v.column)
            .map(|j| (j, Role::Predictor))
            .collect();
        let t = t.with_roles(&demote)?;
        binarize_sensitive(&t, &v.column, &v.rule)
    }
}

/// Recodes the outcome column to levels `["0", "1"]` with `positive` → "1".
pub fn binarize_outcome(t: &Table, positive: &str) -> Result<Table> {
    let j = t.outcome_index()?;
    let spec = t.spec(j);
    let pos = spec.level_code(positive).ok_or_else(|| {
        Error::Schema(format!("`{positive}` is not a level of `{}`", spec.name))
    })?;
    let codes = t.codes(j).unwrap();
    let recoded: Vec<u32> = codes.iter().map(|&c| u32::from(c == pos)).collect();
    let new_spec = ColumnSpec::categorical(&spec.name, &["0", "1"], Role::Outcome);
    t.with_column(j, new_spec, ColumnData::Categorical(recoded), vec![true; t.n_rows()])
}

fn synthetic_schema() -> DatasetSchema {
    DatasetSchema {
        id: DatasetId::Synthetic,
        columns: synthetic_columns(),
        sensitive_variants: vec![SensitiveVariant {
            name: "s".into(),
            column: "s".into(),
            rule: BinarizeRule::Identity,
        }],
        positive_outcome: "1".into(),
        amputed_variables: vec!["x1".into(), "c".into()],
        mar_dependency: None,
        expected_rows: None,
        expected_complete_rows: None,
    }
}

fn synthetic_columns() -> Vec<ColumnSpec> {
    vec![
        ColumnSpec::numeric("x1", Role::Predictor),
        ColumnSpec::numeric("x2", Role::Predictor),
        ColumnSpec::categorical("c", &["low", "mid", "high"], Role::Predictor).with_ordinal(&[
            ("low", 0.0),
            ("mid", 1.0),
            ("high", 2.0),
        ]),
        ColumnSpec::numeric("s", Role::Sensitive),
        ColumnSpec::categorical("y", &["0", "1"], Role::Outcome),
    ]
}

/// Synthetic binary-classification table with a binary sensitive column.
///
/// Group sizes and positives are allocated by exact counts: `round(n *
/// group_fraction)` privileged rows, and `round(n_s * rate_s)` positives in
/// group `s`, so equal requested base rates give exactly equal empirical base
/// rates whenever the group sizes allow it.
///
/// Predictors are linked to the label by
/// `x1 = 1.5 y + e1`, `x2 = -y + 0.5 s + e2` and `c = cut(y + e3)` at
/// 0.0 / 1.0 into low / mid / high, with standard normal noise terms.
pub fn synth_classification(
    n: usize,
    base_rate_privileged: f64,
    base_rate_unprivileged: f64,
    group_fraction: f64,
    rng: &mut Rng,
) -> Result<Table> {
    for p in [base_rate_privileged, base_rate_unprivileged, group_fraction] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!("probability {p} outside [0, 1]")));
        }
    }
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let n1 = (n as f64 * group_fraction).round() as usize;
    let mut s: Vec<u8> = (0..n).map(|i| u8::from(i < n1)).collect();
    s.shuffle(rng);

    let mut y = vec![0u8; n];
    for (group, rate) in [(1u8, base_rate_privileged), (0u8, base_rate_unprivileged)] {
        let mut rows: Vec<usize> = (0..n).filter(|&i| s[i] == group).collect();
        let positives = (rows.len() as f64 * rate).round() as usize;
        rows.shuffle(rng);
        for &i in &rows[..positives] {
            y[i] = 1;
        }
    }

    let mut x1 = Vec::with_capacity(n);
    let mut x2 = Vec::with_capacity(n);
    let mut c = Vec::with_capacity(n);
    for i in 0..n {
        let yi = f64::from(y[i]);
        let si = f64::from(s[i]);
        let e1: f64 = StandardNormal.sample(rng);
        let e2: f64 = StandardNormal.sample(rng);
        let e3: f64 = StandardNormal.sample(rng);
        x1.push(1.5 * yi + e1);
        x2.push(-yi + 0.5 * si + e2);
        let latent = yi + e3;
        c.push(if latent < 0.0 {
            0
        } else if latent < 1.0 {
            1
        } else {
            2
        });
    }
    Table::from_columns(
        synthetic_columns(),
        vec![
            ColumnData::Numeric(x1),
            ColumnData::Numeric(x2),
            ColumnData::Categorical(c),
            ColumnData::Numeric(s.iter().map(|&v| f64::from(v)).collect()),
            ColumnData::Categorical(y.iter().map(|&v| u32::from(v)).collect()),
        ],
    )
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    UnknownLevel,
    Unparseable,
    MissingRequired,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub row: usize,
    pub column: String,
    pub value: String,
    pub kind: ViolationKind,
}

/// Non-fatal description of how a raw data file matches its schema.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub dataset: DatasetId,
    pub rows: usize,
    pub expected_rows: Option<usize>,
    pub missing_columns: Vec<String>,
    pub missing_per_column: BTreeMap<String, usize>,
    pub incomplete_rows: usize,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.missing_columns.is_empty()
            && self.violations.is_empty()
            && self.expected_rows.is_none_or(|e| e == self.rows)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "dataset:          {}", self.dataset)?;
        match self.expected_rows {
            Some(e) => writeln!(f, "rows:             {} (expected {e})", self.rows)?,
            None => writeln!(f, "rows:             {}", self.rows)?,
        }
        writeln!(f, "incomplete rows:  {}", self.incomplete_rows)?;
        if !self.missing_columns.is_empty() {
            writeln!(f, "missing columns:  {}", self.missing_columns.join(", "))?;
        }
        for (c, k) in self.missing_per_column.iter().filter(|(_, &k)| k > 0) {
            writeln!(f, "  missing in {c}: {k}")?;
        }
        writeln!(f, "violations:       {}", self.violations.len())?;
        for v in self.violations.iter().take(20) {
            writeln!(f, "  row {} `{}` = `{}`: {:?}", v.row, v.column, v.value, v.kind)?;
        }
        Ok(())
    }
}

/// Checks a raw CSV against a schema without failing on the first problem.
pub fn validate_dataset<R: std::io::Read>(reader: R, schema: &DatasetSchema) -> Result<ValidationReport> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let mut missing_columns = Vec::new();
    let mut positions = Vec::new();
    for c in &schema.columns {
        match header.iter().position(|h| *h == c.name) {
            Some(p) => positions.push(Some(p)),
            None => {
                missing_columns.push(c.name.clone());
                positions.push(None);
            }
        }
    }
    let mut missing_per_column: BTreeMap<String, usize> =
        schema.columns.iter().map(|c| (c.name.clone(), 0)).collect();
    let mut violations = Vec::new();
    let mut rows = 0;
    let mut incomplete_rows = 0;
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        rows += 1;
        let mut incomplete = false;
        for (spec, pos) in schema.columns.iter().zip(&positions) {
            let Some(p) = pos else { continue };
            let raw = rec.get(*p).unwrap_or("");
            let mut flag = |kind| {
                violations.push(Violation {
                    row,
                    column: spec.name.clone(),
                    value: raw.to_string(),
                    kind,
                })
            };
            if DEFAULT_NA_TOKENS.contains(&raw) {
                incomplete = true;
                *missing_per_column.get_mut(&spec.name).unwrap() += 1;
                if spec.role != Role::Predictor {
                    flag(ViolationKind::MissingRequired);
                }
                continue;
            }
            match &spec.kind {
                ColumnKind::Numeric => {
                    if raw.parse::<f64>().is_err() {
                        flag(ViolationKind::Unparseable);
                    }
                }
                ColumnKind::Categorical { levels } => {
                    if !levels.iter().any(|l| l == raw) {
                        flag(ViolationKind::UnknownLevel);
                    }
                }
            }
        }
        if incomplete {
            incomplete_rows += 1;
        }
    }
    Ok(ValidationReport {
        dataset: schema.id,
        rows,
        expected_rows: schema.expected_rows,
        missing_columns,
        missing_per_column,
        incomplete_rows,
        violations,
    })
}

pub fn validate_path(path: impl AsRef<Path>, schema: &DatasetSchema) -> Result<ValidationReport> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    validate_dataset(file, schema)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn embedded_schemas_are_valid_and_pure() {
        let g = schema_for(DatasetId::German).unwrap();
        assert_eq!(g.predictor_count(), 20);
        assert_eq!(g.variant_names(), vec!["sex", "age"]);
        assert_eq!(g.positive_outcome, "good");
        assert_eq!(g, schema_for(DatasetId::German).unwrap());

        let c = schema_for(DatasetId::Compas).unwrap();
        assert_eq!(c.predictor_count(), 11);
        assert_eq!(c.amputed_variables, vec!["age", "score_text"]);

        let a = schema_for(DatasetId::Adult).unwrap();
        assert_eq!(a.positive_outcome, ">50K");
        assert_eq!(a.predictor_count(), 13);
        assert_eq!(a.amputed_variables, vec!["capital_gain"]);

        assert!("credit".parse::<DatasetId>().is_err());
    }

    #[test]
    fn german_sensitive_and_outcome_excluded_from_design() {
        let g = schema_for(DatasetId::German).unwrap();
        let enc = table::Encoding::new(&g.columns, &[Role::Sensitive, Role::Outcome]);
        assert!(enc
            .columns()
            .iter()
            .all(|c| !["personal_status_sex", "age", "credit_risk"].contains(&c.source.as_str())));
    }

    #[test]
    fn synthetic_equal_rates_are_exact() {
        let t = synth_classification(1000, 0.4, 0.4, 0.5, &mut rng::stream(3)).unwrap();
        let y = t.outcome_labels().unwrap();
        let s = t.sensitive_labels().unwrap();
        let rate = |g| {
            let idx: Vec<_> = (0..y.len()).filter(|&i| s[i] == g).collect();
            idx.iter().filter(|&&i| y[i] == 1).count() as f64 / idx.len() as f64
        };
        assert_eq!(rate(1), rate(0));
        assert_eq!(rate(1), 0.4);
    }

    #[test]
    fn synthetic_group_fraction_one_is_all_privileged() {
        let t = synth_classification(50, 0.5, 0.5, 1.0, &mut rng::stream(1)).unwrap();
        assert!(t.sensitive_labels().unwrap().iter().all(|&s| s == 1));
    }

    #[test]
    fn synthetic_is_seed_deterministic() {
        let a = synth_classification(200, 0.6, 0.3, 0.5, &mut rng::stream(5)).unwrap();
        let b = synth_classification(200, 0.6, 0.3, 0.5, &mut rng::stream(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn prepare_binarizes_and_demotes() {
        let g = schema_for(DatasetId::German).unwrap();
        let csv = "checking_status,duration,credit_history,purpose,credit_amount,savings,employment_since,installment_rate,personal_status_sex,other_debtors,residence_since,property,age,installment_plans,housing,existing_credits,job,people_liable,telephone,foreign_worker,credit_risk\n\
A11,6,A34,A43,1169,A65,A75,4,A93,A101,4,A121,67,A143,A152,2,A173,1,A192,A201,good\n\
A12,48,A32,A43,5951,A61,A73,2,A92,A101,2,A121,22,A143,A152,1,A173,1,A191,A201,bad\n";
        let raw = table::read_csv(csv.as_bytes(), &g.columns, &DEFAULT_NA_TOKENS).unwrap();
        let sex = g.prepare(&raw, "sex").unwrap();
        assert_eq!(sex.sensitive_labels().unwrap(), vec![1, 0]);
        assert_eq!(sex.outcome_labels().unwrap(), vec![1, 0]);
        let age_col = sex.require_column("age").unwrap();
        assert_eq!(sex.spec(age_col).role, Role::Predictor);
        let age = g.prepare(&raw, "age").unwrap();
        assert_eq!(age.sensitive_labels().unwrap(), vec![1, 0]);
        assert!(g.prepare(&raw, "race").is_err());
    }

    #[test]
    fn validation_flags_unknown_level() {
        let g = schema_for(DatasetId::German).unwrap();
        let csv = "checking_status,duration,credit_history,purpose,credit_amount,savings,employment_since,installment_rate,personal_status_sex,other_debtors,residence_since,property,age,installment_plans,housing,existing_credits,job,people_liable,telephone,foreign_worker,credit_risk\n\
A11,6,A39,A43,1169,A65,A75,4,A93,A101,4,A121,67,A143,A152,2,A173,1,A192,A201,good\n\
A12,48,A32,A43,5951,A61,A73,2,A92,A101,2,A121,22,A143,A152,1,A173,1,A191,A201,bad\n";
        let rep = validate_dataset(csv.as_bytes(), &g).unwrap();
        assert_eq!(rep.violations.len(), 1);
        assert_eq!(rep.violations[0].column, "credit_history");
        assert_eq!(rep.violations[0].kind, ViolationKind::UnknownLevel);
        assert_eq!(rep.rows, 2);
    }
}
