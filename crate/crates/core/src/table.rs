//! Column-oriented mixed-type table with a per-cell observation mask.
//!
//! Tables are immutable values: every operation returns a new table. Masked
//! cells hold a placeholder (`NaN` for numeric columns, [`MISSING_CODE`] for
//! categorical ones) so nothing downstream can read a value that was
//! amputed.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::Rng;

/// Placeholder code stored in masked categorical cells.
pub const MISSING_CODE: u32 = u32::MAX;

/// Default tokens read as missing by [`load_csv`].
pub const DEFAULT_NA_TOKENS: [&str; 3] = ["", "?", "NA"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Predictor,
    Sensitive,
    Outcome,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Predictor => "predictor",
            Role::Sensitive => "sensitive",
            Role::Outcome => "outcome",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    Categorical { levels: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
    pub role: Role,
    /// Level → rank, used to score categorical columns for MNAR amputation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ordinal_encoding: Option<BTreeMap<String, f64>>,
}

impl ColumnSpec {
    pub fn numeric(name: &str, role: Role) -> Self {
        Self {
            name: name.to_string(),
            kind: ColumnKind::Numeric,
            role,
            ordinal_encoding: None,
        }
    }

    pub fn categorical(name: &str, levels: &[&str], role: Role) -> Self {
        Self {
            name: name.to_string(),
            kind: ColumnKind::Categorical {
                levels: levels.iter().map(|s| s.to_string()).collect(),
            },
            role,
            ordinal_encoding: None,
        }
    }

    pub fn with_ordinal(mut self, ranks: &[(&str, f64)]) -> Self {
        self.ordinal_encoding = Some(ranks.iter().map(|(k, v)| (k.to_string(), *v)).collect());
        self
    }

    pub fn levels(&self) -> Option<&[String]> {
        match &self.kind {
            ColumnKind::Categorical { levels } => Some(levels),
            ColumnKind::Numeric => None,
        }
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self.kind, ColumnKind::Numeric)
    }

    pub fn level_code(&self, value: &str) -> Option<u32> {
        self.levels()?
            .iter()
            .position(|l| l == value)
            .map(|p| p as u32)
    }
}

/// Checks the schema-level invariants: unique names, non-empty unique
/// levels, exactly one outcome, at least one sensitive column, and ordinal
/// encodings covering every level.
pub fn validate_schema(schema: &[ColumnSpec]) -> Result<()> {
    let mut names = HashSet::new();
    for c in schema {
        if !names.insert(c.name.as_str()) {
            return Err(Error::Schema(format!("duplicate column `{}`", c.name)));
        }
        if let ColumnKind::Categorical { levels } = &c.kind {
            if levels.is_empty() {
                return Err(Error::Schema(format!("column `{}` has no levels", c.name)));
            }
            let uniq: HashSet<_> = levels.iter().collect();
            if uniq.len() != levels.len() {
                return Err(Error::Schema(format!("column `{}` repeats a level", c.name)));
            }
            if let Some(ord) = &c.ordinal_encoding {
                if let Some(l) = levels.iter().find(|l| !ord.contains_key(*l)) {
                    return Err(Error::Schema(format!(
                        "ordinal encoding of `{}` misses level `{l}`",
                        c.name
                    )));
                }
            }
        }
    }
    let outcomes = schema.iter().filter(|c| c.role == Role::Outcome).count();
    if outcomes != 1 {
        return Err(Error::Schema(format!(
            "expected exactly one outcome column, found {outcomes}"
        )));
    }
    if !schema.iter().any(|c| c.role == Role::Sensitive) {
        return Err(Error::Schema("no sensitive column".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnData {
    Numeric(Vec<f64>),
    Categorical(Vec<u32>),
}

impl ColumnData {
    pub fn len(&self) -> usize {
        match self {
            ColumnData::Numeric(v) => v.len(),
            ColumnData::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn select(&self, idx: &[usize]) -> ColumnData {
        match self {
            ColumnData::Numeric(v) => ColumnData::Numeric(idx.iter().map(|&i| v[i]).collect()),
            ColumnData::Categorical(v) => {
                ColumnData::Categorical(idx.iter().map(|&i| v[i]).collect())
            }
        }
    }

    /// Value as f64 (category code for categorical columns).
    pub fn value(&self, row: usize) -> f64 {
        match self {
            ColumnData::Numeric(v) => v[row],
            ColumnData::Categorical(v) => v[row] as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    schema: Vec<ColumnSpec>,
    columns: Vec<ColumnData>,
    mask: Vec<Vec<bool>>,
    n_rows: usize,
}

impl Table {
    /// Builds a table, checking every structural invariant. Masked cells are
    /// normalised to the placeholder value.
    pub fn new(
        schema: Vec<ColumnSpec>,
        mut columns: Vec<ColumnData>,
        mask: Vec<Vec<bool>>,
    ) -> Result<Self> {
        if schema.len() != columns.len() || schema.len() != mask.len() {
            return Err(Error::Schema(format!(
                "{} column specs, {} data columns, {} mask columns",
                schema.len(),
                columns.len(),
                mask.len()
            )));
        }
        let n_rows = columns.first().map_or(0, ColumnData::len);
        for ((spec, col), m) in schema.iter().zip(columns.iter_mut()).zip(&mask) {
            if col.len() != n_rows || m.len() != n_rows {
                return Err(Error::Schema(format!("column `{}` has wrong length", spec.name)));
            }
            match (&spec.kind, col) {
                (ColumnKind::Numeric, ColumnData::Numeric(v)) => {
                    for (x, &obs) in v.iter_mut().zip(m) {
                        if !obs {
                            *x = f64::NAN;
                        }
                    }
                }
                (ColumnKind::Categorical { levels }, ColumnData::Categorical(v)) => {
                    for (row, (x, &obs)) in v.iter_mut().zip(m).enumerate() {
                        if !obs {
                            *x = MISSING_CODE;
                        } else if *x as usize >= levels.len() {
                            return Err(Error::UnknownLevel {
                                row,
                                column: spec.name.clone(),
                                value: x.to_string(),
                            });
                        }
                    }
                }
                _ => {
                    return Err(Error::Schema(format!(
                        "column `{}` data does not match its declared kind",
                        spec.name
                    )))
                }
            }
            if spec.role != Role::Predictor {
                if let Some(row) = m.iter().position(|&o| !o) {
                    return Err(Error::MissingRequired {
                        row,
                        column: spec.name.clone(),
                        role: spec.role.as_str(),
                    });
                }
            }
        }
        Ok(Self {
            schema,
            columns,
            mask,
            n_rows,
        })
    }

    /// A fully observed table.
    pub fn from_columns(schema: Vec<ColumnSpec>, columns: Vec<ColumnData>) -> Result<Self> {
        let mask = columns.iter().map(|c| vec![true; c.len()]).collect();
        Self::new(schema, columns, mask)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.schema.len()
    }

    pub fn schema(&self) -> &[ColumnSpec] {
        &self.schema
    }

    pub fn spec(&self, col: usize) -> &ColumnSpec {
        &self.schema[col]
    }

    pub fn column(&self, col: usize) -> &ColumnData {
        &self.columns[col]
    }

    pub fn mask(&self, col: usize) -> &[bool] {
        &self.mask[col]
    }

    pub fn is_observed(&self, row: usize, col: usize) -> bool {
        self.mask[col][row]
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.schema.iter().position(|c| c.name == name)
    }

    pub fn require_column(&self, name: &str) -> Result<usize> {
        self.column_index(name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    pub fn numeric(&self, col: usize) -> Option<&[f64]> {
        match &self.columns[col] {
            ColumnData::Numeric(v) => Some(v),
            ColumnData::Categorical(_) => None,
        }
    }

    pub fn codes(&self, col: usize) -> Option<&[u32]> {
        match &self.columns[col] {
            ColumnData::Categorical(v) => Some(v),
            ColumnData::Numeric(_) => None,
        }
    }

    pub fn columns_with_role(&self, role: Role) -> Vec<usize> {
        (0..self.n_cols())
            .filter(|&j| self.schema[j].role == role)
            .collect()
    }

    pub fn outcome_index(&self) -> Result<usize> {
        self.columns_with_role(Role::Outcome)
            .first()
            .copied()
            .ok_or_else(|| Error::Schema("no outcome column".into()))
    }

    /// The single active sensitive column.
    pub fn sensitive_index(&self) -> Result<usize> {
        match self.columns_with_role(Role::Sensitive).as_slice() {
            [j] => Ok(*j),
            [] => Err(Error::Schema("no sensitive column".into())),
            _ => Err(Error::Schema(
                "several sensitive columns; select a sensitive variant first".into(),
            )),
        }
    }

    pub fn row_complete(&self, row: usize) -> bool {
        self.mask.iter().all(|m| m[row])
    }

    pub fn is_complete(&self) -> bool {
        self.mask.iter().all(|m| m.iter().all(|&o| o))
    }

    pub fn missing_count(&self, col: usize) -> usize {
        self.mask[col].iter().filter(|&&o| !o).count()
    }

    /// Rows with at least one masked cell.
    pub fn incomplete_rows(&self) -> usize {
        (0..self.n_rows).filter(|&i| !self.row_complete(i)).count()
    }

    /// Binary outcome vector. The outcome column must have been recoded to
    /// the levels `["0", "1"]` (see `datasets::binarize_outcome`).
    pub fn outcome_labels(&self) -> Result<Vec<u8>> {
        let j = self.outcome_index()?;
        let ok = self.schema[j]
            .levels()
            .is_some_and(|l| l.len() == 2 && l[0] == "0" && l[1] == "1");
        if !ok {
            return Err(Error::Schema(format!(
                "outcome `{}` is not binarized to levels [\"0\", \"1\"]",
                self.schema[j].name
            )));
        }
        Ok(self.codes(j).unwrap().iter().map(|&c| c as u8).collect())
    }

    /// Binary sensitive vector (1 = privileged) from a binarized sensitive column.
    pub fn sensitive_labels(&self) -> Result<Vec<u8>> {
        let j = self.sensitive_index()?;
        let name = &self.schema[j].name;
        let v = self.numeric(j).ok_or_else(|| {
            Error::Schema(format!("sensitive column `{name}` is not binarized"))
        })?;
        v.iter()
            .map(|&x| {
                if x == 0.0 {
                    Ok(0)
                } else if x == 1.0 {
                    Ok(1)
                } else {
                    Err(Error::Schema(format!("sensitive column `{name}` holds {x}")))
                }
            })
            .collect()
    }

    pub fn select_rows(&self, idx: &[usize]) -> Result<Table> {
        if let Some(&bad) = idx.iter().find(|&&i| i >= self.n_rows) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                n_rows: self.n_rows,
            });
        }
        Ok(Table {
            schema: self.schema.clone(),
            columns: self.columns.iter().map(|c| c.select(idx)).collect(),
            mask: self
                .mask
                .iter()
                .map(|m| idx.iter().map(|&i| m[i]).collect())
                .collect(),
            n_rows: idx.len(),
        })
    }

    /// Returns a copy with the given cells masked. Only flips observed → missing.
    pub fn with_masked(&self, cells: &[(usize, usize)]) -> Result<Table> {
        let mut mask = self.mask.clone();
        for &(row, col) in cells {
            if self.schema[col].role != Role::Predictor {
                return Err(Error::InvalidArgument(format!(
                    "cannot mask {} column `{}`",
                    self.schema[col].role.as_str(),
                    self.schema[col].name
                )));
            }
            mask[col][row] = false;
        }
        Table::new(self.schema.clone(), self.columns.clone(), mask)
    }

    /// Replaces one column's data and spec, keeping the rest.
    pub fn with_column(&self, col: usize, spec: ColumnSpec, data: ColumnData, mask: Vec<bool>) -> Result<Table> {
        let mut schema = self.schema.clone();
        let mut columns = self.columns.clone();
        let mut masks = self.mask.clone();
        schema[col] = spec;
        columns[col] = data;
        masks[col] = mask;
        Table::new(schema, columns, masks)
    }

    /// Changes column roles without touching data.
    pub fn with_roles(&self, roles: &[(usize, Role)]) -> Result<Table> {
        let mut schema = self.schema.clone();
        for &(j, r) in roles {
            schema[j].role = r;
        }
        Table::new(schema, self.columns.clone(), self.mask.clone())
    }

    /// Order-sensitive 64-bit fingerprint of data and mask.
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |x: u64| {
            for b in x.to_le_bytes() {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x0000_0100_0000_01B3);
            }
        };
        eat(self.n_rows as u64);
        for (col, m) in self.columns.iter().zip(&self.mask) {
            match col {
                ColumnData::Numeric(v) => v.iter().for_each(|x| eat(x.to_bits())),
                ColumnData::Categorical(v) => v.iter().for_each(|&x| eat(u64::from(x))),
            }
            m.iter().for_each(|&o| eat(u64::from(o)));
        }
        h
    }

    /// Cell rendered as text (levels for categorical columns), `None` if masked.
    pub fn cell_text(&self, row: usize, col: usize) -> Option<String> {
        if !self.mask[col][row] {
            return None;
        }
        Some(match (&self.columns[col], self.schema[col].levels()) {
            (ColumnData::Numeric(v), _) => v[row].to_string(),
            (ColumnData::Categorical(v), Some(levels)) => levels[v[row] as usize].clone(),
            _ => unreachable!("kind checked at construction"),
        })
    }
}

/// Reads a comma-separated file with one header row. Header names are
/// matched to the schema regardless of order; extra file columns are ignored.
pub fn load_csv(path: impl AsRef<Path>, schema: &[ColumnSpec], na_tokens: &[&str]) -> Result<Table> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, schema, na_tokens)
}

pub fn read_csv<R: std::io::Read>(reader: R, schema: &[ColumnSpec], na_tokens: &[&str]) -> Result<Table> {
    validate_schema(schema)?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let positions: Vec<usize> = schema
        .iter()
        .map(|c| {
            header
                .iter()
                .position(|h| *h == c.name)
                .ok_or_else(|| Error::MissingColumn(c.name.clone()))
        })
        .collect::<Result<_>>()?;
    let level_maps: Vec<Option<HashMap<&str, u32>>> = schema
        .iter()
        .map(|c| {
            c.levels().map(|ls| {
                ls.iter()
                    .enumerate()
                    .map(|(i, l)| (l.as_str(), i as u32))
                    .collect()
            })
        })
        .collect();

    let mut columns: Vec<ColumnData> = schema
        .iter()
        .map(|c| match c.kind {
            ColumnKind::Numeric => ColumnData::Numeric(Vec::new()),
            ColumnKind::Categorical { .. } => ColumnData::Categorical(Vec::new()),
        })
        .collect();
    let mut mask: Vec<Vec<bool>> = vec![Vec::new(); schema.len()];

    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        for (j, spec) in schema.iter().enumerate() {
            let raw = rec.get(positions[j]).unwrap_or("");
            let missing = na_tokens.contains(&raw);
            if missing && spec.role != Role::Predictor {
                return Err(Error::MissingRequired {
                    row,
                    column: spec.name.clone(),
                    role: spec.role.as_str(),
                });
            }
            mask[j].push(!missing);
            match &mut columns[j] {
                ColumnData::Numeric(v) => {
                    if missing {
                        v.push(f64::NAN);
                    } else {
                        let x: f64 = raw.parse().map_err(|_| Error::ParseNumeric {
                            row,
                            column: spec.name.clone(),
                            value: raw.to_string(),
                        })?;
                        v.push(x);
                    }
                }
                ColumnData::Categorical(v) => {
                    if missing {
                        v.push(MISSING_CODE);
                    } else {
                        let code = level_maps[j].as_ref().unwrap().get(raw).copied().ok_or_else(
                            || Error::UnknownLevel {
                                row,
                                column: spec.name.clone(),
                                value: raw.to_string(),
                            },
                        )?;
                        v.push(code);
                    }
                }
            }
        }
    }
    Table::new(schema.to_vec(), columns, mask)
}

/// Rows whose mask is all-true, in original order.
pub fn complete_cases(t: &Table) -> Table {
    let idx: Vec<usize> = (0..t.n_rows()).filter(|&i| t.row_complete(i)).collect();
    t.select_rows(&idx).expect("indices in range")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
}

/// Number of test rows: `ceil(n * fraction)`, clamped to `1..n`.
pub fn test_size(n: usize, test_fraction: f64) -> usize {
    // the epsilon keeps exact products such as 3 * (1/3) from rounding up
    let k = (n as f64 * test_fraction - 1e-9).ceil() as usize;
    k.clamp(1, n - 1)
}

/// Uniform random train/test partition of `0..t.n_rows()`.
pub fn split(t: &Table, test_fraction: f64, rng: &mut Rng) -> Result<SplitIndices> {
    split_rows(t.n_rows(), test_fraction, rng)
}

pub fn split_rows(n: usize, test_fraction: f64, rng: &mut Rng) -> Result<SplitIndices> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "test fraction {test_fraction} outside (0, 1)"
        )));
    }
    if n < 2 {
        return Err(Error::InvalidArgument(format!("cannot split {n} rows")));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let k = test_size(n, test_fraction);
    let mut test_idx = perm[..k].to_vec();
    let mut train_idx = perm[k..].to_vec();
    test_idx.sort_unstable();
    train_idx.sort_unstable();
    Ok(SplitIndices {
        train_idx,
        test_idx,
    })
}

/// Applies a split, returning `(train, test)`.
pub fn apply_indices(t: &Table, idx: &SplitIndices) -> Result<(Table, Table)> {
    Ok((t.select_rows(&idx.train_idx)?, t.select_rows(&idx.test_idx)?))
}

/// One design-matrix column and where it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedColumn {
    pub source: String,
    /// Indicator level code for categorical sources, `None` for numeric.
    pub level: Option<u32>,
    pub name: String,
}

/// Column map produced by [`one_hot_encode`]; re-applies the same encoding
/// to any table with a compatible schema.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoding {
    sources: Vec<ColumnSpec>,
    columns: Vec<EncodedColumn>,
}

impl Encoding {
    pub fn new(schema: &[ColumnSpec], drop_roles: &[Role]) -> Self {
        let sources: Vec<ColumnSpec> = schema
            .iter()
            .filter(|c| !drop_roles.contains(&c.role))
            .cloned()
            .collect();
        let mut columns = Vec::new();
        for c in &sources {
            match &c.kind {
                ColumnKind::Numeric => columns.push(EncodedColumn {
                    source: c.name.clone(),
                    level: None,
                    name: c.name.clone(),
                }),
                ColumnKind::Categorical { levels } => {
                    for (code, l) in levels.iter().enumerate().skip(1) {
                        columns.push(EncodedColumn {
                            source: c.name.clone(),
                            level: Some(code as u32),
                            name: format!("{}={}", c.name, l),
                        });
                    }
                }
            }
        }
        Self { sources, columns }
    }

    pub fn columns(&self) -> &[EncodedColumn] {
        &self.columns
    }

    pub fn width(&self) -> usize {
        self.columns.len()
    }

    /// Design-matrix positions of the numeric pass-through columns.
    pub fn numeric_positions(&self) -> Vec<usize> {
        self.columns
            .iter()
            .enumerate()
            .filter(|(_, c)| c.level.is_none())
            .map(|(i, _)| i)
            .collect()
    }

    pub fn encode(&self, t: &Table) -> Result<Matrix> {
        let mut src_idx = Vec::with_capacity(self.sources.len());
        for s in &self.sources {
            let j = t
                .column_index(&s.name)
                .ok_or_else(|| Error::SchemaMismatch(format!("column `{}` absent", s.name)))?;
            if t.spec(j).kind != s.kind {
                return Err(Error::SchemaMismatch(format!(
                    "column `{}` changed kind or levels",
                    s.name
                )));
            }
            src_idx.push(j);
        }
        let n = t.n_rows();
        let mut m = Matrix::zeros(n, self.width());
        let mut out = 0;
        for (s, &j) in self.sources.iter().zip(&src_idx) {
            if let Some(row) = t.mask(j).iter().position(|&o| !o) {
                return Err(Error::MaskedCell {
                    column: s.name.clone(),
                    row,
                });
            }
            match t.column(j) {
                ColumnData::Numeric(v) => {
                    for (i, &x) in v.iter().enumerate() {
                        m.set(i, out, x);
                    }
                    out += 1;
                }
                ColumnData::Categorical(v) => {
                    let width = s.levels().unwrap().len() - 1;
                    for (i, &code) in v.iter().enumerate() {
                        if code > 0 {
                            m.set(i, out + code as usize - 1, 1.0);
                        }
                    }
                    out += width;
                }
            }
        }
        Ok(m)
    }
}

/// Dummy-codes categorical columns (L levels → L−1 indicators, first level
/// as reference) and passes numeric columns through. Columns whose role is
/// in `drop_roles` are left out.
pub fn one_hot_encode(t: &Table, drop_roles: &[Role]) -> Result<(Matrix, Encoding)> {
    let enc = Encoding::new(t.schema(), drop_roles);
    let m = enc.encode(t)?;
    Ok((m, enc))
}

/// How a sensitive column is mapped to {privileged = 1, unprivileged = 0}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinarizeRule {
    /// Categorical levels listed per group.
    Map {
        privileged: Vec<String>,
        unprivileged: Vec<String>,
    },
    /// Numeric values strictly above the threshold are privileged.
    Threshold { above: f64 },
    /// The column already holds 0/1 values.
    Identity,
}

/// Recodes one column to a numeric 0/1 sensitive column.
pub fn binarize_sensitive(t: &Table, column: &str, rule: &BinarizeRule) -> Result<Table> {
    let j = t.require_column(column)?;
    let spec = t.spec(j);
    let unmapped = |value: String| Error::UnmappedValue {
        column: column.to_string(),
        value,
    };
    let values: Vec<f64> = match (rule, t.column(j)) {
        (BinarizeRule::Map { privileged, unprivileged }, ColumnData::Categorical(codes)) => {
            let levels = spec.levels().unwrap();
            codes
                .iter()
                .map(|&c| {
                    let l = &levels[c as usize];
                    if privileged.contains(l) {
                        Ok(1.0)
                    } else if unprivileged.contains(l) {
                        Ok(0.0)
                    } else {
                        Err(unmapped(l.clone()))
                    }
                })
                .collect::<Result<_>>()?
        }
        (BinarizeRule::Threshold { above }, ColumnData::Numeric(v)) => v
            .iter()
            .map(|&x| if x > *above { 1.0 } else { 0.0 })
            .collect(),
        (BinarizeRule::Identity, ColumnData::Numeric(v)) => v
            .iter()
            .map(|&x| {
                if x == 0.0 || x == 1.0 {
                    Ok(x)
                } else {
                    Err(unmapped(x.to_string()))
                }
            })
            .collect::<Result<_>>()?,
        (BinarizeRule::Identity, ColumnData::Categorical(codes)) => {
            let levels = spec.levels().unwrap();
            codes
                .iter()
                .map(|&c| match levels[c as usize].as_str() {
                    "0" => Ok(0.0),
                    "1" => Ok(1.0),
                    other => Err(unmapped(other.to_string())),
                })
                .collect::<Result<_>>()?
        }
        _ => {
            return Err(Error::InvalidArgument(format!(
                "binarization rule does not fit the kind of column `{column}`"
            )))
        }
    };
    if t.mask(j).iter().any(|&o| !o) {
        return Err(Error::MissingRequired {
            row: t.mask(j).iter().position(|&o| !o).unwrap(),
            column: column.to_string(),
            role: "sensitive",
        });
    }
    let new_spec = ColumnSpec {
        name: spec.name.clone(),
        kind: ColumnKind::Numeric,
        role: Role::Sensitive,
        ordinal_encoding: None,
    };
    t.with_column(j, new_spec, ColumnData::Numeric(values), vec![true; t.n_rows()])
}
