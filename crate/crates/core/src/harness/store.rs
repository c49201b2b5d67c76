//! Results store: one record per (iteration, cell, sensitive variant,
//! metric), persisted as CSV.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ampute::Mechanism;
use crate::classify::ModelKind;
use crate::error::{Error, Result};
use crate::fairness::Metric;

pub const CSV_HEADER: [&str; 8] = [
    "iteration",
    "mechanism",
    "handler",
    "model",
    "sensitive",
    "metric",
    "value",
    "defined",
];

/// Handler names in canonical order.
pub const HANDLER_ORDER: [&str; 4] = ["ld", "mode", "reg", "knn"];

/// Rounds to 12 significant digits, the precision of the CSV file, so that
/// stored values survive a write/read cycle unchanged.
pub fn canonical(v: f64) -> f64 {
    format_value(v).parse().unwrap_or(v)
}

/// Scientific notation with 12 significant digits.
pub fn format_value(v: f64) -> String {
    format!("{v:.11e}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessRecord {
    pub iteration: usize,
    pub mechanism: Mechanism,
    pub handler: String,
    pub model: ModelKind,
    pub sensitive: String,
    pub metric: Metric,
    /// `None` when the metric is undefined or the cell failed.
    pub value: Option<f64>,
}

/// A factor records can be grouped by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Factor {
    Iteration,
    Mechanism,
    Handler,
    Model,
    Sensitive,
    Metric,
}

impl Factor {
    pub fn as_str(self) -> &'static str {
        match self {
            Factor::Iteration => "iteration",
            Factor::Mechanism => "mechanism",
            Factor::Handler => "handler",
            Factor::Model => "model",
            Factor::Sensitive => "sensitive",
            Factor::Metric => "metric",
        }
    }
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Factor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "iteration" => Ok(Factor::Iteration),
            "mechanism" | "mdm" => Ok(Factor::Mechanism),
            "handler" | "imp" => Ok(Factor::Handler),
            "model" | "mod" => Ok(Factor::Model),
            "sensitive" => Ok(Factor::Sensitive),
            "metric" => Ok(Factor::Metric),
            _ => Err(Error::UnknownFactor(s.to_string())),
        }
    }
}

impl FairnessRecord {
    pub fn level(&self, f: Factor) -> String {
        match f {
            Factor::Iteration => self.iteration.to_string(),
            Factor::Mechanism => self.mechanism.as_str().to_string(),
            Factor::Handler => self.handler.clone(),
            Factor::Model => self.model.as_str().to_string(),
            Factor::Sensitive => self.sensitive.clone(),
            Factor::Metric => self.metric.as_str().to_string(),
        }
    }
}

pub fn write_records<W: Write>(w: W, records: &[FairnessRecord]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_HEADER)?;
    for r in records {
        let (value, defined) = match r.value {
            Some(v) => (format_value(v), "1"),
            None => (String::new(), "0"),
        };
        out.write_record([
            r.iteration.to_string().as_str(),
            r.mechanism.as_str(),
            &r.handler,
            r.model.as_str(),
            &r.sensitive,
            r.metric.as_str(),
            &value,
            defined,
        ])?;
    }
    out.flush().map_err(|e| Error::io("<results>", e))?;
    Ok(())
}

pub fn read_records<R: Read>(r: R) -> Result<Vec<FairnessRecord>> {
    let mut rdr = csv::Reader::from_reader(r);
    let header = rdr.headers()?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::Schema(format!("unexpected results header {header:?}")));
    }
    let mut out = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let bad = |what: &str| Error::InvalidArgument(format!("results row {}: bad {what}", line + 1));
        let defined = match &rec[7] {
            "1" => true,
            "0" => false,
            _ => return Err(bad("defined flag")),
        };
        let value = if defined {
            Some(rec[6].parse::<f64>().map_err(|_| bad("value"))?)
        } else {
            None
        };
        out.push(FairnessRecord {
            iteration: rec[0].parse().map_err(|_| bad("iteration"))?,
            mechanism: rec[1].parse()?,
            handler: rec[2].to_string(),
            model: rec[3].parse()?,
            sensitive: rec[4].to_string(),
            metric: rec[5].parse()?,
            value,
        });
    }
    Ok(out)
}

pub fn save_records(path: impl AsRef<Path>, records: &[FairnessRecord]) -> Result<()> {
    let path = path.as_ref();
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_records(std::io::BufWriter::new(f), records)
}

pub fn load_records(path: impl AsRef<Path>) -> Result<Vec<FairnessRecord>> {
    let path = path.as_ref();
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_records(std::io::BufReader::new(f))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(value: Option<f64>) -> FairnessRecord {
        FairnessRecord {
            iteration: 3,
            mechanism: Mechanism::Mnar,
            handler: "knn".into(),
            model: ModelKind::Boost,
            sensitive: "age".into(),
            metric: Metric::Eo,
            value,
        }
    }

    #[test]
    fn round_trip() {
        let records = vec![rec(Some(canonical(-0.123_456_789_012_345))), rec(None), rec(Some(0.0)), rec(Some(1.0))];
        let mut buf = Vec::new();
        write_records(&mut buf, &records).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("iteration,mechanism,handler,model,sensitive,metric,value,defined\n"));
        assert!(text.contains("3,MNAR,knn,boost,age,eo,-1.23456789012e-1,1\n"));
        assert!(text.contains("3,MNAR,knn,boost,age,eo,,0\n"));
        assert_eq!(read_records(&buf[..]).unwrap(), records);
    }

    #[test]
    fn canonical_is_idempotent() {
        for v in [0.1, 1.0 / 3.0, -2.5e-7, 123_456.789_012_345] {
            let c = canonical(v);
            assert_eq!(canonical(c), c);
            assert!((c - v).abs() <= 1e-11 * v.abs());
        }
    }

    #[test]
    fn rejects_bad_header() {
        assert!(read_records("a,b\n1,2\n".as_bytes()).is_err());
    }

    #[test]
    fn factor_names() {
        assert_eq!("imp".parse::<Factor>().unwrap(), Factor::Handler);
        assert!(matches!("colour".parse::<Factor>(), Err(Error::UnknownFactor(_))));
    }
}
