//! Grouped descriptive statistics over a results store.
//!
//! Medians and quartiles take the lower order statistic at `⌊q (n − 1)⌋`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::store::{Factor, FairnessRecord};
use crate::error::{Error, Result};
use crate::stats::{lower_quantile, mean, std_dev};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    /// `(factor, level)` pairs identifying the group.
    pub key: Vec<(Factor, String)>,
    /// Defined values.
    pub n: usize,
    pub undefined: usize,
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    pub median: Option<f64>,
    pub q1: Option<f64>,
    pub q3: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
}

/// Descriptive statistics of `values` (defined values only).
pub fn describe(key: Vec<(Factor, String)>, values: &[f64], undefined: usize) -> SummaryRow {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let some = |v: f64| (!sorted.is_empty()).then_some(v);
    SummaryRow {
        key,
        n: sorted.len(),
        undefined,
        mean: some(mean(&sorted)),
        sd: (sorted.len() >= 2).then(|| std_dev(&sorted)),
        median: some(lower_quantile(&sorted, 0.5)),
        q1: some(lower_quantile(&sorted, 0.25)),
        q3: some(lower_quantile(&sorted, 0.75)),
        min: sorted.first().copied(),
        max: sorted.last().copied(),
    }
}

/// One row per distinct combination of the `group_by` levels, in order of
/// first appearance. With `absolute`, fairness values are replaced by their
/// magnitude (accuracy is left as is).
pub fn summarize(records: &[FairnessRecord], group_by: &[Factor], absolute: bool) -> Result<Vec<SummaryRow>> {
    if records.is_empty() {
        return Err(Error::Empty("results store"));
    }
    let mut order: Vec<Vec<String>> = Vec::new();
    let mut groups: HashMap<Vec<String>, (Vec<f64>, usize)> = HashMap::new();
    for r in records {
        let key: Vec<String> = group_by.iter().map(|&f| r.level(f)).collect();
        let entry = groups.entry(key.clone()).or_insert_with(|| {
            order.push(key);
            (Vec::new(), 0)
        });
        match r.value {
            Some(v) if absolute && r.metric.is_fairness() => entry.0.push(v.abs()),
            Some(v) => entry.0.push(v),
            None => entry.1 += 1,
        }
    }
    Ok(order
        .into_iter()
        .map(|k| {
            let (vals, undefined) = &groups[&k];
            let key = group_by.iter().copied().zip(k).collect();
            describe(key, vals, *undefined)
        })
        .collect())
}

/// Parses a comma-separated factor list.
pub fn parse_factors(s: &str) -> Result<Vec<Factor>> {
    s.split(',').filter(|p| !p.is_empty()).map(|p| p.trim().parse()).collect()
}

/// Aligned plain-text rendering.
pub fn render_text(rows: &[SummaryRow]) -> String {
    let fmt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| format!("{x:.4}"));
    let mut lines = Vec::new();
    if let Some(first) = rows.first() {
        let mut head: Vec<String> = first.key.iter().map(|(f, _)| f.to_string()).collect();
        head.extend(["n", "undef", "mean", "sd", "median", "q1", "q3"].map(String::from));
        lines.push(head);
    }
    for r in rows {
        let mut l: Vec<String> = r.key.iter().map(|(_, v)| v.clone()).collect();
        l.push(r.n.to_string());
        l.push(r.undefined.to_string());
        for v in [r.mean, r.sd, r.median, r.q1, r.q3] {
            l.push(fmt(v));
        }
        lines.push(l);
    }
    let widths: Vec<usize> = (0..lines.first().map_or(0, Vec::len))
        .map(|j| lines.iter().map(|l| l[j].len()).max().unwrap_or(0))
        .collect();
    lines
        .iter()
        .map(|l| {
            l.iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:>w$}"))
                .collect::<Vec<_>>()
                .join("  ")
                + "\n"
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ampute::Mechanism;
    use crate::classify::ModelKind;
    use crate::fairness::Metric;

    fn rec(handler: &str, metric: Metric, value: Option<f64>) -> FairnessRecord {
        FairnessRecord {
            iteration: 0,
            mechanism: Mechanism::Mcar,
            handler: handler.into(),
            model: ModelKind::Lr,
            sensitive: "sex".into(),
            metric,
            value,
        }
    }

    #[test]
    fn single_record() {
        let rows = summarize(&[rec("ld", Metric::Dp, Some(0.3))], &[Factor::Handler], false).unwrap();
        assert_eq!(rows[0].mean, Some(0.3));
        assert_eq!(rows[0].median, Some(0.3));
        assert_eq!(rows[0].sd, None);
    }

    #[test]
    fn five_value_quartiles() {
        // sorted 1 2 4 8 16: indices floor(q * 4) = 1, 2, 3
        let r = describe(vec![], &[16.0, 1.0, 8.0, 2.0, 4.0], 0);
        assert_eq!((r.q1, r.median, r.q3), (Some(2.0), Some(4.0), Some(8.0)));
        assert_eq!(r.mean, Some(6.2));
        assert_eq!((r.min, r.max), (Some(1.0), Some(16.0)));
    }

    #[test]
    fn lower_median_on_even_count() {
        let r = describe(vec![], &[4.0, 1.0, 3.0, 2.0], 0);
        assert_eq!(r.median, Some(2.0));
    }

    #[test]
    fn grouping_order_and_balance() {
        let mut recs = Vec::new();
        for h in ["mode", "ld", "reg"] {
            for k in 0..4 {
                recs.push(rec(h, Metric::Acc, Some(k as f64)));
            }
        }
        let rows = summarize(&recs, &[Factor::Handler], false).unwrap();
        let names: Vec<&str> = rows.iter().map(|r| r.key[0].1.as_str()).collect();
        assert_eq!(names, ["mode", "ld", "reg"]);
        assert!(rows.iter().all(|r| r.n == 4));
    }

    #[test]
    fn absolute_applies_to_fairness_only() {
        let recs = [rec("ld", Metric::Dp, Some(-0.2)), rec("ld", Metric::Acc, Some(0.7)), rec("ld", Metric::Eo, None)];
        let rows = summarize(&recs, &[Factor::Metric], true).unwrap();
        assert_eq!(rows[0].mean, Some(0.2));
        assert_eq!(rows[1].mean, Some(0.7));
        assert_eq!((rows[2].n, rows[2].undefined, rows[2].mean), (0, 1, None));
    }

    #[test]
    fn errors() {
        assert!(summarize(&[], &[Factor::Model], false).is_err());
        assert!(matches!(parse_factors("model,colour"), Err(Error::UnknownFactor(_))));
        assert_eq!(parse_factors("mdm,imp").unwrap(), vec![Factor::Mechanism, Factor::Handler]);
    }
}
