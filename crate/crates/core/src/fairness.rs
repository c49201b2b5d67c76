//! Group fairness metrics and accuracy from binary predictions.
//!
//! All fairness metrics are signed differences privileged minus unprivileged
//! (group 1 minus group 0), so a negative value means the unprivileged group
//! is favoured. Rates come from integer confusion counts; a conditional rate
//! whose conditioning cell is empty is `None`, never 0.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Confusion counts for one sensitive group.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupCounts {
    pub n: usize,
    /// Rows with Y = 1.
    pub positives: usize,
    /// Rows with Ŷ = 1.
    pub predicted_positives: usize,
    pub true_positives: usize,
    pub false_positives: usize,
}

impl GroupCounts {
    pub fn negatives(&self) -> usize {
        self.n - self.positives
    }

    pub fn base_rate(&self) -> f64 {
        self.positives as f64 / self.n as f64
    }

    pub fn positive_prediction_rate(&self) -> f64 {
        self.predicted_positives as f64 / self.n as f64
    }

    pub fn tpr(&self) -> Option<f64> {
        (self.positives > 0).then(|| self.true_positives as f64 / self.positives as f64)
    }

    pub fn fpr(&self) -> Option<f64> {
        (self.negatives() > 0).then(|| self.false_positives as f64 / self.negatives() as f64)
    }
}

/// Per-group rates, indexed by sensitive value (0 = unprivileged, 1 = privileged).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupRates {
    pub groups: [GroupCounts; 2],
}

impl GroupRates {
    pub fn counts(&self, s: usize) -> &GroupCounts {
        &self.groups[s]
    }

    pub fn n(&self) -> usize {
        self.groups[0].n + self.groups[1].n
    }

    pub fn base_rate(&self, s: usize) -> f64 {
        self.groups[s].base_rate()
    }

    pub fn ppr(&self, s: usize) -> f64 {
        self.groups[s].positive_prediction_rate()
    }

    pub fn tpr(&self, s: usize) -> Option<f64> {
        self.groups[s].tpr()
    }

    pub fn fpr(&self, s: usize) -> Option<f64> {
        self.groups[s].fpr()
    }

    /// Same counts with the privileged/unprivileged labels swapped.
    pub fn swapped(&self) -> GroupRates {
        GroupRates {
            groups: [self.groups[1], self.groups[0]],
        }
    }
}

fn check_binary(v: &[u8], what: &'static str) -> Result<()> {
    if v.iter().any(|&x| x > 1) {
        return Err(Error::InvalidArgument(format!("{what} must be binary")));
    }
    Ok(())
}

pub fn group_rates(y_true: &[u8], y_pred: &[u8], s: &[u8]) -> Result<GroupRates> {
    if y_true.len() != y_pred.len() {
        return Err(Error::LengthMismatch(y_true.len(), y_pred.len()));
    }
    if y_true.len() != s.len() {
        return Err(Error::LengthMismatch(y_true.len(), s.len()));
    }
    check_binary(y_true, "y_true")?;
    check_binary(y_pred, "y_pred")?;
    check_binary(s, "sensitive")?;
    let mut groups = [GroupCounts::default(); 2];
    for ((&y, &p), &g) in y_true.iter().zip(y_pred).zip(s) {
        let c = &mut groups[g as usize];
        c.n += 1;
        c.positives += y as usize;
        c.predicted_positives += p as usize;
        c.true_positives += (y & p) as usize;
        c.false_positives += ((1 - y) & p) as usize;
    }
    for (g, c) in groups.iter().enumerate() {
        if c.n == 0 {
            return Err(Error::MissingGroup(g as u8));
        }
    }
    Ok(GroupRates { groups })
}

/// P(Ŷ=1 | S=1) − P(Ŷ=1 | S=0).
pub fn demographic_parity(r: &GroupRates) -> f64 {
    r.ppr(1) - r.ppr(0)
}

/// TPR(S=1) − TPR(S=0); undefined when a group has no actual positives.
pub fn equality_of_opportunity(r: &GroupRates) -> Result<f64> {
    match (r.tpr(1), r.tpr(0)) {
        (Some(a), Some(b)) => Ok(a - b),
        _ => Err(Error::UndefinedMetric("eo")),
    }
}

/// FPR(S=1) − FPR(S=0); undefined when a group has no actual negatives.
pub fn predictive_equality(r: &GroupRates) -> Result<f64> {
    match (r.fpr(1), r.fpr(0)) {
        (Some(a), Some(b)) => Ok(a - b),
        _ => Err(Error::UndefinedMetric("pe")),
    }
}

pub fn accuracy(y_true: &[u8], y_pred: &[u8]) -> Result<f64> {
    if y_true.len() != y_pred.len() {
        return Err(Error::LengthMismatch(y_true.len(), y_pred.len()));
    }
    if y_true.is_empty() {
        return Err(Error::Empty("accuracy of empty vectors"));
    }
    let hits = y_true.iter().zip(y_pred).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / y_true.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Dp,
    Pe,
    Eo,
    Acc,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Dp, Metric::Pe, Metric::Eo, Metric::Acc];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Dp => "dp",
            Metric::Pe => "pe",
            Metric::Eo => "eo",
            Metric::Acc => "acc",
        }
    }

    pub fn is_fairness(self) -> bool {
        self != Metric::Acc
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dp" => Ok(Metric::Dp),
            "pe" => Ok(Metric::Pe),
            "eo" => Ok(Metric::Eo),
            "acc" => Ok(Metric::Acc),
            _ => Err(Error::InvalidArgument(format!("unknown metric `{s}`"))),
        }
    }
}

/// The four reported values for one prediction vector; `None` = undefined.
pub fn evaluate(y_true: &[u8], y_pred: &[u8], s: &[u8]) -> Result<[(Metric, Option<f64>); 4]> {
    let r = group_rates(y_true, y_pred, s)?;
    Ok([
        (Metric::Dp, Some(demographic_parity(&r))),
        (Metric::Pe, predictive_equality(&r).ok()),
        (Metric::Eo, equality_of_opportunity(&r).ok()),
        (Metric::Acc, Some(accuracy(y_true, y_pred)?)),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Direct enumeration, independent of the counting loop above.
    fn brute_rate(y: &[u8], p: &[u8], s: &[u8], g: u8, cond: Option<u8>) -> Option<f64> {
        let rows: Vec<usize> = (0..y.len())
            .filter(|&i| s[i] == g && cond.is_none_or(|c| y[i] == c))
            .collect();
        if rows.is_empty() {
            return None;
        }
        Some(rows.iter().filter(|&&i| p[i] == 1).count() as f64 / rows.len() as f64)
    }

    #[test]
    fn perfect_predictor() {
        let y = [1, 0, 1, 0, 1, 0];
        let s = [0, 0, 0, 1, 1, 1];
        let r = group_rates(&y, &y, &s).unwrap();
        for g in 0..2 {
            assert_eq!(r.tpr(g), Some(1.0));
            assert_eq!(r.fpr(g), Some(0.0));
        }
        assert_eq!(equality_of_opportunity(&r).unwrap(), 0.0);
        assert_eq!(predictive_equality(&r).unwrap(), 0.0);
    }

    #[test]
    fn all_positive_predictions() {
        let y = [1, 0, 1, 0];
        let p = [1, 1, 1, 1];
        let s = [0, 0, 1, 1];
        let r = group_rates(&y, &p, &s).unwrap();
        for g in 0..2 {
            assert_eq!(r.ppr(g), 1.0);
            assert_eq!(r.fpr(g), Some(1.0));
        }
    }

    #[test]
    fn twenty_row_fixture_matches_enumeration() {
        let y = [1, 0, 1, 1, 0, 0, 1, 0, 1, 1, 0, 1, 0, 0, 1, 1, 0, 1, 0, 0];
        let p = [1, 0, 0, 1, 1, 0, 1, 0, 1, 0, 0, 1, 1, 0, 1, 0, 0, 1, 1, 1];
        let s = [0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1];
        let r = group_rates(&y, &p, &s).unwrap();
        for g in 0..2u8 {
            let gi = g as usize;
            assert_eq!(Some(r.ppr(gi)), brute_rate(&y, &p, &s, g, None));
            assert_eq!(r.tpr(gi), brute_rate(&y, &p, &s, g, Some(1)));
            assert_eq!(r.fpr(gi), brute_rate(&y, &p, &s, g, Some(0)));
        }
        // group 0: 9 rows, ppr 5/9; group 1: 11 rows, ppr 6/11
        assert!((demographic_parity(&r) - (6.0 / 11.0 - 5.0 / 9.0)).abs() < 1e-15);
    }

    #[test]
    fn signed_differences_on_count_fixtures() {
        // ppr 0.8 vs 0.5
        let s = [1u8; 10].iter().chain([0u8; 10].iter()).copied().collect::<Vec<_>>();
        let y = vec![1u8; 20];
        let mut p = vec![0u8; 20];
        p[..8].fill(1);
        p[10..15].fill(1);
        let r = group_rates(&y, &p, &s).unwrap();
        assert!((demographic_parity(&r) - 0.3).abs() < 1e-15);

        // tpr 0.9 vs 0.6 with ten positives per group
        let mut p = vec![0u8; 20];
        p[..9].fill(1);
        p[10..16].fill(1);
        let r = group_rates(&y, &p, &s).unwrap();
        assert!((equality_of_opportunity(&r).unwrap() - 0.3).abs() < 1e-15);
        // no negatives anywhere → pe undefined
        assert!(matches!(predictive_equality(&r), Err(Error::UndefinedMetric("pe"))));
    }

    #[test]
    fn zero_positive_group_flags_eo() {
        let y = [0, 0, 1, 0];
        let p = [1, 0, 1, 0];
        let s = [0, 0, 1, 1];
        let r = group_rates(&y, &p, &s).unwrap();
        assert_eq!(r.tpr(0), None);
        assert!(equality_of_opportunity(&r).is_err());
        let vals = evaluate(&y, &p, &s).unwrap();
        assert_eq!(vals[2], (Metric::Eo, None));
    }

    #[test]
    fn errors() {
        assert!(matches!(group_rates(&[1], &[1, 0], &[0]), Err(Error::LengthMismatch(..))));
        assert!(matches!(group_rates(&[1, 0], &[1, 0], &[1, 1]), Err(Error::MissingGroup(0))));
        assert!(accuracy(&[], &[]).is_err());
    }

    #[test]
    fn accuracy_values() {
        assert_eq!(accuracy(&[1, 0, 1], &[1, 0, 1]).unwrap(), 1.0);
        assert_eq!(accuracy(&[1, 0, 1], &[0, 1, 0]).unwrap(), 0.0);
        let y = [1, 1, 1, 1, 1, 1, 1, 1, 1, 1];
        let p = [1, 1, 1, 1, 1, 1, 1, 0, 0, 0];
        assert_eq!(accuracy(&y, &p).unwrap(), 0.7);
    }

    fn fixture() -> impl Strategy<Value = (Vec<u8>, Vec<u8>, Vec<u8>)> {
        (4usize..80).prop_flat_map(|n| {
            (
                proptest::collection::vec(0u8..2, n),
                proptest::collection::vec(0u8..2, n),
                proptest::collection::vec(0u8..2, n),
            )
        })
    }

    proptest! {
        #[test]
        fn metrics_bounded_and_negate_under_flip((y, p, s) in fixture()) {
            prop_assume!(s.contains(&0) && s.contains(&1));
            let r = group_rates(&y, &p, &s).unwrap();
            let flipped: Vec<u8> = s.iter().map(|&g| 1 - g).collect();
            let rf = group_rates(&y, &p, &flipped).unwrap();
            prop_assert_eq!(rf, r.swapped());
            let dp = demographic_parity(&r);
            prop_assert!((-1.0..=1.0).contains(&dp));
            prop_assert_eq!(demographic_parity(&rf), -dp);
            if let Ok(eo) = equality_of_opportunity(&r) {
                prop_assert!((-1.0..=1.0).contains(&eo));
                prop_assert_eq!(equality_of_opportunity(&rf).unwrap(), -eo);
            }
            if let Ok(pe) = predictive_equality(&r) {
                prop_assert!((-1.0..=1.0).contains(&pe));
                prop_assert_eq!(predictive_equality(&rf).unwrap(), -pe);
            }
        }

        #[test]
        fn within_group_permutation_keeps_ppr((y, p, s) in fixture(), seed in any::<u64>()) {
            prop_assume!(s.contains(&0) && s.contains(&1));
            let r = group_rates(&y, &p, &s).unwrap();
            // rotate predictions among group-1 rows
            let idx: Vec<usize> = (0..s.len()).filter(|&i| s[i] == 1).collect();
            let k = (seed as usize) % idx.len();
            let mut p2 = p.clone();
            for (a, &i) in idx.iter().enumerate() {
                p2[i] = p[idx[(a + k) % idx.len()]];
            }
            let r2 = group_rates(&y, &p2, &s).unwrap();
            prop_assert_eq!(r.ppr(1), r2.ppr(1));
        }
    }
}
