//! Pearson chi-square test of independence on a contingency table.

use super::special::chi2_sf;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub df: f64,
    pub p: f64,
}

/// Pearson's test without continuity correction. Rows or columns with a zero
/// margin are rejected.
pub fn chi_square_independence(counts: &[Vec<usize>]) -> Result<ChiSquare> {
    let r = counts.len();
    let c = counts.first().map_or(0, Vec::len);
    if r < 2 || c < 2 || counts.iter().any(|row| row.len() != c) {
        return Err(Error::InvalidArgument(
            "contingency table must be rectangular and at least 2x2".into(),
        ));
    }
    let row_tot: Vec<f64> = counts.iter().map(|row| row.iter().sum::<usize>() as f64).collect();
    let col_tot: Vec<f64> = (0..c)
        .map(|j| counts.iter().map(|row| row[j]).sum::<usize>() as f64)
        .collect();
    if row_tot.iter().chain(&col_tot).any(|&m| m == 0.0) {
        return Err(Error::InvalidArgument("contingency table has an empty margin".into()));
    }
    let n: f64 = row_tot.iter().sum();
    let mut statistic = 0.0;
    for (i, row) in counts.iter().enumerate() {
        for (j, &o) in row.iter().enumerate() {
            let e = row_tot[i] * col_tot[j] / n;
            statistic += (o as f64 - e).powi(2) / e;
        }
    }
    let df = ((r - 1) * (c - 1)) as f64;
    Ok(ChiSquare {
        statistic,
        df,
        p: chi2_sf(statistic, df),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn independent_table_has_zero_statistic() {
        let t = chi_square_independence(&[vec![10, 20], vec![30, 60]]).unwrap();
        assert!(t.statistic.abs() < 1e-12 && (t.p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hand_computed_two_by_two() {
        // expected counts 15 everywhere, each cell off by 5: 4 * 25 / 15
        let t = chi_square_independence(&[vec![20, 10], vec![10, 20]]).unwrap();
        assert!((t.statistic - 100.0 / 15.0).abs() < 1e-12);
        assert_eq!(t.df, 1.0);
        assert!(chi_square_independence(&[vec![0, 0], vec![1, 2]]).is_err());
    }
}
