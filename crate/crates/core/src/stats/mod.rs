//! Statistics for the analysis stage: distribution functions, the three-way
//! ANOVA, its assumption checks and Welch's fallback, plus descriptive
//! helpers shared with the plots and summaries.

pub mod anova;
pub mod assumptions;
pub mod contingency;
pub mod special;

pub use anova::{anova_three_way, one_way_anova, AnovaTable, EffectRow, FTest, FactorialLayout};
pub use assumptions::{levene_test, shapiro_wilk, welch_anova};
pub use contingency::{chi_square_independence, ChiSquare};
pub use special::{f_cdf, f_sf};

pub fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        return f64::NAN;
    }
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample variance (n − 1 denominator).
pub fn variance(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return f64::NAN;
    }
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64
}

pub fn std_dev(x: &[f64]) -> f64 {
    variance(x).sqrt()
}

pub fn median(x: &[f64]) -> f64 {
    if x.is_empty() {
        return f64::NAN;
    }
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Quantile of sorted data using the lower order statistic at floor(q (n − 1)).
pub fn lower_quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let idx = (q * (sorted.len() - 1) as f64).floor() as usize;
    sorted[idx.min(sorted.len() - 1)]
}
