//! Assumption checks and the heteroscedastic fallback: Shapiro–Wilk,
//! Brown–Forsythe Levene and Welch's one-way ANOVA.

use std::f64::consts::PI;

use super::anova::{one_way_anova, FTest};
use super::special::{f_sf, normal_quantile, normal_sf};
use crate::error::{Error, Result};

/// Welch's heteroscedastic one-way ANOVA.
pub fn welch_anova(groups: &[Vec<f64>]) -> Result<FTest> {
    let k = groups.len();
    if k < 2 {
        return Err(Error::SampleSize(k));
    }
    let mut w = Vec::with_capacity(k);
    let mut means = Vec::with_capacity(k);
    let mut ns = Vec::with_capacity(k);
    for (i, g) in groups.iter().enumerate() {
        if g.len() < 2 {
            return Err(Error::DegenerateGroup(i));
        }
        let var = super::variance(g);
        if !(var > 0.0) {
            return Err(Error::DegenerateGroup(i));
        }
        ns.push(g.len() as f64);
        means.push(super::mean(g));
        w.push(g.len() as f64 / var);
    }
    let sw: f64 = w.iter().sum();
    let xw: f64 = w.iter().zip(&means).map(|(w, m)| w * m).sum::<f64>() / sw;
    let kf = k as f64;
    let a: f64 = w
        .iter()
        .zip(&means)
        .map(|(w, m)| w * (m - xw) * (m - xw))
        .sum::<f64>()
        / (kf - 1.0);
    let tmp: f64 = w
        .iter()
        .zip(&ns)
        .map(|(w, n)| (1.0 - w / sw).powi(2) / (n - 1.0))
        .sum();
    let b = 1.0 + 2.0 * (kf - 2.0) * tmp / (kf * kf - 1.0);
    let statistic = a / b;
    let df1 = kf - 1.0;
    let df2 = (kf * kf - 1.0) / (3.0 * tmp);
    let p = f_sf(statistic, df1, df2)?;
    Ok(FTest {
        statistic,
        df1,
        df2,
        p,
    })
}

/// Levene's test centred on group medians (Brown–Forsythe).
pub fn levene_test(groups: &[Vec<f64>]) -> Result<FTest> {
    if groups.len() < 2 {
        return Err(Error::SampleSize(groups.len()));
    }
    let z: Vec<Vec<f64>> = groups
        .iter()
        .enumerate()
        .map(|(i, g)| {
            if g.is_empty() {
                return Err(Error::DegenerateGroup(i));
            }
            let med = super::median(g);
            Ok(g.iter().map(|v| (v - med).abs()).collect())
        })
        .collect::<Result<_>>()?;
    one_way_anova(&z)
}

/// Shapiro–Wilk normality test (Royston's approximation), 3 ≤ n ≤ 5000.
pub fn shapiro_wilk(sample: &[f64]) -> Result<(f64, f64)> {
    let n = sample.len();
    if !(3..=5000).contains(&n) {
        return Err(Error::SampleSize(n));
    }
    if sample.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite value in sample".into()));
    }
    let mut x = sample.to_vec();
    x.sort_by(f64::total_cmp);
    let range = x[n - 1] - x[0];
    if !(range > 0.0) || range < 1e-10 * x[n - 1].abs().max(x[0].abs()) {
        return Err(Error::ZeroVariance);
    }

    let a = sw_coefficients(n);
    let xm = super::mean(&x);
    let mut num = 0.0;
    let mut ssq = 0.0;
    for (ai, xi) in a.iter().zip(&x) {
        num += ai * xi;
        ssq += (xi - xm) * (xi - xm);
    }
    let mut w = (num * num) / ssq;
    w = w.min(1.0);
    let w1 = 1.0 - w;

    if n == 3 {
        const PI6: f64 = 6.0 / PI;
        const STQR: f64 = PI / 3.0;
        let p = (PI6 * (w.sqrt().asin() - STQR)).max(0.0);
        return Ok((w, p.min(1.0)));
    }

    let nf = n as f64;
    let poly = |c: &[f64], x: f64| c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci);
    let p = if n <= 11 {
        let gamma = poly(&[-2.273, 0.459], nf);
        let m = poly(&[0.544, -0.39978, 0.025054, -6.714e-4], nf);
        let s = poly(&[1.3822, -0.77857, 0.062767, -0.0020322], nf).exp();
        let y = -(gamma - w1.ln()).ln();
        normal_sf((y - m) / s)
    } else {
        let xx = nf.ln();
        let m = poly(&[-1.5861, -0.31082, -0.083751, 0.0038915], xx);
        let s = poly(&[-0.4803, -0.082676, 0.0030302], xx).exp();
        normal_sf((w1.ln() - m) / s)
    };
    Ok((w, p))
}

/// Antisymmetric Shapiro–Wilk coefficients for the sorted sample.
fn sw_coefficients(n: usize) -> Vec<f64> {
    let nn2 = n / 2;
    let mut a = vec![0.0; n];
    if n == 3 {
        let v = std::f64::consts::FRAC_1_SQRT_2;
        a[0] = -v;
        a[2] = v;
        return a;
    }
    let poly = |c: &[f64], x: f64| c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci);
    const C1: [f64; 6] = [0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056];
    const C2: [f64; 6] = [0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633];
    let an25 = n as f64 + 0.25;
    let m: Vec<f64> = (1..=nn2)
        .map(|i| normal_quantile((i as f64 - 0.375) / an25))
        .collect();
    let summ2 = 2.0 * m.iter().map(|v| v * v).sum::<f64>();
    let ssumm2 = summ2.sqrt();
    let rsn = 1.0 / (n as f64).sqrt();
    let a1 = poly(&C1, rsn) - m[0] / ssumm2;
    let mut half = vec![0.0; nn2];
    if n > 5 {
        let a2 = -m[1] / ssumm2 + poly(&C2, rsn);
        let fac = ((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1])
            / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2))
            .sqrt();
        half[0] = a1;
        half[1] = a2;
        for i in 2..nn2 {
            half[i] = -m[i] / fac;
        }
    } else {
        let fac = ((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1)).sqrt();
        half[0] = a1;
        for i in 1..nn2 {
            half[i] = -m[i] / fac;
        }
    }
    // half[i] is the (negative) weight on the i-th smallest value
    for i in 0..nn2 {
        a[i] = half[i];
        a[n - 1 - i] = -half[i];
    }
    a
}
