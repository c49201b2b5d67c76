//! Balanced three-way fixed-effects ANOVA and classical one-way ANOVA.

use serde::{Deserialize, Serialize};

use super::special::f_sf;
use crate::error::{Error, Result};

/// Balanced three-factor layout. `cells` is indexed `a * (nb * nc) + b * nc + c`
/// and every cell must hold the same number of replicates (at least 2).
#[derive(Debug, Clone, PartialEq)]
pub struct FactorialLayout {
    pub factor_names: [String; 3],
    pub levels: [Vec<String>; 3],
    pub cells: Vec<Vec<f64>>,
}

impl FactorialLayout {
    pub fn new(factor_names: [&str; 3], levels: [Vec<String>; 3]) -> Self {
        let n_cells = levels.iter().map(Vec::len).product();
        Self {
            factor_names: factor_names.map(str::to_string),
            levels,
            cells: vec![Vec::new(); n_cells],
        }
    }

    pub fn shape(&self) -> [usize; 3] {
        [self.levels[0].len(), self.levels[1].len(), self.levels[2].len()]
    }

    pub fn cell_index(&self, a: usize, b: usize, c: usize) -> usize {
        let [_, nb, nc] = self.shape();
        a * nb * nc + b * nc + c
    }

    pub fn cell(&self, a: usize, b: usize, c: usize) -> &[f64] {
        &self.cells[self.cell_index(a, b, c)]
    }

    pub fn push(&mut self, a: usize, b: usize, c: usize, y: f64) {
        let i = self.cell_index(a, b, c);
        self.cells[i].push(y);
    }

    /// Replicates per cell, or an error if the layout is not balanced.
    pub fn replicates(&self) -> Result<usize> {
        let [na, nb, nc] = self.shape();
        if na < 2 || nb < 2 || nc < 2 {
            return Err(Error::Unbalanced("every factor needs at least two levels".into()));
        }
        if self.cells.len() != na * nb * nc {
            return Err(Error::MissingCells(format!("expected {} cells, found {}", na * nb * nc, self.cells.len())));
        }
        let r = self.cells[0].len();
        if let Some((i, c)) = self.cells.iter().enumerate().find(|(_, c)| c.len() != r) {
            return Err(Error::Unbalanced(format!(
                "cell {i} has {} observations, cell 0 has {r}",
                c.len()
            )));
        }
        if r < 2 {
            return Err(Error::Unbalanced(
                "at least two replicates per cell are required".into(),
            ));
        }
        Ok(r)
    }

    /// Residuals from the cell means, in cell order.
    pub fn residuals(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.cells.iter().map(Vec::len).sum());
        for cell in &self.cells {
            let m = super::mean(cell);
            out.extend(cell.iter().map(|y| y - m));
        }
        out
    }

    /// Groups the observations by the levels of one factor.
    pub fn collapse(&self, factor: usize) -> Vec<Vec<f64>> {
        let [na, nb, nc] = self.shape();
        let mut groups = vec![Vec::new(); self.levels[factor].len()];
        for a in 0..na {
            for b in 0..nb {
                for c in 0..nc {
                    let g = [a, b, c][factor];
                    groups[g].extend_from_slice(self.cell(a, b, c));
                }
            }
        }
        groups
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectRow {
    pub name: String,
    pub ss: f64,
    pub df: f64,
    pub ms: f64,
    pub f: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaTable {
    /// A, B, C, A*B, A*C, B*C, A*B*C in that order.
    pub effects: Vec<EffectRow>,
    pub residual_ss: f64,
    pub residual_df: f64,
    pub total_ss: f64,
}

impl AnovaTable {
    pub fn effect(&self, name: &str) -> Option<&EffectRow> {
        self.effects.iter().find(|e| e.name == name)
    }
}

/// Three-way ANOVA with all interactions on a balanced layout.
///
/// A constant response gives F = 0 and p = 1 for every effect. A layout whose
/// residual sum of squares is zero while some effect is not is rejected with
/// [`Error::ZeroResidualVariance`].
pub fn anova_three_way(layout: &FactorialLayout) -> Result<AnovaTable> {
    let r = layout.replicates()?;
    let [na, nb, nc] = layout.shape();
    let n = (na * nb * nc * r) as f64;
    let all: Vec<f64> = layout.cells.iter().flatten().copied().collect();
    if all.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite response".into()));
    }
    let grand = super::mean(&all);

    let cell_mean: Vec<f64> = layout.cells.iter().map(|c| super::mean(c)).collect();
    let cm = |a: usize, b: usize, c: usize| cell_mean[a * nb * nc + b * nc + c];

    let mut m_a = vec![0.0; na];
    let mut m_b = vec![0.0; nb];
    let mut m_c = vec![0.0; nc];
    let mut m_ab = vec![0.0; na * nb];
    let mut m_ac = vec![0.0; na * nc];
    let mut m_bc = vec![0.0; nb * nc];
    for a in 0..na {
        for b in 0..nb {
            for c in 0..nc {
                let v = cm(a, b, c);
                m_a[a] += v / (nb * nc) as f64;
                m_b[b] += v / (na * nc) as f64;
                m_c[c] += v / (na * nb) as f64;
                m_ab[a * nb + b] += v / nc as f64;
                m_ac[a * nc + c] += v / nb as f64;
                m_bc[b * nc + c] += v / na as f64;
            }
        }
    }

    let rf = r as f64;
    let sq = |x: f64| x * x;
    let ss_a: f64 = m_a.iter().map(|m| sq(m - grand)).sum::<f64>() * (nb * nc) as f64 * rf;
    let ss_b: f64 = m_b.iter().map(|m| sq(m - grand)).sum::<f64>() * (na * nc) as f64 * rf;
    let ss_c: f64 = m_c.iter().map(|m| sq(m - grand)).sum::<f64>() * (na * nb) as f64 * rf;
    let (mut ss_ab, mut ss_ac, mut ss_bc, mut ss_abc) = (0.0, 0.0, 0.0, 0.0);
    for a in 0..na {
        for b in 0..nb {
            ss_ab += sq(m_ab[a * nb + b] - m_a[a] - m_b[b] + grand);
        }
        for c in 0..nc {
            ss_ac += sq(m_ac[a * nc + c] - m_a[a] - m_c[c] + grand);
        }
    }
    for b in 0..nb {
        for c in 0..nc {
            ss_bc += sq(m_bc[b * nc + c] - m_b[b] - m_c[c] + grand);
        }
    }
    for a in 0..na {
        for b in 0..nb {
            for c in 0..nc {
                ss_abc += sq(cm(a, b, c) - m_ab[a * nb + b] - m_ac[a * nc + c] - m_bc[b * nc + c]
                    + m_a[a]
                    + m_b[b]
                    + m_c[c]
                    - grand);
            }
        }
    }
    ss_ab *= nc as f64 * rf;
    ss_ac *= nb as f64 * rf;
    ss_bc *= na as f64 * rf;
    ss_abc *= rf;

    let mut ss_e = 0.0;
    for (cell, m) in layout.cells.iter().zip(&cell_mean) {
        ss_e += cell.iter().map(|y| sq(y - m)).sum::<f64>();
    }
    let total_ss: f64 = all.iter().map(|y| sq(y - grand)).sum();
    let df_e = n - (na * nb * nc) as f64;

    let (da, db, dc) = ((na - 1) as f64, (nb - 1) as f64, (nc - 1) as f64);
    let [fa, fb, fc] = &layout.factor_names;
    let raw = [
        (fa.clone(), ss_a, da),
        (fb.clone(), ss_b, db),
        (fc.clone(), ss_c, dc),
        (format!("{fa}*{fb}"), ss_ab, da * db),
        (format!("{fa}*{fc}"), ss_ac, da * dc),
        (format!("{fb}*{fc}"), ss_bc, db * dc),
        (format!("{fa}*{fb}*{fc}"), ss_abc, da * db * dc),
    ];

    // Sums of squares at rounding level relative to the data are treated as zero.
    let scale = all.iter().map(|v| v.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let zero_tol = sq(scale) * n * 1e-24;
    let constant = total_ss <= zero_tol;
    if !constant && ss_e <= zero_tol {
        return Err(Error::ZeroResidualVariance);
    }
    let ms_e = ss_e / df_e;
    let mut effects = Vec::with_capacity(7);
    for (name, ss, df) in raw {
        let ms = ss / df;
        let (f, p) = if constant {
            (0.0, 1.0)
        } else {
            let f = ms / ms_e;
            (f, f_sf(f, df, df_e)?)
        };
        effects.push(EffectRow {
            name,
            ss,
            df,
            ms,
            f,
            p,
        });
    }
    Ok(AnovaTable {
        effects,
        residual_ss: ss_e,
        residual_df: df_e,
        total_ss,
    })
}

/// Result of a single F test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FTest {
    pub statistic: f64,
    pub df1: f64,
    pub df2: f64,
    pub p: f64,
}

/// Classical one-way ANOVA. Identical group means give F = 0 and p = 1;
/// zero within-group spread with distinct means gives F = ∞ and p = 0.
pub fn one_way_anova(groups: &[Vec<f64>]) -> Result<FTest> {
    let k = groups.len();
    if k < 2 {
        return Err(Error::SampleSize(k));
    }
    if let Some(i) = groups.iter().position(Vec::is_empty) {
        return Err(Error::DegenerateGroup(i));
    }
    let n: usize = groups.iter().map(Vec::len).sum();
    if n <= k {
        return Err(Error::SampleSize(n));
    }
    let all: Vec<f64> = groups.iter().flatten().copied().collect();
    let grand = super::mean(&all);
    let mut ss_b = 0.0;
    let mut ss_w = 0.0;
    for g in groups {
        let m = super::mean(g);
        ss_b += g.len() as f64 * (m - grand) * (m - grand);
        ss_w += g.iter().map(|y| (y - m) * (y - m)).sum::<f64>();
    }
    let df1 = (k - 1) as f64;
    let df2 = (n - k) as f64;
    let scale = all.iter().map(|v| v.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let zero_tol = scale * scale * n as f64 * 1e-24;
    let (statistic, p) = if ss_b <= zero_tol {
        (0.0, 1.0)
    } else if ss_w <= zero_tol {
        (f64::INFINITY, 0.0)
    } else {
        let f = (ss_b / df1) / (ss_w / df2);
        (f, f_sf(f, df1, df2)?)
    };
    Ok(FTest {
        statistic,
        df1,
        df2,
        p,
    })
}
