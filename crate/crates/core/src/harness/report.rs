//! Factorial ANOVA report over a results store.
//!
//! One section per (metric, sensitive variant). The mechanism × handler ×
//! model layout is checked for normality of residuals (Shapiro–Wilk) and
//! homogeneity of cell variances (Brown–Forsythe Levene) at α = 0.05. When
//! homogeneity is rejected, each main effect is tested with Welch's ANOVA on
//! the layout collapsed to that factor and marked with †; interactions
//! always come from the classical ANOVA. Iterations where any cell of the
//! section is undefined are dropped from that section, keeping it balanced.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use super::store::{FairnessRecord, HANDLER_ORDER};
use super::write_json;
use crate::ampute::Mechanism;
use crate::classify::ModelKind;
use crate::error::{Error, Result};
use crate::fairness::Metric;
use crate::stats::{anova_three_way, levene_test, shapiro_wilk, welch_anova, FTest, FactorialLayout};

pub const ALPHA: f64 = 0.05;
/// Largest residual sample passed to the normality test.
pub const SHAPIRO_MAX: usize = 5000;
pub const FACTOR_NAMES: [&str; 3] = ["mdm", "imp", "mod"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    Anova,
    Welch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub effect: String,
    pub statistic: f64,
    pub df1: f64,
    pub df2: f64,
    pub p: f64,
    pub stars: String,
    /// True when the row comes from Welch's ANOVA.
    pub welch: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalityTest {
    pub w: f64,
    pub p: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSection {
    pub metric: Metric,
    pub sensitive: String,
    pub replicates: usize,
    pub excluded_iterations: Vec<usize>,
    pub normality: Option<NormalityTest>,
    pub homoscedasticity: Option<FTest>,
    pub route: Route,
    pub rows: Vec<ReportRow>,
    pub notes: Vec<String>,
}

pub fn stars(p: f64) -> &'static str {
    if p < 0.001 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        ""
    }
}

/// Factor levels present in the store, in canonical order.
pub fn store_levels(records: &[FairnessRecord]) -> [Vec<String>; 3] {
    let mechs: BTreeSet<Mechanism> = records.iter().map(|r| r.mechanism).collect();
    let models: BTreeSet<ModelKind> = records.iter().map(|r| r.model).collect();
    let mut handlers: Vec<String> = HANDLER_ORDER
        .iter()
        .filter(|h| records.iter().any(|r| r.handler == **h))
        .map(|h| h.to_string())
        .collect();
    for r in records {
        if !handlers.contains(&r.handler) {
            handlers.push(r.handler.clone());
        }
    }
    [
        mechs.iter().map(|m| m.as_str().to_string()).collect(),
        handlers,
        models.iter().map(|m| m.as_str().to_string()).collect(),
    ]
}

fn first_appearance<T: PartialEq + Clone>(it: impl Iterator<Item = T>) -> Vec<T> {
    let mut out = Vec::new();
    for x in it {
        if !out.contains(&x) {
            out.push(x);
        }
    }
    out
}

/// Builds the balanced layout of one (metric, sensitive) pair. Returns the
/// layout and the iterations dropped for undefined values. A cell without
/// any record for some iteration, or with two, is an error.
pub fn build_layout(
    records: &[FairnessRecord],
    metric: Metric,
    sensitive: &str,
    levels: &[Vec<String>; 3],
) -> Result<(FactorialLayout, Vec<usize>)> {
    let idx = |list: &Vec<String>, v: &str| list.iter().position(|x| x == v);
    let mut values: HashMap<(usize, usize), Option<f64>> = HashMap::new();
    let n_cells = levels.iter().map(Vec::len).product::<usize>();
    let mut layout = FactorialLayout::new(FACTOR_NAMES, levels.clone());
    let mut iterations = BTreeSet::new();
    for r in records.iter().filter(|r| r.metric == metric && r.sensitive == sensitive) {
        let (Some(a), Some(b), Some(c)) = (
            idx(&levels[0], r.mechanism.as_str()),
            idx(&levels[1], &r.handler),
            idx(&levels[2], r.model.as_str()),
        ) else {
            continue;
        };
        let cell = layout.cell_index(a, b, c);
        if values.insert((r.iteration, cell), r.value).is_some() {
            return Err(Error::Unbalanced(format!(
                "duplicate record for iteration {} cell {}/{}/{}",
                r.iteration, r.mechanism, r.handler, r.model
            )));
        }
        iterations.insert(r.iteration);
    }
    let mut excluded = Vec::new();
    for &i in &iterations {
        let mut row = Vec::with_capacity(n_cells);
        for cell in 0..n_cells {
            match values.get(&(i, cell)) {
                None => {
                    return Err(Error::MissingCells(format!(
                        "{metric}/{sensitive}: iteration {i} has no record for cell {cell}"
                    )))
                }
                Some(v) => row.push(*v),
            }
        }
        if row.iter().any(Option::is_none) {
            excluded.push(i);
            continue;
        }
        for (cell, v) in row.into_iter().enumerate() {
            layout.cells[cell].push(v.unwrap());
        }
    }
    Ok((layout, excluded))
}

/// Tests and effect rows for one layout.
pub fn analyse_layout(layout: &FactorialLayout) -> Result<(Option<NormalityTest>, Option<FTest>, Route, Vec<ReportRow>, Vec<String>)> {
    let mut notes = Vec::new();
    let table = anova_three_way(layout)?;
    let resid = layout.residuals();
    let sample = &resid[..resid.len().min(SHAPIRO_MAX)];
    let normality = match shapiro_wilk(sample) {
        Ok((w, p)) => Some(NormalityTest { w, p, n: sample.len() }),
        Err(e) => {
            notes.push(format!("normality test unavailable: {e}"));
            None
        }
    };
    let homo = match levene_test(&layout.cells) {
        Ok(t) => Some(t),
        Err(e) => {
            notes.push(format!("homoscedasticity test unavailable: {e}"));
            None
        }
    };
    let route = if homo.is_some_and(|t| t.p < ALPHA) { Route::Welch } else { Route::Anova };
    let mut rows: Vec<ReportRow> = table
        .effects
        .iter()
        .map(|e| ReportRow {
            effect: e.name.clone(),
            statistic: e.f,
            df1: e.df,
            df2: table.residual_df,
            p: e.p,
            stars: stars(e.p).to_string(),
            welch: false,
        })
        .collect();
    if route == Route::Welch {
        for (f, row) in rows.iter_mut().take(3).enumerate() {
            match welch_anova(&layout.collapse(f)) {
                Ok(t) => {
                    *row = ReportRow {
                        effect: row.effect.clone(),
                        statistic: t.statistic,
                        df1: t.df1,
                        df2: t.df2,
                        p: t.p,
                        stars: stars(t.p).to_string(),
                        welch: true,
                    }
                }
                Err(e) => notes.push(format!("Welch test for {} unavailable ({e}); classical row kept", row.effect)),
            }
        }
    }
    Ok((normality, homo, route, rows, notes))
}

/// Analyses every (metric, sensitive) pair of the store.
pub fn analyse(records: &[FairnessRecord]) -> Result<Vec<ReportSection>> {
    if records.is_empty() {
        return Err(Error::Empty("results store"));
    }
    let levels = store_levels(records);
    let metrics: BTreeSet<Metric> = records.iter().map(|r| r.metric).collect();
    let sensitives = first_appearance(records.iter().map(|r| r.sensitive.clone()));
    let mut out = Vec::new();
    for s in &sensitives {
        for &m in &metrics {
            let (layout, excluded) = build_layout(records, m, s, &levels)?;
            if !excluded.is_empty() {
                warn!("{m}/{s}: {} iterations with undefined values excluded", excluded.len());
            }
            let replicates = layout.replicates()?;
            let mut section = ReportSection {
                metric: m,
                sensitive: s.clone(),
                replicates,
                excluded_iterations: excluded,
                normality: None,
                homoscedasticity: None,
                route: Route::Anova,
                rows: Vec::new(),
                notes: Vec::new(),
            };
            match analyse_layout(&layout) {
                Ok((normality, homo, route, rows, notes)) => {
                    section.normality = normality;
                    section.homoscedasticity = homo;
                    section.route = route;
                    section.rows = rows;
                    section.notes = notes;
                }
                Err(e) => section.notes.push(format!("analysis failed: {e}")),
            }
            out.push(section);
        }
    }
    Ok(out)
}

fn fmt_p(p: f64) -> String {
    format!("{p:.4}")
}

/// Aligned text rendering: one block per section with the 7 effect rows.
pub fn render_text(sections: &[ReportSection]) -> String {
    let mut s = String::new();
    for sec in sections {
        s.push_str(&format!(
            "== {} | sensitive={} | replicates={} | route={} ==\n",
            sec.metric,
            sec.sensitive,
            sec.replicates,
            match sec.route {
                Route::Anova => "anova",
                Route::Welch => "welch",
            }
        ));
        if !sec.excluded_iterations.is_empty() {
            s.push_str(&format!("excluded iterations: {:?}\n", sec.excluded_iterations));
        }
        if let Some(n) = &sec.normality {
            s.push_str(&format!("shapiro-wilk: W={:.4} p={} (n={})\n", n.w, fmt_p(n.p), n.n));
        }
        if let Some(h) = &sec.homoscedasticity {
            s.push_str(&format!("levene: F={:.4} p={}\n", h.statistic, fmt_p(h.p)));
        }
        s.push_str(&format!("{:<12} {:>12} {:>8} {:>10} {:>8} {:<4}\n", "effect", "F", "df1", "df2", "p", ""));
        for r in &sec.rows {
            let mark = format!("{}{}", r.stars, if r.welch { "†" } else { "" });
            s.push_str(&format!(
                "{:<12} {:>12.4} {:>8.2} {:>10.2} {:>8} {:<4}\n",
                r.effect,
                r.statistic,
                r.df1,
                r.df2,
                fmt_p(r.p),
                mark
            ));
        }
        for n in &sec.notes {
            s.push_str(&format!("note: {n}\n"));
        }
        s.push('\n');
    }
    s.push_str("* p<0.05, ** p<0.01, *** p<0.001; † Welch ANOVA\n");
    s
}

/// Writes `anova_report.txt` and `anova_report.json` into `dir`.
pub fn emit_anova_report(records: &[FairnessRecord], dir: impl AsRef<Path>) -> Result<Vec<ReportSection>> {
    let dir = dir.as_ref();
    let sections = analyse(records)?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let txt = dir.join("anova_report.txt");
    std::fs::write(&txt, render_text(&sections)).map_err(|e| Error::io(&txt, e))?;
    write_json(dir.join("anova_report.json"), &sections)?;
    Ok(sections)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn store(f: impl Fn(usize, usize, usize, usize) -> Option<f64>, iterations: usize) -> Vec<FairnessRecord> {
        let mut out = Vec::new();
        for i in 0..iterations {
            for (a, mech) in Mechanism::ALL.into_iter().enumerate() {
                for (b, h) in HANDLER_ORDER.iter().enumerate() {
                    for (c, model) in ModelKind::ALL.into_iter().enumerate() {
                        out.push(FairnessRecord {
                            iteration: i,
                            mechanism: mech,
                            handler: h.to_string(),
                            model,
                            sensitive: "sex".into(),
                            metric: Metric::Dp,
                            value: f(i, a, b, c),
                        });
                    }
                }
            }
        }
        out
    }

    fn noise(i: usize, a: usize, b: usize, c: usize) -> f64 {
        let x = ((i * 7919 + a * 104_729 + b * 1_299_709 + c * 15_485_863) % 10_007) as f64 / 10_007.0;
        (x * 12.9898).sin() * 0.01
    }

    #[test]
    fn table_shaped_rows() {
        let s = analyse(&store(|i, a, b, c| Some(noise(i, a, b, c)), 5)).unwrap();
        assert_eq!(s.len(), 1);
        let names: Vec<&str> = s[0].rows.iter().map(|r| r.effect.as_str()).collect();
        assert_eq!(names, ["mdm", "imp", "mod", "mdm*imp", "mdm*mod", "imp*mod", "mdm*imp*mod"]);
        assert_eq!(s[0].replicates, 5);
        let text = render_text(&s);
        assert!(text.contains("mdm*imp*mod"));
    }

    #[test]
    fn injected_handler_effect_is_starred() {
        let s = analyse(&store(|i, a, b, c| Some(noise(i, a, b, c) + 0.05 * b as f64), 6)).unwrap();
        let row = |n: &str| s[0].rows.iter().find(|r| r.effect == n).unwrap().clone();
        assert_eq!(row("imp").stars, "***");
        for n in ["mdm*imp", "mdm*mod", "imp*mod", "mdm*imp*mod"] {
            assert!(row(n).p > 0.05, "{n}");
        }
    }

    #[test]
    fn undefined_iterations_are_dropped_whole() {
        let recs = store(|i, a, b, c| if i == 2 && a == 1 && b == 3 { None } else { Some(noise(i, a, b, c)) }, 5);
        let s = analyse(&recs).unwrap();
        assert_eq!(s[0].excluded_iterations, vec![2]);
        assert_eq!(s[0].replicates, 4);
    }

    #[test]
    fn silent_holes_are_rejected() {
        let mut recs = store(|i, a, b, c| Some(noise(i, a, b, c)), 3);
        recs.remove(10);
        assert!(matches!(analyse(&recs), Err(Error::MissingCells(_))));
    }

    #[test]
    fn heteroscedastic_layout_routes_to_welch() {
        let recs = store(|i, a, b, c| Some(noise(i, a, b, c) * if c == 3 { 40.0 } else { 1.0 }), 10);
        let s = analyse(&recs).unwrap();
        assert_eq!(s[0].route, Route::Welch);
        assert!(s[0].rows[..3].iter().all(|r| r.welch));
        assert!(s[0].rows[3..].iter().all(|r| !r.welch));
        assert!(render_text(&s).contains('†'));
        assert_eq!(analyse(&recs).unwrap(), s);
    }

    #[test]
    fn star_thresholds() {
        assert_eq!(stars(0.0009), "***");
        assert_eq!(stars(0.005), "**");
        assert_eq!(stars(0.04), "*");
        assert_eq!(stars(0.05), "");
    }
}
