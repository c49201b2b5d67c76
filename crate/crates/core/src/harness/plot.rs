//! Boxplots of a results store as standalone SVG, with a JSON sidecar that
//! lists every drawn statistic.
//!
//! Fairness metrics are drawn as magnitudes (discrimination); accuracy as
//! is. Quartiles use the lower order statistic convention of the summaries;
//! whiskers reach the most extreme value within 1.5 IQR of the box. A red
//! reference line marks the smallest median: the lowest discrimination, or
//! the lowest accuracy.

use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::report::store_levels;
use super::store::FairnessRecord;
use super::{write_json, BaselineRecord};
use crate::classify::ModelKind;
use crate::error::{Error, Result};
use crate::fairness::Metric;
use crate::stats::{lower_quantile, mean};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Layout {
    /// One box per (handler, model), labelled `model.handler`, handlers outer.
    HandlerModel,
    /// One box per (mechanism, handler), labelled `handler.mechanism`,
    /// mechanisms outer.
    MechanismHandler,
}

impl fmt::Display for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Layout::HandlerModel => "handler-model",
            Layout::MechanismHandler => "mechanism-handler",
        })
    }
}

impl FromStr for Layout {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "handler-model" | "handler_model" => Ok(Layout::HandlerModel),
            "mechanism-handler" | "mechanism_handler" => Ok(Layout::MechanismHandler),
            _ => Err(Error::InvalidArgument(format!("unknown layout `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub label: String,
    pub n: usize,
    pub mean: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub whisker_low: f64,
    pub whisker_high: f64,
    pub outliers: Vec<f64>,
}

/// Baseline mean ± sd drawn behind the boxes of one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineBand {
    pub model: ModelKind,
    pub mean: f64,
    pub low: f64,
    pub high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotData {
    pub layout: Layout,
    pub metric: Metric,
    pub sensitive: String,
    /// True when values are drawn as magnitudes.
    pub absolute: bool,
    pub boxes: Vec<BoxStats>,
    pub reference_line: f64,
    pub baseline: Vec<BaselineBand>,
}

pub fn box_stats(label: &str, values: &[f64]) -> BoxStats {
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    let q1 = lower_quantile(&s, 0.25);
    let median = lower_quantile(&s, 0.5);
    let q3 = lower_quantile(&s, 0.75);
    let iqr = q3 - q1;
    let (lo, hi) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    let inside: Vec<f64> = s.iter().copied().filter(|v| (lo..=hi).contains(v)).collect();
    BoxStats {
        label: label.to_string(),
        n: s.len(),
        mean: mean(&s),
        q1,
        median,
        q3,
        whisker_low: inside.first().copied().unwrap_or(q1),
        whisker_high: inside.last().copied().unwrap_or(q3),
        outliers: s.iter().copied().filter(|v| !(lo..=hi).contains(v)).collect(),
    }
}

/// Computes the boxes of one plot.
pub fn plot_data(
    records: &[FairnessRecord],
    layout: Layout,
    metric: Metric,
    sensitive: &str,
    baseline: Option<&[BaselineRecord]>,
) -> Result<PlotData> {
    let absolute = metric.is_fairness();
    let [mechs, handlers, models] = store_levels(records);
    let short = |m: &str| m.parse::<ModelKind>().map(ModelKind::short_label).unwrap_or("?");
    // (label, selector) in drawing order
    let mut cells: Vec<(String, Box<dyn Fn(&FairnessRecord) -> bool>)> = Vec::new();
    match layout {
        Layout::HandlerModel => {
            for h in &handlers {
                for m in &models {
                    let (h2, m2) = (h.clone(), m.clone());
                    cells.push((
                        format!("{}.{h}", short(m)),
                        Box::new(move |r: &FairnessRecord| r.handler == h2 && r.model.as_str() == m2),
                    ));
                }
            }
        }
        Layout::MechanismHandler => {
            for mech in &mechs {
                for h in &handlers {
                    let (m2, h2) = (mech.clone(), h.clone());
                    cells.push((
                        format!("{h}.{mech}"),
                        Box::new(move |r: &FairnessRecord| r.mechanism.as_str() == m2 && r.handler == h2),
                    ));
                }
            }
        }
    }
    let mut boxes = Vec::with_capacity(cells.len());
    for (label, sel) in &cells {
        let vals: Vec<f64> = records
            .iter()
            .filter(|r| r.metric == metric && r.sensitive == sensitive && sel(r))
            .filter_map(|r| r.value)
            .map(|v| if absolute { v.abs() } else { v })
            .collect();
        if vals.is_empty() {
            return Err(Error::MissingCells(format!("no defined {metric} values for {label} ({sensitive})")));
        }
        boxes.push(box_stats(label, &vals));
    }
    let reference_line = boxes.iter().map(|b| b.median).fold(f64::INFINITY, f64::min);
    let mut bands = Vec::new();
    if let (Some(base), Layout::HandlerModel) = (baseline, layout) {
        for m in &models {
            let Ok(model) = m.parse::<ModelKind>() else { continue };
            let rec = base
                .iter()
                .find(|b| b.model == model && b.metric == metric && b.sensitive == sensitive);
            if let Some(b) = rec {
                let (mu, sd) = if absolute { (b.abs_mean, b.abs_sd) } else { (b.mean, b.sd) };
                if let Some(mu) = mu {
                    let sd = sd.unwrap_or(0.0);
                    bands.push(BaselineBand { model, mean: mu, low: mu - sd, high: mu + sd });
                }
            }
        }
    }
    Ok(PlotData {
        layout,
        metric,
        sensitive: sensitive.to_string(),
        absolute,
        boxes,
        reference_line,
        baseline: bands,
    })
}

const SLOT: f64 = 48.0;
const LEFT: f64 = 70.0;
const TOP: f64 = 40.0;
const PLOT_H: f64 = 300.0;
const BOTTOM: f64 = 90.0;

/// Self-contained SVG drawing of [`PlotData`].
pub fn render_svg(d: &PlotData) -> String {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for b in &d.boxes {
        lo = lo.min(b.whisker_low).min(b.outliers.iter().copied().fold(f64::INFINITY, f64::min));
        hi = hi.max(b.whisker_high).max(b.outliers.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    }
    for band in &d.baseline {
        lo = lo.min(band.low);
        hi = hi.max(band.high);
    }
    if hi - lo < 1e-12 {
        lo -= 0.5;
        hi += 0.5;
    }
    let pad = 0.05 * (hi - lo);
    let (lo, hi) = (lo - pad, hi + pad);
    let y = |v: f64| TOP + PLOT_H * (hi - v) / (hi - lo);
    let width = LEFT + SLOT * d.boxes.len() as f64 + 20.0;
    let height = TOP + PLOT_H + BOTTOM;
    let x_mid = |k: usize| LEFT + SLOT * (k as f64 + 0.5);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let ylabel = if d.absolute { format!("|{}|", d.metric) } else { d.metric.to_string() };
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="20" text-anchor="middle" font-size="13">{} ({}), {}</text>"#,
        width / 2.0,
        ylabel,
        d.sensitive,
        d.layout
    );
    // axes and ticks
    let _ = writeln!(
        s,
        r#"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{:.1}" stroke="black"/>"#,
        TOP + PLOT_H
    );
    for t in 0..=5 {
        let v = lo + (hi - lo) * t as f64 / 5.0;
        let yy = y(v);
        let _ = writeln!(
            s,
            r##"<line x1="{:.1}" y1="{yy:.1}" x2="{LEFT}" y2="{yy:.1}" stroke="black"/><text x="{:.1}" y="{:.1}" text-anchor="end">{v:.3}</text>"##,
            LEFT - 4.0,
            LEFT - 6.0,
            yy + 4.0
        );
    }
    // baseline bands
    for band in &d.baseline {
        for (k, b) in d.boxes.iter().enumerate() {
            if b.label.starts_with(&format!("{}.", band.model.short_label())) {
                let _ = writeln!(
                    s,
                    r##"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="blue" fill-opacity="0.15"/><line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="blue"/>"##,
                    x_mid(k) - SLOT / 2.0,
                    y(band.high),
                    SLOT,
                    (y(band.low) - y(band.high)).max(0.5),
                    x_mid(k) - SLOT / 2.0,
                    y(band.mean),
                    x_mid(k) + SLOT / 2.0,
                    y(band.mean)
                );
            }
        }
    }
    // boxes
    let half = SLOT * 0.3;
    for (k, b) in d.boxes.iter().enumerate() {
        let xm = x_mid(k);
        let _ = writeln!(
            s,
            r#"<line x1="{xm:.1}" y1="{:.1}" x2="{xm:.1}" y2="{:.1}" stroke="black"/>"#,
            y(b.whisker_high),
            y(b.q3)
        );
        let _ = writeln!(
            s,
            r#"<line x1="{xm:.1}" y1="{:.1}" x2="{xm:.1}" y2="{:.1}" stroke="black"/>"#,
            y(b.q1),
            y(b.whisker_low)
        );
        for w in [b.whisker_low, b.whisker_high] {
            let _ = writeln!(
                s,
                r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="black"/>"#,
                xm - half / 2.0,
                y(w),
                xm + half / 2.0,
                y(w)
            );
        }
        let _ = writeln!(
            s,
            r##"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="#dddddd" stroke="black"/>"##,
            xm - half,
            y(b.q3),
            2.0 * half,
            (y(b.q1) - y(b.q3)).max(0.5)
        );
        let _ = writeln!(
            s,
            r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="black" stroke-width="2"/>"#,
            xm - half,
            y(b.median),
            xm + half,
            y(b.median)
        );
        for o in &b.outliers {
            let _ = writeln!(s, r#"<circle cx="{xm:.1}" cy="{:.1}" r="2" fill="none" stroke="black"/>"#, y(*o));
        }
        let ly = TOP + PLOT_H + 12.0;
        let _ = writeln!(
            s,
            r#"<text x="{xm:.1}" y="{ly:.1}" text-anchor="end" transform="rotate(-45 {xm:.1} {ly:.1})">{}</text>"#,
            b.label
        );
    }
    let _ = writeln!(
        s,
        r#"<line x1="{LEFT}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="red" stroke-dasharray="4 3"/>"#,
        y(d.reference_line),
        width - 20.0,
        y(d.reference_line)
    );
    s.push_str("</svg>\n");
    s
}

/// Writes `<stem>.svg` and `<stem>.json`.
pub fn emit_boxplots(
    records: &[FairnessRecord],
    layout: Layout,
    metric: Metric,
    sensitive: &str,
    baseline: Option<&[BaselineRecord]>,
    stem: impl AsRef<Path>,
) -> Result<PlotData> {
    let stem = stem.as_ref();
    let data = plot_data(records, layout, metric, sensitive, baseline)?;
    if let Some(dir) = stem.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let svg = stem.with_extension("svg");
    std::fs::write(&svg, render_svg(&data)).map_err(|e| Error::io(&svg, e))?;
    write_json(stem.with_extension("json"), &data)?;
    Ok(data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ampute::Mechanism;
    use crate::harness::store::HANDLER_ORDER;

    fn full_store() -> Vec<FairnessRecord> {
        let mut out = Vec::new();
        for i in 0..4 {
            for mech in Mechanism::ALL {
                for h in HANDLER_ORDER {
                    for model in ModelKind::ALL {
                        out.push(FairnessRecord {
                            iteration: i,
                            mechanism: mech,
                            handler: h.into(),
                            model,
                            sensitive: "sex".into(),
                            metric: Metric::Dp,
                            value: Some(-0.1 * (i as f64 + 1.0)),
                        });
                    }
                }
            }
        }
        out
    }

    #[test]
    fn box_counts_and_order() {
        let recs = full_store();
        let hm = plot_data(&recs, Layout::HandlerModel, Metric::Dp, "sex", None).unwrap();
        assert_eq!(hm.boxes.len(), 16);
        let labels: Vec<&str> = hm.boxes.iter().take(5).map(|b| b.label.as_str()).collect();
        assert_eq!(labels, ["lr.ld", "rf.ld", "b.ld", "svm.ld", "lr.mode"]);
        let mh = plot_data(&recs, Layout::MechanismHandler, Metric::Dp, "sex", None).unwrap();
        assert_eq!(mh.boxes.len(), 12);
        let labels: Vec<&str> = mh.boxes.iter().take(5).map(|b| b.label.as_str()).collect();
        assert_eq!(labels, ["ld.MCAR", "mode.MCAR", "reg.MCAR", "knn.MCAR", "ld.MAR"]);
        assert!(hm.boxes.iter().all(|b| b.median > 0.0));
    }

    #[test]
    fn single_cell_reference_line() {
        let recs: Vec<FairnessRecord> = full_store()
            .into_iter()
            .filter(|r| r.mechanism == Mechanism::Mcar && r.handler == "ld" && r.model == ModelKind::Lr)
            .collect();
        let d = plot_data(&recs, Layout::HandlerModel, Metric::Dp, "sex", None).unwrap();
        assert_eq!(d.boxes.len(), 1);
        assert_eq!(d.reference_line, d.boxes[0].median);
        let svg = render_svg(&d);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("stroke=\"red\"").count(), 1);
    }

    #[test]
    fn accuracy_reference_line_is_smallest_median() {
        let recs: Vec<FairnessRecord> = full_store()
            .into_iter()
            .filter(|r| r.mechanism == Mechanism::Mcar)
            .map(|mut r| {
                r.metric = Metric::Acc;
                r.value = Some(if r.model == ModelKind::Svm { 0.6 } else { 0.8 });
                r
            })
            .collect();
        let d = plot_data(&recs, Layout::HandlerModel, Metric::Acc, "sex", None).unwrap();
        assert!(!d.absolute);
        assert_eq!(d.reference_line, 0.6);
    }

    #[test]
    fn whiskers_and_outliers() {
        let b = box_stats("x", &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 100.0]);
        assert_eq!((b.q1, b.median, b.q3), (3.0, 5.0, 7.0));
        assert_eq!(b.whisker_high, 8.0);
        assert_eq!(b.whisker_low, 1.0);
        assert_eq!(b.outliers, vec![100.0]);
    }

    #[test]
    fn missing_cells_rejected() {
        let recs = full_store();
        assert!(plot_data(&recs, Layout::HandlerModel, Metric::Acc, "sex", None).is_err());
    }

    #[test]
    fn baseline_bands_follow_models() {
        let recs = full_store();
        let base: Vec<BaselineRecord> = ModelKind::ALL
            .into_iter()
            .map(|model| BaselineRecord {
                sensitive: "sex".into(),
                model,
                metric: Metric::Dp,
                n: 4,
                undefined: 0,
                mean: Some(-0.2),
                sd: Some(0.05),
                abs_mean: Some(0.2),
                abs_sd: Some(0.05),
            })
            .collect();
        let d = plot_data(&recs, Layout::HandlerModel, Metric::Dp, "sex", Some(&base)).unwrap();
        assert_eq!(d.baseline.len(), 4);
        assert!((d.baseline[0].low - 0.15).abs() < 1e-12);
        assert!(render_svg(&d).contains("fill=\"blue\""));
    }
}
