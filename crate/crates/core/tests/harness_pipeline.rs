//! End-to-end harness runs on small synthetic experiments.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng as _;

use fairmiss::ampute::Mechanism;
use fairmiss::classify::{HyperGrid, ModelKind};
use fairmiss::datasets::DatasetId;
use fairmiss::fairness::Metric;
use fairmiss::harness::plot::{emit_boxplots, Layout};
use fairmiss::harness::report::emit_anova_report;
use fairmiss::harness::{load_records, run_baseline, run_experiment, write_run, ExperimentConfig};
use fairmiss::rng::stream;

const BASELINE_MIN_ACCURACY: f64 = 0.99;

fn fast_grid() -> HyperGrid {
    HyperGrid {
        lr_lambda: vec![0.0, 0.1],
        rf_trees: vec![30],
        rf_max_depth: vec![Some(6)],
        boost_trees: vec![30],
        boost_depth: vec![2],
        svm_c: vec![1.0],
        svm_gamma_per_feature: vec![1.0],
        ..HyperGrid::default()
    }
}

fn small(out: &Path) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(DatasetId::Synthetic, None);
    c.iterations = Some(3);
    c.synthetic_rows = 240;
    c.folds = 3;
    c.grids = fast_grid();
    c.out_dir = out.to_path_buf();
    c
}

/// Label fully determined by `x1` with a wide margin.
fn write_separable(path: &Path, n: usize) {
    let mut rng = stream(11);
    let mut s = String::from("x1,x2,c,s,y\n");
    for i in 0..n {
        let y = i % 2;
        let x1 = if y == 1 { rng.random_range(1.0..3.0) } else { rng.random_range(-3.0..-1.0) };
        let x2: f64 = rng.random_range(-1.0..1.0);
        let c = ["low", "mid", "high"][rng.random_range(0..3)];
        let g = u8::from(rng.random_bool(0.5));
        writeln!(s, "{x1},{x2},{c},{g},{y}").unwrap();
    }
    std::fs::write(path, s).unwrap();
}

#[test]
fn record_layout_and_order() {
    let dir = tempfile::tempdir().unwrap();
    let c = small(dir.path());
    let out = run_experiment(&c).unwrap();
    assert!(out.failures.is_empty());
    let expected = 3 * Mechanism::ALL.len() * 4 * ModelKind::ALL.len() * Metric::ALL.len();
    assert_eq!(out.records.len(), expected);
    let mut prev = None;
    for r in &out.records {
        let key = (r.iteration, r.mechanism as usize);
        if let Some(p) = prev {
            assert!(key >= p, "records out of order");
        }
        prev = Some(key);
        if r.metric == Metric::Acc {
            let v = r.value.unwrap();
            assert!((0.0..=1.0).contains(&v));
        }
    }
}

#[test]
fn same_seed_same_bytes_and_round_trip() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ca = small(a.path());
    let cb = small(b.path());
    let out = run_experiment(&ca).unwrap();
    write_run(&ca, &out).unwrap();
    write_run(&cb, &run_experiment(&cb).unwrap()).unwrap();
    let bytes_a = std::fs::read(a.path().join("results.csv")).unwrap();
    let bytes_b = std::fs::read(b.path().join("results.csv")).unwrap();
    assert_eq!(bytes_a, bytes_b);
    assert_eq!(load_records(a.path().join("results.csv")).unwrap(), out.records);
    for f in ["failures.json", "summary.json", "config.json"] {
        assert!(a.path().join(f).exists(), "{f} missing");
    }
    let resolved = ExperimentConfig::from_path(a.path().join("config.json")).unwrap();
    assert_eq!(resolved.iterations, Some(3));

    let mut other = small(b.path());
    other.seed = 1;
    let moved = run_experiment(&other).unwrap();
    assert_ne!(moved.records, out.records);
}

#[test]
fn report_and_plot_from_results() {
    let dir = tempfile::tempdir().unwrap();
    let c = small(dir.path());
    let out = run_experiment(&c).unwrap();
    write_run(&c, &out).unwrap();
    let records = load_records(dir.path().join("results.csv")).unwrap();
    let sections = emit_anova_report(&records, dir.path()).unwrap();
    assert_eq!(sections.len(), Metric::ALL.len());
    assert!(dir.path().join("anova_report.txt").exists());
    assert!(dir.path().join("anova_report.json").exists());

    let base = run_baseline(&c).unwrap();
    let stem = dir.path().join("plots/dp");
    let data = emit_boxplots(&records, Layout::HandlerModel, Metric::Dp, "s", Some(&base), &stem).unwrap();
    assert_eq!(data.boxes.len(), 4 * ModelKind::ALL.len());
    assert!(data.boxes.iter().all(|b| b.n == 3 * Mechanism::ALL.len()));
    let min_median = data.boxes.iter().map(|b| b.median).fold(f64::INFINITY, f64::min);
    assert_eq!(data.reference_line, min_median);
    assert_eq!(data.baseline.len(), ModelKind::ALL.len());
    let svg = std::fs::read_to_string(stem.with_extension("svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    assert!(stem.with_extension("json").exists());

    let data = emit_boxplots(&records, Layout::MechanismHandler, Metric::Acc, "s", None, dir.path().join("acc")).unwrap();
    assert_eq!(data.boxes.len(), Mechanism::ALL.len() * 4);
}

#[test]
fn baseline_separable_accuracy() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("separable.csv");
    write_separable(&data, 300);
    let mut c = small(dir.path());
    c.data_path = Some(data);
    let base = run_baseline(&c).unwrap();
    assert_eq!(base.len(), ModelKind::ALL.len() * Metric::ALL.len());
    for r in base.iter().filter(|r| r.metric == Metric::Acc) {
        assert_eq!(r.n, 3);
        let acc = r.mean.unwrap();
        assert!(acc >= BASELINE_MIN_ACCURACY, "{} baseline accuracy {acc}", r.model);
    }
}

#[test]
fn invalid_data_path_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = small(dir.path());
    c.data_path = Some(dir.path().join("missing.csv"));
    assert!(run_experiment(&c).is_err());
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "x1,x2,c,s,y\n1.0,2.0,huge,0,1\n").unwrap();
    c.data_path = Some(bad);
    assert!(run_experiment(&c).is_err());
}
