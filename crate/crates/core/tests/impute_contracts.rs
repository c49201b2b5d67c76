use fairmiss::ampute::{ampute, AmputeConfig, Mechanism};
use fairmiss::datasets::{schema_for, synth_classification, DatasetId};
use fairmiss::impute::{handle, HandlerKind};
use fairmiss::rng::{derive, stream};
use fairmiss::table::{ColumnData, ColumnKind, ColumnSpec, Role, Table};

const HANDLERS: [HandlerKind; 5] = [
    HandlerKind::ListwiseDeletion,
    HandlerKind::Mode,
    HandlerKind::Regression,
    HandlerKind::Knn(1),
    HandlerKind::Knn(5),
];

fn amputed_synth(n: usize, mech: Mechanism, seed: u64) -> Table {
    let t = synth_classification(n, 0.5, 0.3, 0.5, &mut stream(seed)).unwrap();
    let cfg = AmputeConfig::for_variables(&t, &["x1".to_string(), "c".to_string()], mech, "s").unwrap();
    ampute(&t, &cfg, &mut stream(derive(seed, 1))).unwrap().table
}

fn amputed_german(variant: &str, mech: Mechanism, seed: u64) -> Table {
    let schema = schema_for(DatasetId::German).unwrap();
    let raw = schema
        .load(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/german.csv"))
        .unwrap();
    let t = schema.prepare(&raw, variant).unwrap();
    let sens = t.spec(t.sensitive_index().unwrap()).name.clone();
    let cfg = AmputeConfig::for_variables(&t, &schema.amputed_variables, mech, &sens).unwrap();
    ampute(&t, &cfg, &mut stream(seed)).unwrap().table
}

/// Replaces the outcome column with `f(code)` for every row.
fn poison_outcome(t: &Table, f: impl Fn(usize, u32) -> u32) -> Table {
    let j = t.outcome_index().unwrap();
    let codes: Vec<u32> = t.codes(j).unwrap().iter().enumerate().map(|(i, &c)| f(i, c)).collect();
    let spec = t.spec(j).clone();
    t.with_column(j, spec, ColumnData::Categorical(codes), vec![true; t.n_rows()])
        .unwrap()
}

fn predictor_cells(t: &Table) -> Vec<Vec<u64>> {
    let y = t.outcome_index().unwrap();
    (0..t.n_cols())
        .filter(|&j| j != y)
        .map(|j| (0..t.n_rows()).map(|i| t.column(j).value(i).to_bits()).collect())
        .collect()
}

#[test]
fn outcome_has_no_influence_on_imputations() {
    for (k, mech) in Mechanism::ALL.into_iter().enumerate() {
        let t = amputed_synth(400, mech, 10 + k as u64);
        let flipped = poison_outcome(&t, |_, c| 1 - c);
        let constant = poison_outcome(&t, |_, _| 1);
        let striped = poison_outcome(&t, |i, _| (i % 2) as u32);
        for h in HANDLERS {
            let base = predictor_cells(&handle(&t, h).unwrap());
            for p in [&flipped, &constant, &striped] {
                assert_eq!(base, predictor_cells(&handle(p, h).unwrap()), "{mech} {h}");
            }
        }
    }
}

#[test]
fn observed_cells_are_bit_identical() {
    for seed in 0..3 {
        for t in [
            amputed_synth(300, Mechanism::Mnar, 20 + seed),
            amputed_german("sex", Mechanism::Mar, 30 + seed),
        ] {
            for h in HANDLERS[1..].iter().copied() {
                let out = handle(&t, h).unwrap();
                assert_eq!(out.n_rows(), t.n_rows());
                for j in 0..t.n_cols() {
                    for i in 0..t.n_rows() {
                        if t.is_observed(i, j) {
                            assert_eq!(
                                out.column(j).value(i).to_bits(),
                                t.column(j).value(i).to_bits(),
                                "{h} row {i} col {j}"
                            );
                        }
                    }
                }
            }
            let ld = handle(&t, HandlerKind::ListwiseDeletion).unwrap();
            let kept: Vec<usize> = (0..t.n_rows()).filter(|&i| t.row_complete(i)).collect();
            assert_eq!(ld.n_rows(), kept.len());
            for j in 0..t.n_cols() {
                for (r, &i) in kept.iter().enumerate() {
                    assert_eq!(ld.column(j).value(r).to_bits(), t.column(j).value(i).to_bits());
                }
            }
        }
    }
}

#[test]
fn outputs_are_complete_with_declared_levels() {
    for variant in ["sex", "age"] {
        let t = amputed_german(variant, Mechanism::Mnar, 40);
        for h in HANDLERS {
            let out = handle(&t, h).unwrap();
            assert!(out.is_complete(), "{h}");
            for j in 0..out.n_cols() {
                if let ColumnKind::Categorical { levels } = &out.spec(j).kind {
                    assert!(out.codes(j).unwrap().iter().all(|&c| (c as usize) < levels.len()));
                }
            }
            for j in [out.sensitive_index().unwrap(), out.outcome_index().unwrap()] {
                assert!(out.mask(j).iter().all(|&o| o));
            }
        }
    }
}

#[test]
fn handlers_are_deterministic() {
    let t = amputed_german("age", Mechanism::Mcar, 50);
    for h in HANDLERS {
        assert_eq!(handle(&t, h).unwrap(), handle(&t, h).unwrap(), "{h}");
    }
}

#[test]
fn noiseless_linear_target_is_recovered_through_the_pipeline() {
    let n = 200;
    let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin() * 10.0).collect();
    let s: Vec<f64> = (0..n).map(|i| (i % 2) as f64).collect();
    let target: Vec<f64> = x.iter().zip(&s).map(|(a, b)| 3.0 - 2.0 * a + 0.5 * b).collect();
    let y: Vec<u32> = (0..n).map(|i| (i % 3 == 0) as u32).collect();
    let t = Table::from_columns(
        vec![
            ColumnSpec::numeric("x", Role::Predictor),
            ColumnSpec::numeric("t", Role::Predictor),
            ColumnSpec::numeric("s", Role::Sensitive),
            ColumnSpec::categorical("y", &["0", "1"], Role::Outcome),
        ],
        vec![
            ColumnData::Numeric(x),
            ColumnData::Numeric(target.clone()),
            ColumnData::Numeric(s),
            ColumnData::Categorical(y),
        ],
    )
    .unwrap();
    let cfg = AmputeConfig::for_variables(&t, &["t".to_string()], Mechanism::Mar, "s").unwrap();
    let amputed = ampute(&t, &cfg, &mut stream(60)).unwrap().table;
    let out = handle(&amputed, HandlerKind::Regression).unwrap();
    let got = out.numeric(1).unwrap();
    for i in 0..n {
        assert!((got[i] - target[i]).abs() <= 1e-6, "row {i}: {} vs {}", got[i], target[i]);
    }
}
