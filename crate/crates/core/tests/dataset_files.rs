//! Loads the bundled and user-supplied data files against their schemas.
//!
//! Adult and COMPAS are not shipped with the repository; their tests are
//! ignored by default and run with `cargo test -- --ignored` once the files
//! are placed in `data/`.

use fairmiss::datasets::{schema_for, validate_path, DatasetId};
use fairmiss::table::complete_cases;

fn data(name: &str) -> String {
    format!("{}/../../data/{name}.csv", env!("CARGO_MANIFEST_DIR"))
}

fn check(id: DatasetId, rows: usize, complete: usize, variants: &[&str]) {
    let schema = schema_for(id).unwrap();
    let path = data(&id.to_string());
    let report = validate_path(&path, &schema).unwrap();
    assert!(report.is_clean(), "{report}");
    assert_eq!(report.rows, rows);
    assert_eq!(report.incomplete_rows, rows - complete);

    let raw = schema.load(&path).unwrap();
    assert_eq!(raw.n_rows(), rows);
    assert_eq!(complete_cases(&raw).n_rows(), complete);
    assert_eq!(schema.variant_names(), variants);
    for v in variants {
        let t = schema.prepare(&raw, v).unwrap();
        assert_eq!(t.n_rows(), complete);
        assert!(t.is_complete());
        let s = t.sensitive_labels().unwrap();
        let y = t.outcome_labels().unwrap();
        for labels in [&s, &y] {
            assert!(labels.contains(&0) && labels.contains(&1), "{id}/{v} label not binary");
        }
    }
}

#[test]
fn german_file_matches_schema() {
    check(DatasetId::German, 1000, 1000, &["sex", "age"]);
}

#[test]
#[ignore = "needs data/compas.csv"]
fn compas_file_matches_schema() {
    check(DatasetId::Compas, 7214, 7214, &["race", "sex"]);
}

#[test]
#[ignore = "needs data/adult.csv"]
fn adult_file_matches_schema() {
    check(DatasetId::Adult, 48842, 45222, &["sex", "race"]);
}
