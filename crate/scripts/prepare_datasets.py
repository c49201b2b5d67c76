#!/usr/bin/env python3
"""Convert the raw benchmark files into the headed CSVs the harness loads.

The raw files are the UCI German credit (`german.data`), the UCI Adult
income train/test pair (`adult.data`, `adult.test`) and ProPublica's
`compas-scores-two-years.csv`. Point --raw at a directory holding them in
`german/`, `adult/` and `compas/` subdirectories; without --raw the
`responsibly` wheel (which bundles all of them) is fetched with pip into a
temporary directory.

    python3 scripts/prepare_datasets.py --out data
"""
import argparse
import csv
import glob
import os
import subprocess
import sys
import tempfile
import zipfile

GERMAN_COLUMNS = [
    "checking_status", "duration", "credit_history", "purpose",
    "credit_amount", "savings", "employment_since", "installment_rate",
    "personal_status_sex", "other_debtors", "residence_since", "property",
    "age", "installment_plans", "housing", "existing_credits", "job",
    "people_liable", "telephone", "foreign_worker", "credit_risk",
]

ADULT_COLUMNS = [
    "age", "workclass", "fnlwgt", "education", "education_num",
    "marital_status", "occupation", "relationship", "race", "sex",
    "capital_gain", "capital_loss", "hours_per_week", "native_country",
    "income",
]

COMPAS_COLUMNS = [
    "sex", "age", "age_cat", "race", "juv_fel_count", "juv_misd_count",
    "juv_other_count", "priors_count", "c_charge_degree", "decile_score",
    "score_text", "two_year_recid",
]


def fetch_raw(tmp):
    subprocess.run(
        [sys.executable, "-m", "pip", "download", "--no-deps", "-d", tmp,
         "responsibly==0.1.2"],
        check=True,
    )
    wheel = glob.glob(os.path.join(tmp, "responsibly-*.whl"))[0]
    zipfile.ZipFile(wheel).extractall(tmp)
    return os.path.join(tmp, "responsibly", "dataset")


def convert_german(raw, out):
    with open(os.path.join(raw, "german", "german.data")) as f:
        rows = [line.split() for line in f if line.strip()]
    with open(os.path.join(out, "german.csv"), "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(GERMAN_COLUMNS)
        for r in rows:
            assert len(r) == 21, r
            r[-1] = {"1": "good", "2": "bad"}[r[-1]]
            w.writerow(r)
    return len(rows)


def convert_adult(raw, out):
    rows = []
    for name in ("adult.data", "adult.test"):
        with open(os.path.join(raw, "adult", name)) as f:
            for line in f:
                line = line.strip()
                if not line or line.startswith("|"):
                    continue
                r = [c.strip() for c in line.split(",")]
                r[-1] = r[-1].rstrip(".")
                assert len(r) == 15, r
                rows.append(r)
    with open(os.path.join(out, "adult.csv"), "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(ADULT_COLUMNS)
        w.writerows(rows)
    return len(rows)


def convert_compas(raw, out):
    with open(os.path.join(raw, "compas", "compas-scores-two-years.csv")) as f:
        reader = csv.reader(f)
        header = next(reader)
        # the raw header repeats decile_score and priors_count; keep the first
        idx = [header.index(c) for c in COMPAS_COLUMNS]
        rows = [[r[i] for i in idx] for r in reader]
    with open(os.path.join(out, "compas.csv"), "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(COMPAS_COLUMNS)
        w.writerows(rows)
    return len(rows)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--raw", help="directory with german/, adult/, compas/")
    ap.add_argument("--out", default="data")
    ap.add_argument("--only", choices=["german", "adult", "compas"], action="append")
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        raw = args.raw or fetch_raw(tmp)
        todo = args.only or ["german", "adult", "compas"]
        for name in todo:
            n = {"german": convert_german, "adult": convert_adult,
                 "compas": convert_compas}[name](raw, args.out)
            print(f"{name}: {n} rows -> {os.path.join(args.out, name + '.csv')}")


if __name__ == "__main__":
    main()
