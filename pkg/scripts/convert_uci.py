"""Convert raw UCI distribution files into the header-row CSVs the schemas expect.

Usage::

    python scripts/convert_uci.py adult  adult.data adult.test  data/adult.csv
    python scripts/convert_uci.py german german.data            data/german_credit.csv
"""
import csv
import sys

ADULT_COLUMNS = [
    "age", "workclass", "fnlwgt", "education", "education-num", "marital-status",
    "occupation", "relationship", "race", "sex", "capital-gain", "capital-loss",
    "hours-per-week", "native-country", "income",
]

GERMAN_COLUMNS = [
    "checking_status", "duration", "credit_history", "purpose", "credit_amount",
    "savings", "employment", "installment_rate", "personal_status_sex",
    "other_debtors", "residence_since", "property", "age",
    "other_installment_plans", "housing", "existing_credits", "job",
    "num_dependents", "telephone", "foreign_worker", "class",
]


def _adult_rows(path):
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            # adult.test opens with a "|1x3 Cross validator" banner
            if not line or line.startswith("|"):
                continue
            cells = [c.strip() for c in line.split(",")]
            cells[-1] = cells[-1].rstrip(".")
            yield cells


def convert_adult(train, test, out):
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ADULT_COLUMNS)
        for path in (train, test):
            w.writerows(_adult_rows(path))


def convert_german(src, out):
    with open(src) as fh, open(out, "w", newline="") as dst:
        w = csv.writer(dst, lineterminator="\n")
        w.writerow(GERMAN_COLUMNS)
        for line in fh:
            if line.strip():
                w.writerow(line.split())


if __name__ == "__main__":
    kind, *paths = sys.argv[1:]
    {"adult": convert_adult, "german": convert_german}[kind](*paths)
