"""
Write a synthetic review history whose tallies match the bundled case-study counts.

Any history with the same tallies calibrates to the same matrices, so this
file stands in for the raw records behind the published counts.
"""
import argparse
import sys
from pathlib import Path

import pandas as pd
import yaml

ROOT_DIR = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT_DIR))

from src.calibration.tables import CountTable, records_from_counts  # noqa: E402

COUNTS_PATH = ROOT_DIR / "src" / "data" / "case_study_counts.yaml"


def load_count_tables(path: Path = COUNTS_PATH):
    data = yaml.safe_load(path.read_text(encoding="utf-8"))
    tables = []
    for criterion_id, block in data.items():
        hypotheses = tuple(block["counts"])
        tables.append(CountTable(criterion_id, hypotheses, block["grades"], [block["counts"][h] for h in hypotheses]))
    return tables


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", default="history.csv", help="Path to the CSV to write.")
    parser.add_argument("--experts-per-project", type=int, default=5)
    parser.add_argument("--expert-pool", type=int, default=50)
    args = parser.parse_args()

    records = records_from_counts(load_count_tables(), args.experts_per_project, args.expert_pool)
    frame = pd.DataFrame(
        [(r.project_id, r.expert_id, r.criterion_id, r.grade, r.outcome) for r in records],
        columns=["project_id", "expert_id", "criterion_id", "grade", "outcome"],
    )
    frame.to_csv(args.out, index=False, lineterminator="\n")
    print(f"wrote {len(frame)} rows to {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
