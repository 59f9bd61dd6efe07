#!/usr/bin/env python3
"""Run the bundled convergence studies and write CSVs + rate reports.

Usage:
    python scripts/run_experiments.py [--set square|zshape|ablations|all]
                                      [--max-ndof N]

Outputs land in results/ (paths are taken from the configs).
"""

import argparse
import sys
import time
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from mgafem.cli import run_experiment  # noqa: E402

SETS = {
    "square": ["square_three_goals.toml", "square_three_goals_p2.toml"],
    "ablations": ["square_afem_only_p2.toml", "square_two_goals_p2.toml"],
    "zshape": ["zshape_eight_goals_cap.toml", "zshape_eight_goals_cap_sorted.toml",
               "zshape_eight_goals_empty.toml", "zshape_eight_goals_empty_sorted.toml"],
}
SETS["all"] = SETS["square"] + SETS["ablations"] + SETS["zshape"]


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--set", default="all", choices=sorted(SETS))
    parser.add_argument("--max-ndof", type=int, default=None,
                        help="override the budget of every run")
    args = parser.parse_args()

    for name in SETS[args.set]:
        config = ROOT / "configs" / name
        start = time.time()
        history, csv_path, report_path = run_experiment(config,
                                                        max_ndof=args.max_ndof)
        last = history.records[-1]
        print(f"{name}: {len(history.records)} levels, ndof {last.ndof}, "
              f"cumndof {last.cumndof}, {time.time() - start:.1f}s")
        print(f"  -> {csv_path}")
        print(f"  -> {report_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
