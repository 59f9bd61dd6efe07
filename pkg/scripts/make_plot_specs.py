#!/usr/bin/env python3
"""Emit plot-spec JSON files for the frontend from the results CSVs.

The reference-slope annotations are the target rates of each study (they
are drawn by the plotter as given, never refitted).

Usage: python scripts/make_plot_specs.py   (after run_experiments.py)
"""

import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
RESULTS = ROOT / "results"
FIGS = ROOT / "results" / "figures"


def spec_square():
    return {
        "output": str(FIGS / "square_three_goals.svg"),
        "panels": [
            {
                "title": "multigoal estimator product",
                "x": "ndof",
                "inputs": [
                    {"csv": str(RESULTS / "square_three_goals_p1.csv"), "label": "p=1"},
                    {"csv": str(RESULTS / "square_three_goals_p2.csv"), "label": "p=2"},
                ],
                "quantities": ["delta"],
                "slopes": [{"rate": -1.0, "label": "order 1"},
                           {"rate": -2.0, "label": "order 2"}],
            },
            {
                "title": "individual estimators, p=2",
                "x": "ndof",
                "inputs": [
                    {"csv": str(RESULTS / "square_three_goals_p2.csv"), "label": "p=2"},
                ],
                "quantities": ["eta", "zeta_1", "zeta_2", "zeta_3"],
                "slopes": [{"rate": -1.0, "label": "order 1"}],
            },
        ],
    }


def spec_zshape():
    variants = [("zshape_cap.csv", "cap, unsorted"),
                ("zshape_cap_sorted.csv", "cap, sorted"),
                ("zshape_empty.csv", "empty, unsorted"),
                ("zshape_empty_sorted.csv", "empty, sorted")]
    return {
        "output": str(FIGS / "zshape_variants.svg"),
        "layout": [2, 2],
        "panels": [
            {
                "title": label,
                "x": "cumndof",
                "inputs": [{"csv": str(RESULTS / name)}],
                "quantities": ["eta"] + [f"zeta_{i}" for i in range(1, 9)],
                "slopes": [{"rate": -1.0, "label": "order 1"}],
            }
            for name, label in variants
        ],
    }


def spec_zshape_delta():
    variants = [("zshape_cap.csv", "cap, unsorted"),
                ("zshape_cap_sorted.csv", "cap, sorted"),
                ("zshape_empty.csv", "empty, unsorted"),
                ("zshape_empty_sorted.csv", "empty, sorted")]
    return {
        "output": str(FIGS / "zshape_delta.svg"),
        "panels": [{
            "title": "multigoal estimator product, all variants",
            "x": "cumndof",
            "inputs": [{"csv": str(RESULTS / name), "label": label}
                       for name, label in variants],
            "quantities": ["delta"],
            "slopes": [{"rate": -2.0, "label": "order 2"}],
        }],
    }


def main() -> int:
    RESULTS.mkdir(exist_ok=True)
    specs = {"square_three_goals": spec_square(), "zshape_variants": spec_zshape(),
             "zshape_delta": spec_zshape_delta()}
    for name, spec in specs.items():
        path = RESULTS / f"plot_{name}.json"
        path.write_text(json.dumps(spec, indent=2) + "\n", encoding="utf-8")
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
