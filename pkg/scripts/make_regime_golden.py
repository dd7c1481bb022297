"""Regenerate the golden regime masks used by the regime-map regression test.

Each mask is a 50x50 grid over alpha, beta = i/50 (i = 1..50) at d = 1,
stored as 50 strings of '0'/'1' (row: alpha, column: beta).

Usage: python scripts/make_regime_golden.py
"""

from __future__ import annotations

import json
from pathlib import Path

from drwave.cli import regime_rows

GRID = [i / 50 for i in range(1, 51)]
FIELDS = ("achievable", "predOptimalSufficient", "undersmoothK1", "undersmoothK2",
          "oversmoothK1", "oversmoothK2", "undersmoothSome", "oversmoothSome")
OUT = Path(__file__).resolve().parents[1] / "tests/data/regime_golden.json"


def main() -> None:
    rows = regime_rows(GRID, GRID, 1)
    masks: dict[str, dict[str, list[list[str]]]] = {}
    for row in rows:
        i, j = GRID.index(row["alpha"]), GRID.index(row["beta"])
        key = f"{row['kind']}/{row['scheme']}"
        entry = masks.setdefault(key, {f: [["0"] * 50 for _ in GRID] for f in FIELDS})
        for f in FIELDS:
            entry[f][i][j] = "1" if row[f] else "0"
    payload = {
        "grid": "alpha, beta = i/50 for i = 1..50; d = 1; rows index alpha, columns index beta",
        "script": "scripts/make_regime_golden.py",
        "masks": {k: {f: ["".join(r) for r in v[f]] for f in FIELDS} for k, v in masks.items()},
    }
    OUT.write_text(json.dumps(payload, indent=1) + "\n")


if __name__ == "__main__":
    main()
