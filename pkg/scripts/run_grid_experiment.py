#!/usr/bin/env python3
"""Desk-scale grid study: 10 random 3x3 grids, 5 agents each, both update
rules, 1e5 steps per run. Writes grid_standard.csv and grid_cui.csv."""

import sys

from ncmdp.cli import main

if __name__ == "__main__":
    extra = sys.argv[1:]
    for rule in ("standard", "cui"):
        code = main(["grid", "--n", "3", "--grids", "10", "--seeds", "5",
                     "--rule", rule, "--out", f"grid_{rule}.csv"] + extra)
        if code != 0:
            sys.exit(code)
    sys.exit(0)
