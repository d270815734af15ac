#!/usr/bin/env python3
"""Desk-scale peak study: both reward streams, 10 seeds, 20000 episodes,
gradient checkpoints every 500 episodes. Writes peak.csv."""

import sys

from ncmdp.cli import main

if __name__ == "__main__":
    sys.exit(main(["peak", "--mode", "both", "--seeds", "10",
                   "--episodes", "20000", "--out", "peak.csv"] + sys.argv[1:]))
