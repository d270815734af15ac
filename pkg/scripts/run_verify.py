#!/usr/bin/env python3
"""Run the full invariant suite; exits nonzero on any failure."""

import sys

from ncmdp.cli import main

if __name__ == "__main__":
    sys.exit(main(["verify"] + sys.argv[1:]))
