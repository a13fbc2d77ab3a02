#!/usr/bin/env python3
"""Headline Schrödinger study: first-order convergence on H^1-type data.

Runs the ``nls-converge`` subcommand with the rough-data configuration used
in the acceptance suite (theta = 1 coefficients at N = 1024 over a unit
horizon).  Any trailing arguments are forwarded, so defaults can be
overridden or extended:

    python3 scripts/nls_rough_study.py --seed 2 --out runs/nls_seed2
"""

import sys

from lowreg.study_cli import main

DEFAULTS = [
    "nls-converge",
    "--theta", "1.0",
    "--amplitude", "1.0",
    "--modes", "1024",
    "--t-end", "1.0",
    "--taus", "2^-4..2^-10",
    "--cross-val-tol", "0.01",
]

if __name__ == "__main__":
    sys.exit(main(DEFAULTS + sys.argv[1:]))
