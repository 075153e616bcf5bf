#!/usr/bin/env python3
"""Recompute imputation metrics from dumped prediction arrays.

Usage: recompute_metrics.py PRED.npy TARGET.npy MASK.npy

Deliberately self-contained: the formulas are written out here so the result
is an independent check on the harness, not a re-export of it.
"""

import sys

import numpy as np


def main(argv):
    if len(argv) != 3:
        print(__doc__.strip(), file=sys.stderr)
        return 2
    pred = np.load(argv[0])
    target = np.load(argv[1])
    mask = np.load(argv[2]).astype(bool)
    missing = ~mask
    if not missing.any():
        print("error: no missing entries in mask", file=sys.stderr)
        return 2
    err = pred[missing] - target[missing]
    mse = float(np.mean(err**2))
    mae = float(np.mean(np.abs(err)))
    rmse = float(np.sqrt(mse))
    print(f"mse={mse!r} mae={mae!r} rmse={rmse!r}")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
