"""Exact volume variance per unit area against its limit for growing square windows."""

import argparse

import numpy as np

from boolcov.analytic import ModelParams, sigma_vol_vol
from boolcov.finite_window import variance_rate_curve


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--gamma", type=float, default=0.3)
    ap.add_argument("--sides", type=float, nargs="+", default=[4, 8, 16, 32, 64, 128, 256])
    args = ap.parse_args()
    params = ModelParams.unit_ball(2, args.gamma)
    print(f"sigma_22 = {sigma_vol_vol(params):.12g}")
    rows = variance_rate_curve(params, args.sides)
    for L, prod in rows:
        print(f"L = {L:6.0f}   |Var/L^2 - sigma| * L/2 = {prod:.10f}")
    L = np.array([r[0] for r in rows])
    dev = np.array([r[1] for r in rows]) * 2 / L
    print(f"log-log slope of the deviation: {np.polyfit(np.log(L), np.log(dev), 1)[0]:.4f}")


if __name__ == "__main__":
    main()
