#!/usr/bin/env python3
"""Plot an interval histogram CSV (etherstat iih) on log-log axes, with an
optional fitted line (etherstat fit) overlaid.

    etherstat iih trace.csv --out iih.csv
    etherstat fit --in iih.csv --out fit.csv
    python scripts/plot_iih.py iih.csv --fit fit.csv --out iih.png
"""

import argparse

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("iih_csv")
    ap.add_argument("--fit", help="fit CSV to overlay")
    ap.add_argument("--out", default="iih.png")
    args = ap.parse_args()

    lowers, uppers, counts, dens = np.loadtxt(
        args.iih_csv, delimiter=",", skiprows=1, unpack=True
    )
    x = np.where(lowers > 0, np.sqrt(lowers * uppers), uppers / 2)
    keep = dens > 0

    fig, ax = plt.subplots(figsize=(7, 5))
    ax.loglog(x[keep], dens[keep], "o", ms=4, label="interval density")
    if args.fit:
        exponent, intercept, r2, _ = np.loadtxt(
            args.fit, delimiter=",", skiprows=1, unpack=True
        )
        xs = np.geomspace(x[keep].min(), x[keep].max(), 50)
        ax.loglog(xs, np.exp(intercept) * xs**exponent, "-",
                  label=f"slope {exponent:.2f} (r$^2$={r2:.3f})")
    ax.set_xlabel("interval [us]")
    ax.set_ylabel("density [1/us]")
    ax.legend()
    fig.tight_layout()
    fig.savefig(args.out, dpi=150)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
