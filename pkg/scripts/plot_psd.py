#!/usr/bin/env python3
"""Plot a power-spectrum CSV (etherstat psd) on log-log axes.

    etherstat psd trace.csv --out psd.csv
    python scripts/plot_psd.py psd.csv --fit fit.csv --out psd.png
"""

import argparse

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("psd_csv")
    ap.add_argument("--fit", help="fit CSV to overlay")
    ap.add_argument("--out", default="psd.png")
    args = ap.parse_args()

    f, p = np.loadtxt(args.psd_csv, delimiter=",", skiprows=1, unpack=True)

    fig, ax = plt.subplots(figsize=(7, 5))
    ax.loglog(f, p, lw=0.7, label="spectrum")
    if args.fit:
        exponent, intercept, r2, _ = np.loadtxt(
            args.fit, delimiter=",", skiprows=1, unpack=True
        )
        xs = np.geomspace(f.min(), f.max(), 50)
        ax.loglog(xs, np.exp(intercept) * xs**exponent, "-",
                  label=f"alpha {-exponent:.2f} (r$^2$={r2:.3f})")
    ax.set_xlabel("frequency [Hz]")
    ax.set_ylabel("power")
    ax.legend()
    fig.tight_layout()
    fig.savefig(args.out, dpi=150)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
