#!/usr/bin/env python3
"""Plot the control, member states and convergence history of a solve run."""

import argparse
import glob
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("run_dir")
    ap.add_argument("--coord", type=int, default=1, help="1-based state coordinate to draw per member")
    ap.add_argument("--out", default=None, help="output image (default <run_dir>/run.png)")
    args = ap.parse_args()

    control = pd.read_csv(os.path.join(args.run_dir, "control.csv"))
    conv = pd.read_csv(os.path.join(args.run_dir, "convergence.csv"))
    states = sorted(glob.glob(os.path.join(args.run_dir, "state_*.csv")),
                    key=lambda p: int(p.rsplit("_", 1)[1].split(".")[0]))

    fig, ax = plt.subplots(1, 3, figsize=(15, 4))
    for col in control.columns[1:]:
        ax[0].plot(control["t"], control[col], label=col)
    ax[0].set_title("control")
    ax[0].set_xlabel("t")
    ax[0].legend()

    key = f"x{args.coord}"
    for path in states:
        s = pd.read_csv(path)
        ax[1].plot(s["t"], s[key], lw=0.8)
    ax[1].set_title(f"{key} per member ({len(states)})")
    ax[1].set_xlabel("t")

    ax[2].semilogy(conv["k"], conv["diff_x"], "o-", label="diff_x")
    if conv["criterion_sum"].notna().any():
        ax[2].semilogy(conv["k"], conv["criterion_sum"], "s-", label="criterion_sum")
        ax[2].axhline(1.0, color="gray", ls=":")
    ax[2].set_title("convergence")
    ax[2].set_xlabel("iteration")
    ax[2].legend()

    fig.tight_layout()
    out = args.out or os.path.join(args.run_dir, "run.png")
    fig.savefig(out, dpi=120)
    print(out)


if __name__ == "__main__":
    main()
