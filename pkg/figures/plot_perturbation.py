#!/usr/bin/env python3
"""Plot plain vs. mutation-perturbed SGD from a perturb.csv file.

Usage:
    plot_perturbation.py PERTURB_CSV --out FIG.svg [--log]

Two training-loss curves over epochs: the plain run in dark blue, the run
that receives periodic topology mutations in dark red.  Epochs where a
curve diverged (infinite loss) are left as gaps.  Deterministic output,
like the other scripts here.
"""

import argparse
import csv
import math
import sys

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "cgpann-figures"

import matplotlib.pyplot as plt  # noqa: E402

PERTURB_COLUMNS = ["epoch", "plain_mse", "perturbed_mse"]


def read_perturb(path):
    epochs, plain, perturbed = [], [], []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in PERTURB_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise SystemExit(
                f"{path}: schema mismatch: missing columns {', '.join(missing)}; "
                f"expected {', '.join(PERTURB_COLUMNS)}, "
                f"found {', '.join(reader.fieldnames or ['<none>'])}"
            )
        for lineno, row in enumerate(reader, start=2):
            try:
                epochs.append(int(row["epoch"]))
                plain.append(float(row["plain_mse"]))
                perturbed.append(float(row["perturbed_mse"]))
            except ValueError as exc:
                raise SystemExit(f"{path}: line {lineno}: {exc}")
    if not epochs:
        raise SystemExit(f"{path}: no rows")
    return epochs, plain, perturbed


def gaps(values):
    """Replace non-finite losses with NaN so matplotlib breaks the line."""
    return [v if math.isfinite(v) else math.nan for v in values]


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("perturb", help="perturb.csv from the perturbation demo")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--log", action="store_true", help="log-scale y axis")
    args = parser.parse_args(argv)

    epochs, plain, perturbed = read_perturb(args.perturb)

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(epochs, gaps(plain), color="#3b4cc0", label="plain SGD")
    ax.plot(epochs, gaps(perturbed), color="#b40426", label="SGD with mutations")
    if args.log:
        ax.set_yscale("log")
    ax.set_xlabel("epoch")
    ax.set_ylabel("training MSE")
    ax.legend(fontsize="small")
    fig.tight_layout()
    metadata = {"Date": None} if args.out.endswith(".svg") else None
    fig.savefig(args.out, metadata=metadata)
    print(f"wrote {args.out} ({len(epochs)} epochs)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
