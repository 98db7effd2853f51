#!/usr/bin/env python3
"""Plot per-iteration learning curves from one or more curves.csv files.

Usage:
    plot_learning_curves.py CURVES_CSV [CURVES_CSV ...] --out FIG.svg
                            [--baseline BASELINE_JSON] [--linear]

Each curve is the test MSE of one iteration's best topology, averaged over
the repeats, colored dark blue (first iteration) through dark red (last).
The baseline summary's mean test MSE appears as a dashed black line.  The
y axis is log-scale unless --linear is given.  Output is deterministic:
the same inputs produce byte-identical files.
"""

import argparse
import csv
import json
import math
import sys
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "cgpann-figures"

import matplotlib.pyplot as plt  # noqa: E402

CURVE_COLUMNS = ["iteration", "epoch", "repeat", "train_mse", "test_mse"]


def read_curves(paths):
    """{iteration: {epoch: [test MSEs across repeats and files]}}"""
    curves = defaultdict(lambda: defaultdict(list))
    for path in paths:
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            missing = [c for c in CURVE_COLUMNS if c not in (reader.fieldnames or [])]
            if missing:
                raise SystemExit(
                    f"{path}: schema mismatch: missing columns {', '.join(missing)}; "
                    f"expected {', '.join(CURVE_COLUMNS)}, "
                    f"found {', '.join(reader.fieldnames or ['<none>'])}"
                )
            for lineno, row in enumerate(reader, start=2):
                try:
                    it = int(row["iteration"])
                    epoch = int(row["epoch"])
                    mse = float(row["test_mse"])
                except ValueError as exc:
                    raise SystemExit(f"{path}: line {lineno}: {exc}")
                curves[it][epoch].append(mse)
    return curves


def read_baseline(path):
    """Mean test MSE from a baseline summary, or None (with a warning)."""
    text = Path(path).read_text(encoding="utf-8")
    if not text.strip():
        print(f"warning: baseline file {path} is empty; skipping the dashed line",
              file=sys.stderr)
        return None
    try:
        doc = json.loads(text)
        mean = doc["mean_test_mse"]
    except (ValueError, KeyError, TypeError) as exc:
        raise SystemExit(f"{path}: not a baseline summary: {exc}")
    if mean is None or not math.isfinite(mean):
        print(f"warning: baseline file {path} has no finite mean_test_mse; "
              "skipping the dashed line", file=sys.stderr)
        return None
    return float(mean)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("curves", nargs="+", help="curves.csv file(s) from an evolve run")
    parser.add_argument("--baseline", help="baseline_summary.json for the dashed line")
    parser.add_argument("--out", required=True, help="output image path (vector format)")
    parser.add_argument("--linear", action="store_true", help="linear instead of log y axis")
    args = parser.parse_args(argv)

    curves = read_curves(args.curves)
    if not curves:
        raise SystemExit(f"{args.curves[0]}: no curve rows found")
    baseline = read_baseline(args.baseline) if args.baseline else None

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    iterations = sorted(curves)
    cmap = matplotlib.colormaps["coolwarm"]
    for rank, it in enumerate(iterations):
        color = cmap(rank / max(1, len(iterations) - 1))
        epochs = sorted(curves[it])
        means = []
        for epoch in epochs:
            finite = [v for v in curves[it][epoch] if math.isfinite(v)]
            means.append(sum(finite) / len(finite) if finite else math.nan)
        label = "template" if it == 0 else f"iteration {it}"
        ax.plot(epochs, means, color=color, label=label)
    if baseline is not None:
        ax.axhline(baseline, color="black", linestyle="--", linewidth=1.0,
                   label="random baseline")
    if not args.linear:
        ax.set_yscale("log")
    ax.set_xlabel("epoch")
    ax.set_ylabel("test MSE")
    ax.legend(fontsize="small")
    fig.tight_layout()
    # a fixed Date keeps re-runs byte-identical (SVG embeds a timestamp otherwise)
    metadata = {"Date": None} if args.out.endswith(".svg") else None
    fig.savefig(args.out, metadata=metadata)
    print(f"wrote {args.out} ({len(iterations)} curves"
          + (", 1 baseline line)" if baseline is not None else ")"))
    return 0


if __name__ == "__main__":
    sys.exit(main())
