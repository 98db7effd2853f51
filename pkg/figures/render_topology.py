#!/usr/bin/env python3
"""Render a genome DOT export as a layered left-to-right network diagram.

Usage:
    render_topology.py GENOME_DOT --out FIG.svg

Nodes are placed by their ``column`` attribute (inputs left, output right)
and keep their kernel labels; connection thickness follows the ``penwidth``
the exporter computed from |weight|.  Exits nonzero on unparseable DOT or
on nodes missing the layout attributes.
"""

import argparse
import sys

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "cgpann-figures"

import matplotlib.pyplot as plt  # noqa: E402

import dotparse


def layout(graph):
    """{node name: (x, y)} with columns on x and nodes fanned out on y."""
    columns = {}
    for name, attrs in graph.nodes.items():
        if "column" not in attrs:
            raise SystemExit(f"node {name} has no column attribute; "
                             "not a genome DOT export?")
        columns.setdefault(int(attrs["column"]), []).append(name)
    positions = {}
    for col, names in columns.items():
        for i, name in enumerate(names):
            positions[name] = (float(col), (len(names) - 1) / 2.0 - i)
    return positions


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("dot", help="DOT file written by the analyze command")
    parser.add_argument("--out", required=True, help="output image path")
    args = parser.parse_args(argv)

    try:
        graph = dotparse.parse(open(args.dot, encoding="utf-8").read())
    except (OSError, dotparse.DotError) as exc:
        raise SystemExit(f"{args.dot}: {exc}")
    for src, dst, _ in graph.edges:
        for name in (src, dst):
            if name not in graph.nodes:
                raise SystemExit(f"edge endpoint {name} is never declared")

    if not graph.nodes:
        raise SystemExit(f"{args.dot}: no nodes to draw")
    positions = layout(graph)
    n_cols = len({x for x, _ in positions.values()}) or 1
    tallest = max((sum(1 for p in positions.values() if p[0] == x)
                   for x in {x for x, _ in positions.values()}), default=1)

    fig, ax = plt.subplots(figsize=(1.7 * n_cols, 0.35 * tallest + 1.0))
    for src, dst, attrs in graph.edges:
        (x0, y0), (x1, y1) = positions[src], positions[dst]
        width = float(attrs.get("penwidth", 1.0))
        ax.plot([x0, x1], [y0, y1], color="black", alpha=0.4,
                linewidth=width, zorder=1, solid_capstyle="round")
    for name, attrs in graph.nodes.items():
        x, y = positions[name]
        kind = attrs.get("kind", "hidden")
        boxstyle = "square,pad=0.25" if kind == "input" else "round,pad=0.25"
        face = {"input": "#e8e8e8", "output": "#d9e4f5"}.get(kind, "white")
        ax.text(x, y, str(attrs.get("label", name)), ha="center", va="center",
                fontsize=7, zorder=2,
                bbox={"boxstyle": boxstyle, "facecolor": face, "linewidth": 0.6})
    ax.set_axis_off()
    ax.set_xlim(-0.5, max(x for x, _ in positions.values()) + 0.5)
    fig.tight_layout()
    metadata = {"Date": None} if args.out.endswith(".svg") else None
    fig.savefig(args.out, metadata=metadata)

    internal = sum(1 for a in graph.nodes.values() if a.get("kind") != "input")
    print(f"rendered {len(graph.nodes)} nodes ({internal} internal), "
          f"{len(graph.edges)} edges to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
