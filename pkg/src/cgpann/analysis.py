"""Topology analytics, significance testing, and DOT export.

Connection accounting over the active graph:

* *skip connection* — an active link whose source sits two or more columns
  before its destination (inputs count as column 0), i.e. it bypasses at
  least one layer;
* *duplicate connection* — each extra link beyond the first between the same
  (destination, source) pair; a k-fold link is computationally one link whose
  weight is the sum of the k weights;
* *compression ratio* — (active_weights - duplicate_connections) /
  total_weights: the fraction of parameter storage the network actually needs.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .genome import Genome, active_graph, connection_gene_count

__all__ = [
    "TopologyStats",
    "compression_ratio",
    "topology_stats",
    "activation_histogram",
    "rank_sum_test",
    "export_dot",
]


@dataclass(frozen=True)
class TopologyStats:
    total_weights: int
    active_weights: int
    skip_connections: int
    duplicate_connections: int
    compression_ratio: float


def compression_ratio(total_weights: int, active_weights: int, duplicate_connections: int) -> float:
    """(active - duplicates) / total."""
    if total_weights < 1:
        raise ValueError("total_weights must be >= 1")
    return (active_weights - duplicate_connections) / total_weights


def topology_stats(genome: Genome) -> TopologyStats:
    graph = active_graph(genome)
    shape = genome.shape
    total = connection_gene_count(shape)
    active = 0
    skips = 0
    duplicates = 0
    for nid, sources in zip(graph.internal_ids, graph.src_ids):
        dst_col = shape.column_of(int(nid))
        active += sources.size
        for src in sources:
            if dst_col - shape.column_of(int(src)) >= 2:
                skips += 1
        duplicates += sources.size - np.unique(sources).size
    return TopologyStats(
        total_weights=total,
        active_weights=active,
        skip_connections=skips,
        duplicate_connections=duplicates,
        compression_ratio=compression_ratio(total, active, duplicates),
    )


def activation_histogram(genome: Genome) -> dict[str, int]:
    """Kernel counts over active *hidden* nodes (output neurons excluded).

    Keys follow kernel-set order; absent kernels are omitted.
    """
    graph = active_graph(genome)
    output_start = genome.shape.column_start(genome.shape.cols + 1)
    counts = Counter(
        name
        for nid, name in zip(graph.internal_ids, graph.kernel_names)
        if nid < output_start
    )
    return {k: counts[k] for k in genome.shape.kernel_set if counts[k]}


# ---------------------------------------------------------------------------
# Mann-Whitney / Wilcoxon rank-sum


def _midranks(pooled: np.ndarray) -> np.ndarray:
    """Ranks 1..n with ties sharing the average rank of their block."""
    order = np.argsort(pooled, kind="mergesort")
    ranks = np.empty(pooled.size, dtype=np.float64)
    i = 0
    while i < pooled.size:
        j = i
        while j + 1 < pooled.size and pooled[order[j + 1]] == pooled[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks

_EXACT_LIMIT = 12


def rank_sum_test(a, b, alternative: str = "two-sided") -> tuple[float, float]:
    """Mann-Whitney U test with midrank ties.

    The p-value is exact (full enumeration of rank assignments) when the
    combined sample size is at most 12, else a normal approximation with tie
    correction and 0.5 continuity correction.  Two-sided exact tail:
    P(min(U_a, U_b) <= observed min).  ``alternative`` may be "two-sided",
    "less" (a tends below b) or "greater".  Returns (U, p) where U is
    min(U_a, U_b) two-sided and U_a one-sided.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.size < 3 or b.size < 3:
        raise ValueError(f"need at least 3 samples on each side, got {a.size} and {b.size}")
    if not (np.isfinite(a).all() and np.isfinite(b).all()):
        raise ValueError("samples must be finite")
    if alternative not in ("two-sided", "less", "greater"):
        raise ValueError(f"unknown alternative {alternative!r}")
    n1, n2 = a.size, b.size
    n = n1 + n2
    ranks = _midranks(np.concatenate([a, b]))
    u1 = float(ranks[:n1].sum()) - n1 * (n1 + 1) / 2.0
    u2 = n1 * n2 - u1
    stat = min(u1, u2) if alternative == "two-sided" else u1

    if n <= _EXACT_LIMIT:
        half = n1 * (n1 + 1) / 2.0
        hits = 0
        total = 0
        for combo in itertools.combinations(range(n), n1):
            cu1 = float(ranks[list(combo)].sum()) - half
            cu2 = n1 * n2 - cu1
            if alternative == "two-sided":
                hits += min(cu1, cu2) <= min(u1, u2)
            elif alternative == "less":
                hits += cu1 <= u1
            else:
                hits += cu1 >= u1
            total += 1
        return stat, hits / total

    mean = n1 * n2 / 2.0
    _, tie_counts = np.unique(np.concatenate([a, b]), return_counts=True)
    tie_term = float(((tie_counts**3) - tie_counts).sum()) / (n * (n - 1))
    sigma2 = n1 * n2 / 12.0 * ((n + 1) - tie_term)
    if sigma2 <= 0:
        return stat, 1.0  # fully degenerate: every value identical
    sigma = math.sqrt(sigma2)
    if alternative == "two-sided":
        z = (max(u1, u2) - mean - 0.5) / sigma
        p = 2.0 * (1.0 - float(ndtr(z)))
    elif alternative == "less":
        z = (u1 - mean + 0.5) / sigma
        p = float(ndtr(z))
    else:
        z = (u1 - mean - 0.5) / sigma
        p = 1.0 - float(ndtr(z))
    return stat, min(max(p, 0.0), 1.0)


# ---------------------------------------------------------------------------
# DOT export

_DOT_MODES = ("all", "skips")


def export_dot(genome: Genome, mode: str = "all") -> str:
    """Graphviz DOT text for the active graph.

    Every active node is declared (inputs as boxes, neurons labeled with
    their kernel); edges carry the raw weight (``w``) and a pen width
    proportional to |weight|.  ``mode="skips"`` keeps only edges spanning
    two or more columns.
    """
    if mode not in _DOT_MODES:
        raise ValueError(f"mode must be one of {_DOT_MODES}, got {mode!r}")
    graph = active_graph(genome)
    shape = genome.shape
    output_start = shape.column_start(shape.cols + 1)

    edges = []  # (src id, dst id, weight, span)
    for nid, sources, widx in zip(graph.internal_ids, graph.src_ids, graph.weight_idx):
        dst_col = shape.column_of(int(nid))
        for src, wi in zip(sources, widx):
            span = dst_col - shape.column_of(int(src))
            if mode == "skips" and span < 2:
                continue
            edges.append((int(src), int(nid), float(genome.params.weights[wi]), span))
    w_max = max((abs(w) for _, _, w, _ in edges), default=0.0)

    lines = ["digraph genome {", "  rankdir=LR;"]
    for nid in graph.input_ids:
        lines.append(f'  n{int(nid)} [label="x{int(nid)}" kind="input" column=0 shape=box];')
    for nid, kernel in zip(graph.internal_ids, graph.kernel_names):
        kind = "output" if nid >= output_start else "hidden"
        col = shape.column_of(int(nid))
        lines.append(
            f'  n{int(nid)} [label="{kernel}" kind="{kind}" column={col} kernel="{kernel}"];'
        )
    for src, dst, w, _span in edges:
        pen = 1.0 if w_max == 0.0 else 0.2 + 2.8 * abs(w) / w_max
        lines.append(f'  n{src} -> n{dst} [w="{w!r}" penwidth={pen:.4f}];')
    lines.append("}")
    return "\n".join(lines) + "\n"
