"""Forward evaluation and reverse-mode gradients over an active graph.

Node semantics: each internal node computes

    N_i = F_i( sum_j w_{i,j} * N_{C_{i,j}} + b_i )

where the sum runs over the node's connection genes.  The loss is the mean
squared error over every (sample, output) pair; its gradient is accumulated by
a single reverse sweep through the active nodes in inverse topological order,
summing adjoint contributions across fan-out.  Genes outside the active graph
receive an exactly-zero gradient (their slots are simply never written).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .genome import ActiveGraph, Genome, active_graph

__all__ = [
    "EvalTrace",
    "Gradient",
    "NonFiniteError",
    "forward",
    "forward_batch",
    "loss_mse",
    "backward",
]


class NonFiniteError(ArithmeticError):
    """A node value, loss, or gradient overflowed to inf/nan.

    ``node_id`` names the first offending node when the blow-up happened
    during the forward sweep, else ``None``.
    """

    def __init__(self, message: str, node_id: int | None = None):
        super().__init__(message)
        self.node_id = node_id


@dataclass(eq=False)
class EvalTrace:
    """Per-node intermediates kept for the backward sweep.

    ``values[b, p]`` is the post-activation of the active node at value
    column ``p`` (inputs occupy the leading columns); ``pre[b, k]`` is the
    biased weighted sum feeding active internal node ``k``.
    """

    values: np.ndarray
    pre: np.ndarray


@dataclass(eq=False)
class Gradient:
    """d(loss)/d(x_R), aligned with RealChromosome slots."""

    weights: np.ndarray
    biases: np.ndarray


def _as_batch(graph: ActiveGraph, inputs) -> np.ndarray:
    X = np.asarray(inputs, dtype=np.float64)
    if X.ndim == 1:
        X = X[np.newaxis, :]
    if X.ndim != 2 or X.shape[1] != graph.shape.n_inputs:
        raise ValueError(
            f"expected inputs of shape (batch, {graph.shape.n_inputs}), got {np.shape(inputs)}"
        )
    return X


def _forward_arrays(graph: ActiveGraph, weights: np.ndarray, biases: np.ndarray, X: np.ndarray):
    """Core forward sweep on raw parameter arrays; returns (outputs, values, pre)."""
    n_in = graph.input_ids.size
    n_int = graph.internal_ids.size
    batch = X.shape[0]
    values = np.empty((batch, n_in + n_int))
    values[:, :n_in] = X[:, graph.input_ids]
    pre = np.empty((batch, n_int))
    with np.errstate(over="ignore", invalid="ignore", under="ignore"):
        for k in range(n_int):
            z = values[:, graph.src_pos[k]] @ weights[graph.weight_idx[k]] + biases[graph.bias_idx[k]]
            pre[:, k] = z
            values[:, n_in + k] = graph.kernel_fns[k][0](z)
    if n_int and not np.isfinite(values[:, n_in:]).all():
        bad = np.flatnonzero(~np.isfinite(values[:, n_in:]).all(axis=0))[0]
        node_id = int(graph.internal_ids[bad])
        raise NonFiniteError(f"node {node_id} produced a non-finite value", node_id)
    outputs = values[:, graph.output_pos]
    return outputs, values, pre


def forward(genome: Genome, inputs):
    """Evaluate one sample; returns ``(outputs, EvalTrace)`` with outputs shape (n_outputs,)."""
    graph = active_graph(genome)
    X = _as_batch(graph, inputs)
    if X.shape[0] != 1:
        raise ValueError("forward() evaluates a single sample; use forward_batch()")
    outputs, values, pre = _forward_arrays(graph, genome.params.weights, genome.params.biases, X)
    return outputs[0], EvalTrace(values, pre)


def forward_batch(genome: Genome, inputs):
    """Evaluate a batch; returns ``(outputs, EvalTrace)`` with outputs shape (batch, n_outputs)."""
    graph = active_graph(genome)
    X = _as_batch(graph, inputs)
    outputs, values, pre = _forward_arrays(graph, genome.params.weights, genome.params.biases, X)
    return outputs, EvalTrace(values, pre)


def loss_mse(predictions, targets) -> float:
    """Mean squared error over all (sample, output) pairs."""
    p = np.asarray(predictions, dtype=np.float64)
    t = np.asarray(targets, dtype=np.float64)
    if p.shape != t.shape:
        raise ValueError(f"prediction shape {p.shape} != target shape {t.shape}")
    if p.size == 0:
        raise ValueError("loss_mse needs at least one prediction")
    d = p - t
    return float(np.mean(d * d))


def _backward_arrays(graph: ActiveGraph, weights: np.ndarray, biases: np.ndarray,
                     X: np.ndarray, Y: np.ndarray):
    """Loss + gradient on raw arrays; returns (loss, grad_w, grad_b)."""
    outputs, values, pre = _forward_arrays(graph, weights, biases, X)
    batch, n_out = outputs.shape
    diff = outputs - Y
    with np.errstate(over="ignore", invalid="ignore"):
        loss = float(np.mean(diff * diff))

    grad_w = np.zeros_like(weights)
    grad_b = np.zeros_like(biases)
    adjoint = np.zeros_like(values)
    # d(loss)/d(output) with the 1/(batch * n_out) mean baked in; add.at so
    # several output genes naming one node accumulate.
    np.add.at(adjoint, (slice(None), graph.output_pos), (2.0 / diff.size) * diff)

    n_in = graph.input_ids.size
    with np.errstate(over="ignore", invalid="ignore", under="ignore"):
        for k in range(graph.internal_ids.size - 1, -1, -1):
            delta = adjoint[:, n_in + k] * graph.kernel_fns[k][1](pre[:, k])
            grad_b[graph.bias_idx[k]] = delta.sum()
            grad_w[graph.weight_idx[k]] = delta @ values[:, graph.src_pos[k]]
            np.add.at(
                adjoint,
                (slice(None), graph.src_pos[k]),
                delta[:, np.newaxis] * weights[graph.weight_idx[k]],
            )
    if not (np.isfinite(loss) and np.isfinite(grad_w).all() and np.isfinite(grad_b).all()):
        raise NonFiniteError("loss or gradient overflowed to non-finite values")
    return loss, grad_w, grad_b


def _as_targets(graph: ActiveGraph, batch: int, targets) -> np.ndarray:
    Y = np.asarray(targets, dtype=np.float64)
    if Y.ndim == 1:
        Y = Y[:, np.newaxis]
    n_out = graph.output_pos.size
    if Y.shape != (batch, n_out):
        raise ValueError(
            f"expected targets of shape ({batch}, {n_out}) (or flat for one output), "
            f"got {np.shape(targets)}"
        )
    return Y


def backward(genome: Genome, inputs, targets):
    """MSE loss and d(loss)/d(x_R) for a batch; returns ``(loss, Gradient)``.

    Targets may be shape (batch,) for single-output networks or
    (batch, n_outputs).  Gradient slots of inactive genes are exactly zero.
    """
    graph = active_graph(genome)
    X = _as_batch(graph, inputs)
    Y = _as_targets(graph, X.shape[0], targets)
    loss, grad_w, grad_b = _backward_arrays(graph, genome.params.weights, genome.params.biases, X, Y)
    return loss, Gradient(grad_w, grad_b)
