"""Minibatch SGD on a fixed topology.

One epoch shuffles the training rows, walks them in minibatches (the last one
may be short) and applies the plain update ``theta <- theta - lr * grad`` after
each batch.  Only active genes ever receive non-zero gradients, so inactive
weights and biases are bit-unchanged by training.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .genome import Genome, RealChromosome, active_graph
from .network import _as_batch, _as_targets, _backward_arrays, _forward_arrays, loss_mse

__all__ = ["TrainConfig", "TrainHistory", "sgd_epoch", "train", "evaluate"]


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.01
    batch_size: int = 10
    shuffle: bool = True

    def __post_init__(self):
        if not np.isfinite(self.learning_rate) or self.learning_rate < 0:
            raise ValueError(f"learning_rate must be finite and >= 0, got {self.learning_rate}")
        if int(self.batch_size) < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        object.__setattr__(self, "batch_size", int(self.batch_size))


@dataclass
class TrainHistory:
    """Per-epoch mean minibatch loss, plus test MSE when a test set is given."""

    train_loss: list[float] = field(default_factory=list)
    test_loss: list[float] = field(default_factory=list)


def _dataset_arrays(graph, data: Dataset):
    X = _as_batch(graph, data.features)
    Y = _as_targets(graph, X.shape[0], data.target)
    return X, Y


def _epoch_arrays(graph, weights, biases, X, Y, cfg: TrainConfig, rng: np.random.Generator) -> float:
    """Run one epoch in place on ``weights``/``biases``; returns mean batch loss."""
    n = X.shape[0]
    order = rng.permutation(n) if cfg.shuffle else np.arange(n)
    lr = cfg.learning_rate
    batch_losses = []
    for start in range(0, n, cfg.batch_size):
        rows = order[start:start + cfg.batch_size]
        loss, grad_w, grad_b = _backward_arrays(graph, weights, biases, X[rows], Y[rows])
        weights -= lr * grad_w
        biases -= lr * grad_b
        batch_losses.append(loss)
    return float(np.mean(batch_losses))


def sgd_epoch(genome: Genome, data: Dataset, cfg: TrainConfig,
              rng: np.random.Generator) -> tuple[RealChromosome, float]:
    """One epoch of minibatch SGD; returns the updated x_R and the epoch's
    mean minibatch loss.  The input genome is left untouched."""
    graph = active_graph(genome)
    X, Y = _dataset_arrays(graph, data)
    weights = genome.params.weights.copy()
    biases = genome.params.biases.copy()
    mean_loss = _epoch_arrays(graph, weights, biases, X, Y, cfg, rng)
    return RealChromosome(weights, biases), mean_loss


def train(genome: Genome, data: Dataset, epochs: int, cfg: TrainConfig,
          rng: np.random.Generator, test: Dataset | None = None,
          ) -> tuple[Genome, TrainHistory]:
    """Train for ``epochs`` epochs; returns the trained genome and its history.

    Only x_R changes; the topology is shared with the input genome.  When a
    test set is supplied, its MSE is recorded after every epoch.
    """
    if epochs < 1:
        raise ValueError(f"epochs must be >= 1, got {epochs}")
    graph = active_graph(genome)
    X, Y = _dataset_arrays(graph, data)
    if test is not None:
        Xt, Yt = _dataset_arrays(graph, test)
    weights = genome.params.weights.copy()
    biases = genome.params.biases.copy()
    history = TrainHistory()
    for _ in range(epochs):
        history.train_loss.append(_epoch_arrays(graph, weights, biases, X, Y, cfg, rng))
        if test is not None:
            outputs, _, _ = _forward_arrays(graph, weights, biases, Xt)
            history.test_loss.append(loss_mse(outputs, Yt))
    return genome.with_params(RealChromosome(weights, biases)), history


def evaluate(genome: Genome, data: Dataset) -> float:
    """MSE of the genome over a dataset; no parameter updates."""
    graph = active_graph(genome)
    X, Y = _dataset_arrays(graph, data)
    outputs, _, _ = _forward_arrays(graph, genome.params.weights, genome.params.biases, X)
    return loss_mse(outputs, Y)
