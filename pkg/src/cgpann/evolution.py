"""The LSMF memetic algorithm and the random-genome baseline.

One *iteration* is K *cycles* of

    Learn   - every individual trains for C epochs of SGD (the elite too),
    Select  - the individual with the lowest full-training-set MSE wins,
    Mutate  - the population becomes the unaltered winner (elitism) plus
              N-1 mutants of it; mutants keep the winner's learned weights
              for unchanged genes (Lamarckian inheritance),

followed by one *Forget*: every individual keeps its topology but has its
weights redrawn from N(0, 1) and biases reset to 0.

Randomness discipline: every stream is derived from the master seed plus a
purpose/iteration/cycle/individual spawn key, so runs are bit-identical
regardless of thread count or execution order.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .analysis import TopologyStats, topology_stats
from .data import Dataset
from .genome import (
    Genome,
    GenomeShape,
    IntegerChromosome,
    RealChromosome,
    _conn_offsets,
    active_graph,
    build_template,
    random_genome,
)
from .network import NonFiniteError
from .trainer import TrainConfig, evaluate, train

__all__ = [
    "LsmfConfig",
    "CycleLog",
    "IterationResult",
    "MutationSummary",
    "BaselineResult",
    "DivergenceError",
    "spawn_rng",
    "mutation_counts",
    "mutate",
    "gene_diff",
    "learn_step",
    "select_step",
    "mutate_step",
    "forget_step",
    "run_lsmf",
    "random_baseline",
    "PURPOSE_INIT",
    "PURPOSE_LEARN",
    "PURPOSE_MUTATE",
    "PURPOSE_FORGET",
    "PURPOSE_CURVE",
    "PURPOSE_BASELINE",
    "PURPOSE_PERTURB",
]

log = logging.getLogger(__name__)

# Spawn-key purpose registry; the CLI uses the last three.
(
    PURPOSE_INIT,
    PURPOSE_LEARN,
    PURPOSE_MUTATE,
    PURPOSE_FORGET,
    PURPOSE_CURVE,
    PURPOSE_BASELINE,
    PURPOSE_PERTURB,
) = range(7)


class DivergenceError(RuntimeError):
    """Every individual in a population diverged (all errors non-finite)."""


def spawn_rng(master_seed: int, *key: int) -> np.random.Generator:
    """Independent, reproducible stream for (master_seed, purpose, indices...)."""
    return np.random.default_rng(
        np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(k) for k in key))
    )


@dataclass(frozen=True)
class LsmfConfig:
    """All hyperparameters of one LSMF run."""

    shape: GenomeShape
    population_size: int = 100
    cycles_per_iteration: int = 30
    iterations: int = 10
    cooldown_epochs: int = 1
    function_mutation_rate: float = 0.02
    connection_mutation_rate: float = 0.01
    train: TrainConfig = TrainConfig()
    seed: int = 0

    def __post_init__(self):
        if self.population_size < 2:
            raise ValueError(f"population_size must be >= 2, got {self.population_size}")
        for name in ("cycles_per_iteration", "iterations", "cooldown_epochs"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        for name in ("function_mutation_rate", "connection_mutation_rate"):
            rate = getattr(self, name)
            if not 0.0 <= rate <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {rate}")


@dataclass(frozen=True)
class MutationSummary:
    """Flat indices of the genes a mutant differs from its parent in."""

    connection_genes: tuple[int, ...]
    function_genes: tuple[int, ...]


@dataclass(eq=False)
class CycleLog:
    iteration: int
    cycle: int
    train_errors: tuple[float, ...]
    selected_index: int
    n_connection_mutations: int
    n_function_mutations: int
    mutation_summaries: tuple[MutationSummary, ...]

    @property
    def best_train_error(self) -> float:
        return self.train_errors[self.selected_index]


@dataclass(eq=False)
class IterationResult:
    iteration: int
    best: Genome
    cycle_logs: list[CycleLog]
    stats: TopologyStats


# ---------------------------------------------------------------------------
# mutation


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def _mutation_pools(genome: Genome):
    """(connection-gene pool, function-gene pool) of *active* mutable genes.

    The connection pool holds flat connection-gene indices of active nodes;
    the function pool holds internal-node indices of active hidden nodes (the
    output column's kernel is fixed by design).  Genes whose legal range has
    fewer than two values are excluded (they cannot change).
    """
    shape = genome.shape
    graph = active_graph(genome)
    conn_pool = []
    offsets = _conn_offsets(shape)
    for nid in graph.internal_ids:
        ii = int(nid) - shape.n_inputs
        lo, hi = shape.source_bounds(shape.column_of(int(nid)))
        if hi - lo >= 2:
            conn_pool.extend(range(offsets[ii], offsets[ii + 1]))
    output_start = shape.column_start(shape.cols + 1)
    func_pool = [
        int(nid) - shape.n_inputs
        for nid in graph.internal_ids
        if nid < output_start
    ]
    if len(shape.kernel_set) < 2:
        func_pool = []
    return np.asarray(conn_pool, dtype=np.int64), np.asarray(func_pool, dtype=np.int64)


def mutation_counts(genome: Genome, function_rate: float, connection_rate: float) -> tuple[int, int]:
    """(m_f, m_c): how many function/connection genes one mutation changes.

    m = max(1, round-half-up(rate x active-gene-count)), counted over active
    connection genes and active hidden function genes respectively, then
    capped by the mutable pool size.
    """
    graph = active_graph(genome)
    shape = genome.shape
    a_c = int(graph.active_weight_indices.size)
    output_start = shape.column_start(shape.cols + 1)
    a_f = int(np.count_nonzero(graph.internal_ids < output_start))
    conn_pool, func_pool = _mutation_pools(genome)
    m_c = min(max(1, _round_half_up(connection_rate * a_c)), conn_pool.size)
    m_f = min(max(1, _round_half_up(function_rate * a_f)), func_pool.size)
    return m_f, m_c


def _resample_excluding(rng: np.random.Generator, lo: int, hi: int, current: int) -> int:
    """Uniform draw from [lo, hi) excluding ``current`` (range size >= 2)."""
    draw = int(rng.integers(lo, hi - 1))
    return draw + 1 if draw >= current else draw


def mutate(genome: Genome, function_rate: float, connection_rate: float,
           rng: np.random.Generator) -> Genome:
    """Point-mutate active topology genes; x_R is shared untouched.

    Connection genes are mutated first, then function genes; each chosen gene
    is resampled uniformly over its legal range excluding its current value,
    so every chosen gene really changes.
    """
    shape = genome.shape
    conn_pool, func_pool = _mutation_pools(genome)
    m_f, m_c = mutation_counts(genome, function_rate, connection_rate)

    connection_genes = genome.topology.connection_genes.copy()
    function_genes = genome.topology.function_genes.copy()
    offsets = _conn_offsets(shape)
    if m_c:
        for q in rng.choice(conn_pool, size=m_c, replace=False):
            ii = int(np.searchsorted(offsets, q, side="right")) - 1
            lo, hi = shape.source_bounds(shape.column_of(shape.n_inputs + ii))
            connection_genes[q] = _resample_excluding(rng, lo, hi, int(connection_genes[q]))
    if m_f:
        for ii in rng.choice(func_pool, size=m_f, replace=False):
            function_genes[ii] = _resample_excluding(
                rng, 0, len(shape.kernel_set), int(function_genes[ii])
            )
    topology = IntegerChromosome(function_genes, connection_genes, genome.topology.output_genes)
    return genome.with_topology(topology)


def gene_diff(parent: Genome, child: Genome) -> MutationSummary:
    """Which topology genes differ between two genomes of the same shape."""
    if parent.shape != child.shape:
        raise ValueError("genomes have different shapes")
    return MutationSummary(
        connection_genes=tuple(
            int(i) for i in np.flatnonzero(
                parent.topology.connection_genes != child.topology.connection_genes
            )
        ),
        function_genes=tuple(
            int(i) for i in np.flatnonzero(
                parent.topology.function_genes != child.topology.function_genes
            )
        ),
    )


# ---------------------------------------------------------------------------
# LSMF steps


def learn_step(population: list[Genome], data: Dataset, cfg: LsmfConfig,
               rngs: list[np.random.Generator] | None = None,
               threads: int = 1) -> tuple[list[Genome], list[float]]:
    """Train every individual for C epochs; returns (trained population,
    per-individual full-training-set MSE).

    A numerically diverging individual keeps its pre-training parameters and
    gets an error of +inf (it can never be selected).
    """
    if rngs is None:
        rngs = [spawn_rng(cfg.seed, PURPOSE_LEARN, 0, 0, i) for i in range(len(population))]
    if len(rngs) != len(population):
        raise ValueError(f"{len(rngs)} rng streams for {len(population)} individuals")

    def work(i: int) -> tuple[Genome, float]:
        try:
            trained, _ = train(population[i], data, cfg.cooldown_epochs, cfg.train, rngs[i])
            return trained, evaluate(trained, data)
        except NonFiniteError as exc:
            log.warning("individual %d diverged during Learn: %s", i, exc)
            return population[i], math.inf

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, range(len(population))))
    else:
        results = [work(i) for i in range(len(population))]
    return [g for g, _ in results], [e for _, e in results]


def select_step(population: list[Genome], errors: list[float]) -> int:
    """Index of the minimum-error individual (ties -> lowest index)."""
    if len(population) != len(errors):
        raise ValueError(f"{len(errors)} errors for {len(population)} individuals")
    if not population:
        raise ValueError("empty population")
    best = min(range(len(errors)), key=lambda i: errors[i])
    if not math.isfinite(errors[best]):
        raise DivergenceError("every individual diverged (all training errors non-finite)")
    return best


def mutate_step(best: Genome, cfg: LsmfConfig, rng: np.random.Generator) -> list[Genome]:
    """Elite plus N-1 fresh mutants of it (Lamarckian: mutants share its x_R)."""
    return [best] + [
        mutate(best, cfg.function_mutation_rate, cfg.connection_mutation_rate, rng)
        for _ in range(cfg.population_size - 1)
    ]


def forget_step(population: list[Genome], rng: np.random.Generator) -> list[Genome]:
    """Fresh N(0,1) weights and zero biases for everyone; x_I untouched."""
    return [
        g.with_params(
            RealChromosome(rng.standard_normal(g.n_weights), np.zeros(g.n_biases))
        )
        for g in population
    ]


def run_lsmf(cfg: LsmfConfig, data: Dataset, threads: int = 1,
             progress=None) -> list[IterationResult]:
    """Full LSMF run; returns one IterationResult per iteration.

    The iteration's best genome is the winner of its last Select (with its
    learned weights, i.e. *before* Forget).  ``progress``, if given, is
    called as ``progress(iteration, cycle, best_error)`` after every cycle.
    """
    if data.n_features != cfg.shape.n_inputs:
        raise ValueError(
            f"dataset has {data.n_features} features but the shape expects {cfg.shape.n_inputs}"
        )
    population = [
        build_template(cfg.shape.n_inputs, spawn_rng(cfg.seed, PURPOSE_INIT, i), shape=cfg.shape)
        for i in range(cfg.population_size)
    ]
    results: list[IterationResult] = []
    for it in range(cfg.iterations):
        logs: list[CycleLog] = []
        best: Genome | None = None
        for cyc in range(cfg.cycles_per_iteration):
            rngs = [
                spawn_rng(cfg.seed, PURPOSE_LEARN, it, cyc, i)
                for i in range(cfg.population_size)
            ]
            population, errors = learn_step(population, data, cfg, rngs, threads)
            best_index = select_step(population, errors)
            best = population[best_index]
            m_f, m_c = mutation_counts(
                best, cfg.function_mutation_rate, cfg.connection_mutation_rate
            )
            population = mutate_step(best, cfg, spawn_rng(cfg.seed, PURPOSE_MUTATE, it, cyc))
            logs.append(
                CycleLog(
                    iteration=it + 1,
                    cycle=cyc + 1,
                    train_errors=tuple(errors),
                    selected_index=best_index,
                    n_connection_mutations=m_c,
                    n_function_mutations=m_f,
                    mutation_summaries=tuple(
                        gene_diff(best, mutant) for mutant in population[1:]
                    ),
                )
            )
            if progress is not None:
                progress(it + 1, cyc + 1, errors[best_index])
        results.append(
            IterationResult(
                iteration=it + 1,
                best=best,
                cycle_logs=logs,
                stats=topology_stats(best),
            )
        )
        population = forget_step(population, spawn_rng(cfg.seed, PURPOSE_FORGET, it))
    return results


# ---------------------------------------------------------------------------
# random baseline


@dataclass(eq=False)
class BaselineResult:
    count: int
    epochs: int
    train_errors: tuple[float, ...]
    test_errors: tuple[float, ...]
    retained_indices: tuple[int, ...]
    mean_test_error: float
    std_test_error: float

    @property
    def n_discarded(self) -> int:
        return self.count - len(self.retained_indices)


def random_baseline(shape: GenomeShape, train_data: Dataset, test_data: Dataset,
                    count: int, epochs: int, cfg: TrainConfig,
                    rng: np.random.Generator, threads: int = 1) -> BaselineResult:
    """Train ``count`` random genomes and summarize their test error.

    The worst ceil(5%) individuals by test MSE are discarded before the
    mean/std are taken; divergent individuals (error +inf) sort worst, so
    they are discarded first.
    """
    if count < 20:
        raise ValueError(f"count must be >= 20, got {count}")
    if epochs < 1:
        raise ValueError(f"epochs must be >= 1, got {epochs}")
    streams = rng.spawn(count)

    def work(i: int) -> tuple[float, float]:
        genome = random_genome(shape, streams[i])
        try:
            trained, history = train(genome, train_data, epochs, cfg, streams[i])
            return history.train_loss[-1], evaluate(trained, test_data)
        except NonFiniteError as exc:
            log.warning("baseline individual %d diverged: %s", i, exc)
            return math.inf, math.inf

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(work, range(count)))
    else:
        outcomes = [work(i) for i in range(count)]
    train_errors = tuple(t for t, _ in outcomes)
    test_errors = tuple(e for _, e in outcomes)

    n_discard = math.ceil(0.05 * count)
    order = np.argsort(np.asarray(test_errors), kind="stable")
    retained = np.sort(order[: count - n_discard])
    kept = np.asarray(test_errors)[retained]
    return BaselineResult(
        count=count,
        epochs=epochs,
        train_errors=train_errors,
        test_errors=test_errors,
        retained_indices=tuple(int(i) for i in retained),
        mean_test_error=float(kept.mean()),
        std_test_error=float(kept.std()),
    )
