"""dCGPANN genome encoding.

A genome is a Cartesian grid of neurons plus the parameters to run them:

* ``GenomeShape`` — the static layout: input count, a ``rows x cols`` grid of
  hidden neurons, an output column, per-column arity, levels-back and the
  kernel set.  Node ids are assigned column-major: inputs occupy ids
  ``0 .. n_inputs-1`` (column 0), hidden column ``c`` (1-based) occupies the
  next ``rows`` ids, and the output column (``cols + 1``) holds ``n_outputs``
  ids at the end.  Because ids grow with the column index, ascending id order
  is always a valid topological order.
* ``IntegerChromosome`` (x_I) — function gene per internal node, connection
  genes (node-major, ``arity`` entries per node) and one output gene per
  network output naming the node whose value is emitted.
* ``RealChromosome`` (x_R) — one weight per connection gene and one bias per
  internal node.

Genomes are treated as immutable values: every operation that "changes" a
genome returns a new one, and distinct genomes may safely share chromosome
arrays.  Do not mutate the arrays in place.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .kernels import KERNEL_NAMES, _lookup

__all__ = [
    "GenomeShape",
    "IntegerChromosome",
    "RealChromosome",
    "Genome",
    "ActiveGraph",
    "template_shape",
    "build_template",
    "random_genome",
    "connection_gene_count",
    "validate",
    "active_graph",
    "to_json",
    "from_json",
    "save_genome",
    "load_genome",
]

TEMPLATE_ROWS = 10
TEMPLATE_COLS = 4
TEMPLATE_LEVELS_BACK = 3


@dataclass(frozen=True)
class GenomeShape:
    """Static layout of a genome; hashable so derived layout data can be cached.

    ``arity_per_column`` has ``cols + 1`` entries: one per hidden column
    (columns ``1 .. cols``) followed by the output column's arity.
    """

    n_inputs: int
    n_outputs: int
    rows: int
    cols: int
    levels_back: int
    arity_per_column: tuple[int, ...]
    kernel_set: tuple[str, ...] = KERNEL_NAMES

    def __post_init__(self):
        object.__setattr__(self, "arity_per_column", tuple(int(a) for a in self.arity_per_column))
        object.__setattr__(self, "kernel_set", tuple(self.kernel_set))
        for name in ("n_inputs", "n_outputs", "rows", "cols", "levels_back"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
            object.__setattr__(self, name, int(getattr(self, name)))
        if len(self.arity_per_column) != self.cols + 1:
            raise ValueError(
                f"arity_per_column needs cols + 1 = {self.cols + 1} entries "
                f"(hidden columns then the output column), got {len(self.arity_per_column)}"
            )
        if any(a < 1 for a in self.arity_per_column):
            raise ValueError("every column arity must be >= 1")
        if not self.kernel_set:
            raise ValueError("kernel_set must not be empty")
        if len(set(self.kernel_set)) != len(self.kernel_set):
            raise ValueError("kernel_set contains duplicates")
        for k in self.kernel_set:
            _lookup(k)  # raises ValueError for unknown kernels

    # -- derived layout ----------------------------------------------------

    @property
    def n_hidden(self) -> int:
        return self.rows * self.cols

    @property
    def n_internal(self) -> int:
        """Hidden neurons plus output neurons (everything that owns genes)."""
        return self.n_hidden + self.n_outputs

    @property
    def total_nodes(self) -> int:
        return self.n_inputs + self.n_internal

    def column_start(self, col: int) -> int:
        """First node id of ``col`` (0 = inputs, 1..cols hidden, cols+1 outputs)."""
        if col == 0:
            return 0
        if 1 <= col <= self.cols:
            return self.n_inputs + (col - 1) * self.rows
        if col == self.cols + 1:
            return self.n_inputs + self.n_hidden
        raise ValueError(f"column {col} out of range 0..{self.cols + 1}")

    def column_of(self, node_id: int) -> int:
        if not 0 <= node_id < self.total_nodes:
            raise ValueError(f"node id {node_id} out of range 0..{self.total_nodes - 1}")
        if node_id < self.n_inputs:
            return 0
        hidden_index = node_id - self.n_inputs
        if hidden_index < self.n_hidden:
            return 1 + hidden_index // self.rows
        return self.cols + 1

    def column_arity(self, col: int) -> int:
        if not 1 <= col <= self.cols + 1:
            raise ValueError(f"column {col} has no arity (internal columns are 1..{self.cols + 1})")
        return self.arity_per_column[col - 1]

    def node_arity(self, node_id: int) -> int:
        return self.column_arity(self.column_of(node_id))

    def source_bounds(self, col: int) -> tuple[int, int]:
        """Half-open node-id range a node in ``col`` may connect to.

        The levels-back window covers columns ``max(0, col - levels_back)``
        through ``col - 1``; column-major id assignment makes that a single
        contiguous range.
        """
        if not 1 <= col <= self.cols + 1:
            raise ValueError(f"column {col} cannot have incoming connections")
        lo_col = max(0, col - self.levels_back)
        return self.column_start(lo_col), self.column_start(col)


@lru_cache(maxsize=None)
def _conn_offsets(shape: GenomeShape) -> np.ndarray:
    """Prefix offsets into the flat connection-gene array, one per internal node."""
    arities = np.empty(shape.n_internal, dtype=np.int64)
    for ii in range(shape.n_internal):
        arities[ii] = shape.node_arity(shape.n_inputs + ii)
    offsets = np.zeros(shape.n_internal + 1, dtype=np.int64)
    np.cumsum(arities, out=offsets[1:])
    offsets.setflags(write=False)
    return offsets


def connection_gene_count(shape: GenomeShape) -> int:
    """Total number of connection genes (equivalently, of weights)."""
    return int(_conn_offsets(shape)[-1])


@dataclass(eq=False)
class IntegerChromosome:
    """x_I: function genes, flat node-major connection genes, output genes."""

    function_genes: np.ndarray
    connection_genes: np.ndarray
    output_genes: np.ndarray

    def __post_init__(self):
        self.function_genes = np.asarray(self.function_genes, dtype=np.int64)
        self.connection_genes = np.asarray(self.connection_genes, dtype=np.int64)
        self.output_genes = np.asarray(self.output_genes, dtype=np.int64)


@dataclass(eq=False)
class RealChromosome:
    """x_R: one weight per connection gene, one bias per internal node."""

    weights: np.ndarray
    biases: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.biases = np.asarray(self.biases, dtype=np.float64)


@dataclass(eq=False)
class Genome:
    shape: GenomeShape
    topology: IntegerChromosome
    params: RealChromosome

    def with_params(self, params: RealChromosome) -> "Genome":
        return Genome(self.shape, self.topology, params)

    def with_topology(self, topology: IntegerChromosome) -> "Genome":
        return Genome(self.shape, topology, self.params)

    @property
    def n_weights(self) -> int:
        return self.params.weights.size

    @property
    def n_biases(self) -> int:
        return self.params.biases.size


# ---------------------------------------------------------------------------
# construction


def template_shape(
    n_inputs: int,
    *,
    rows: int = TEMPLATE_ROWS,
    cols: int = TEMPLATE_COLS,
    levels_back: int = TEMPLATE_LEVELS_BACK,
    n_outputs: int = 1,
    kernel_set: tuple[str, ...] = KERNEL_NAMES,
) -> GenomeShape:
    """Shape of the canonical feed-forward starting network.

    Column 1 takes every input (arity ``n_inputs``); every later column,
    including the output column, takes a whole previous column (arity
    ``rows``).
    """
    arity = (n_inputs,) + (rows,) * (cols - 1) + (rows,)
    return GenomeShape(n_inputs, n_outputs, rows, cols, levels_back, arity, kernel_set)


def build_template(
    n_inputs: int,
    rng: np.random.Generator,
    *,
    shape: GenomeShape | None = None,
    hidden_kernel: str = "tanh",
    output_kernel: str = "sig",
) -> Genome:
    """Fully connected feed-forward genome: the evolution starting point.

    Every neuron in column ``c`` connects to all of column ``c - 1`` (in
    ascending id order); hidden neurons are ``hidden_kernel``, output neurons
    ``output_kernel``; weights are drawn from N(0, 1), biases start at 0.

    A custom ``shape`` must be feed-forward compatible: column 1 arity equal
    to ``n_inputs`` and every later arity equal to ``rows``.
    """
    if shape is None:
        shape = template_shape(n_inputs)
    else:
        if shape.n_inputs != n_inputs:
            raise ValueError("shape.n_inputs disagrees with n_inputs")
        expected = (shape.n_inputs,) + (shape.rows,) * shape.cols
        if shape.arity_per_column != expected:
            raise ValueError(
                "shape is not feed-forward compatible: arity per column must be "
                f"{expected}, got {shape.arity_per_column}"
            )
    for kernel in (hidden_kernel, output_kernel):
        if kernel not in shape.kernel_set:
            raise ValueError(f"kernel {kernel!r} not in kernel set {shape.kernel_set}")

    function_genes = np.full(shape.n_internal, shape.kernel_set.index(hidden_kernel), dtype=np.int64)
    function_genes[shape.n_hidden:] = shape.kernel_set.index(output_kernel)

    connection_genes = np.empty(connection_gene_count(shape), dtype=np.int64)
    offsets = _conn_offsets(shape)
    for ii in range(shape.n_internal):
        node_id = shape.n_inputs + ii
        col = shape.column_of(node_id)
        prev_start = shape.column_start(col - 1)
        prev_size = shape.n_inputs if col == 1 else shape.rows
        connection_genes[offsets[ii]:offsets[ii + 1]] = np.arange(prev_start, prev_start + prev_size)

    output_genes = shape.column_start(shape.cols + 1) + np.arange(shape.n_outputs, dtype=np.int64)

    weights = rng.standard_normal(connection_genes.size)
    biases = np.zeros(shape.n_internal)
    return Genome(
        shape,
        IntegerChromosome(function_genes, connection_genes, output_genes),
        RealChromosome(weights, biases),
    )


def random_genome(shape: GenomeShape, rng: np.random.Generator,
                  output_kernel: str = "sig") -> Genome:
    """Uniformly random valid genome.

    Hidden function genes are uniform over the kernel set and every connection
    gene is uniform over its node's levels-back window; weights are N(0, 1),
    biases 0.  As with the template, the output genes stay pinned to the
    output-column neurons and those neurons keep the ``output_kernel``, so the
    output neuron is always active.
    """
    if output_kernel not in shape.kernel_set:
        raise ValueError(f"kernel {output_kernel!r} not in kernel set {shape.kernel_set}")
    function_genes = rng.integers(len(shape.kernel_set), size=shape.n_internal)
    function_genes[shape.n_hidden:] = shape.kernel_set.index(output_kernel)
    connection_genes = np.empty(connection_gene_count(shape), dtype=np.int64)
    offsets = _conn_offsets(shape)
    for ii in range(shape.n_internal):
        lo, hi = shape.source_bounds(shape.column_of(shape.n_inputs + ii))
        connection_genes[offsets[ii]:offsets[ii + 1]] = rng.integers(lo, hi, size=offsets[ii + 1] - offsets[ii])
    output_genes = shape.column_start(shape.cols + 1) + np.arange(shape.n_outputs, dtype=np.int64)
    weights = rng.standard_normal(connection_genes.size)
    biases = np.zeros(shape.n_internal)
    return Genome(
        shape,
        IntegerChromosome(function_genes, connection_genes, output_genes),
        RealChromosome(weights, biases),
    )


# ---------------------------------------------------------------------------
# validation


def validate(genome: Genome) -> list[str]:
    """Return a list of human-readable constraint violations (empty if valid)."""
    shape = genome.shape
    topo = genome.topology
    params = genome.params
    problems: list[str] = []

    if topo.function_genes.shape != (shape.n_internal,):
        problems.append(
            f"function_genes has length {topo.function_genes.size}, expected {shape.n_internal}"
        )
    else:
        bad = np.flatnonzero(
            (topo.function_genes < 0) | (topo.function_genes >= len(shape.kernel_set))
        )
        for ii in bad:
            problems.append(
                f"function gene of node {shape.n_inputs + ii} is {topo.function_genes[ii]}, "
                f"outside kernel set of size {len(shape.kernel_set)}"
            )

    n_conn = connection_gene_count(shape)
    if topo.connection_genes.shape != (n_conn,):
        problems.append(
            f"connection_genes has length {topo.connection_genes.size}, expected {n_conn}"
        )
    else:
        offsets = _conn_offsets(shape)
        for ii in range(shape.n_internal):
            node_id = shape.n_inputs + ii
            lo, hi = shape.source_bounds(shape.column_of(node_id))
            genes = topo.connection_genes[offsets[ii]:offsets[ii + 1]]
            for j in np.flatnonzero((genes < lo) | (genes >= hi)):
                problems.append(
                    f"connection gene {j} of node {node_id} points at {genes[j]}, "
                    f"outside its levels-back window [{lo}, {hi})"
                )

    if topo.output_genes.shape != (shape.n_outputs,):
        problems.append(
            f"output_genes has length {topo.output_genes.size}, expected {shape.n_outputs}"
        )
    else:
        for k in np.flatnonzero((topo.output_genes < 0) | (topo.output_genes >= shape.total_nodes)):
            problems.append(
                f"output gene {k} points at {topo.output_genes[k]}, "
                f"outside node ids [0, {shape.total_nodes})"
            )

    if params.weights.shape != (n_conn,):
        problems.append(f"weights has length {params.weights.size}, expected {n_conn}")
    if params.biases.shape != (shape.n_internal,):
        problems.append(f"biases has length {params.biases.size}, expected {shape.n_internal}")
    if not np.isfinite(params.weights).all():
        problems.append("weights contain non-finite values")
    if not np.isfinite(params.biases).all():
        problems.append("biases contain non-finite values")
    return problems


def _check_valid(genome: Genome) -> Genome:
    problems = validate(genome)
    if problems:
        raise ValueError("invalid genome: " + "; ".join(problems))
    return genome


# ---------------------------------------------------------------------------
# active graph


@dataclass(eq=False)
class ActiveGraph:
    """Evaluation-ready view of a genome's active (output-reachable) subgraph.

    ``input_ids`` and ``internal_ids`` are ascending, which is a topological
    order.  Node values live in a matrix with one column per active node
    (inputs first); ``position`` maps node id -> column.  Per active internal
    node ``k``: ``src_pos[k]`` are its sources' value columns, ``src_ids[k]``
    the source node ids, ``weight_idx[k]`` its flat weight slots and
    ``bias_idx[k]`` its bias slot.
    """

    shape: GenomeShape
    input_ids: np.ndarray
    internal_ids: np.ndarray
    position: dict[int, int]
    kernel_names: list[str]
    kernel_fns: list[tuple]
    bias_idx: np.ndarray
    src_pos: list[np.ndarray]
    src_ids: list[np.ndarray]
    weight_idx: list[np.ndarray]
    output_pos: np.ndarray

    @property
    def n_active(self) -> int:
        return self.input_ids.size + self.internal_ids.size

    @property
    def active_node_ids(self) -> np.ndarray:
        return np.concatenate([self.input_ids, self.internal_ids])

    @property
    def active_weight_indices(self) -> np.ndarray:
        if not self.weight_idx:
            return np.empty(0, dtype=np.int64)
        return np.concatenate(self.weight_idx)


def active_graph(genome: Genome) -> ActiveGraph:
    """Backward-reachability sweep from the output genes."""
    shape = genome.shape
    topo = genome.topology
    offsets = _conn_offsets(shape)
    conn = topo.connection_genes

    active = np.zeros(shape.total_nodes, dtype=bool)
    stack = [int(g) for g in topo.output_genes]
    while stack:
        nid = stack.pop()
        if active[nid]:
            continue
        active[nid] = True
        ii = nid - shape.n_inputs
        if ii >= 0:
            stack.extend(int(s) for s in conn[offsets[ii]:offsets[ii + 1]])

    input_ids = np.flatnonzero(active[: shape.n_inputs])
    internal_ids = np.flatnonzero(active[shape.n_inputs:]) + shape.n_inputs

    pos_of = np.full(shape.total_nodes, -1, dtype=np.int64)
    ordered = np.concatenate([input_ids, internal_ids])
    pos_of[ordered] = np.arange(ordered.size)
    position = {int(nid): int(pos_of[nid]) for nid in ordered}

    kernel_names: list[str] = []
    kernel_fns: list[tuple] = []
    src_pos: list[np.ndarray] = []
    src_ids: list[np.ndarray] = []
    weight_idx: list[np.ndarray] = []
    for nid in internal_ids:
        ii = int(nid) - shape.n_inputs
        name = shape.kernel_set[topo.function_genes[ii]]
        kernel_names.append(name)
        kernel_fns.append(_lookup(name))
        sources = conn[offsets[ii]:offsets[ii + 1]]
        src_ids.append(sources.copy())
        src_pos.append(pos_of[sources])
        weight_idx.append(np.arange(offsets[ii], offsets[ii + 1], dtype=np.int64))

    return ActiveGraph(
        shape=shape,
        input_ids=input_ids,
        internal_ids=internal_ids,
        position=position,
        kernel_names=kernel_names,
        kernel_fns=kernel_fns,
        bias_idx=internal_ids - shape.n_inputs,
        src_pos=src_pos,
        src_ids=src_ids,
        weight_idx=weight_idx,
        output_pos=pos_of[topo.output_genes],
    )


# ---------------------------------------------------------------------------
# serialization

_JSON_FIELDS = ("shape", "function_genes", "connection_genes", "output_genes", "weights", "biases")
_SHAPE_FIELDS = ("n_inputs", "n_outputs", "rows", "cols", "levels_back", "arity_per_column", "kernel_set")


def to_json(genome: Genome) -> str:
    """Lossless JSON form (floats rendered with repr round-trip precision)."""
    shape = genome.shape
    doc = {
        "shape": {
            "n_inputs": shape.n_inputs,
            "n_outputs": shape.n_outputs,
            "rows": shape.rows,
            "cols": shape.cols,
            "levels_back": shape.levels_back,
            "arity_per_column": list(shape.arity_per_column),
            "kernel_set": list(shape.kernel_set),
        },
        "function_genes": genome.topology.function_genes.tolist(),
        "connection_genes": genome.topology.connection_genes.tolist(),
        "output_genes": genome.topology.output_genes.tolist(),
        "weights": genome.params.weights.tolist(),
        "biases": genome.params.biases.tolist(),
    }
    return json.dumps(doc, indent=2) + "\n"


def from_json(text: str) -> Genome:
    """Parse and fully validate a genome document (raises ValueError)."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ValueError("genome document must be a JSON object")
    missing = [f for f in _JSON_FIELDS if f not in doc]
    unknown = [f for f in doc if f not in _JSON_FIELDS]
    if missing:
        raise ValueError(f"genome document is missing fields: {missing}")
    if unknown:
        raise ValueError(f"genome document has unknown fields: {unknown}")
    sh = doc["shape"]
    if not isinstance(sh, dict):
        raise ValueError("shape must be a JSON object")
    missing = [f for f in _SHAPE_FIELDS if f not in sh]
    unknown = [f for f in sh if f not in _SHAPE_FIELDS]
    if missing:
        raise ValueError(f"shape is missing fields: {missing}")
    if unknown:
        raise ValueError(f"shape has unknown fields: {unknown}")
    try:
        shape = GenomeShape(
            n_inputs=sh["n_inputs"],
            n_outputs=sh["n_outputs"],
            rows=sh["rows"],
            cols=sh["cols"],
            levels_back=sh["levels_back"],
            arity_per_column=tuple(sh["arity_per_column"]),
            kernel_set=tuple(sh["kernel_set"]),
        )
    except (TypeError, ValueError) as exc:
        raise ValueError(f"bad shape: {exc}") from exc
    for field in ("function_genes", "connection_genes", "output_genes"):
        values = doc[field]
        if not isinstance(values, list) or any(not isinstance(v, int) for v in values):
            raise ValueError(f"{field} must be a list of integers")
    for field in ("weights", "biases"):
        values = doc[field]
        if not isinstance(values, list) or any(not isinstance(v, (int, float)) for v in values):
            raise ValueError(f"{field} must be a list of numbers")
    try:
        genome = Genome(
            shape,
            IntegerChromosome(
                np.asarray(doc["function_genes"]),
                np.asarray(doc["connection_genes"]),
                np.asarray(doc["output_genes"]),
            ),
            RealChromosome(np.asarray(doc["weights"]), np.asarray(doc["biases"])),
        )
    except (TypeError, ValueError) as exc:
        raise ValueError(f"bad chromosome arrays: {exc}") from exc
    return _check_valid(genome)


def save_genome(genome: Genome, path) -> None:
    Path(path).write_text(to_json(genome), encoding="utf-8")


def load_genome(path) -> Genome:
    return from_json(Path(path).read_text(encoding="utf-8"))
