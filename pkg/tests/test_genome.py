import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import cgpann as cg
from cgpann.genome import _conn_offsets

from oracles import reachable_nodes


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def small_shapes() -> st.SearchStrategy[cg.GenomeShape]:
    """Random small-but-valid shapes for property tests."""

    @st.composite
    def build(draw):
        rows = draw(st.integers(1, 4))
        cols = draw(st.integers(1, 4))
        n_inputs = draw(st.integers(1, 4))
        n_outputs = draw(st.integers(1, 2))
        levels_back = draw(st.integers(1, cols + 1))
        arity = tuple(draw(st.integers(1, 5)) for _ in range(cols + 1))
        return cg.GenomeShape(n_inputs, n_outputs, rows, cols, levels_back, arity)

    return build()


# ---------------------------------------------------------------------------
# shape layout


def test_shape_invariants_rejected():
    with pytest.raises(ValueError, match="rows"):
        cg.GenomeShape(1, 1, 0, 1, 1, (1, 1))
    with pytest.raises(ValueError, match="arity_per_column"):
        cg.GenomeShape(1, 1, 1, 2, 1, (1, 1))
    with pytest.raises(ValueError, match="arity"):
        cg.GenomeShape(1, 1, 1, 1, 1, (0, 1))
    with pytest.raises(ValueError, match="kernel"):
        cg.GenomeShape(1, 1, 1, 1, 1, (1, 1), kernel_set=())
    with pytest.raises(ValueError, match="duplicates"):
        cg.GenomeShape(1, 1, 1, 1, 1, (1, 1), kernel_set=("tanh", "tanh"))
    with pytest.raises(ValueError, match="unknown kernel"):
        cg.GenomeShape(1, 1, 1, 1, 1, (1, 1), kernel_set=("tanh", "gauss"))


def test_column_layout():
    shape = cg.template_shape(3)
    assert shape.total_nodes == 3 + 40 + 1
    assert shape.column_of(0) == 0
    assert shape.column_of(2) == 0
    assert shape.column_of(3) == 1
    assert shape.column_of(12) == 1
    assert shape.column_of(13) == 2
    assert shape.column_of(43) == 5  # the output neuron
    # levels-back window of column 5 covers columns 2..4
    assert shape.source_bounds(5) == (13, 43)
    # column 1 sees only the inputs
    assert shape.source_bounds(1) == (0, 3)


def test_connection_gene_count_formula():
    """Template weight total is 10n + 310 for every input width."""
    for n, expected in [(21, 520), (8, 390), (10, 410), (14, 450), (9, 400)]:
        assert cg.connection_gene_count(cg.template_shape(n)) == expected
        assert expected == 10 * n + 310


# ---------------------------------------------------------------------------
# template construction


def test_template_structure(rng):
    g = cg.build_template(10, rng)
    shape = g.shape
    assert (shape.rows, shape.cols, shape.levels_back) == (10, 4, 3)
    assert shape.arity_per_column == (10, 10, 10, 10, 10)
    assert g.n_weights == 410 and g.n_biases == 41
    assert cg.validate(g) == []
    # hidden kernels tanh, output kernel sig, output gene pinned to the neuron
    names = [shape.kernel_set[i] for i in g.topology.function_genes]
    assert names[:40] == ["tanh"] * 40 and names[40] == "sig"
    assert list(g.topology.output_genes) == [50]
    assert np.all(g.params.biases == 0.0)
    # every node is wired to the whole previous column
    graph = cg.active_graph(g)
    assert graph.internal_ids.size == 41
    for nid, sources in zip(graph.internal_ids, graph.src_ids):
        col = shape.column_of(int(nid))
        lo = shape.column_start(col - 1)
        size = shape.n_inputs if col == 1 else shape.rows
        assert list(sources) == list(range(lo, lo + size))


def test_template_weights_standard_normal():
    g = cg.build_template(21, np.random.default_rng(0))
    w = g.params.weights
    assert w.size == 520
    assert abs(w.mean()) < 0.2 and abs(w.std() - 1.0) < 0.2


def test_template_rejects_incompatible_shape(rng):
    shape = cg.GenomeShape(4, 1, 3, 2, 1, (4, 2, 3))
    with pytest.raises(ValueError, match="feed-forward"):
        cg.build_template(4, rng, shape=shape)
    with pytest.raises(ValueError, match="n_inputs"):
        cg.build_template(5, rng, shape=cg.template_shape(4))


# ---------------------------------------------------------------------------
# random genomes


def test_random_genome_validates_and_pins_output(rng):
    shape = cg.GenomeShape(3, 1, 4, 3, 2, (3, 2, 4, 4))
    for _ in range(50):
        g = cg.random_genome(shape, rng)
        assert cg.validate(g) == []
        assert list(g.topology.output_genes) == [shape.column_start(shape.cols + 1)]
        assert shape.kernel_set[g.topology.function_genes[-1]] == "sig"
        assert int(g.topology.output_genes[0]) in reachable_nodes(g)


def test_random_genome_respects_levels_back(rng):
    """1000 random genomes on an l=3 shape: no connection spans more than 3 columns."""
    shape = cg.GenomeShape(2, 1, 2, 5, 3, (2, 2, 2, 2, 2, 2))
    offsets = _conn_offsets(shape)
    for _ in range(1000):
        g = cg.random_genome(shape, rng)
        for ii in range(shape.n_internal):
            col = shape.column_of(shape.n_inputs + ii)
            for src in g.topology.connection_genes[offsets[ii]:offsets[ii + 1]]:
                span = col - shape.column_of(int(src))
                assert 1 <= span <= 3


def test_random_genome_covers_full_gene_ranges(rng):
    """Each integer gene should reach its whole legal range over many draws."""
    shape = cg.GenomeShape(2, 1, 2, 2, 2, (2, 2, 2))
    seen_funcs = set()
    seen_first_conn = set()
    for _ in range(2000):
        g = cg.random_genome(shape, rng)
        seen_funcs.add(int(g.topology.function_genes[0]))
        seen_first_conn.add(int(g.topology.connection_genes[0]))
    assert seen_funcs == set(range(len(shape.kernel_set)))
    lo, hi = shape.source_bounds(1)
    assert seen_first_conn == set(range(lo, hi))


# ---------------------------------------------------------------------------
# validation


def test_validate_reports_levels_back_violation(rng):
    g = cg.build_template(10, rng)
    conn = g.topology.connection_genes.copy()
    # output-column node reaching into column 1 (4 columns back, l=3)
    conn[-1] = g.shape.column_start(1)
    bad = g.with_topology(
        cg.IntegerChromosome(g.topology.function_genes, conn, g.topology.output_genes)
    )
    problems = cg.validate(bad)
    assert len(problems) == 1 and "levels-back" in problems[0]


def test_validate_reports_length_mismatch(rng):
    g = cg.build_template(10, rng)
    bad = g.with_params(cg.RealChromosome(g.params.weights[:-1], g.params.biases))
    problems = cg.validate(bad)
    assert len(problems) == 1 and "weights" in problems[0]


def test_validate_reports_bad_function_gene(rng):
    g = cg.build_template(10, rng)
    funcs = g.topology.function_genes.copy()
    funcs[0] = 17
    bad = g.with_topology(
        cg.IntegerChromosome(funcs, g.topology.connection_genes, g.topology.output_genes)
    )
    assert any("function gene" in p for p in cg.validate(bad))


def test_validate_reports_non_finite_params(rng):
    g = cg.build_template(4, rng)
    w = g.params.weights.copy()
    w[3] = np.nan
    assert any("non-finite" in p for p in cg.validate(g.with_params(cg.RealChromosome(w, g.params.biases))))


# ---------------------------------------------------------------------------
# active graph


@settings(max_examples=60, deadline=None)
@given(shape=small_shapes(), seed=st.integers(0, 2**32 - 1))
def test_active_graph_matches_bfs_oracle(shape, seed):
    g = cg.random_genome(shape, np.random.default_rng(seed))
    graph = cg.active_graph(g)
    assert set(int(i) for i in graph.active_node_ids) == reachable_nodes(g)


@settings(max_examples=60, deadline=None)
@given(shape=small_shapes(), seed=st.integers(0, 2**32 - 1))
def test_active_graph_is_topologically_ordered(shape, seed):
    g = cg.random_genome(shape, np.random.default_rng(seed))
    graph = cg.active_graph(g)
    seen = set(int(i) for i in graph.input_ids)
    for nid, sources in zip(graph.internal_ids, graph.src_ids):
        for src in sources:
            assert int(src) in seen, f"node {nid} evaluated before its source {src}"
        seen.add(int(nid))


def test_active_graph_single_active_node():
    """Output neuron whose connections all point at input 0 - only it is active."""
    small = cg.GenomeShape(2, 1, 2, 1, 2, (2, 2))
    funcs = np.array([0, 0, 1])
    conn = np.array([0, 1, 0, 1, 0, 0])  # output neuron (last two genes) -> input 0 twice
    outs = np.array([4])
    g2 = cg.Genome(small, cg.IntegerChromosome(funcs, conn, outs),
                   cg.RealChromosome(np.zeros(6), np.zeros(3)))
    assert cg.validate(g2) == []
    graph = cg.active_graph(g2)
    assert list(graph.internal_ids) == [4]
    assert list(graph.input_ids) == [0]


def test_active_graph_ignores_inactive_gene_changes(rng):
    shape = cg.GenomeShape(3, 1, 3, 2, 1, (3, 3, 3))
    g = cg.random_genome(shape, rng)
    graph = cg.active_graph(g)
    active = set(int(i) for i in graph.active_node_ids)
    inactive_internal = [
        ii for ii in range(shape.n_internal) if shape.n_inputs + ii not in active
    ]
    if not inactive_internal:
        pytest.skip("random genome happened to use every node")
    offsets = _conn_offsets(shape)
    conn = g.topology.connection_genes.copy()
    funcs = g.topology.function_genes.copy()
    for ii in inactive_internal:
        lo, hi = shape.source_bounds(shape.column_of(shape.n_inputs + ii))
        conn[offsets[ii]:offsets[ii + 1]] = lo
        funcs[ii] = (funcs[ii] + 1) % len(shape.kernel_set)
    g2 = g.with_topology(cg.IntegerChromosome(funcs, conn, g.topology.output_genes))
    graph2 = cg.active_graph(g2)
    assert set(int(i) for i in graph2.active_node_ids) == active
    assert [list(s) for s in graph2.src_ids] == [list(s) for s in graph.src_ids]


# ---------------------------------------------------------------------------
# serialization


def test_json_round_trip_is_lossless(rng):
    g = cg.build_template(7, rng)
    # make the payload awkward on purpose
    w = g.params.weights.copy()
    w[0] = 1e-308
    w[1] = -0.1 + 0.2  # classic repr stress
    w[2] = 12345678.901234567
    g = g.with_params(cg.RealChromosome(w, g.params.biases))
    text = cg.to_json(g)
    back = cg.from_json(text)
    assert back.shape == g.shape
    assert np.array_equal(back.topology.function_genes, g.topology.function_genes)
    assert np.array_equal(back.topology.connection_genes, g.topology.connection_genes)
    assert np.array_equal(back.topology.output_genes, g.topology.output_genes)
    assert np.array_equal(back.params.weights, g.params.weights)
    assert np.array_equal(back.params.biases, g.params.biases)
    # and the text itself is stable
    assert cg.to_json(back) == text


def test_save_and_load_genome(tmp_path, rng):
    g = cg.random_genome(cg.template_shape(4), rng)
    path = tmp_path / "g.json"
    cg.save_genome(g, path)
    back = cg.load_genome(path)
    assert cg.validate(back) == []
    assert np.array_equal(back.params.weights, g.params.weights)


def test_from_json_rejects_bad_documents(rng):
    g = cg.build_template(3, rng)
    doc = json.loads(cg.to_json(g))

    broken = dict(doc)
    del broken["weights"]
    with pytest.raises(ValueError, match="missing"):
        cg.from_json(json.dumps(broken))

    broken = dict(doc)
    broken["extra"] = 1
    with pytest.raises(ValueError, match="unknown"):
        cg.from_json(json.dumps(broken))

    broken = json.loads(cg.to_json(g))
    broken["function_genes"][0] = 99
    with pytest.raises(ValueError, match="invalid genome"):
        cg.from_json(json.dumps(broken))

    broken = json.loads(cg.to_json(g))
    broken["function_genes"][0] = 1.5
    with pytest.raises(ValueError, match="integers"):
        cg.from_json(json.dumps(broken))

    with pytest.raises(ValueError, match="JSON"):
        cg.from_json("not json at all {")
