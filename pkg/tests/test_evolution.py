import math

import numpy as np
import pytest

import cgpann as cg


def sigmoid_data(n=40, n_features=3, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, n_features))
    y = 1.0 / (1.0 + np.exp(-(X @ rng.normal(size=n_features))))
    return cg.Dataset(features=X, target=y)


def small_lsmf_config(**overrides) -> cg.LsmfConfig:
    defaults = dict(
        shape=cg.GenomeShape(3, 1, 4, 3, 2, (3, 4, 4, 4)),
        population_size=4,
        cycles_per_iteration=3,
        iterations=2,
        cooldown_epochs=1,
        train=cg.TrainConfig(learning_rate=0.05, batch_size=10),
        seed=7,
    )
    defaults.update(overrides)
    return cg.LsmfConfig(**defaults)


def diverging_genome() -> cg.Genome:
    """1-input ReLU chain with astronomic weights: any training step blows up."""
    shape = cg.GenomeShape(1, 1, 1, 1, 1, (1, 1))
    ks = shape.kernel_set
    topo = cg.IntegerChromosome(
        np.array([ks.index("ReLU"), ks.index("ReLU")]),
        np.array([0, 1]),
        np.array([2]),
    )
    return cg.Genome(shape, topo, cg.RealChromosome(np.array([1e308, 1e308]), np.zeros(2)))


# ---------------------------------------------------------------------------
# rng streams


def test_spawn_rng_is_keyed_and_reproducible():
    a = cg.spawn_rng(5, cg.PURPOSE_LEARN, 1, 2, 3).standard_normal(4)
    b = cg.spawn_rng(5, cg.PURPOSE_LEARN, 1, 2, 3).standard_normal(4)
    c = cg.spawn_rng(5, cg.PURPOSE_LEARN, 1, 2, 4).standard_normal(4)
    d = cg.spawn_rng(6, cg.PURPOSE_LEARN, 1, 2, 3).standard_normal(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)


def test_purpose_constants_are_distinct():
    purposes = [
        cg.PURPOSE_INIT, cg.PURPOSE_LEARN, cg.PURPOSE_MUTATE, cg.PURPOSE_FORGET,
        cg.PURPOSE_CURVE, cg.PURPOSE_BASELINE, cg.PURPOSE_PERTURB,
    ]
    assert len(set(purposes)) == len(purposes)


# ---------------------------------------------------------------------------
# config


def test_lsmf_config_validation():
    shape = cg.template_shape(3)
    with pytest.raises(ValueError, match="population_size"):
        cg.LsmfConfig(shape=shape, population_size=1)
    with pytest.raises(ValueError, match="cycles_per_iteration"):
        cg.LsmfConfig(shape=shape, cycles_per_iteration=0)
    with pytest.raises(ValueError, match="function_mutation_rate"):
        cg.LsmfConfig(shape=shape, function_mutation_rate=1.5)
    with pytest.raises(ValueError, match="connection_mutation_rate"):
        cg.LsmfConfig(shape=shape, connection_mutation_rate=-0.1)


# ---------------------------------------------------------------------------
# mutation


def test_mutation_counts_on_template():
    g = cg.build_template(10, np.random.default_rng(0))
    # 410 active connection genes at 1% -> 4.1 -> 4; 40 active hidden
    # function genes at 2% -> 0.8 -> 1
    assert cg.mutation_counts(g, 0.02, 0.01) == (1, 4)


def test_mutation_counts_round_half_up_and_floor_of_one():
    g = cg.build_template(10, np.random.default_rng(0))
    # 410 * x: pick rates that land exactly on .5 boundaries
    assert cg.mutation_counts(g, 0.0, 0.0) == (1, 1)  # never less than one
    m_f, m_c = cg.mutation_counts(g, 0.0375, 0.0086)
    assert (m_f, m_c) == (2, 4)  # 40*0.0375 = 1.5 -> 2; 410*0.0086 = 3.526 -> 4


def test_mutation_counts_capped_by_pool():
    # n_inputs=1 leaves column-1 windows with a single legal source, so those
    # 10 genes cannot change; the pool is 320 - 10 = 310
    g = cg.build_template(1, np.random.default_rng(0))
    m_f, m_c = cg.mutation_counts(g, 1.0, 1.0)
    assert m_c == 310
    assert m_f == 40


def test_mutate_changes_exactly_the_promised_genes():
    g = cg.build_template(10, np.random.default_rng(1))
    rng = np.random.default_rng(2)
    for _ in range(25):
        child = cg.mutate(g, 0.02, 0.01, rng)
        diff = cg.gene_diff(g, child)
        assert len(diff.connection_genes) == 4
        assert len(diff.function_genes) == 1
        assert cg.validate(child) == []
        assert child.params is g.params  # Lamarckian sharing, bit-for-bit
        assert np.array_equal(child.topology.output_genes, g.topology.output_genes)


def test_mutate_never_touches_output_column_functions():
    g = cg.build_template(4, np.random.default_rng(3))
    rng = np.random.default_rng(4)
    for _ in range(50):
        child = cg.mutate(g, 1.0, 0.01, rng)
        assert child.topology.function_genes[-1] == g.topology.function_genes[-1]
        g = child  # keep compounding


def test_mutate_only_touches_active_genes():
    rng = np.random.default_rng(5)
    shape = cg.GenomeShape(2, 1, 3, 3, 2, (1, 1, 1, 1))
    g = cg.random_genome(shape, rng)
    graph = cg.active_graph(g)
    active_w = set(int(i) for i in graph.active_weight_indices)
    active_f = set(int(i) - shape.n_inputs for i in graph.internal_ids)
    for _ in range(50):
        child = cg.mutate(g, 0.5, 0.5, rng)
        diff = cg.gene_diff(g, child)
        assert set(diff.connection_genes) <= active_w
        assert set(diff.function_genes) <= active_f


def test_mutate_with_single_kernel_makes_no_function_changes():
    shape = cg.GenomeShape(2, 1, 2, 2, 2, (2, 2, 2), kernel_set=("sig",))
    g = cg.random_genome(shape, np.random.default_rng(6))
    child = cg.mutate(g, 1.0, 1.0, np.random.default_rng(7))
    assert cg.gene_diff(g, child).function_genes == ()


def test_gene_diff_requires_matching_shapes():
    a = cg.build_template(3, np.random.default_rng(0))
    b = cg.build_template(4, np.random.default_rng(0))
    with pytest.raises(ValueError, match="shapes"):
        cg.gene_diff(a, b)


# ---------------------------------------------------------------------------
# LSMF steps


def test_learn_step_single_individual_equals_train():
    data = sigmoid_data()
    cfg = small_lsmf_config(cooldown_epochs=2)
    g = cg.build_template(3, np.random.default_rng(8), shape=cfg.shape)
    other = cg.build_template(3, np.random.default_rng(9), shape=cfg.shape)
    rngs = [cg.spawn_rng(cfg.seed, cg.PURPOSE_LEARN, 0, 0, i) for i in range(2)]
    trained_pop, errors = cg.learn_step([g, other], data, cfg, rngs)
    ref, _ = cg.train(g, data, 2, cfg.train, cg.spawn_rng(cfg.seed, cg.PURPOSE_LEARN, 0, 0, 0))
    assert np.array_equal(trained_pop[0].params.weights, ref.params.weights)
    assert np.array_equal(trained_pop[0].params.biases, ref.params.biases)
    assert errors[0] == cg.evaluate(ref, data)


def test_learn_step_isolates_divergence():
    data = cg.Dataset(features=np.full((6, 1), 1e308), target=np.full(6, 0.5))
    shape = cg.GenomeShape(1, 1, 1, 1, 1, (1, 1))
    cfg = cg.LsmfConfig(shape=shape, population_size=2, seed=0,
                        train=cg.TrainConfig(learning_rate=0.01, batch_size=6))
    healthy = cg.build_template(1, np.random.default_rng(10), shape=shape)
    pop, errors = cg.learn_step([diverging_genome(), healthy], data, cfg)
    assert errors[0] == math.inf
    assert pop[0].params is not None and pop[0] is not healthy
    assert np.array_equal(pop[0].params.weights, diverging_genome().params.weights)
    assert math.isfinite(errors[1])
    assert cg.select_step(pop, errors) == 1


def test_learn_step_threaded_is_bit_identical():
    data = sigmoid_data(seed=11)
    cfg = small_lsmf_config()
    pop = [
        cg.build_template(3, cg.spawn_rng(cfg.seed, cg.PURPOSE_INIT, i), shape=cfg.shape)
        for i in range(4)
    ]
    rngs1 = [cg.spawn_rng(cfg.seed, cg.PURPOSE_LEARN, 0, 0, i) for i in range(4)]
    rngs2 = [cg.spawn_rng(cfg.seed, cg.PURPOSE_LEARN, 0, 0, i) for i in range(4)]
    seq_pop, seq_err = cg.learn_step(pop, data, cfg, rngs1, threads=1)
    par_pop, par_err = cg.learn_step(pop, data, cfg, rngs2, threads=3)
    assert seq_err == par_err
    for a, b in zip(seq_pop, par_pop):
        assert np.array_equal(a.params.weights, b.params.weights)
        assert np.array_equal(a.params.biases, b.params.biases)


def test_select_step_examples():
    pop = [object(), object(), object()]
    assert cg.select_step(pop, [3.0, 1.0, 2.0]) == 1
    assert cg.select_step(pop, [1.0, 1.0, 2.0]) == 0  # tie -> lowest index
    assert cg.select_step(pop, [math.inf, 4.0, math.inf]) == 1
    with pytest.raises(cg.DivergenceError):
        cg.select_step(pop[:2], [math.inf, math.inf])
    with pytest.raises(ValueError, match="errors"):
        cg.select_step(pop, [1.0])


def test_mutate_step_layout():
    cfg = small_lsmf_config(population_size=5)
    best = cg.build_template(3, np.random.default_rng(12), shape=cfg.shape)
    pop = cg.mutate_step(best, cfg, np.random.default_rng(13))
    assert len(pop) == 5
    assert pop[0] is best  # untouched elite
    for mutant in pop[1:]:
        assert mutant.params is best.params
        assert cg.validate(mutant) == []
        diff = cg.gene_diff(best, mutant)
        assert diff.connection_genes or diff.function_genes


def test_forget_step_resets_params_keeps_topology():
    rng = np.random.default_rng(14)
    pop = [cg.build_template(3, rng) for _ in range(20)]  # 340 weights each
    fresh = cg.forget_step(pop, np.random.default_rng(15))
    assert len(fresh) == 20
    pooled = []
    for before, after in zip(pop, fresh):
        assert after.topology is before.topology
        assert np.all(after.params.biases == 0.0)
        assert not np.array_equal(after.params.weights, before.params.weights)
        pooled.append(after.params.weights)
    pooled = np.concatenate(pooled)  # 6800 draws: N(0,1) moments to ~4 sigma
    assert abs(pooled.mean()) < 0.05
    assert abs(pooled.std() - 1.0) < 0.05


# ---------------------------------------------------------------------------
# the full loop


def test_run_lsmf_bookkeeping():
    data = sigmoid_data(seed=16)
    cfg = small_lsmf_config()
    seen = []
    results = cg.run_lsmf(cfg, data, progress=lambda it, cyc, err: seen.append((it, cyc, err)))
    assert [r.iteration for r in results] == [1, 2]
    assert seen == [
        (r.iteration, log.cycle, log.best_train_error)
        for r in results for log in r.cycle_logs
    ]
    for r in results:
        assert len(r.cycle_logs) == 3
        assert [log.cycle for log in r.cycle_logs] == [1, 2, 3]
        assert cg.validate(r.best) == []
        assert r.stats == cg.topology_stats(r.best)
        for log in r.cycle_logs:
            assert log.iteration == r.iteration
            assert len(log.train_errors) == 4
            assert log.best_train_error == min(log.train_errors)
            assert len(log.mutation_summaries) == 3
            for summary in log.mutation_summaries:
                assert len(summary.connection_genes) == log.n_connection_mutations
                assert len(summary.function_genes) == log.n_function_mutations


def test_run_lsmf_is_deterministic_and_thread_invariant():
    data = sigmoid_data(seed=17)
    cfg = small_lsmf_config(iterations=1)
    a = cg.run_lsmf(cfg, data)
    b = cg.run_lsmf(cfg, data)
    c = cg.run_lsmf(cfg, data, threads=3)
    for x, y in ((a, b), (a, c)):
        for ra, rb in zip(x, y):
            assert np.array_equal(ra.best.params.weights, rb.best.params.weights)
            assert [l.train_errors for l in ra.cycle_logs] == [l.train_errors for l in rb.cycle_logs]
            assert [l.selected_index for l in ra.cycle_logs] == [l.selected_index for l in rb.cycle_logs]


def test_run_lsmf_checks_feature_width():
    data = sigmoid_data(n_features=4, seed=18)
    with pytest.raises(ValueError, match="features"):
        cg.run_lsmf(small_lsmf_config(), data)


def test_run_lsmf_applies_forget_between_iterations():
    """Replaying the loop by hand with the documented spawn keys must hit the
    exact same numbers - including the Forget between iterations."""
    data = sigmoid_data(seed=19)
    cfg = small_lsmf_config(cycles_per_iteration=1, iterations=2)
    results = cg.run_lsmf(cfg, data)

    pop = [
        cg.build_template(3, cg.spawn_rng(cfg.seed, cg.PURPOSE_INIT, i), shape=cfg.shape)
        for i in range(cfg.population_size)
    ]
    for it in range(2):
        rngs = [cg.spawn_rng(cfg.seed, cg.PURPOSE_LEARN, it, 0, i)
                for i in range(cfg.population_size)]
        pop, errors = cg.learn_step(pop, data, cfg, rngs)
        assert tuple(errors) == results[it].cycle_logs[0].train_errors
        best = pop[cg.select_step(pop, errors)]
        pop = cg.mutate_step(best, cfg, cg.spawn_rng(cfg.seed, cg.PURPOSE_MUTATE, it, 0))
        assert np.array_equal(best.params.weights, results[it].best.params.weights)
        pop = cg.forget_step(pop, cg.spawn_rng(cfg.seed, cg.PURPOSE_FORGET, it))


# ---------------------------------------------------------------------------
# random baseline


def test_random_baseline_bookkeeping():
    data = sigmoid_data(n=30, seed=20)
    test = sigmoid_data(n=12, seed=21)
    shape = cg.GenomeShape(3, 1, 3, 2, 2, (2, 2, 2))
    result = cg.random_baseline(shape, data, test, count=20, epochs=2,
                                cfg=cg.TrainConfig(learning_rate=0.05), rng=np.random.default_rng(22))
    assert result.count == 20 and result.epochs == 2
    assert len(result.train_errors) == 20 and len(result.test_errors) == 20
    assert result.n_discarded == 1  # ceil(5% of 20)
    assert len(result.retained_indices) == 19
    assert list(result.retained_indices) == sorted(result.retained_indices)
    worst = max(range(20), key=lambda i: result.test_errors[i])
    assert worst not in result.retained_indices
    kept = [result.test_errors[i] for i in result.retained_indices]
    assert result.mean_test_error == pytest.approx(np.mean(kept))
    assert result.std_test_error == pytest.approx(np.std(kept))
    assert result.mean_test_error <= np.mean(result.test_errors)


def test_random_baseline_filters_divergent_first():
    data = cg.Dataset(features=np.full((8, 1), 1e308), target=np.full(8, 0.5))
    test = cg.Dataset(features=np.full((4, 1), 1e308), target=np.full(4, 0.5))
    shape = cg.GenomeShape(1, 1, 1, 1, 1, (1, 1), kernel_set=("ReLU", "sig"))
    result = cg.random_baseline(shape, data, test, count=20, epochs=1,
                                cfg=cg.TrainConfig(), rng=np.random.default_rng(23))
    n_divergent = sum(1 for e in result.test_errors if not math.isfinite(e))
    if n_divergent == 0:
        pytest.skip("no individual diverged on this seed")
    divergent = {i for i, e in enumerate(result.test_errors) if not math.isfinite(e)}
    surviving_divergent = divergent & set(result.retained_indices)
    # at most (n_divergent - n_discarded) divergent individuals can survive
    assert len(surviving_divergent) == max(0, n_divergent - result.n_discarded)


def test_random_baseline_is_deterministic():
    data = sigmoid_data(n=25, seed=24)
    test = sigmoid_data(n=10, seed=25)
    shape = cg.GenomeShape(3, 1, 2, 2, 1, (2, 2, 2))
    kw = dict(count=20, epochs=1, cfg=cg.TrainConfig())
    a = cg.random_baseline(shape, data, test, rng=np.random.default_rng(1), **kw)
    b = cg.random_baseline(shape, data, test, rng=np.random.default_rng(1), **kw)
    c = cg.random_baseline(shape, data, test, rng=np.random.default_rng(1), threads=3, **kw)
    assert a.test_errors == b.test_errors == c.test_errors
    assert a.retained_indices == b.retained_indices == c.retained_indices


def test_random_baseline_input_validation():
    data = sigmoid_data(n=10, seed=26)
    shape = cg.GenomeShape(3, 1, 2, 2, 1, (2, 2, 2))
    with pytest.raises(ValueError, match="count"):
        cg.random_baseline(shape, data, data, count=19, epochs=1,
                           cfg=cg.TrainConfig(), rng=np.random.default_rng(0))
    with pytest.raises(ValueError, match="epochs"):
        cg.random_baseline(shape, data, data, count=20, epochs=0,
                           cfg=cg.TrainConfig(), rng=np.random.default_rng(0))
