"""Command-line harness.

Subcommands: ``fetch``, ``evolve``, ``baseline``, ``demo-perturb``,
``analyze``.  Exit codes: 0 success, 1 usage/config error (including
unreadable input files), 2 runtime error (network, divergence, I/O).

All artifacts (CSV/JSON) are deterministic functions of the configuration and
seed, byte-for-byte, regardless of ``--threads``.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import analysis, data, evolution, genome as genome_mod, trainer
from .config import ConfigError, ExperimentConfig, load_config
from .evolution import (
    PURPOSE_BASELINE,
    PURPOSE_CURVE,
    PURPOSE_INIT,
    PURPOSE_PERTURB,
    DivergenceError,
    spawn_rng,
)
from .network import NonFiniteError

__all__ = ["main"]

CACHE_ENV_VAR = "CGPANN_CACHE_DIR"
CYCLES_CSV = "cycles.csv"
CURVES_CSV = "curves.csv"
SUMMARY_JSON = "summary.json"
BASELINE_CSV = "baseline.csv"
BASELINE_JSON = "baseline_summary.json"
PERTURB_CSV = "perturb.csv"


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 on usage errors, not argparse's 2
        raise _UsageError(f"{self.prog}: {message}")


def _build_parser() -> _Parser:
    parser = _Parser(prog="cgpann", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add_run_command(name: str, help_text: str):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="experiment config (JSON)")
        p.add_argument("--out", help="output directory (overrides config out_dir)")
        p.add_argument("--seed", type=int, help="master seed (overrides config seed)")
        p.add_argument("--threads", type=int, default=1, help="worker threads (default 1)")
        p.add_argument("--cache-dir", help="dataset cache directory")
        return p

    p_fetch = sub.add_parser("fetch", help="download a PMLB dataset into the cache")
    p_fetch.add_argument("name", help="PMLB dataset name, e.g. 225_puma8NH")
    p_fetch.add_argument("--cache-dir", help="dataset cache directory")
    p_fetch.set_defaults(func=cmd_fetch)

    add_run_command("evolve", "run LSMF topology evolution").set_defaults(func=cmd_evolve)
    add_run_command("baseline", "train random genomes for comparison").set_defaults(func=cmd_baseline)
    add_run_command(
        "demo-perturb", "plain vs mutation-perturbed SGD on one template"
    ).set_defaults(func=cmd_demo_perturb)

    p_an = sub.add_parser("analyze", help="topology stats + DOT export for a genome file")
    p_an.add_argument("genome", help="genome JSON file")
    p_an.add_argument("--mode", choices=("all", "skips"), default="all",
                      help="edge selection for the DOT export")
    p_an.add_argument("--out", help="directory for the DOT file (default: beside the genome)")
    p_an.set_defaults(func=cmd_analyze)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "threads", 1) < 1:
            raise _UsageError("cgpann: --threads must be >= 1")
        return args.func(args)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except data.FetchError as exc:
        print(f"fetch error: {exc}", file=sys.stderr)
        return 2
    except (DivergenceError, NonFiniteError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # argparse --help
        return int(exc.code or 0)


# ---------------------------------------------------------------------------
# shared plumbing


def _cache_dir(args) -> Path:
    if getattr(args, "cache_dir", None):
        return Path(args.cache_dir)
    if os.environ.get(CACHE_ENV_VAR):
        return Path(os.environ[CACHE_ENV_VAR])
    return Path.home() / ".cache" / "cgpann"


def _load_experiment(args) -> ExperimentConfig:
    cfg = load_config(args.config)
    if args.seed is not None:
        if args.seed < 0:
            raise _UsageError("cgpann: --seed must be >= 0")
        cfg = _replace(cfg, seed=args.seed)
    if args.out:
        cfg = _replace(cfg, out_dir=args.out)
    return cfg


def _replace(cfg: ExperimentConfig, **kw) -> ExperimentConfig:
    import dataclasses

    return dataclasses.replace(cfg, **kw)


def _resolve_dataset(cfg: ExperimentConfig, cache_dir: Path) -> data.Dataset:
    source = cfg.dataset
    if "name" in source:
        path = data.fetch_pmlb(source["name"], cache_dir)
        return data.load_tsv(path)
    if "path" in source:
        try:
            return data.load_tsv(source["path"])
        except (OSError, ValueError) as exc:
            raise ConfigError(f"dataset.path: {exc}") from exc
    syn = source["synthetic"]
    return data.friedman1(syn["n_samples"], syn["noise_std"], syn["seed"])


def _prepare_split(cfg: ExperimentConfig, cache_dir: Path) -> data.SplitDataset:
    raw = _resolve_dataset(cfg, cache_dir)
    return data.split(data.preprocess(raw), cfg.split_ratio, cfg.seed)


def _fmt(value) -> str:
    """CSV cell formatting: repr for floats (lossless), plain str otherwise."""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: Path, header: list[str], rows) -> None:
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# commands


def cmd_fetch(args) -> int:
    cache = _cache_dir(args)
    target = cache / args.name / f"{args.name}.tsv"
    hit = target.exists()
    path = data.fetch_pmlb(args.name, cache)
    print(f"{'cache hit' if hit else 'fetched'}: {path}")
    return 0


def _curve_rows(topology_genome, iteration: int, split: data.SplitDataset,
                cfg: ExperimentConfig):
    """Learning-curve rows for one topology: fresh weights per repeat, no mutations."""
    epochs = cfg.resolved_curve_epochs
    train_cfg = cfg.train_config()
    rows = []
    final_test = []
    for repeat in range(1, cfg.repeats + 1):
        rng = spawn_rng(cfg.seed, PURPOSE_CURVE, iteration, repeat)
        fresh = topology_genome.with_params(
            genome_mod.RealChromosome(
                rng.standard_normal(topology_genome.n_weights),
                np.zeros(topology_genome.n_biases),
            )
        )
        try:
            _, history = trainer.train(fresh, split.train, epochs, train_cfg, rng, test=split.test)
            train_curve, test_curve = history.train_loss, history.test_loss
        except NonFiniteError:
            train_curve = [math.inf] * epochs
            test_curve = [math.inf] * epochs
        for epoch in range(1, epochs + 1):
            rows.append((iteration, epoch, repeat, train_curve[epoch - 1], test_curve[epoch - 1]))
        final_test.append(test_curve[-1])
    return rows, final_test


def cmd_evolve(args) -> int:
    cfg = _load_experiment(args)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    split = _prepare_split(cfg, _cache_dir(args))
    n_inputs = split.train.n_features
    lsmf = cfg.lsmf_config(n_inputs)

    def progress(iteration, cycle, best_error):
        print(f"iteration {iteration} cycle {cycle}: best train MSE {best_error:.6g}")

    results = evolution.run_lsmf(lsmf, split.train, threads=args.threads, progress=progress)

    _write_csv(
        out / CYCLES_CSV,
        ["iteration", "cycle", "best_train_mse", "selected_index",
         "n_conn_mutations", "n_func_mutations"],
        (
            (c.iteration, c.cycle, c.best_train_error, c.selected_index,
             c.n_connection_mutations, c.n_function_mutations)
            for r in results
            for c in r.cycle_logs
        ),
    )
    for r in results:
        genome_mod.save_genome(r.best, out / f"genome_iter{r.iteration}.json")

    template = genome_mod.build_template(
        n_inputs, spawn_rng(cfg.seed, PURPOSE_INIT, 0), shape=lsmf.shape
    )
    curve_rows = []
    summary_iterations = []
    for iteration, topo in [(0, template)] + [(r.iteration, r.best) for r in results]:
        rows, final_test = _curve_rows(topo, iteration, split, cfg)
        curve_rows.extend(rows)
        finite = [v for v in final_test if math.isfinite(v)]
        stats = analysis.topology_stats(topo)
        summary_iterations.append({
            "iteration": iteration,
            "best_train_mse": None if iteration == 0 else results[iteration - 1].cycle_logs[-1].best_train_error,
            "topology": {
                "total_weights": stats.total_weights,
                "active_weights": stats.active_weights,
                "skip_connections": stats.skip_connections,
                "duplicate_connections": stats.duplicate_connections,
                "compression_ratio": stats.compression_ratio,
            },
            "activation_histogram": analysis.activation_histogram(topo),
            "final_test_mse_mean": float(np.mean(finite)) if finite else None,
            "final_test_mse_std": float(np.std(finite)) if finite else None,
            "final_test_mse": final_test,
        })
        print(f"curves: iteration {iteration} done")
    _write_csv(
        out / CURVES_CSV,
        ["iteration", "epoch", "repeat", "train_mse", "test_mse"],
        curve_rows,
    )
    _write_json(out / SUMMARY_JSON, {
        "dataset": cfg.dataset,
        "seed": cfg.seed,
        "n_inputs": n_inputs,
        "train_rows": len(split.train),
        "test_rows": len(split.test),
        "curve_epochs": cfg.resolved_curve_epochs,
        "repeats": cfg.repeats,
        "iterations": summary_iterations,
    })
    print(f"artifacts written to {out}")
    return 0


def _evolved_final_test_mses(out: Path) -> list[float] | None:
    """Final-epoch per-repeat test MSEs of the last iteration in curves.csv."""
    path = out / CURVES_CSV
    if not path.exists():
        return None
    by_key: dict[tuple[int, int], tuple[int, float]] = {}
    with path.open("r", encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            key = (int(row["iteration"]), int(row["repeat"]))
            epoch = int(row["epoch"])
            if key not in by_key or epoch > by_key[key][0]:
                by_key[key] = (epoch, float(row["test_mse"]))
    if not by_key:
        return None
    last_iteration = max(i for i, _ in by_key)
    return [
        mse for (i, _), (_, mse) in sorted(by_key.items()) if i == last_iteration
    ]


def cmd_baseline(args) -> int:
    cfg = _load_experiment(args)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    split = _prepare_split(cfg, _cache_dir(args))
    epochs = cfg.resolved_baseline_epochs
    result = evolution.random_baseline(
        cfg.shape(split.train.n_features),
        split.train,
        split.test,
        cfg.baseline_count,
        epochs,
        cfg.train_config(),
        spawn_rng(cfg.seed, PURPOSE_BASELINE),
        threads=args.threads,
    )
    retained = set(result.retained_indices)
    _write_csv(
        out / BASELINE_CSV,
        ["index", "train_mse", "test_mse", "retained"],
        (
            (i, result.train_errors[i], result.test_errors[i], int(i in retained))
            for i in range(result.count)
        ),
    )
    rank_sum_p = None
    evolved = _evolved_final_test_mses(out)
    if evolved is not None:
        kept = [result.test_errors[i] for i in result.retained_indices]
        try:
            _, rank_sum_p = analysis.rank_sum_test(evolved, kept)
        except ValueError:
            rank_sum_p = None
    _write_json(out / BASELINE_JSON, {
        "count": result.count,
        "epochs": result.epochs,
        "n_retained": len(result.retained_indices),
        "n_discarded": result.n_discarded,
        "mean_test_mse": result.mean_test_error,
        "std_test_mse": result.std_test_error,
        "rank_sum_p_vs_evolved": rank_sum_p,
    })
    print(
        f"baseline: {result.count} genomes, {epochs} epochs each; "
        f"retained {len(result.retained_indices)}, mean test MSE {result.mean_test_error:.6g}"
    )
    return 0


def cmd_demo_perturb(args) -> int:
    cfg = _load_experiment(args)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    split = _prepare_split(cfg, _cache_dir(args))
    shape = cfg.shape(split.train.n_features)
    train_cfg = cfg.train_config()
    epochs, interval = cfg.perturb_epochs, cfg.perturb_interval

    start = genome_mod.build_template(
        shape.n_inputs, spawn_rng(cfg.seed, PURPOSE_PERTURB, 0), shape=shape
    )
    def train_one_epoch(g, epoch):
        """One epoch with the per-epoch stream; (genome, loss) or (None, inf) on blow-up."""
        try:
            g, history = trainer.train(
                g, split.train, 1, train_cfg, spawn_rng(cfg.seed, PURPOSE_PERTURB, 1, epoch)
            )
            return g, history.train_loss[-1]
        except NonFiniteError:
            return None, math.inf

    plain, perturbed = start, start
    plain_curve: list[float] = []
    perturbed_curve: list[float] = []
    for epoch in range(1, epochs + 1):
        # both runs draw the same stream for this epoch, so they see the same
        # batch order and stay identical until the first mutation
        if plain is not None:
            plain, loss = train_one_epoch(plain, epoch)
            plain_curve.append(loss)
        else:
            plain_curve.append(math.inf)
        if perturbed is not None:
            perturbed, loss = train_one_epoch(perturbed, epoch)
            perturbed_curve.append(loss)
        else:
            perturbed_curve.append(math.inf)
        if epoch % interval == 0 and epoch < epochs and perturbed is not None:
            perturbed = evolution.mutate(
                perturbed,
                cfg.function_mutation_rate,
                cfg.connection_mutation_rate,
                spawn_rng(cfg.seed, PURPOSE_PERTURB, 2, epoch),
            )
    _write_csv(
        out / PERTURB_CSV,
        ["epoch", "plain_mse", "perturbed_mse"],
        (
            (e + 1, plain_curve[e], perturbed_curve[e])
            for e in range(epochs)
        ),
    )
    print(f"perturbation demo written to {out / PERTURB_CSV}")
    return 0


def cmd_analyze(args) -> int:
    path = Path(args.genome)
    try:
        g = genome_mod.load_genome(path)
    except (OSError, ValueError) as exc:
        print(f"cannot load genome {path}: {exc}", file=sys.stderr)
        return 1
    stats = analysis.topology_stats(g)
    histogram = analysis.activation_histogram(g)
    print(f"total_weights={stats.total_weights}")
    print(f"active_weights={stats.active_weights}")
    print(f"skip_connections={stats.skip_connections}")
    print(f"duplicate_connections={stats.duplicate_connections}")
    print(f"compression_ratio={stats.compression_ratio!r}")
    print("activation_histogram=" + json.dumps(histogram))
    out = Path(args.out) if args.out else path.parent
    out.mkdir(parents=True, exist_ok=True)
    suffix = ".dot" if args.mode == "all" else "_skips.dot"
    dot_path = out / (path.stem + suffix)
    dot_path.write_text(analysis.export_dot(g, mode=args.mode), encoding="utf-8")
    print(f"dot written to {dot_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
