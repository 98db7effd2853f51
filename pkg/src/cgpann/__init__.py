"""Differentiable Cartesian genetic programming for neural-network topology
search on regression tasks: dCGPANN genomes, reverse-mode gradients + SGD,
and the LSMF (Learn/Select/Mutate/Forget) memetic algorithm, plus the
topology analytics and data plumbing around them.
"""

from .analysis import (
    TopologyStats,
    activation_histogram,
    compression_ratio,
    export_dot,
    rank_sum_test,
    topology_stats,
)
from .data import (
    DEFAULT_PMLB_URL,
    Dataset,
    FetchError,
    SplitDataset,
    fetch_pmlb,
    friedman1,
    friedman_response,
    load_tsv,
    preprocess,
    split,
    write_tsv,
)
from .evolution import (
    PURPOSE_BASELINE,
    PURPOSE_CURVE,
    PURPOSE_FORGET,
    PURPOSE_INIT,
    PURPOSE_LEARN,
    PURPOSE_MUTATE,
    PURPOSE_PERTURB,
    BaselineResult,
    CycleLog,
    DivergenceError,
    IterationResult,
    LsmfConfig,
    MutationSummary,
    forget_step,
    gene_diff,
    learn_step,
    mutate,
    mutate_step,
    mutation_counts,
    random_baseline,
    run_lsmf,
    select_step,
    spawn_rng,
)
from .genome import (
    ActiveGraph,
    Genome,
    GenomeShape,
    IntegerChromosome,
    RealChromosome,
    active_graph,
    build_template,
    connection_gene_count,
    from_json,
    load_genome,
    random_genome,
    save_genome,
    template_shape,
    to_json,
    validate,
)
from .kernels import KERNEL_NAMES, kernel_eval, kernel_grad
from .network import (
    EvalTrace,
    Gradient,
    NonFiniteError,
    backward,
    forward,
    forward_batch,
    loss_mse,
)
from .trainer import TrainConfig, TrainHistory, evaluate, sgd_epoch, train

__version__ = "0.1.0"
