"""Coevolutionary autoencoder training with activation-guided pruning."""

from .config import ConfigError, ExperimentConfig, load_config, parse_config_text
from .coevolution import (
    CoevParams,
    Ring,
    Subpopulation,
    TrialData,
    build_ring,
    cell_step,
    evaluate_pairs,
    mutate_learning_rate,
    run_canonical,
    run_lipi,
    tournament_select,
)
from .harness import run_experiment, run_sweep, run_trial, summarize
from .nn import (
    Architecture,
    AutoencoderModel,
    backward,
    bce_loss,
    forward,
    init_model,
    l1_loss,
    load_model,
    nonzero_count,
    save_model,
    sgd_step,
)
from .problem import (
    BitDataset,
    CentroidSet,
    generate_centroids,
    generate_dataset,
    hamming,
    load_dataset,
    oracle_cluster_loss,
    save_dataset,
)
from .pruning import (
    NodeStats,
    PrunerSpec,
    collect_node_variance,
    preserved_percentage,
    prune_conjunctive,
    prune_random,
    prune_variance,
)
from .schedules import ScheduleSpec, prune_probability

__version__ = "0.1.0"
