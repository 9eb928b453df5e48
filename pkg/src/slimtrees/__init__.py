"""Shrink tree ensembles for memory-constrained deployment.

Pipeline: train a bagged forest, select a small sub-ensemble, optionally
refine its leaf predictions by SGD, score every configuration under a
bytes-per-node memory model, and emit standalone C++ inference code.
"""

from .data import Dataset, FoldSplit, kfold, load_csv, load_dataset, save_dataset
from .forest import (
    Forest,
    Tree,
    accuracy,
    forest_from_json,
    forest_to_json,
    load_forest,
    predict,
    predict_rows,
    save_forest,
    train_forest,
    train_tree,
)
from .pruning import (
    PruneSelection,
    ResidualGram,
    available_pruners,
    drop_member_report,
    random_prune,
    rank_prune_individual_error,
    reduced_error_prune,
    register_pruner,
    residual_gram,
    run_pruner,
)
from .refine import RefineConfig, leaf_gradient, refine_leaves, training_loss
from .evaluation import (
    ApfReport,
    ParetoPoint,
    model_size_bytes,
    normalized_apf,
    pareto_front,
    rank_table,
)
from .codegen import EmittedModel, emit_source
from .synthetic import make_synthetic

__version__ = "0.1.0"
