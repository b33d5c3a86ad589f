"""Contracting Tsetlin Machine.

A Tsetlin Machine whose per-literal automata can absorb: absorbing on the
Exclude side discards the literal, absorbing on the Include side makes it
a permanent part of its clause.  Clauses store their live literals in
sparse lists that shrink as automata absorb, so per-epoch training cost
falls while accuracy is preserved for moderate barrier depths.
"""

from .automata import AutomatonConfig, Transition, decrease, increase, initial_state
from .bench import (
    CellSummary,
    SweepSpec,
    absorption_rate,
    evaluate_accuracy,
    explain_model,
    load_model,
    run_sweep,
    save_model,
)
from .clause import EvalMode, SparseClause, UpdateEffect, init_clause
from .data import (
    BooleanizerConfig,
    BoolSample,
    Dataset,
    booleanize_corpus,
    load_dataset,
    save_dataset,
    synth_noisy_conjunction,
)
from .learner import (
    ClassBank,
    EpochMetrics,
    HyperParams,
    Model,
    StepMetrics,
    class_sum,
    fit,
    predict,
    train_step,
    type_i_feedback,
    type_ii_feedback,
)
from .rng import Purpose, RandomSource

__version__ = "0.1.0"

__all__ = [
    "AutomatonConfig",
    "BooleanizerConfig",
    "BoolSample",
    "CellSummary",
    "ClassBank",
    "Dataset",
    "EpochMetrics",
    "EvalMode",
    "HyperParams",
    "Model",
    "Purpose",
    "RandomSource",
    "SparseClause",
    "StepMetrics",
    "SweepSpec",
    "Transition",
    "UpdateEffect",
    "absorption_rate",
    "booleanize_corpus",
    "class_sum",
    "decrease",
    "evaluate_accuracy",
    "explain_model",
    "fit",
    "increase",
    "init_clause",
    "initial_state",
    "load_dataset",
    "load_model",
    "predict",
    "run_sweep",
    "save_dataset",
    "save_model",
    "synth_noisy_conjunction",
    "train_step",
    "type_i_feedback",
    "type_ii_feedback",
]
