"""Dense, array-backed learner used as a differential oracle.

This is the classic layout: one fixed array of automaton states per
clause, indexed by literal id, no absorption and no list bookkeeping.
With barriers disabled and the same keyed randomness, the sparse learner
must reproduce this implementation state-for-state, so the two act as
independent routes to the same answer.  Everything here is deliberately
plain scalar Python: it shares only the automaton transition functions
and the keyed random source with the production path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import automata
from .automata import AutomatonConfig
from .clause import EvalMode
from .data import BoolSample
from .learner import HyperParams, StepMetrics, _clamp
from .rng import Purpose, RandomSource

_ABSENT = -1


def _reject_barriers(config: AutomatonConfig) -> None:
    if config.exclude_barrier is not None or config.include_barrier is not None:
        raise ValueError("the dense oracle models the ergodic machine: barriers must be absent")


class DenseClause:
    """Fixed array of 2K automaton states; ``-1`` marks literals outside the pool."""

    def __init__(
        self,
        polarity: int,
        n_features: int,
        sample_fraction: float,
        config: AutomatonConfig,
        rng: RandomSource,
        class_id: int,
        clause_index: int,
    ):
        self.polarity = polarity
        self.n_literals = 2 * n_features
        self.config = config
        start = automata.initial_state(config)
        states = np.full(self.n_literals, _ABSENT, dtype=np.int64)
        for lit in range(self.n_literals):
            u = rng.unit(Purpose.CLAUSE_INIT, 0, 0, class_id, clause_index, lit)
            if u < sample_fraction:
                states[lit] = start
        self.states = states

    def pool_literals(self) -> list[int]:
        return [lit for lit in range(self.n_literals) if self.states[lit] != _ABSENT]

    def included_count(self) -> int:
        n = self.config.n_states_per_action
        return int(np.count_nonzero(self.states >= n))


def dense_evaluate(clause: DenseClause, x: BoolSample, mode: EvalMode) -> int:
    """Same contract as the sparse clause, computed by scanning the pool."""
    n = clause.config.n_states_per_action
    any_included = False
    for lit in range(clause.n_literals):
        if clause.states[lit] >= n:
            any_included = True
            if not x.literal(lit):
                return 0
    if not any_included:
        return 1 if mode is EvalMode.TRAINING else 0
    return 1


@dataclass
class DenseBank:
    positive: list[DenseClause]
    negative: list[DenseClause]


class DenseModel:
    """Mirror of :class:`ctm.learner.Model` over dense clauses."""

    def __init__(self, n_features: int, hyper: HyperParams, config: AutomatonConfig | None = None):
        self.n_features = n_features
        self.hyper = hyper
        self.automaton_config = config or AutomatonConfig()
        _reject_barriers(self.automaton_config)
        self.classes: dict[int, DenseBank] = {}

    def register_class(self, label: int, rng: RandomSource) -> DenseBank:
        if label in self.classes:
            return self.classes[label]
        half = self.hyper.clauses_per_class // 2
        frac = self.hyper.literal_sample_fraction
        bank = DenseBank(
            positive=[
                DenseClause(1, self.n_features, frac, self.automaton_config, rng, label, j)
                for j in range(half)
            ],
            negative=[
                DenseClause(-1, self.n_features, frac, self.automaton_config, rng, label, half + j)
                for j in range(half)
            ],
        )
        self.classes[label] = bank
        return bank


def dense_class_sum(bank: DenseBank, x: BoolSample, mode: EvalMode) -> int:
    pos = sum(dense_evaluate(c, x, mode) for c in bank.positive)
    neg = sum(dense_evaluate(c, x, mode) for c in bank.negative)
    return pos - neg


def dense_predict(model: DenseModel, x: BoolSample) -> int:
    if not model.classes:
        raise ValueError("model has no registered classes")
    best_label = -1
    best_sum = None
    for label in sorted(model.classes):
        s = dense_class_sum(model.classes[label], x, EvalMode.INFERENCE)
        if best_sum is None or s > best_sum:
            best_label, best_sum = label, s
    return best_label


def _dense_type_i(
    clause: DenseClause,
    x: BoolSample,
    hyper: HyperParams,
    rng: RandomSource,
    epoch: int,
    sample_index: int,
    class_id: int,
    clause_index: int,
) -> int:
    """Scalar mirror of Type I feedback; returns the update-event count."""
    cfg = clause.config
    n = cfg.n_states_per_action
    s = hyper.specificity
    p_include = 1.0 if hyper.boost_true_positive else (s - 1.0) / s
    p_forget = 1.0 / s
    c = dense_evaluate(clause, x, EvalMode.TRAINING)
    budget = hyper.max_included_literals
    allow_new_inclusions = budget is None or clause.included_count() < budget
    events = 0
    for lit in clause.pool_literals():
        state = int(clause.states[lit])
        u = rng.unit(Purpose.LITERAL_DECISION, epoch, sample_index, class_id, clause_index, lit)
        if c == 1:
            if x.literal(lit):
                if state < n and not allow_new_inclusions:
                    continue
                if u < p_include:
                    _, clause.states[lit] = automata.increase(state, cfg)
                    events += 1
            elif u < p_forget:
                _, clause.states[lit] = automata.decrease(state, cfg)
                events += 1
        elif u < p_forget:
            _, clause.states[lit] = automata.decrease(state, cfg)
            events += 1
    return events


def _dense_type_ii(clause: DenseClause, x: BoolSample) -> int:
    """Scalar mirror of Type II feedback; returns the update-event count."""
    cfg = clause.config
    n = cfg.n_states_per_action
    if dense_evaluate(clause, x, EvalMode.TRAINING) == 0:
        return 0
    events = 0
    for lit in clause.pool_literals():
        state = int(clause.states[lit])
        if state < n and not x.literal(lit):
            _, clause.states[lit] = automata.increase(state, cfg)
            events += 1
    return events


def dense_train_step(
    model: DenseModel,
    x: BoolSample,
    y: int,
    epoch: int,
    sample_index: int,
    rng: RandomSource,
) -> StepMetrics:
    """Mirror of :func:`ctm.learner.train_step` over the dense layout."""
    _reject_barriers(model.automaton_config)
    if x.n_features != model.n_features:
        raise ValueError(
            f"sample has {x.n_features} features, model expects {model.n_features}"
        )
    hyper = model.hyper
    t = hyper.voting_margin
    half = hyper.clauses_per_class // 2
    metrics = StepMetrics()

    bank = model.classes.get(y)
    if bank is None:
        bank = model.register_class(y, rng)

    v = _clamp(dense_class_sum(bank, x, EvalMode.TRAINING), t)
    p_update = (t - v) / (2.0 * t)
    for j, cl in enumerate(bank.positive):
        if rng.unit(Purpose.CLAUSE_UPDATE, epoch, sample_index, y, 0, j) < p_update:
            metrics.ta_updates += _dense_type_i(cl, x, hyper, rng, epoch, sample_index, y, j)
    for j, cl in enumerate(bank.negative):
        ci = half + j
        if rng.unit(Purpose.CLAUSE_UPDATE, epoch, sample_index, y, 0, ci) < p_update:
            metrics.ta_updates += _dense_type_ii(cl, x)

    others = sorted(label for label in model.classes if label != y)
    if others:
        u = rng.unit(Purpose.NEGATIVE_CLASS, epoch, sample_index)
        y_neg = others[min(int(u * len(others)), len(others) - 1)]
        nbank = model.classes[y_neg]
        v_neg = _clamp(dense_class_sum(nbank, x, EvalMode.TRAINING), t)
        p_update = (t + v_neg) / (2.0 * t)
        for j, cl in enumerate(nbank.positive):
            if rng.unit(Purpose.CLAUSE_UPDATE, epoch, sample_index, y_neg, 0, j) < p_update:
                metrics.ta_updates += _dense_type_ii(cl, x)
        for j, cl in enumerate(nbank.negative):
            ci = half + j
            if rng.unit(Purpose.CLAUSE_UPDATE, epoch, sample_index, y_neg, 0, ci) < p_update:
                metrics.ta_updates += _dense_type_i(
                    cl, x, hyper, rng, epoch, sample_index, y_neg, ci
                )
    return metrics
