"""Multiclass learning over contracting clause banks.

Each class owns a bank of clauses, half voting for the class (+) and half
against (-).  Per training sample the target class is reinforced toward
firing and one other class, drawn uniformly, is reinforced away from it.
The reinforcement probability per clause is driven by how far the class
vote sits from the voting margin, so well-separated samples stop
generating updates.

Feedback rules per targeted clause with specificity ``s``:

* toward output 1 (``type_i_feedback``): with clause output 1, every live
  automaton whose literal is true steps toward Include with probability
  ``(s-1)/s`` (probability 1 with true-positive boosting) and every false
  literal steps toward Exclude with probability ``1/s``; with clause
  output 0, every live automaton steps toward Exclude with probability
  ``1/s``.
* toward output 0 (``type_ii_feedback``): when the clause fires, every
  excluded false literal is pushed one step toward Include,
  deterministically.

All probabilistic decisions are keyed draws from :class:`~ctm.rng.RandomSource`,
one per (epoch, sample, class, clause, literal), so training is exactly
reproducible and independent of update order.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import _kernels
from .automata import AutomatonConfig
from .clause import EvalMode, FeedbackCounts, SparseClause, UpdateEffect, init_clause
from .data import BoolSample, Dataset
from .rng import Purpose, RandomSource, units_from_base


@dataclass
class HyperParams:
    """Training knobs shared by every class bank."""

    clauses_per_class: int = 10
    voting_margin: int = 15
    specificity: float = 3.0
    max_included_literals: int | None = None
    literal_sample_fraction: float = 1.0
    boost_true_positive: bool = False

    def __post_init__(self):
        if self.clauses_per_class < 2 or self.clauses_per_class % 2:
            raise ValueError(
                f"clauses_per_class must be a positive even integer, got {self.clauses_per_class}"
            )
        if self.voting_margin < 1:
            raise ValueError(f"voting_margin must be >= 1, got {self.voting_margin}")
        if self.specificity < 1.0:
            raise ValueError(f"specificity must be >= 1, got {self.specificity}")
        if self.max_included_literals is not None and self.max_included_literals < 1:
            raise ValueError("max_included_literals must be positive when set")
        if not 0.0 < self.literal_sample_fraction <= 1.0:
            raise ValueError("literal_sample_fraction must lie in (0, 1]")


@dataclass
class StepMetrics:
    """Update accounting for one training step."""

    ta_updates: int = 0
    absorbed_exclude: int = 0
    absorbed_include: int = 0

    def add_counts(self, counts: FeedbackCounts) -> None:
        self.ta_updates += counts.events
        self.absorbed_exclude += counts.discarded
        self.absorbed_include += counts.permanently_included


@dataclass
class EpochMetrics:
    """Per-epoch training record emitted by :func:`fit`."""

    epoch: int
    train_wall_time: float
    test_accuracy: float | None
    absorbed_exclude_total: int
    absorbed_include_total: int
    live_ta_count: int
    ta_update_events: int


@dataclass
class ClassBank:
    """The clauses voting for (+) and against (-) one class.

    When jitted kernels are available, the bank moves its clauses' list
    arrays into shared 2-D arenas (one row per clause) so one kernel call
    can evaluate or update the whole bank.
    """

    positive: list[SparseClause]
    negative: list[SparseClause]

    def __post_init__(self):
        self._arena = None
        self._counts_dirty = True
        self._ne = np.empty(0, dtype=np.int64)
        self._ni = np.empty(0, dtype=np.int64)
        self._npm = np.empty(0, dtype=np.int64)
        self._moved = np.empty(0, dtype=np.uint8)

    def clauses(self) -> list[SparseClause]:
        return self.positive + self.negative

    def _counts_arrays(self):
        """Per-clause live list lengths, mirrored in persistent arrays.

        The fused kernel mutates these in place; Python-side clause
        mutations mark them dirty through the clause's ``owner`` backref.
        """
        if self._counts_dirty:
            all_clauses = self.positive + self.negative
            n = len(all_clauses)
            if self._ne.size != n:
                self._ne = np.empty(n, dtype=np.int64)
                self._ni = np.empty(n, dtype=np.int64)
                self._npm = np.empty(n, dtype=np.int64)
                self._moved = np.empty(n, dtype=np.uint8)
            for i, c in enumerate(all_clauses):
                self._ne[i] = c._n_exc
                self._ni[i] = c._n_inc
                self._npm[i] = c._n_perm
            self._counts_dirty = False
        return self._ne, self._ni, self._npm

    def ensure_arena(self) -> None:
        """Move the bank's clause arrays into shared 2-D arenas.

        Each clause becomes a row view.  Row capacity is the largest
        initial pool in the bank; since no list of a clause can outgrow
        its own pool, the in-place append/swap operations never need to
        reallocate a row, so the views stay valid for the bank's lifetime.
        """
        if self._arena is not None:
            return
        all_clauses = self.positive + self.negative
        cap = max(c.initial_pool_size for c in all_clauses)
        shape = (len(all_clauses), cap)
        exc_l = np.zeros(shape, dtype=np.uint64)
        exc_s = np.zeros(shape, dtype=np.int64)
        inc_l = np.zeros(shape, dtype=np.uint64)
        inc_s = np.zeros(shape, dtype=np.int64)
        perm_l = np.zeros(shape, dtype=np.uint64)
        for i, c in enumerate(all_clauses):
            ne, ni, npm = c._n_exc, c._n_inc, c._n_perm
            exc_l[i, :ne] = c._exc_lits[:ne]
            exc_s[i, :ne] = c._exc_states[:ne]
            inc_l[i, :ni] = c._inc_lits[:ni]
            inc_s[i, :ni] = c._inc_states[:ni]
            perm_l[i, :npm] = c._perm_lits[:npm]
            c._exc_lits = exc_l[i]
            c._exc_states = exc_s[i]
            c._inc_lits = inc_l[i]
            c._inc_states = inc_s[i]
            c._perm_lits = perm_l[i]
            c.owner = self
        self._arena = (exc_l, exc_s, inc_l, inc_s, perm_l)

    def outputs(self, row: np.ndarray, training: bool) -> np.ndarray:
        """Clause outputs over the bank (positives first)."""
        if _kernels.HAVE_NUMBA:
            self.ensure_arena()
            _, _, inc_l, _, perm_l = self._arena
            _, ni, npm = self._counts_arrays()
            out = np.empty(ni.size, dtype=bool)
            _kernels.bank_eval_kernel(inc_l, ni, perm_l, npm, row, training, out)
            return out
        all_clauses = self.positive + self.negative
        return np.array([bool(c.output(row, training)) for c in all_clauses], dtype=bool)


class Model:
    """Class banks plus the hyperparameters and automaton geometry they share.

    Classes are registered lazily as labels appear in the data; clause
    initialization draws are keyed by (label, clause index) so the result
    does not depend on registration order.
    """

    def __init__(
        self,
        n_features: int,
        hyper: HyperParams,
        automaton_config: AutomatonConfig | None = None,
    ):
        if n_features < 1:
            raise ValueError(f"n_features must be >= 1, got {n_features}")
        self.n_features = n_features
        self.hyper = hyper
        self.automaton_config = automaton_config or AutomatonConfig()
        self.classes: dict[int, ClassBank] = {}
        self._clause_ids = np.arange(hyper.clauses_per_class, dtype=np.uint64)
        self._others_cache: dict[int, list[int]] = {}

    def _other_labels(self, y: int) -> list[int]:
        others = self._others_cache.get(y)
        if others is None:
            others = sorted(label for label in self.classes if label != y)
            self._others_cache[y] = others
        return others

    def register_class(self, label: int, rng: RandomSource) -> ClassBank:
        if label in self.classes:
            return self.classes[label]
        if label < 0:
            raise ValueError(f"class labels must be non-negative, got {label}")
        half = self.hyper.clauses_per_class // 2
        frac = self.hyper.literal_sample_fraction
        positive = [
            init_clause(1, self.n_features, frac, self.automaton_config, rng, label, j)
            for j in range(half)
        ]
        negative = [
            init_clause(-1, self.n_features, frac, self.automaton_config, rng, label, half + j)
            for j in range(half)
        ]
        bank = ClassBank(positive, negative)
        self.classes[label] = bank
        self._others_cache = {}
        return bank

    def all_clauses(self) -> list[SparseClause]:
        out: list[SparseClause] = []
        for label in sorted(self.classes):
            out.extend(self.classes[label].clauses())
        return out

    def live_ta_count(self) -> int:
        return sum(c.live_count for c in self.all_clauses())

    def initial_live_ta(self) -> int:
        return sum(c.initial_pool_size for c in self.all_clauses())

    def absorbed_include_total(self) -> int:
        return sum(c.permanent_count for c in self.all_clauses())

    def absorbed_exclude_total(self) -> int:
        return sum(
            c.initial_pool_size - c.live_count - c.permanent_count for c in self.all_clauses()
        )


def class_sum(bank: ClassBank, x: BoolSample, mode: EvalMode) -> int:
    """Positive-clause votes minus negative-clause votes, un-clamped."""
    pos = sum(c.evaluate(x, mode) for c in bank.positive)
    neg = sum(c.evaluate(x, mode) for c in bank.negative)
    return pos - neg


def _class_sum_row(bank: ClassBank, row: np.ndarray, training: bool):
    out = bank.outputs(row, training)
    half = len(bank.positive)
    return int(out[:half].sum()) - int(out[half:].sum()), out


def predict(model: Model, x: BoolSample) -> int:
    """Argmax of class sums at inference; ties go to the smallest label."""
    if not model.classes:
        raise ValueError("model has no registered classes")
    row = x.literal_row()
    return _predict_row(model, row)


def _predict_row(model: Model, row: np.ndarray) -> int:
    best_label = -1
    best_sum = None
    for label in sorted(model.classes):
        s, _ = _class_sum_row(model.classes[label], row, training=False)
        if best_sum is None or s > best_sum:
            best_label, best_sum = label, s
    return best_label


def _type_i_row(
    clause: SparseClause,
    row: np.ndarray,
    clause_output: int,
    hyper: HyperParams,
    rng: RandomSource,
    epoch: int,
    sample_index: int,
    class_id: int,
    clause_index: int,
) -> FeedbackCounts:
    s = hyper.specificity
    p_include = 1.0 if hyper.boost_true_positive else (s - 1.0) / s
    p_forget = 1.0 / s
    budget = hyper.max_included_literals
    allow = budget is None or (clause.included_count + clause.permanent_count) < budget
    base = rng.literal_base(epoch, sample_index, class_id, clause_index)
    return clause.apply_type_i(row, clause_output, base, p_include, p_forget, allow)


def type_i_feedback(
    clause: SparseClause,
    x: BoolSample,
    hyper: HyperParams,
    rng: RandomSource,
    epoch: int = 0,
    sample_index: int = 0,
    class_id: int = 0,
    clause_index: int = 0,
) -> list[UpdateEffect]:
    """Reinforce a clause toward firing on this sample."""
    row = x.literal_row()
    c = clause.output(row, training=True)
    counts = _type_i_row(clause, row, c, hyper, rng, epoch, sample_index, class_id, clause_index)
    return counts.effects()


def type_ii_feedback(clause: SparseClause, x: BoolSample) -> list[UpdateEffect]:
    """Reinforce a clause away from firing on this sample (no randomness)."""
    row = x.literal_row()
    c = clause.output(row, training=True)
    return clause.apply_type_ii(row, c).effects()


def _clamp(v: int, bound: int) -> int:
    return max(-bound, min(bound, v))


def _gate_draws(model: Model, rng: RandomSource, epoch: int, sample_index: int, class_id: int):
    """Per-clause feedback gate draws for one bank, as a plain float list."""
    base = rng._base(Purpose.CLAUSE_UPDATE, epoch, sample_index, class_id, 0)
    ids = model._clause_ids
    if _kernels.HAVE_NUMBA:
        out = np.empty(ids.size, dtype=np.float64)
        _kernels.draw_units_kernel(ids, np.uint64(base), out)
        return out.tolist()
    return units_from_base(base, ids).tolist()


def train_step(
    model: Model,
    x: BoolSample,
    y: int,
    epoch: int,
    sample_index: int,
    rng: RandomSource,
) -> StepMetrics:
    """One online update: reinforce class ``y`` and push back one other class."""
    if x.n_features != model.n_features:
        raise ValueError(
            f"sample has {x.n_features} features, model expects {model.n_features}"
        )
    return _train_step_row(model, x.literal_row(), y, epoch, sample_index, rng)


def _bank_feedback_fused(
    model: Model,
    bank: ClassBank,
    row: np.ndarray,
    type_i_on_positive: bool,
    rng: RandomSource,
    epoch: int,
    sample_index: int,
    class_id: int,
    metrics: StepMetrics,
) -> None:
    """One bank's gated feedback through the fused kernel."""
    hyper = model.hyper
    cfg = model.automaton_config
    bank.ensure_arena()
    exc_l, exc_s, inc_l, inc_s, perm_l = bank._arena
    ne, ni, npm = bank._counts_arrays()
    s = hyper.specificity
    events, perm_new, disc, moves = _kernels.bank_step_kernel(
        exc_l,
        exc_s,
        ne,
        inc_l,
        inc_s,
        ni,
        perm_l,
        npm,
        row,
        len(bank.positive),
        1 if type_i_on_positive else 0,
        hyper.voting_margin,
        np.uint64(rng._base(Purpose.CLAUSE_UPDATE, epoch, sample_index, class_id, 0)),
        np.uint64(rng.class_base(Purpose.LITERAL_DECISION, epoch, sample_index, class_id)),
        1.0 if hyper.boost_true_positive else (s - 1.0) / s,
        1.0 / s,
        -1 if hyper.max_included_literals is None else hyper.max_included_literals,
        cfg.n_states_per_action,
        -1 if cfg.exclude_barrier is None else cfg.exclude_barrier,
        -1 if cfg.include_barrier is None else cfg.include_barrier,
        bank._moved,
    )
    if moves:
        # the arrays are already current; sync the touched clauses
        clauses = bank.positive + bank.negative
        for k in np.nonzero(bank._moved)[0]:
            cl = clauses[k]
            cl._n_exc = int(ne[k])
            cl._n_inc = int(ni[k])
            cl._n_perm = int(npm[k])
    metrics.ta_updates += int(events)
    metrics.absorbed_include += int(perm_new)
    metrics.absorbed_exclude += int(disc)


def _bank_feedback_python(
    model: Model,
    bank: ClassBank,
    row: np.ndarray,
    type_i_on_positive: bool,
    rng: RandomSource,
    epoch: int,
    sample_index: int,
    class_id: int,
    metrics: StepMetrics,
) -> None:
    """Per-clause fallback path; result-identical to the fused kernel."""
    hyper = model.hyper
    t = hyper.voting_margin
    half = len(bank.positive)
    clauses = bank.positive + bank.negative
    v, out = _class_sum_row(bank, row, training=True)
    if type_i_on_positive:
        p_update = (t - _clamp(v, t)) / (2.0 * t)
        type_i_ids, type_ii_ids = range(half), range(half, 2 * half)
    else:
        p_update = (t + _clamp(v, t)) / (2.0 * t)
        type_ii_ids, type_i_ids = range(half), range(half, 2 * half)
    gate = _gate_draws(model, rng, epoch, sample_index, class_id)
    for ci in type_i_ids:
        if gate[ci] < p_update:
            metrics.add_counts(
                _type_i_row(
                    clauses[ci], row, out[ci], hyper, rng, epoch, sample_index, class_id, ci
                )
            )
    for ci in type_ii_ids:
        if gate[ci] < p_update and out[ci]:
            metrics.add_counts(clauses[ci].apply_type_ii(row, 1))


def _train_step_row(
    model: Model,
    row: np.ndarray,
    y: int,
    epoch: int,
    sample_index: int,
    rng: RandomSource,
) -> StepMetrics:
    metrics = StepMetrics()
    bank = model.classes.get(y)
    if bank is None:
        bank = model.register_class(y, rng)

    feedback = _bank_feedback_fused if _kernels.HAVE_NUMBA else _bank_feedback_python
    feedback(model, bank, row, True, rng, epoch, sample_index, y, metrics)

    others = model._other_labels(y)
    if others:
        u = rng.unit(Purpose.NEGATIVE_CLASS, epoch, sample_index)
        y_neg = others[min(int(u * len(others)), len(others) - 1)]
        feedback(
            model, model.classes[y_neg], row, False, rng, epoch, sample_index, y_neg, metrics
        )
    return metrics


Observer = Callable[[Model, EpochMetrics], None]


def fit(
    model: Model,
    train: Dataset,
    epochs: int,
    rng: RandomSource,
    observer: Optional[Observer] = None,
    shuffle: bool = False,
) -> list[EpochMetrics]:
    """Run ``train_step`` over the dataset for the given number of epochs.

    Samples are visited in file order unless ``shuffle`` is set, in which
    case the permutation is keyed by (seed, epoch).  The wall time covers
    the training loop only; the observer (which typically measures test
    accuracy and may fill ``test_accuracy``) runs off the clock.
    """
    if epochs < 0:
        raise ValueError("epochs must be >= 0")
    if not train.samples:
        raise ValueError("training dataset is empty")
    if train.n_features != model.n_features:
        raise ValueError(
            f"dataset has {train.n_features} features, model expects {model.n_features}"
        )
    rows = train.literal_matrix()
    labels = [s.label for s in train.samples]
    n = len(labels)
    history: list[EpochMetrics] = []
    for epoch in range(1, epochs + 1):
        order = rng.permutation(epoch, n) if shuffle else range(n)
        updates = 0
        t0 = time.perf_counter()
        for i in order:
            step = _train_step_row(model, rows[i], labels[i], epoch, int(i), rng)
            updates += step.ta_updates
        wall = time.perf_counter() - t0
        metrics = EpochMetrics(
            epoch=epoch,
            train_wall_time=wall,
            test_accuracy=None,
            absorbed_exclude_total=model.absorbed_exclude_total(),
            absorbed_include_total=model.absorbed_include_total(),
            live_ta_count=model.live_ta_count(),
            ta_update_events=updates,
        )
        if observer is not None:
            observer(model, metrics)
        history.append(metrics)
    return history
