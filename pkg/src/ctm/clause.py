"""The contracting sparse clause: three literal lists with swap-remove updates.

Each clause owns one automaton per literal it still tracks.  Literals live
in one of three lists:

* ``excluded``  -- (literal, state) pairs on the Exclude side,
* ``included``  -- (literal, state) pairs on the Include side,
* ``permanent`` -- literals whose automata absorbed on the Include side;
  the automaton is dropped and the literal stays in the clause for good.

Literals whose automata absorb on the Exclude side are discarded outright
and never tracked again.  Removal from a list overwrites the victim with
the list's last element and pops the tail, so structural updates are O(1)
and the clause only ever shrinks.

The lists are backed by flat numpy arrays with an explicit length so that
feedback can update thousands of states in one vectorized pass
(:meth:`SparseClause.apply_type_i`); boundary-crossing literals are then
moved one by one through the same code path as the public single-literal
operations, preserving the exact list order a sequential update produces.
"""

from __future__ import annotations

import enum
from typing import NamedTuple

import numpy as np

from . import _kernels, automata
from .automata import AutomatonConfig, Transition
from .data import BoolSample
from .rng import Purpose, RandomSource, units_from_base

_MIN_CAPACITY = 8


class EvalMode(enum.Enum):
    """Empty clauses match everything while learning, nothing at inference."""

    TRAINING = "training"
    INFERENCE = "inference"


class UpdateEffect(enum.Enum):
    """Structural outcome of one literal update."""

    STATE_CHANGED = "state_changed"
    SATURATED = "saturated"
    MOVED_TO_INCLUDE = "moved_to_include"
    MOVED_TO_EXCLUDE = "moved_to_exclude"
    PERMANENTLY_INCLUDED = "permanently_included"
    DISCARDED = "discarded"


class FeedbackCounts(NamedTuple):
    """Per-category tally of update effects from one feedback pass.

    Every counted effect corresponds to exactly one automaton update
    event (the activity proxy), so ``events`` is their sum.
    """

    state_changed: int = 0
    saturated: int = 0
    moved_to_include: int = 0
    moved_to_exclude: int = 0
    permanently_included: int = 0
    discarded: int = 0

    @property
    def events(self) -> int:
        return sum(self)

    def merge(self, other: "FeedbackCounts") -> "FeedbackCounts":
        return FeedbackCounts(*(a + b for a, b in zip(self, other)))

    def effects(self) -> list[UpdateEffect]:
        order = (
            UpdateEffect.STATE_CHANGED,
            UpdateEffect.SATURATED,
            UpdateEffect.MOVED_TO_INCLUDE,
            UpdateEffect.MOVED_TO_EXCLUDE,
            UpdateEffect.PERMANENTLY_INCLUDED,
            UpdateEffect.DISCARDED,
        )
        out: list[UpdateEffect] = []
        for effect, n in zip(order, self):
            out.extend([effect] * n)
        return out


class SparseClause:
    """One conjunctive clause over a shrinking pool of literals."""

    __slots__ = (
        "polarity",
        "n_literals",
        "initial_pool_size",
        "config",
        "owner",
        "_exc_lits",
        "_exc_states",
        "_n_exc",
        "_inc_lits",
        "_inc_states",
        "_n_inc",
        "_perm_lits",
        "_n_perm",
    )

    def __init__(self, polarity: int, n_literals: int, config: AutomatonConfig):
        if polarity not in (1, -1):
            raise ValueError(f"polarity must be +1 or -1, got {polarity}")
        self.polarity = polarity
        self.n_literals = n_literals
        self.initial_pool_size = 0
        self.config = config
        # bank that mirrors this clause's list lengths, if any
        self.owner = None
        self._exc_lits = np.empty(_MIN_CAPACITY, dtype=np.uint64)
        self._exc_states = np.empty(_MIN_CAPACITY, dtype=np.int64)
        self._n_exc = 0
        self._inc_lits = np.empty(_MIN_CAPACITY, dtype=np.uint64)
        self._inc_states = np.empty(_MIN_CAPACITY, dtype=np.int64)
        self._n_inc = 0
        self._perm_lits = np.empty(_MIN_CAPACITY, dtype=np.uint64)
        self._n_perm = 0

    # ------------------------------------------------------------------
    # views and bookkeeping

    @property
    def excluded(self) -> list[tuple[int, int]]:
        return [
            (int(self._exc_lits[i]), int(self._exc_states[i])) for i in range(self._n_exc)
        ]

    @property
    def included(self) -> list[tuple[int, int]]:
        return [
            (int(self._inc_lits[i]), int(self._inc_states[i])) for i in range(self._n_inc)
        ]

    @property
    def permanent(self) -> list[int]:
        return [int(self._perm_lits[i]) for i in range(self._n_perm)]

    @property
    def live_count(self) -> int:
        return self._n_exc + self._n_inc

    @property
    def included_count(self) -> int:
        return self._n_inc

    @property
    def permanent_count(self) -> int:
        return self._n_perm

    def active_counts(self) -> tuple[int, int, int]:
        """(n_excluded, n_included, n_permanent)."""
        return self._n_exc, self._n_inc, self._n_perm

    def copy(self) -> "SparseClause":
        dup = SparseClause(self.polarity, self.n_literals, self.config)
        dup.initial_pool_size = self.initial_pool_size
        dup._exc_lits = self._exc_lits.copy()
        dup._exc_states = self._exc_states.copy()
        dup._n_exc = self._n_exc
        dup._inc_lits = self._inc_lits.copy()
        dup._inc_states = self._inc_states.copy()
        dup._n_inc = self._n_inc
        dup._perm_lits = self._perm_lits.copy()
        dup._n_perm = self._n_perm
        return dup

    # ------------------------------------------------------------------
    # evaluation

    def evaluate(self, x: BoolSample, mode: EvalMode) -> int:
        """Conjunction over permanent and included literals (excluded is never read)."""
        if self._n_perm == 0 and self._n_inc == 0:
            return 1 if mode is EvalMode.TRAINING else 0
        for i in range(self._n_perm):
            if not x.literal(int(self._perm_lits[i])):
                return 0
        for i in range(self._n_inc):
            if not x.literal(int(self._inc_lits[i])):
                return 0
        return 1

    def output(self, row: np.ndarray, training: bool) -> int:
        """Fast path of :meth:`evaluate` over a precomputed literal-truth row."""
        n_perm, n_inc = self._n_perm, self._n_inc
        if n_perm == 0 and n_inc == 0:
            return 1 if training else 0
        if n_perm and not row[self._perm_lits[:n_perm]].all():
            return 0
        if n_inc and not row[self._inc_lits[:n_inc]].all():
            return 0
        return 1

    # ------------------------------------------------------------------
    # single-literal updates

    def _locate(self, literal: int) -> tuple[bool, int]:
        """(in_excluded, position) of a live literal; KeyError if not live."""
        if _kernels.HAVE_NUMBA:
            pos = _kernels.find_kernel(self._exc_lits, self._n_exc, np.uint64(literal))
            if pos >= 0:
                return True, int(pos)
            pos = _kernels.find_kernel(self._inc_lits, self._n_inc, np.uint64(literal))
            if pos >= 0:
                return False, int(pos)
            raise KeyError(f"literal {literal} is not live in this clause")
        hit = np.nonzero(self._exc_lits[: self._n_exc] == literal)[0]
        if hit.size:
            return True, int(hit[0])
        hit = np.nonzero(self._inc_lits[: self._n_inc] == literal)[0]
        if hit.size:
            return False, int(hit[0])
        raise KeyError(f"literal {literal} is not live in this clause")

    def _swap_remove_exc(self, pos: int) -> None:
        last = self._n_exc - 1
        if pos != last:
            self._exc_lits[pos] = self._exc_lits[last]
            self._exc_states[pos] = self._exc_states[last]
        self._n_exc = last
        if self.owner is not None:
            self.owner._counts_dirty = True

    def _swap_remove_inc(self, pos: int) -> None:
        last = self._n_inc - 1
        if pos != last:
            self._inc_lits[pos] = self._inc_lits[last]
            self._inc_states[pos] = self._inc_states[last]
        self._n_inc = last
        if self.owner is not None:
            self.owner._counts_dirty = True

    def _append_exc(self, literal: int, state: int) -> None:
        if self._n_exc == len(self._exc_lits):
            cap = max(_MIN_CAPACITY, 2 * self._n_exc)
            self._exc_lits = np.resize(self._exc_lits, cap)
            self._exc_states = np.resize(self._exc_states, cap)
        self._exc_lits[self._n_exc] = literal
        self._exc_states[self._n_exc] = state
        self._n_exc += 1
        if self.owner is not None:
            self.owner._counts_dirty = True

    def _append_inc(self, literal: int, state: int) -> None:
        if self._n_inc == len(self._inc_lits):
            cap = max(_MIN_CAPACITY, 2 * self._n_inc)
            self._inc_lits = np.resize(self._inc_lits, cap)
            self._inc_states = np.resize(self._inc_states, cap)
        self._inc_lits[self._n_inc] = literal
        self._inc_states[self._n_inc] = state
        self._n_inc += 1
        if self.owner is not None:
            self.owner._counts_dirty = True

    def _append_perm(self, literal: int) -> None:
        if self._n_perm == len(self._perm_lits):
            self._perm_lits = np.resize(self._perm_lits, max(_MIN_CAPACITY, 2 * self._n_perm))
        self._perm_lits[self._n_perm] = literal
        self._n_perm += 1
        if self.owner is not None:
            self.owner._counts_dirty = True

    def increase_literal(self, literal: int) -> UpdateEffect:
        """Step one live literal's automaton toward Include."""
        in_exc, pos = self._locate(literal)
        if in_exc:
            old = int(self._exc_states[pos])
            outcome, new = automata.increase(old, self.config)
            if outcome is Transition.STAYED:
                self._exc_states[pos] = new
                return UpdateEffect.STATE_CHANGED
            # the only other reachable outcome from the Exclude side
            assert outcome is Transition.SWITCHED_TO_INCLUDE
            self._swap_remove_exc(pos)
            self._append_inc(literal, new)
            return UpdateEffect.MOVED_TO_INCLUDE
        old = int(self._inc_states[pos])
        outcome, new = automata.increase(old, self.config)
        if outcome is Transition.STAYED:
            if new == old:
                return UpdateEffect.SATURATED
            self._inc_states[pos] = new
            return UpdateEffect.STATE_CHANGED
        assert outcome is Transition.ABSORBED_INCLUDE
        self._swap_remove_inc(pos)
        self._append_perm(literal)
        return UpdateEffect.PERMANENTLY_INCLUDED

    def decrease_literal(self, literal: int) -> UpdateEffect:
        """Step one live literal's automaton toward Exclude."""
        in_exc, pos = self._locate(literal)
        if in_exc:
            old = int(self._exc_states[pos])
            outcome, new = automata.decrease(old, self.config)
            if outcome is Transition.STAYED:
                if new == old:
                    return UpdateEffect.SATURATED
                self._exc_states[pos] = new
                return UpdateEffect.STATE_CHANGED
            assert outcome is Transition.ABSORBED_EXCLUDE
            self._swap_remove_exc(pos)
            return UpdateEffect.DISCARDED
        old = int(self._inc_states[pos])
        outcome, new = automata.decrease(old, self.config)
        if outcome is Transition.STAYED:
            self._inc_states[pos] = new
            return UpdateEffect.STATE_CHANGED
        assert outcome is Transition.SWITCHED_TO_EXCLUDE
        self._swap_remove_inc(pos)
        self._append_exc(literal, new)
        return UpdateEffect.MOVED_TO_EXCLUDE

    # ------------------------------------------------------------------
    # vectorized feedback application

    def _move_selected(self, lits: np.ndarray, upward: np.ndarray) -> FeedbackCounts:
        """Apply boundary-crossing updates one literal at a time, in order."""
        moved_inc = moved_exc = perm = disc = 0
        for lit, up in zip(lits.tolist(), upward.tolist()):
            effect = self.increase_literal(lit) if up else self.decrease_literal(lit)
            if effect is UpdateEffect.MOVED_TO_INCLUDE:
                moved_inc += 1
            elif effect is UpdateEffect.MOVED_TO_EXCLUDE:
                moved_exc += 1
            elif effect is UpdateEffect.PERMANENTLY_INCLUDED:
                perm += 1
            elif effect is UpdateEffect.DISCARDED:
                disc += 1
            else:  # pragma: no cover - selected literals sit exactly on a boundary
                raise AssertionError(f"unexpected crossing effect {effect}")
        return FeedbackCounts(0, 0, moved_inc, moved_exc, perm, disc)

    def apply_type_i(
        self,
        row: np.ndarray,
        clause_output: int,
        base: int,
        p_include: float,
        p_forget: float,
        allow_new_inclusions: bool,
    ) -> FeedbackCounts:
        """Pattern-forming feedback over all live automata.

        ``base`` is the mixed key prefix for this (epoch, sample, class,
        clause); each live literal consumes one keyed draw from it.  With
        clause output 1, true literals step toward Include w.p.
        ``p_include`` and false ones toward Exclude w.p. ``p_forget``;
        with output 0 every live automaton steps toward Exclude w.p.
        ``p_forget``.  When the clause is at its literal budget, new
        inclusions from the excluded list are suppressed
        (``allow_new_inclusions=False``).

        The result is exactly what per-literal ``increase_literal`` /
        ``decrease_literal`` calls over a snapshot of the two lists
        (excluded first, then included, in list order) would produce.
        """
        cfg = self.config
        n = cfg.n_states_per_action
        b_ex, b_in = cfg.exclude_barrier, cfg.include_barrier
        ne, ni = self._n_exc, self._n_inc
        if ne + ni == 0:
            return FeedbackCounts()

        if _kernels.HAVE_NUMBA:
            cross_lits = np.empty(ne + ni, dtype=np.uint64)
            cross_up = np.empty(ne + ni, dtype=np.uint8)
            changed, saturated, ncross = _kernels.type_i_kernel(
                self._exc_lits,
                self._exc_states,
                ne,
                self._inc_lits,
                self._inc_states,
                ni,
                row,
                np.uint64(base),
                p_include,
                p_forget,
                n,
                -1 if b_ex is None else b_ex,
                -1 if b_in is None else b_in,
                1 if clause_output else 0,
                bool(allow_new_inclusions),
                cross_lits,
                cross_up,
            )
            counts = FeedbackCounts(int(changed), int(saturated), 0, 0, 0, 0)
            if ncross:
                counts = counts.merge(
                    self._move_selected(cross_lits[:ncross], cross_up[:ncross])
                )
            return counts

        # numpy fallback, result-identical to the kernel
        exc_l = self._exc_lits[:ne]
        exc_s = self._exc_states[:ne]
        inc_l = self._inc_lits[:ni]
        inc_s = self._inc_states[:ni]
        u_exc = units_from_base(base, exc_l)
        u_inc = units_from_base(base, inc_l)

        if clause_output:
            exc_true = row[exc_l] if ne else np.empty(0, dtype=bool)
            inc_true = row[inc_l] if ni else np.empty(0, dtype=bool)
            exc_dn = ~exc_true & (u_exc < p_forget)
            inc_dn = ~inc_true & (u_inc < p_forget)
            exc_up = exc_true & (u_exc < p_include) if allow_new_inclusions else None
            inc_up = inc_true & (u_inc < p_include)
        else:
            exc_dn = u_exc < p_forget
            inc_dn = u_inc < p_forget
            exc_up = None
            inc_up = None

        changed = saturated = 0

        # excluded segment: bulk state shifts, then collect boundary crossers
        if exc_up is not None:
            exc_cross = exc_up & (exc_s == n - 1)
            bulk = exc_up & ~exc_cross
            exc_s[bulk] += 1
            changed += int(np.count_nonzero(bulk))
        else:
            exc_cross = np.zeros(ne, dtype=bool)
        if b_ex is None:
            sat = exc_dn & (exc_s == 0)
            bulk = exc_dn & ~sat
            exc_s[bulk] -= 1
            saturated += int(np.count_nonzero(sat))
            changed += int(np.count_nonzero(bulk))
            exc_cross_dn = np.zeros(ne, dtype=bool)
        else:
            exc_cross_dn = exc_dn & (exc_s == b_ex + 1)
            bulk = exc_dn & ~exc_cross_dn
            exc_s[bulk] -= 1
            changed += int(np.count_nonzero(bulk))

        # included segment
        if inc_up is not None and ni:
            if b_in is None:
                sat = inc_up & (inc_s == 2 * n - 1)
                bulk = inc_up & ~sat
                inc_s[bulk] += 1
                saturated += int(np.count_nonzero(sat))
                changed += int(np.count_nonzero(bulk))
                inc_cross_up = np.zeros(ni, dtype=bool)
            else:
                inc_cross_up = inc_up & (inc_s == b_in - 1)
                bulk = inc_up & ~inc_cross_up
                inc_s[bulk] += 1
                changed += int(np.count_nonzero(bulk))
        else:
            inc_cross_up = np.zeros(ni, dtype=bool)
        inc_cross_dn = inc_dn & (inc_s == n)
        bulk = inc_dn & ~inc_cross_dn
        inc_s[bulk] -= 1
        changed += int(np.count_nonzero(bulk))

        counts = FeedbackCounts(changed, saturated, 0, 0, 0, 0)

        # boundary crossers, excluded list first, in snapshot order
        exc_any = exc_cross | exc_cross_dn
        if exc_any.any():
            counts = counts.merge(self._move_selected(exc_l[exc_any], exc_cross[exc_any]))
        inc_any = inc_cross_up | inc_cross_dn
        if inc_any.any():
            counts = counts.merge(self._move_selected(inc_l[inc_any], inc_cross_up[inc_any]))
        return counts

    def apply_type_ii(self, row: np.ndarray, clause_output: int) -> FeedbackCounts:
        """Discrimination feedback: push every false excluded literal toward
        Include, unconditionally, whenever the clause fired."""
        if not clause_output or self._n_exc == 0:
            return FeedbackCounts()
        n = self.config.n_states_per_action
        ne = self._n_exc

        if _kernels.HAVE_NUMBA:
            cross_lits = np.empty(ne, dtype=np.uint64)
            changed, ncross = _kernels.type_ii_kernel(
                self._exc_lits, self._exc_states, ne, row, n, cross_lits
            )
            counts = FeedbackCounts(int(changed), 0, 0, 0, 0, 0)
            if ncross:
                counts = counts.merge(
                    self._move_selected(
                        cross_lits[:ncross], np.ones(int(ncross), dtype=bool)
                    )
                )
            return counts

        exc_l = self._exc_lits[:ne]
        exc_s = self._exc_states[:ne]
        sel = ~row[exc_l]
        cross = sel & (exc_s == n - 1)
        bulk = sel & ~cross
        exc_s[bulk] += 1
        counts = FeedbackCounts(int(np.count_nonzero(bulk)), 0, 0, 0, 0, 0)
        if cross.any():
            counts = counts.merge(
                self._move_selected(exc_l[cross], np.ones(int(np.count_nonzero(cross)), dtype=bool))
            )
        return counts

    # ------------------------------------------------------------------
    # construction

    @classmethod
    def from_lists(
        cls,
        polarity: int,
        n_literals: int,
        initial_pool_size: int,
        excluded: list[tuple[int, int]],
        included: list[tuple[int, int]],
        permanent: list[int],
        config: AutomatonConfig,
    ) -> "SparseClause":
        """Rebuild a clause from explicit list contents (model loading)."""
        clause = cls(polarity, n_literals, config)
        clause.initial_pool_size = initial_pool_size
        n = config.n_states_per_action
        seen: set[int] = set()
        for lit, state in excluded:
            if not 0 <= lit < n_literals or lit in seen:
                raise ValueError(f"bad excluded literal {lit}")
            if not 0 <= state <= n - 1:
                raise ValueError(f"excluded state {state} outside Exclude range")
            if config.exclude_barrier is not None and state <= config.exclude_barrier:
                raise ValueError(f"excluded state {state} at or past the barrier")
            seen.add(lit)
            clause._append_exc(lit, state)
        for lit, state in included:
            if not 0 <= lit < n_literals or lit in seen:
                raise ValueError(f"bad included literal {lit}")
            if not n <= state <= 2 * n - 1:
                raise ValueError(f"included state {state} outside Include range")
            if config.include_barrier is not None and state >= config.include_barrier:
                raise ValueError(f"included state {state} at or past the barrier")
            seen.add(lit)
            clause._append_inc(lit, state)
        for lit in permanent:
            if not 0 <= lit < n_literals or lit in seen:
                raise ValueError(f"bad permanent literal {lit}")
            seen.add(lit)
            clause._append_perm(lit)
        if initial_pool_size < len(seen):
            raise ValueError("initial pool smaller than the surviving literal count")
        return clause


def init_clause(
    polarity: int,
    n_features: int,
    sample_fraction: float,
    config: AutomatonConfig,
    rng: RandomSource,
    class_id: int = 0,
    clause_index: int = 0,
) -> SparseClause:
    """Fresh clause: every selected literal starts excluded at the reset state.

    Each of the ``2K`` literals is drawn independently with probability
    ``sample_fraction`` (1.0 selects all).  The draws are keyed by
    ``(class_id, clause_index, literal)`` so initialization is reproducible
    and independent of construction order.
    """
    if n_features < 1:
        raise ValueError(f"n_features must be >= 1, got {n_features}")
    if not 0.0 < sample_fraction <= 1.0:
        raise ValueError(f"sample_fraction must lie in (0, 1], got {sample_fraction}")
    n_literals = 2 * n_features
    lits = np.arange(n_literals, dtype=np.uint64)
    u = rng.unit_over_literals(Purpose.CLAUSE_INIT, 0, 0, class_id, clause_index, lits)
    selected = lits[u < sample_fraction]
    clause = SparseClause(polarity, n_literals, config)
    clause.initial_pool_size = int(selected.size)
    start = automata.initial_state(config)
    clause._exc_lits = selected.copy()
    clause._exc_states = np.full(selected.size, start, dtype=np.int64)
    clause._n_exc = int(selected.size)
    return clause
