"""Shared helpers for building and checking clauses in tests."""

import random

import numpy as np
import pytest

from ctm.automata import AutomatonConfig
from ctm.clause import SparseClause, init_clause
from ctm.rng import RandomSource


def assert_clause_invariants(clause: SparseClause):
    """Structural invariants every clause must satisfy at all times."""
    cfg = clause.config
    n = cfg.n_states_per_action
    exc = clause.excluded
    inc = clause.included
    perm = clause.permanent
    exc_ids = [l for l, _ in exc]
    inc_ids = [l for l, _ in inc]
    all_ids = exc_ids + inc_ids + perm
    assert len(set(all_ids)) == len(all_ids), "literal lists are not disjoint"
    for lit, state in exc:
        assert 0 <= lit < clause.n_literals
        assert 0 <= state <= n - 1, f"excluded state {state} outside Exclude range"
        if cfg.exclude_barrier is not None:
            assert state > cfg.exclude_barrier, "live excluded state at or past barrier"
    for lit, state in inc:
        assert 0 <= lit < clause.n_literals
        assert n <= state <= 2 * n - 1, f"included state {state} outside Include range"
        if cfg.include_barrier is not None:
            assert state < cfg.include_barrier, "live included state at or past barrier"
    for lit in perm:
        assert 0 <= lit < clause.n_literals
    assert len(all_ids) <= clause.initial_pool_size


def structure_of(clause: SparseClause):
    """Full ordered structure, for exact comparisons."""
    return (
        tuple(clause.excluded),
        tuple(clause.included),
        tuple(clause.permanent),
    )


def make_scattered_clause(
    n_features=10,
    config=None,
    seed=0,
    fraction=1.0,
    churn=300,
) -> SparseClause:
    """A clause whose automata have been knocked into varied states by a
    random sequence of legal single-literal updates."""
    config = config or AutomatonConfig()
    clause = init_clause(1, n_features, fraction, config, RandomSource(seed))
    rnd = random.Random(seed)
    for _ in range(churn):
        live = [l for l, _ in clause.excluded] + [l for l, _ in clause.included]
        if not live:
            break
        lit = rnd.choice(live)
        if rnd.random() < 0.55:
            clause.increase_literal(lit)
        else:
            clause.decrease_literal(lit)
    return clause


@pytest.fixture
def default_config():
    return AutomatonConfig()


def random_row(n_literals, seed):
    rng = np.random.default_rng(seed)
    k = n_literals // 2
    bits = rng.random(k) < 0.5
    return np.concatenate([bits, ~bits])
