"""Counter-based deterministic randomness.

Every draw is a pure function of the seed and a structured key
``(purpose, epoch, sample, class_id, clause, literal)``.  There is no
hidden stream state, so draws are reproducible regardless of call order
or thread interleaving, and two independent implementations walking the
same keys see the same numbers.  The scalar and vectorized paths are
bit-identical (see ``tests/test_rng.py``).
"""

from __future__ import annotations

import enum

import numpy as np

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_U53 = 2.0**-53


class Purpose(enum.IntEnum):
    """Namespaces for keyed draws, so distinct decisions never collide."""

    CLAUSE_INIT = 1
    CLAUSE_UPDATE = 2
    LITERAL_DECISION = 3
    NEGATIVE_CLASS = 4
    SHUFFLE = 5


def _mix(z: int) -> int:
    # splitmix64 finalizer: full 64-bit avalanche.
    z = (z ^ (z >> 30)) * _M1 & _MASK
    z = (z ^ (z >> 27)) * _M2 & _MASK
    return z ^ (z >> 31)


def mix_from_base(base: int, values: np.ndarray) -> np.ndarray:
    """Extend an already-mixed key base by one field, vectorized."""
    b = np.uint64(base)
    h = (values.astype(np.uint64, copy=False) + np.uint64(1)) * np.uint64(_GAMMA)
    h ^= b
    h = (h ^ (h >> np.uint64(30))) * np.uint64(_M1)
    h = (h ^ (h >> np.uint64(27))) * np.uint64(_M2)
    h ^= h >> np.uint64(31)
    return h


def units_from_base(base: int, literals: np.ndarray) -> np.ndarray:
    """Vector of draws for each literal id under an already-mixed key base."""
    h = mix_from_base(base, literals)
    return (h >> np.uint64(11)).astype(np.float64) * _U53


class RandomSource:
    """Keyed uniform generator over [0, 1).

    ``unit`` draws one scalar; ``unit_over_literals`` draws one value per
    literal id in a single vectorized pass.  For equal keys the two paths
    return the exact same float.
    """

    __slots__ = ("seed", "_pfx")

    def __init__(self, seed: int):
        self.seed = int(seed) & _MASK
        self._pfx = ((), 0)  # one-slot cache of the (purpose, epoch, sample) chain

    def class_base(self, purpose: int, epoch: int, sample: int, class_id: int) -> int:
        """Mixed key prefix up to the class field."""
        key = (int(purpose), epoch, sample)
        cached_key, h = self._pfx
        if key != cached_key:
            h = self.seed
            for v in key:
                h = _mix(h ^ ((v + 1) * _GAMMA & _MASK))
            self._pfx = (key, h)
        return _mix(h ^ ((class_id + 1) * _GAMMA & _MASK))

    def _base(self, purpose: int, epoch: int, sample: int, class_id: int, clause: int) -> int:
        h = self.class_base(purpose, epoch, sample, class_id)
        return _mix(h ^ ((clause + 1) * _GAMMA & _MASK))

    def literal_base(self, epoch: int, sample: int, class_id: int, clause: int) -> int:
        """Mixed key prefix for per-literal feedback draws."""
        return self._base(Purpose.LITERAL_DECISION, epoch, sample, class_id, clause)

    def unit(
        self,
        purpose: int,
        epoch: int = 0,
        sample: int = 0,
        class_id: int = 0,
        clause: int = 0,
        literal: int = 0,
    ) -> float:
        base = self._base(purpose, epoch, sample, class_id, clause)
        h = _mix(base ^ ((literal + 1) * _GAMMA & _MASK))
        return (h >> 11) * _U53

    def unit_over_literals(
        self,
        purpose: int,
        epoch: int,
        sample: int,
        class_id: int,
        clause: int,
        literals: np.ndarray,
    ) -> np.ndarray:
        """Vector of draws keyed by each literal id in ``literals``."""
        return units_from_base(
            self._base(purpose, epoch, sample, class_id, clause), literals
        )

    def permutation(self, epoch: int, n: int) -> np.ndarray:
        """Deterministic sample order for one epoch, keyed by (seed, epoch)."""
        u = self.unit_over_literals(Purpose.SHUFFLE, epoch, 0, 0, 0, np.arange(n, dtype=np.uint64))
        return np.argsort(u, kind="stable")
