"""Two-action learning automaton with optional absorbing barriers.

An automaton has ``2N`` states numbered ``0 .. 2N-1``.  States
``0 .. N-1`` select the Exclude action, states ``N .. 2N-1`` select
Include; a freshly reset automaton sits at ``N-1``, the Exclude state
closest to the action boundary.  Without barriers the walk saturates at
the far ends (state 0 and state ``2N-1``) and can always come back.
With a barrier set, reaching the barrier state absorbs the automaton:
it never transitions again, and the caller is expected to retire it.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass


class Transition(enum.Enum):
    """Structural consequence of one increase/decrease step."""

    STAYED = "stayed"
    SWITCHED_TO_INCLUDE = "switched_to_include"
    SWITCHED_TO_EXCLUDE = "switched_to_exclude"
    ABSORBED_EXCLUDE = "absorbed_exclude"
    ABSORBED_INCLUDE = "absorbed_include"


@dataclass(frozen=True)
class AutomatonConfig:
    """State-space geometry and absorption barriers of one automaton.

    ``n_states_per_action`` is the number of Exclude states (Include has
    the same count, so there are ``2N`` states in total).  A barrier of
    ``None`` disables absorption on that side.  The bounds
    ``exclude_barrier <= N-2`` and ``include_barrier >= N+1`` guarantee
    that a freshly reset automaton (state ``N-1``) and one that just
    switched action (state ``N``) survive at least one more step.
    """

    n_states_per_action: int = 128
    exclude_barrier: int | None = None
    include_barrier: int | None = None

    def __post_init__(self):
        n = self.n_states_per_action
        if n < 1:
            raise ValueError(f"n_states_per_action must be >= 1, got {n}")
        if self.exclude_barrier is not None and not 0 <= self.exclude_barrier <= n - 2:
            raise ValueError(
                f"exclude_barrier must lie in [0, {n - 2}], got {self.exclude_barrier}"
            )
        if self.include_barrier is not None and not n + 1 <= self.include_barrier <= 2 * n - 1:
            raise ValueError(
                f"include_barrier must lie in [{n + 1}, {2 * n - 1}], got {self.include_barrier}"
            )

    @property
    def n_states(self) -> int:
        return 2 * self.n_states_per_action


def initial_state(config: AutomatonConfig) -> int:
    """Reset state: the Exclude state adjacent to the action boundary."""
    return config.n_states_per_action - 1


def action_is_include(state: int, config: AutomatonConfig) -> bool:
    return state >= config.n_states_per_action


def increase(state: int, config: AutomatonConfig) -> tuple[Transition, int]:
    """Step one state toward Include.

    Returns the transition kind and the resulting state.  The caller must
    pass a live (non-absorbed) state; absorption is reported exactly once,
    at the step that enters the barrier.
    """
    n = config.n_states_per_action
    b_in = config.include_barrier
    nxt = state + 1
    if b_in is not None and nxt == b_in:
        return Transition.ABSORBED_INCLUDE, b_in
    if state == n - 1:
        return Transition.SWITCHED_TO_INCLUDE, n
    if state == 2 * n - 1:
        return Transition.STAYED, state  # saturate at the deep Include end
    return Transition.STAYED, nxt


def decrease(state: int, config: AutomatonConfig) -> tuple[Transition, int]:
    """Step one state toward Exclude (mirror of :func:`increase`)."""
    n = config.n_states_per_action
    b_ex = config.exclude_barrier
    nxt = state - 1
    if b_ex is not None and nxt == b_ex:
        return Transition.ABSORBED_EXCLUDE, b_ex
    if state == n:
        return Transition.SWITCHED_TO_EXCLUDE, n - 1
    if state == 0:
        return Transition.STAYED, state  # saturate at the deep Exclude end
    return Transition.STAYED, nxt
