"""Jitted feedback kernels.

Each kernel fuses the keyed per-literal draws, the update decision, and
the non-crossing state changes into one pass over a clause's arrays.
Literals whose automata would cross a list boundary (action switch or
absorption) are not touched; they are written to ``cross_lits`` /
``cross_up`` in scan order for the caller to move through the regular
single-literal path.  The draw arithmetic is bit-identical to
:func:`ctm.rng.units_from_base`.

When numba is unavailable the pure-numpy fallbacks in ``ctm.clause`` are
used instead; both routes produce identical results.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a soft dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        return wrap(args[0]) if args and callable(args[0]) else wrap


_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_ONE = np.uint64(1)
_U53 = 2.0**-53


@njit(cache=True, fastmath=False)
def _draw(lit, base):
    h = (lit + _ONE) * _GAMMA
    h ^= base
    h = (h ^ (h >> _S30)) * _M1
    h = (h ^ (h >> _S27)) * _M2
    h ^= h >> _S31
    return (h >> _S11) * _U53


@njit(cache=True, fastmath=False)
def type_i_kernel(
    exc_lits,
    exc_states,
    n_exc,
    inc_lits,
    inc_states,
    n_inc,
    row,
    base,
    p_include,
    p_forget,
    n,
    b_ex,
    b_in,
    clause_output,
    allow_new_inclusions,
    cross_lits,
    cross_up,
):
    """One Type-I pass; returns (state_changed, saturated, n_crossers)."""
    changed = 0
    saturated = 0
    ncross = 0
    top = 2 * n - 1
    for i in range(n_exc):
        lit = exc_lits[i]
        st = exc_states[i]
        if clause_output == 1 and row[lit]:
            if allow_new_inclusions and _draw(lit, base) < p_include:
                if st == n - 1:
                    cross_lits[ncross] = lit
                    cross_up[ncross] = 1
                    ncross += 1
                else:
                    exc_states[i] = st + 1
                    changed += 1
        elif _draw(lit, base) < p_forget:
            # state 0 is only live when the barrier is absent, so check
            # saturation before the (-1 sentinel) barrier comparison
            if st == 0:
                saturated += 1
            elif st - 1 == b_ex:
                cross_lits[ncross] = lit
                cross_up[ncross] = 0
                ncross += 1
            else:
                exc_states[i] = st - 1
                changed += 1
    for i in range(n_inc):
        lit = inc_lits[i]
        st = inc_states[i]
        if clause_output == 1 and row[lit]:
            if _draw(lit, base) < p_include:
                if st == top:
                    saturated += 1
                elif st + 1 == b_in:
                    cross_lits[ncross] = lit
                    cross_up[ncross] = 1
                    ncross += 1
                else:
                    inc_states[i] = st + 1
                    changed += 1
        elif _draw(lit, base) < p_forget:
            if st == n:
                cross_lits[ncross] = lit
                cross_up[ncross] = 0
                ncross += 1
            else:
                inc_states[i] = st - 1
                changed += 1
    return changed, saturated, ncross


@njit(cache=True, fastmath=False)
def _extend(value, base):
    h = (value + _ONE) * _GAMMA
    h ^= base
    h = (h ^ (h >> _S30)) * _M1
    h = (h ^ (h >> _S27)) * _M2
    h ^= h >> _S31
    return h


@njit(cache=True, fastmath=False)
def bank_step_kernel(
    exc_l,
    exc_s,
    ne,
    inc_l,
    inc_s,
    ni,
    perm_l,
    npm,
    row,
    half,
    type_i_on_positive,
    t,
    gate_base,
    class_base,
    p_include,
    p_forget,
    budget,
    n,
    b_ex,
    b_in,
    moved,
):
    """One bank's complete training-step feedback, fused.

    Evaluates every clause, forms the clamped vote, draws the per-clause
    feedback gates, and applies Type I to one polarity and Type II to the
    other, including the swap-remove list moves for boundary-crossing
    literals.  ``ne``/``ni``/``npm`` are the live list lengths per clause
    and are updated in place; the caller copies them back to the clause
    objects.  Semantics per clause are identical to ``type_i_kernel`` /
    ``type_ii_kernel`` followed by the single-literal move path.

    Returns (update_events, newly_permanent, newly_discarded, n_moves);
    ``moved[ci]`` is set for every clause whose list lengths changed, so
    the caller can resync just those.
    """
    s_count = ne.size
    top = 2 * n - 1

    outputs = np.empty(s_count, np.uint8)
    for ci in range(s_count):
        if ni[ci] + npm[ci] == 0:
            outputs[ci] = 1  # training-mode empty clause
            continue
        val = 1
        for i in range(ni[ci]):
            if not row[inc_l[ci, i]]:
                val = 0
                break
        if val == 1:
            for i in range(npm[ci]):
                if not row[perm_l[ci, i]]:
                    val = 0
                    break
        outputs[ci] = val

    v = 0
    for ci in range(half):
        v += outputs[ci]
    for ci in range(half, s_count):
        v -= outputs[ci]
    if v > t:
        v = t
    if v < -t:
        v = -t
    if type_i_on_positive == 1:
        p_update = (t - v) / (2.0 * t)
    else:
        p_update = (t + v) / (2.0 * t)

    cap = exc_l.shape[1]
    cross_lits = np.empty(2 * cap, np.uint64)
    cross_seg = np.empty(2 * cap, np.uint8)
    cross_up = np.empty(2 * cap, np.uint8)
    events = 0
    perm_new = 0
    disc = 0
    moves = 0
    for ci in range(s_count):
        moved[ci] = 0

    for ci in range(s_count):
        if _draw(np.uint64(ci), gate_base) >= p_update:
            continue
        is_positive = ci < half
        if (is_positive and type_i_on_positive == 1) or (
            not is_positive and type_i_on_positive == 0
        ):
            # Type I: scan both lists, flag crossers, then move them in order
            base = _extend(np.uint64(ci), class_base)
            c_out = outputs[ci]
            allow = budget < 0 or ni[ci] + npm[ci] < budget
            ncross = 0
            for i in range(ne[ci]):
                lit = exc_l[ci, i]
                st = exc_s[ci, i]
                if c_out == 1 and row[lit]:
                    if allow and _draw(lit, base) < p_include:
                        if st == n - 1:
                            cross_lits[ncross] = lit
                            cross_seg[ncross] = 0
                            cross_up[ncross] = 1
                            ncross += 1
                        else:
                            exc_s[ci, i] = st + 1
                            events += 1
                elif _draw(lit, base) < p_forget:
                    if st == 0:
                        events += 1  # saturated at the deep Exclude end
                    elif st - 1 == b_ex:
                        cross_lits[ncross] = lit
                        cross_seg[ncross] = 0
                        cross_up[ncross] = 0
                        ncross += 1
                    else:
                        exc_s[ci, i] = st - 1
                        events += 1
            for i in range(ni[ci]):
                lit = inc_l[ci, i]
                st = inc_s[ci, i]
                if c_out == 1 and row[lit]:
                    if _draw(lit, base) < p_include:
                        if st == top:
                            events += 1  # saturated at the deep Include end
                        elif st + 1 == b_in:
                            cross_lits[ncross] = lit
                            cross_seg[ncross] = 1
                            cross_up[ncross] = 1
                            ncross += 1
                        else:
                            inc_s[ci, i] = st + 1
                            events += 1
                elif _draw(lit, base) < p_forget:
                    if st == n:
                        cross_lits[ncross] = lit
                        cross_seg[ncross] = 1
                        cross_up[ncross] = 0
                        ncross += 1
                    else:
                        inc_s[ci, i] = st - 1
                        events += 1
            for k in range(ncross):
                lit = cross_lits[k]
                if cross_seg[k] == 0:
                    pos = 0
                    for j in range(ne[ci]):
                        if exc_l[ci, j] == lit:
                            pos = j
                            break
                    last = ne[ci] - 1
                    if pos != last:
                        exc_l[ci, pos] = exc_l[ci, last]
                        exc_s[ci, pos] = exc_s[ci, last]
                    ne[ci] = last
                    if cross_up[k] == 1:
                        inc_l[ci, ni[ci]] = lit
                        inc_s[ci, ni[ci]] = n
                        ni[ci] += 1
                    else:
                        disc += 1
                else:
                    pos = 0
                    for j in range(ni[ci]):
                        if inc_l[ci, j] == lit:
                            pos = j
                            break
                    last = ni[ci] - 1
                    if pos != last:
                        inc_l[ci, pos] = inc_l[ci, last]
                        inc_s[ci, pos] = inc_s[ci, last]
                    ni[ci] = last
                    if cross_up[k] == 1:
                        perm_l[ci, npm[ci]] = lit
                        npm[ci] += 1
                        perm_new += 1
                    else:
                        exc_l[ci, ne[ci]] = lit
                        exc_s[ci, ne[ci]] = n - 1
                        ne[ci] += 1
                events += 1
                moves += 1
                moved[ci] = 1
        elif outputs[ci] == 1 and ne[ci] > 0:
            # Type II: push false excluded literals toward Include
            ncross = 0
            for i in range(ne[ci]):
                lit = exc_l[ci, i]
                if not row[lit]:
                    st = exc_s[ci, i]
                    if st == n - 1:
                        cross_lits[ncross] = lit
                        ncross += 1
                    else:
                        exc_s[ci, i] = st + 1
                        events += 1
            for k in range(ncross):
                lit = cross_lits[k]
                pos = 0
                for j in range(ne[ci]):
                    if exc_l[ci, j] == lit:
                        pos = j
                        break
                last = ne[ci] - 1
                if pos != last:
                    exc_l[ci, pos] = exc_l[ci, last]
                    exc_s[ci, pos] = exc_s[ci, last]
                ne[ci] = last
                inc_l[ci, ni[ci]] = lit
                inc_s[ci, ni[ci]] = n
                ni[ci] += 1
                events += 1
                moves += 1
                moved[ci] = 1
    return events, perm_new, disc, moves


@njit(cache=True, fastmath=False)
def bank_eval_kernel(inc_l, ni, perm_l, npm, row, training, out):
    """Clause outputs straight from the bank arenas (positives first)."""
    for ci in range(out.size):
        if ni[ci] + npm[ci] == 0:
            out[ci] = training
            continue
        value = True
        for i in range(ni[ci]):
            if not row[inc_l[ci, i]]:
                value = False
                break
        if value:
            for i in range(npm[ci]):
                if not row[perm_l[ci, i]]:
                    value = False
                    break
        out[ci] = value


@njit(cache=True, fastmath=False)
def draw_units_kernel(lits, base, out):
    """Keyed draws for a small id vector (clause gates)."""
    for i in range(lits.size):
        out[i] = _draw(lits[i], base)


@njit(cache=True, fastmath=False)
def find_kernel(arr, n, value):
    """Position of ``value`` in ``arr[:n]``, or -1."""
    for i in range(n):
        if arr[i] == value:
            return i
    return -1


@njit(cache=True, fastmath=False)
def type_ii_kernel(exc_lits, exc_states, n_exc, row, n, cross_lits):
    """One Type-II pass; returns (state_changed, n_crossers)."""
    changed = 0
    ncross = 0
    for i in range(n_exc):
        lit = exc_lits[i]
        if not row[lit]:
            st = exc_states[i]
            if st == n - 1:
                cross_lits[ncross] = lit
                ncross += 1
            else:
                exc_states[i] = st + 1
                changed += 1
    return changed, ncross


@njit(cache=True, fastmath=False)
def clause_output_kernel(inc_lits, n_inc, perm_lits, n_perm, row, training):
    """Single-clause conjunction over included and permanent literals."""
    if n_inc + n_perm == 0:
        return training
    for i in range(n_inc):
        if not row[inc_lits[i]]:
            return False
    for i in range(n_perm):
        if not row[perm_lits[i]]:
            return False
    return True
