"""Pure-Python kernels.

Reference implementation of the routines in ``_ckernels.pyx``.  Both
modules consume uniforms in exactly the same order so a fixed seed gives
bit-identical results on either backend.
"""
import math

import numpy as np

SMALL_PIVOT = 1e-13
TINY_PIVOT = 1e-300


def thomas(lower, diag, upper, rhs):
    """Thomas sweep for a complex tridiagonal system with several right-hand sides.

    Returns ``(x, bad)`` where ``bad`` is ``-1`` on success, or the row whose
    pivot was too small relative to its row scale (``x`` is then garbage).
    """
    n = diag.shape[0]
    k = rhs.shape[1]
    cp = np.empty(n, dtype=complex)
    x = np.array(rhs, dtype=complex, copy=True)
    piv = diag[0]
    scale = abs(diag[0]) + (abs(upper[0]) if n > 1 else 0.0)
    if abs(piv) <= TINY_PIVOT or abs(piv) < SMALL_PIVOT * scale:
        return x, 0
    for i in range(n):
        if i > 0:
            m = lower[i - 1]
            piv = diag[i] - m * cp[i - 1]
            scale = abs(diag[i]) + abs(m) + (abs(upper[i]) if i < n - 1 else 0.0)
            if abs(piv) <= TINY_PIVOT or abs(piv) < SMALL_PIVOT * scale:
                return x, i
            for c in range(k):
                x[i, c] = (x[i, c] - m * x[i - 1, c]) / piv
        else:
            for c in range(k):
                x[0, c] = x[0, c] / piv
        if i < n - 1:
            cp[i] = upper[i] / piv
    for i in range(n - 2, -1, -1):
        for c in range(k):
            x[i, c] = x[i, c] - cp[i] * x[i + 1, c]
    return x, -1


def _rates(i, birth_tab, death_tab, tail):
    L = birth_tab.shape[0]
    if i < L:
        return birth_tab[i], death_tab[i]
    return tail[0] * (i + 1) + tail[1], tail[2] * i + tail[3]


def first_catastrophe(birth_tab, death_tab, tail, alpha, beta, j, n_reps, u, cap,
                      out_time, out_kind, out_events):
    """Run replications until the first effective catastrophe.

    Writes time, kind (0 alpha, 1 beta, -1 cap exceeded) and event count for
    each finished replication.  Returns ``(done, used)``; a replication that
    would run past the end of ``u`` is not started over partially, it is left
    for the caller to resume at offset ``used``.
    """
    nu = u.shape[0]
    pos = 0
    done = 0
    while done < n_reps:
        start = pos
        state = j
        t = 0.0
        events = 0
        kind = -1
        while events < cap:
            if pos + 2 > nu:
                return done, start
            lam, mu = _rates(state, birth_tab, death_tab, tail)
            total = lam + mu + alpha + beta
            t += -math.log(1.0 - u[pos]) / total
            r = u[pos + 1] * total
            pos += 2
            events += 1
            if r < lam:
                state += 1
            elif r < lam + mu:
                state -= 1
            elif r < lam + mu + alpha:
                if state >= 1:
                    kind = 0
                    break
            else:
                if state != 1:
                    kind = 1
                    break
        out_time[done] = t if kind >= 0 else math.nan
        out_kind[done] = kind
        out_events[done] = events
        done += 1
    return done, pos


def state_at_time(birth_tab, death_tab, tail, alpha, beta, j, horizon, n_reps, u, cap, out_state):
    """Run replications to ``horizon`` and record the level there (-1 if capped)."""
    nu = u.shape[0]
    pos = 0
    done = 0
    while done < n_reps:
        start = pos
        state = j
        t = 0.0
        events = 0
        while True:
            if events >= cap:
                state = -1
                break
            if pos + 2 > nu:
                return done, start
            lam, mu = _rates(state, birth_tab, death_tab, tail)
            total = lam + mu + alpha + beta
            t += -math.log(1.0 - u[pos]) / total
            r = u[pos + 1] * total
            pos += 2
            if t > horizon:
                break
            events += 1
            if r < lam:
                state += 1
            elif r < lam + mu:
                state -= 1
            elif r < lam + mu + alpha:
                state = 0
            else:
                state = 1
        out_state[done] = state
        done += 1
    return done, pos
