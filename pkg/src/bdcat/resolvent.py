"""Rows of the catastrophe-free resolvent by truncated tridiagonal solves.

Row ``j`` of ``(sI - Q_hat)^{-1}`` satisfies the forward system

    (s + lambda_0) x_0 - mu_1 x_1 = delta_{j0}
    (s + omega_n) x_n - lambda_{n-1} x_{n-1} - mu_{n+1} x_{n+1} = delta_{jn}

which is tridiagonal.  The system is cut at level ``N`` with a killed
boundary and ``N`` is grown until the leading entries stop moving.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import lapack

from ._backend import kernels
from .errors import SingularSystemError, TruncationError
from .model import RateSchedule, TruncationPolicy

__all__ = [
    "DEFAULT_POLICY",
    "ResolventVector",
    "solve_tridiagonal",
    "converge_rows",
    "hat_resolvent_row",
    "hat_resolvent_rows",
    "hat_resolvent_entry",
    "hat_resolvent_columns",
    "hat_resolvent_derivative",
    "check_frequency",
]

DEFAULT_POLICY = TruncationPolicy()
PROBE_WINDOW = 16


@dataclass(frozen=True)
class ResolventVector:
    start: int
    frequency: complex
    entries: np.ndarray
    truncation_level: int
    converged: bool
    residual: float

    def __getitem__(self, n):
        return self.entries[n]

    def __len__(self):
        return len(self.entries)


def check_frequency(s) -> complex:
    s = complex(s)
    if not s.real > 0:
        raise ValueError(f"frequency must have positive real part, got {s}")
    return s


def solve_tridiagonal(lower, diag, upper, rhs) -> np.ndarray:
    """Solve a (complex) tridiagonal system.

    ``lower[i]`` is ``A[i+1, i]`` and ``upper[i]`` is ``A[i, i+1]``.  ``rhs``
    may be one- or two-dimensional.  A Thomas sweep is tried first; if it hits
    a small pivot the system is handed to LAPACK ``gtsv`` (partial pivoting).

    Raises
    ------
    SingularSystemError
        If no usable pivot exists.
    """
    diag = np.ascontiguousarray(diag, dtype=complex)
    n = diag.shape[0]
    if n < 1:
        raise ValueError("empty system")
    lower = np.ascontiguousarray(lower, dtype=complex)
    upper = np.ascontiguousarray(upper, dtype=complex)
    if lower.shape[0] != n - 1 or upper.shape[0] != n - 1:
        raise ValueError("off-diagonals must have length n - 1")
    b = np.asarray(rhs, dtype=complex)
    squeeze = b.ndim == 1
    b2 = np.ascontiguousarray(b.reshape(n, -1))
    x, bad = kernels.thomas(lower, diag, upper, b2)
    if bad >= 0:
        x = _pivoted_solve(lower, diag, upper, b2, bad)
    return x[:, 0] if squeeze else x


def _pivoted_solve(lower, diag, upper, b, bad):
    if diag.shape[0] == 1:
        if abs(diag[0]) <= 1e-300:
            raise SingularSystemError("1x1 system with zero pivot")
        return b / diag[0]
    _, _, _, x, info = lapack.zgtsv(lower.copy(), diag.copy(), upper.copy(), b.copy())
    if info != 0:
        raise SingularSystemError(f"tridiagonal system is singular (pivot {info - 1}; Thomas stopped at row {bad})")
    return x


def _forward_bands(schedule: RateSchedule, s: complex, N: int, shift: float = 0.0):
    """Bands of ``(sI - Q_hat_N)^T`` (rows act on the forward index)."""
    lam = schedule.birth_rates(N + 1)
    mu = schedule.death_rates(N + 1)
    diag = s + shift + lam + mu
    return -lam[:N].astype(complex), diag.astype(complex), -mu[1:].astype(complex)


def converge_rows(solve: Callable[[int], np.ndarray], window: int, policy: TruncationPolicy):
    """Grow the truncation level until ``solve(N)[:, :window+1]`` settles.

    The row sums must settle too: with a killed boundary they increase with
    ``N``, and their change bounds the mass still missing beyond the window.
    ``solve(N)`` must return an array of shape ``(k, N+1)``.  Returns
    ``(rows, N, converged)``.
    """
    prev = None
    rows = None
    N = None
    for N in policy.levels(minimum=window + 2):
        rows = solve(N)
        if prev is not None:
            a = rows[:, :window + 1]
            b = prev[:, :window + 1]
            sa, sb = rows.sum(axis=1), prev.sum(axis=1)
            if (np.all(np.abs(a - b) <= policy.rel_tol * np.abs(a))
                    and np.all(np.abs(sa - sb) <= policy.rel_tol * np.abs(sa))):
                return rows, N, True
        prev = rows
    return rows, N, False


@functools.lru_cache(maxsize=4096)
def _rows_cached(schedule, starts, s, policy, window):
    def solve(N):
        lower, diag, upper = _forward_bands(schedule, s, N)
        rhs = np.zeros((N + 1, len(starts)), dtype=complex)
        for c, j in enumerate(starts):
            rhs[j, c] = 1.0
        return solve_tridiagonal(lower, diag, upper, rhs).T

    rows, N, ok = converge_rows(solve, window, policy)
    rows.setflags(write=False)
    return rows, N, ok


def hat_resolvent_rows(schedule: RateSchedule, starts, s, policy: TruncationPolicy = DEFAULT_POLICY,
                       window: int = 0):
    """Rows ``starts`` of the catastrophe-free resolvent on a shared truncation.

    Returns ``(rows, N, converged)`` with ``rows[c, n] = pi_hat_{starts[c], n}(s)``.
    Results are cached; the returned array is read-only.
    """
    starts = tuple(int(j) for j in starts)
    if min(starts) < 0:
        raise ValueError("start levels must be >= 0")
    s = complex(s)
    if not s.real > 0:
        raise ValueError(f"frequency must have positive real part, got {s}")
    w = max(max(starts), PROBE_WINDOW, int(window))
    return _rows_cached(schedule, starts, s, policy, w)


def _residual(schedule, j, s, x):
    N = len(x) - 1
    lower, diag, upper = _forward_bands(schedule, s, N)
    r = diag * x
    r[1:] += lower * x[:-1]
    r[:-1] += upper * x[1:]
    r[j] -= 1.0
    # the last row carries the truncation defect, not solver error
    return float(np.max(np.abs(r[:-1]))) if N > 0 else float(abs(r[0]))


def hat_resolvent_row(schedule: RateSchedule, j: int, s, policy: TruncationPolicy = DEFAULT_POLICY,
                      window: int = 0) -> ResolventVector:
    """Row ``j`` of the catastrophe-free resolvent at frequency ``s``.

    Never raises on non-convergence: the best vector comes back with
    ``converged=False``.
    """
    s = check_frequency(s)
    rows, N, ok = hat_resolvent_rows(schedule, (j,), s, policy, window)
    x = rows[0]
    return ResolventVector(j, s, x, N, ok, _residual(schedule, j, s, x))


def _require(ok, what, N):
    if not ok:
        raise TruncationError(f"{what}: truncation did not converge by level {N}")


def hat_resolvent_entry(schedule: RateSchedule, j: int, n: int, s,
                        policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
    s = check_frequency(s)
    rows, N, ok = hat_resolvent_rows(schedule, (j,), s, policy, window=n)
    _require(ok, f"pi_hat[{j},{n}]({s})", N)
    return complex(rows[0, n])


@functools.lru_cache(maxsize=1024)
def _columns_cached(schedule, cols, s, N):
    lam = schedule.birth_rates(N + 1)
    mu = schedule.death_rates(N + 1)
    diag = (s + lam + mu).astype(complex)
    rhs = np.zeros((N + 1, len(cols)), dtype=complex)
    for c, n in enumerate(cols):
        rhs[n, c] = 1.0
    out = solve_tridiagonal(-mu[1:].astype(complex), diag, -lam[:N].astype(complex), rhs).T
    out.setflags(write=False)
    return out


def hat_resolvent_columns(schedule: RateSchedule, cols, s, N: int) -> np.ndarray:
    """Columns of ``(sI - Q_hat_N)^{-1}`` at a fixed truncation level."""
    return _columns_cached(schedule, tuple(int(n) for n in cols), complex(s), int(N))


def hat_resolvent_derivative(schedule: RateSchedule, j: int, n: int, s,
                             policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
    """``d/ds pi_hat_{j,n}(s)`` from the identity ``R'(s) = -R(s)^2``."""
    s = check_frequency(s)
    rows, N, ok = hat_resolvent_rows(schedule, (j,), s, policy, window=n)
    _require(ok, f"pi_hat'[{j},{n}]({s})", N)
    col = hat_resolvent_columns(schedule, (n,), s, N)[0]
    return complex(-np.dot(rows[0], col))
