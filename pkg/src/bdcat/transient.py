"""Transition probabilities in the time domain, and numerical Laplace inversion.

``p_hat(t)`` and ``p(t)`` are computed by uniformization of the truncated
generators.  ``p(t)`` is also assembled from ``p_hat`` alone,

    p_{j,n}(t) = e^{-gamma t} p_hat_{j,n}(t)
                 + alpha int_0^t e^{-gamma u} p_hat_{0,n}(u) du
                 + beta  int_0^t e^{-gamma u} p_hat_{1,n}(u) du,

with the integrals done by adaptive Gauss-Legendre panels.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import comb

from .errors import InversionError, TruncationError
from .model import (CatastropheRates, RateSchedule, TruncationPolicy, full_generator_matrix,
                    hat_generator_matrix)
from .resolvent import DEFAULT_POLICY

__all__ = [
    "TransientRow",
    "QuadratureSettings",
    "InversionSettings",
    "uniformize",
    "hat_transition_row",
    "transition_row_direct",
    "transition_row_formula",
    "invert_laplace",
]

POISSON_TAIL = 1e-12


@dataclass(frozen=True)
class TransientRow:
    start: int
    time: float
    probabilities: np.ndarray
    method: str
    truncation_level: int
    error_budget: float

    def __getitem__(self, n):
        return self.probabilities[n] if n < len(self.probabilities) else 0.0

    @property
    def total(self) -> float:
        return math.fsum(self.probabilities)


@dataclass(frozen=True)
class QuadratureSettings:
    order: int = 16
    abs_tol: float = 1e-8
    max_depth: int = 30


@dataclass(frozen=True)
class InversionSettings:
    """Parameters of the Euler-summation Fourier-series inversion.

    ``contour`` is the abscissa parameter ``A`` (the Bromwich line sits at
    ``Re s = A / 2t``); the aliasing error is about ``exp(-A)``, so the
    default is set from ``tol``.  ``terms`` plain partial-sum terms are
    followed by ``euler_terms`` binomially averaged ones.
    """

    tol: float = 1e-8
    contour: float | None = None
    terms: int = 20
    euler_terms: int = 12
    max_error: float = 1e-6

    @property
    def A(self) -> float:
        return self.contour if self.contour is not None else math.log(10.0 / self.tol)


def uniformize(Q, v0: np.ndarray, t: float, tail: float = POISSON_TAIL) -> np.ndarray:
    """Row vector ``v0 exp(tQ)`` by uniformization.

    Poisson weights are summed until the neglected mass is below ``tail``.
    """
    if t == 0:
        return np.array(v0, dtype=float)
    diag = Q.diagonal()
    q = float(np.max(-diag))
    if q <= 0:
        return np.array(v0, dtype=float)
    PT = (Q / q).T.tocsr()
    qt = q * t
    v = np.array(v0, dtype=float)
    out = np.zeros_like(v)
    log_w = -qt
    mass = 0.0
    k = 0
    while True:
        w = math.exp(log_w)
        if w > 0:
            out += w * v
            mass += w
        if k > qt and 1.0 - mass < tail:
            break
        if k > qt + 50 + 20 * math.sqrt(qt) and w == 0.0:
            break
        v = v + PT @ v
        k += 1
        log_w += math.log(qt) - math.log(k)
    return out


def _indicator(j, N):
    e = np.zeros(N + 1)
    e[j] = 1.0
    return e


def _grow(make_Q, j, t, policy, window=16):
    """Uniformize on growing truncations until the row settles (sup-norm)."""
    prev = None
    row = None
    N = None
    for N in policy.levels(minimum=max(j, window) + 2):
        row = uniformize(make_Q(N), _indicator(j, N), t)
        if prev is not None:
            m = len(prev)
            diff = max(float(np.max(np.abs(row[:m] - prev))), float(np.max(row[m:], initial=0.0)))
            if diff <= policy.rel_tol:
                return row, N, True
        prev = row
    return row, N, False


def hat_transition_row(schedule: RateSchedule, j: int, t: float,
                       policy: TruncationPolicy = DEFAULT_POLICY) -> TransientRow:
    """Row ``j`` of ``P_hat(t)``."""
    if t < 0:
        raise ValueError("t must be >= 0")
    if t == 0:
        return TransientRow(j, 0.0, _indicator(j, j), "hat-uniformization", j, 0.0)
    row, N, ok = _grow(lambda N: hat_generator_matrix(schedule, N), j, t, policy)
    if not ok:
        raise TruncationError(f"p_hat[{j},:]({t}): no convergence by level {N}")
    return TransientRow(j, t, row, "hat-uniformization", N, POISSON_TAIL + policy.rel_tol)


def transition_row_direct(schedule: RateSchedule, cat: CatastropheRates, j: int, t: float,
                          policy: TruncationPolicy = DEFAULT_POLICY) -> TransientRow:
    """Row ``j`` of ``P(t)`` by uniformization of the full catastrophe generator."""
    if t < 0:
        raise ValueError("t must be >= 0")
    if t == 0:
        return TransientRow(j, 0.0, _indicator(j, max(j, 1)), "full-uniformization", max(j, 1), 0.0)
    row, N, ok = _grow(lambda N: full_generator_matrix(schedule, cat, N), j, t, policy)
    if not ok:
        raise TruncationError(f"p[{j},:]({t}): no convergence by level {N}")
    return TransientRow(j, t, row, "full-uniformization", N, POISSON_TAIL + policy.rel_tol)


def _gauss_panel(f, a, b, x, w):
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    return half * sum(wk * f(mid + half * xk) for xk, wk in zip(x, w))


def _adaptive(f, a, b, tol, x, w, depth, whole=None):
    if whole is None:
        whole = _gauss_panel(f, a, b, x, w)
    m = 0.5 * (a + b)
    left = _gauss_panel(f, a, m, x, w)
    right = _gauss_panel(f, m, b, x, w)
    err = float(np.max(np.abs(left + right - whole)))
    if err <= tol or depth <= 0:
        return left + right, err
    l, el = _adaptive(f, a, m, tol / 2, x, w, depth - 1, left)
    r, er = _adaptive(f, m, b, tol / 2, x, w, depth - 1, right)
    return l + r, el + er


def transition_row_formula(schedule: RateSchedule, cat: CatastropheRates, j: int, t: float,
                           policy: TruncationPolicy = DEFAULT_POLICY,
                           quad: QuadratureSettings = QuadratureSettings()) -> TransientRow:
    """Row ``j`` of ``P(t)`` assembled from catastrophe-free rows."""
    if t < 0:
        raise ValueError("t must be >= 0")
    if t == 0:
        return TransientRow(j, 0.0, _indicator(j, max(j, 1)), "formula", max(j, 1), 0.0)
    hj = hat_transition_row(schedule, j, t, policy)
    g = cat.gamma
    if cat.alpha == 0 and cat.beta == 0:
        return TransientRow(j, t, hj.probabilities, "formula", hj.truncation_level, hj.error_budget)
    N = max(hj.truncation_level, hat_transition_row(schedule, 0, t, policy).truncation_level,
            hat_transition_row(schedule, 1, t, policy).truncation_level)
    Q = hat_generator_matrix(schedule, N)
    e0, e1 = _indicator(0, N), _indicator(1, N)
    memo: dict[float, np.ndarray] = {}

    def integrand(u):
        # node-keyed memo; local to this call
        if u not in memo:
            w = math.exp(-g * u)
            memo[u] = np.concatenate([w * uniformize(Q, e0, u), w * uniformize(Q, e1, u)])
        return memo[u]

    x, w = np.polynomial.legendre.leggauss(quad.order)
    total, err = _adaptive(integrand, 0.0, t, quad.abs_tol, x, w, quad.max_depth)
    I0, I1 = total[:N + 1], total[N + 1:]
    base = np.zeros(N + 1)
    base[:len(hj.probabilities)] = hj.probabilities
    p = math.exp(-g * t) * base + cat.alpha * I0 + cat.beta * I1
    return TransientRow(j, t, p, "formula", N, err + hj.error_budget)


def invert_laplace(transform: Callable[[complex], complex], t: float,
                   settings: InversionSettings = InversionSettings(), full_output: bool = False):
    """Invert a Laplace transform at ``t > 0`` (Abate-Whitt Euler algorithm).

    The Bromwich integral is discretized by the trapezoidal rule on the line
    ``Re s = A/2t``, giving an alternating series whose tail is accelerated by
    binomial (Euler) averaging of successive partial sums.

    Returns the value, or ``(value, error)`` with ``full_output=True``, where
    ``error`` is the change between the last two Euler averages.

    Raises
    ------
    InversionError
        When the error estimate exceeds ``settings.max_error`` (scaled by
        ``max(1, |value|)``), which flags an oscillating or slowly decaying
        series.
    """
    if not t > 0:
        raise ValueError("t must be > 0")
    A = settings.A
    n, m = settings.terms, settings.euler_terms
    k = np.arange(n + m + 1)
    s = (A + 2j * np.pi * k) / (2.0 * t)
    vals = np.array([complex(transform(complex(z))).real for z in s])
    vals[0] *= 0.5
    vals *= np.where(k % 2 == 0, 1.0, -1.0)
    partial = np.cumsum(vals) * math.exp(A / 2.0) / t
    wm = comb(m, np.arange(m + 1)) / 2.0 ** m
    wm1 = comb(m - 1, np.arange(m)) / 2.0 ** (m - 1)
    value = float(wm @ partial[n:n + m + 1])
    error = abs(value - float(wm1 @ partial[n:n + m]))
    if not math.isfinite(value) or error > settings.max_error * max(1.0, abs(value)):
        raise InversionError(f"inversion at t={t} did not settle (value {value:.6g}, error {error:.3g})")
    return (value, error) if full_output else value
