"""Resolvents of the catastrophe process and of the absorbed chain.

Everything here is expressed through ``R = Pi_hat(s + gamma)``, the
catastrophe-free resolvent shifted by the total catastrophe rate:

* the catastrophe resolvent ``pi_{j,n}(s) = R_{jn} + (alpha R_{0n} + beta R_{1n}) / s``;
* the absorbed-chain resolvent ``phi_{j,n}(s)`` through the determinant
  ``H(s)`` and the numerators ``U_j(s)``, ``V_j(s)`` (hat route), or through
  ``A_{ij}(s) = 1 - s pi_{ij}(s)`` and the coefficients ``F_j``, ``G_j``
  (full route).

Both routes are kept, together with direct solves of the forward systems,
so every closed form can be checked against an independent computation.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularHError, TruncationError
from .model import CatastropheRates, RateSchedule, TruncationPolicy
from .resolvent import (DEFAULT_POLICY, ResolventVector, check_frequency, converge_rows,
                        hat_resolvent_columns, hat_resolvent_rows, solve_tridiagonal)

__all__ = [
    "CatastropheFactors",
    "PhiVector",
    "full_resolvent_entry",
    "full_resolvent_direct",
    "aux_a",
    "aux_A",
    "H_value",
    "factors",
    "phi_entry",
    "phi_via_FG",
    "phi_direct",
    "phi_derivative",
    "phi_hat_route",
]

H_UNDERFLOW = 1e-300
MIN_FREQUENCY = 1e-8


class _Dual:
    """Value and first derivative, propagated by the chain rule."""

    __slots__ = ("v", "d")

    def __init__(self, v, d=0.0):
        self.v = v
        self.d = d

    @staticmethod
    def _lift(x):
        return x if isinstance(x, _Dual) else _Dual(x, 0.0)

    def __add__(self, o):
        o = self._lift(o)
        return _Dual(self.v + o.v, self.d + o.d)

    __radd__ = __add__

    def __sub__(self, o):
        o = self._lift(o)
        return _Dual(self.v - o.v, self.d - o.d)

    def __rsub__(self, o):
        return self._lift(o) - self

    def __neg__(self):
        return _Dual(-self.v, -self.d)

    def __mul__(self, o):
        o = self._lift(o)
        return _Dual(self.v * o.v, self.d * o.v + self.v * o.d)

    __rmul__ = __mul__

    def __truediv__(self, o):
        o = self._lift(o)
        return _Dual(self.v / o.v, (self.d * o.v - self.v * o.d) / (o.v * o.v))

    def __rtruediv__(self, o):
        return self._lift(o) / self

    def __abs__(self):
        return abs(self.v)


def _value(x):
    return x.v if isinstance(x, _Dual) else x


def _shifted_rows(schedule, cat, starts, s, policy, window=0):
    """Rows of ``Pi_hat(s + gamma)``; raises if the truncation did not settle."""
    z = complex(s) + cat.gamma
    rows, N, ok = hat_resolvent_rows(schedule, starts, z, policy, window)
    if not ok:
        raise TruncationError(f"pi_hat rows {starts} at {z}: no convergence by level {N}")
    return rows, N


def _guard_pi(s) -> complex:
    s = check_frequency(s)
    if abs(s) < MIN_FREQUENCY:
        raise ValueError(f"|s| = {abs(s):.3g} too close to the 1/s pole; use the limits in first_catastrophe")
    return s


def full_resolvent_entry(schedule: RateSchedule, cat: CatastropheRates, j: int, n: int, s,
                         policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
    """``pi_{j,n}(s)`` expressed through the catastrophe-free resolvent."""
    s = _guard_pi(s)
    rows, _ = _shifted_rows(schedule, cat, (j, 0, 1), s, policy, window=n)
    R = rows[:, n]
    return complex(R[0] + (cat.alpha * R[1] + cat.beta * R[2]) / s)


def _full_forward_bands(schedule, s, N, d0, d1, dn):
    lam = schedule.birth_rates(N + 1)
    mu = schedule.death_rates(N + 1)
    diag = (s + lam + mu + dn).astype(complex)
    diag[0] = s + lam[0] + d0
    if N >= 1:
        diag[1] = s + lam[1] + mu[1] + d1
    return -lam[:N].astype(complex), diag, -mu[1:].astype(complex)


def _band_residual(lower, diag, upper, x, rhs):
    r = diag * x - rhs
    r[1:] += lower * x[:-1]
    r[:-1] += upper * x[1:]
    return float(np.max(np.abs(r[:-1]))) if len(x) > 1 else float(abs(r[0]))


def full_resolvent_direct(schedule: RateSchedule, cat: CatastropheRates, j: int, s,
                          policy: TruncationPolicy = DEFAULT_POLICY, window: int = 0) -> ResolventVector:
    """Row ``j`` of the catastrophe resolvent from its own forward system.

    The catastrophe inflow is folded into constant sources ``alpha/s`` at
    level 0 and ``beta/s`` at level 1, which leaves a tridiagonal system.
    """
    s = _guard_pi(s)
    g = cat.gamma

    def rhs_for(N):
        b = np.zeros(N + 1, dtype=complex)
        b[j] += 1.0
        b[0] += cat.alpha / s
        b[1] += cat.beta / s
        return b

    def solve(N):
        lower, diag, upper = _full_forward_bands(schedule, s, N, g, g, g)
        return solve_tridiagonal(lower, diag, upper, rhs_for(N))[None, :]

    rows, N, ok = converge_rows(solve, max(j, 16, window), policy)
    x = rows[0]
    lower, diag, upper = _full_forward_bands(schedule, s, N, g, g, g)
    return ResolventVector(j, s, x, N, ok, _band_residual(lower, diag, upper, x, rhs_for(N)))


def aux_a(schedule, cat, n: int, s, policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
    """``a_n(s) = 1 - alpha pi_hat_{0n}(s+gamma) - beta pi_hat_{1n}(s+gamma)``."""
    rows, _ = _shifted_rows(schedule, cat, (0, 1), s, policy, window=n)
    return complex(1.0 - cat.alpha * rows[0, n] - cat.beta * rows[1, n])


def aux_A(schedule, cat, i: int, n: int, s, policy: TruncationPolicy = DEFAULT_POLICY,
          form: str = "full") -> complex:
    """``A_{in}(s) = 1 - s pi_{in}(s)``.

    ``form="full"`` goes through the catastrophe resolvent, ``form="hat"``
    uses ``a_n(s) - s pi_hat_{in}(s+gamma)``.
    """
    s = _guard_pi(s)
    if form == "full":
        return 1.0 - s * full_resolvent_entry(schedule, cat, i, n, s, policy)
    if form == "hat":
        rows, _ = _shifted_rows(schedule, cat, (i,), s, policy, window=n)
        return aux_a(schedule, cat, n, s, policy) - s * complex(rows[0, n])
    raise ValueError(f"unknown form {form!r}")


# -- hat route --------------------------------------------------------------

def _hat_route(R, s, alpha, beta):
    """Closed forms built from entries of ``Pi_hat(s + gamma)``.

    ``R`` maps ``(a, b)`` to the entry (plain numbers or ``_Dual``); keys
    ``"j0"``, ``"j1"``, ``"jn"``, ``"0n"``, ``"1n"`` stand for the start row.
    """
    g = alpha + beta
    R00, R01, R10, R11 = R["00"], R["01"], R["10"], R["11"]
    af = 1.0 - alpha * R00
    bf = 1.0 - beta * R11
    a0 = 1.0 - alpha * R00 - beta * R10
    a1 = 1.0 - alpha * R01 - beta * R11
    H = (alpha * beta * (a0 * R01 + a1 * R10 - s * R10 * R01)
         + alpha * a0 * bf + beta * a1 * af + s * af * bf)
    U = alpha * (s + g) * bf * R["j0"] + alpha * beta * (s + g) * R10 * R["j1"]
    V = beta * (s + g) * af * R["j1"] + alpha * beta * (s + g) * R01 * R["j0"]
    return dict(a0=a0, a1=a1, alpha_factor=af, beta_factor=bf, H=H, U=U, V=V)


def _check_H(H, s):
    if abs(_value(H)) < H_UNDERFLOW:
        raise SingularHError(f"H(s) underflows at s = {s}")


def phi_hat_route(schedule: RateSchedule, cat: CatastropheRates, j: int, ns, s,
                  policy: TruncationPolicy = DEFAULT_POLICY, derivative: bool = False):
    """``phi_{j,n}(s)`` for each ``n`` in ``ns`` (and optionally ``d/ds``).

    Only ``Pi_hat(s + gamma)`` enters, so any ``s`` with
    ``Re(s) > -gamma`` is admissible, ``s = 0`` included.  With
    ``derivative=True`` returns ``(values, derivatives)``; derivatives come
    from ``d/ds Pi_hat = -Pi_hat^2`` pushed through the formulas by the chain
    rule.
    """
    s = complex(s)
    ns = [int(n) for n in ns]
    z = s + cat.gamma
    if not z.real > 0:
        raise ValueError(f"need Re(s) > -gamma, got s = {s}")
    rows, N = _shifted_rows(schedule, cat, (j, 0, 1), s, policy, window=max(ns))
    rj, r0, r1 = rows
    if derivative:
        cols = hat_resolvent_columns(schedule, (0, 1, *ns), z, N)

        def ent(row, c):
            return _Dual(complex(row[c]), complex(-np.dot(row, cols[c_index[c]])))

        c_index = {0: 0, 1: 1}
        for k, n in enumerate(ns):
            c_index.setdefault(n, 2 + k)
        sv = _Dual(s, 1.0)
    else:
        def ent(row, c):
            return complex(row[c])
        sv = s
    base = {"00": ent(r0, 0), "01": ent(r0, 1), "10": ent(r1, 0), "11": ent(r1, 1),
            "j0": ent(rj, 0), "j1": ent(rj, 1)}
    q = _hat_route(base, sv, cat.alpha, cat.beta)
    _check_H(q["H"], s)
    out = []
    for n in ns:
        out.append(ent(rj, n) + (q["U"] * ent(r0, n) + q["V"] * ent(r1, n)) / q["H"])
    if derivative:
        return [complex(o.v) for o in out], [complex(o.d) for o in out]
    return [complex(o) for o in out]


def phi_entry(schedule: RateSchedule, cat: CatastropheRates, j: int, n: int, s,
              policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
    """``phi_{j,n}(s)`` for the absorbed chain, hat route (default path)."""
    s = check_frequency(s)
    return phi_hat_route(schedule, cat, j, (n,), s, policy)[0]


def phi_derivative(schedule: RateSchedule, cat: CatastropheRates, j: int, n: int, s,
                   policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
    """``d/ds phi_{j,n}(s)`` by the chain rule through the hat route."""
    return phi_hat_route(schedule, cat, j, (n,), s, policy, derivative=True)[1][0]


# -- full route -------------------------------------------------------------

def _full_pi(schedule, cat, starts, ns, s, policy):
    """``pi_{a,n}(s)`` for a in starts, n in ns, through the shifted rows."""
    rows, _ = _shifted_rows(schedule, cat, tuple(dict.fromkeys((*starts, 0, 1))), s, policy,
                            window=max(ns))
    idx = {a: k for k, a in enumerate(dict.fromkeys((*starts, 0, 1)))}
    r0, r1 = rows[idx[0]], rows[idx[1]]
    return {(a, n): complex(rows[idx[a], n] + (cat.alpha * r0[n] + cat.beta * r1[n]) / s)
            for a in starts for n in ns}


def _full_route(schedule, cat, j, s, policy):
    s = _guard_pi(s)
    a, b = cat.alpha, cat.beta
    pi = _full_pi(schedule, cat, (0, 1, j), (0, 1), s, policy)
    A = {k: 1.0 - s * v for k, v in pi.items()}
    H = ((s + a * A[0, 0]) * (s + b * A[1, 1]) - a * b * A[1, 0] * A[0, 1]) / s
    _check_H(H, s)
    F = (a * b * A[1, 0] * A[j, 1] - a * (s + b * A[1, 1]) * A[j, 0]) / (s * H)
    G = (a * b * A[0, 1] * A[j, 0] - b * (s + a * A[0, 0]) * A[j, 1]) / (s * H)
    return s, A, H, F, G


def H_value(schedule: RateSchedule, cat: CatastropheRates, s,
            policy: TruncationPolicy = DEFAULT_POLICY, form: str = "expanded") -> complex:
    """The determinant ``H(s)``.

    ``form="product"`` is ``s^-1 [(s + alpha A00)(s + beta A11) - alpha beta A10 A01]``;
    ``form="expanded"`` is the rearrangement in terms of ``a_0, a_1`` and
    ``Pi_hat(s+gamma)`` only (valid down to ``s = 0``).
    """
    if form == "product":
        return complex(_full_route(schedule, cat, 0, s, policy)[2])
    if form != "expanded":
        raise ValueError(f"unknown form {form!r}")
    rows, _ = _shifted_rows(schedule, cat, (0, 1), s, policy)
    R = {"00": rows[0, 0], "01": rows[0, 1], "10": rows[1, 0], "11": rows[1, 1],
         "j0": rows[0, 0], "j1": rows[0, 1]}
    return complex(_hat_route(R, complex(s), cat.alpha, cat.beta)["H"])


def phi_via_FG(schedule: RateSchedule, cat: CatastropheRates, j: int, n: int, s,
               policy: TruncationPolicy = DEFAULT_POLICY, extended: bool = False) -> complex:
    """``phi_{j,n}(s)`` through ``A_{ij}``, ``H`` (product form), ``F_j``, ``G_j``.

    Starts 0 and 1 use their dedicated two-term formulas unless
    ``extended=True``, in which case the general ``j >= 2`` formula is applied
    with ``F_j, G_j`` evaluated at ``j`` itself.
    """
    s, A, H, F, G = _full_route(schedule, cat, j, s, policy)
    a, b = cat.alpha, cat.beta
    pi = _full_pi(schedule, cat, (0, 1, j), (n,), s, policy)
    if j == 0 and not extended:
        return complex(((s + b * A[1, 1]) * pi[0, n] - b * A[0, 1] * pi[1, n]) / H)
    if j == 1 and not extended:
        return complex((-a * A[1, 0] * pi[0, n] + (s + a * A[0, 0]) * pi[1, n]) / H)
    return complex(pi[j, n] + F * pi[0, n] + G * pi[1, n])


@dataclass(frozen=True)
class CatastropheFactors:
    """Scalar building blocks at one frequency and start level.

    ``A_hat`` holds ``A_{in}`` from the shifted catastrophe-free resolvent and
    ``A_full`` the same quantities from ``1 - s pi_{in}(s)``; keys are
    ``(i, n)`` for ``i`` in ``{0, 1, j}`` and ``n`` in ``{0, 1}``.
    """

    start: int
    frequency: complex
    a0: complex
    a1: complex
    alpha_factor: complex
    beta_factor: complex
    A_hat: dict
    A_full: dict
    H: complex
    H_product: complex
    U: complex
    V: complex
    F: complex
    G: complex


def factors(schedule: RateSchedule, cat: CatastropheRates, j: int, s,
            policy: TruncationPolicy = DEFAULT_POLICY) -> CatastropheFactors:
    s = _guard_pi(s)
    rows, _ = _shifted_rows(schedule, cat, (j, 0, 1), s, policy)
    rj, r0, r1 = rows
    R = {"00": complex(r0[0]), "01": complex(r0[1]), "10": complex(r1[0]), "11": complex(r1[1]),
         "j0": complex(rj[0]), "j1": complex(rj[1])}
    q = _hat_route(R, s, cat.alpha, cat.beta)
    _check_H(q["H"], s)
    a_n = (q["a0"], q["a1"])
    row_of = {0: r0, 1: r1, j: rj}
    A_hat = {(i, n): complex(a_n[n] - s * row_of[i][n]) for i in (0, 1, j) for n in (0, 1)}
    _, A_full, H_prod, F, G = _full_route(schedule, cat, j, s, policy)
    return CatastropheFactors(
        start=j, frequency=s, a0=q["a0"], a1=q["a1"],
        alpha_factor=q["alpha_factor"], beta_factor=q["beta_factor"],
        A_hat=A_hat, A_full={k: complex(v) for k, v in A_full.items()},
        H=q["H"], H_product=complex(H_prod), U=q["U"], V=q["V"], F=complex(F), G=complex(G),
    )


# -- direct solve of the absorbed chain ---------------------------------------

@dataclass(frozen=True)
class PhiVector:
    """Row ``j`` of the absorbed-chain resolvent, cemetery states included."""

    start: int
    frequency: complex
    entries: np.ndarray
    alpha_absorbed: complex
    beta_absorbed: complex
    truncation_level: int
    converged: bool
    residual: float

    def __getitem__(self, n):
        if n == -2:
            return self.alpha_absorbed
        if n == -1:
            return self.beta_absorbed
        return self.entries[n]

    @property
    def total_mass(self) -> complex:
        """``s`` times the row sum over all of ``S``; 1 for an honest chain."""
        return self.frequency * (self.alpha_absorbed + self.beta_absorbed + self.entries.sum())


def phi_direct(schedule: RateSchedule, cat: CatastropheRates, j: int, s,
               policy: TruncationPolicy = DEFAULT_POLICY, window: int = 0) -> PhiVector:
    """Solve the forward system of the absorbed chain directly.

    The block on ``{0, 1, ...}`` is tridiagonal and does not involve the
    cemetery states; the two cemetery entries then follow from a 2x2 system.
    """
    s = check_frequency(s)
    a, b = cat.alpha, cat.beta
    g = cat.gamma

    def solve(N):
        lower, diag, upper = _full_forward_bands(schedule, s, N, b, a, g)
        rhs = np.zeros(N + 1, dtype=complex)
        rhs[j] = 1.0
        return solve_tridiagonal(lower, diag, upper, rhs)[None, :]

    rows, N, ok = converge_rows(solve, max(j, 16, window), policy)
    x = rows[0]
    lower, diag, upper = _full_forward_bands(schedule, s, N, b, a, g)
    rhs = np.zeros(N + 1, dtype=complex)
    rhs[j] = 1.0
    res = _band_residual(lower, diag, upper, x, rhs)
    # (s+a) y2 + a y1 = a (1/s - x0) ;  b y2 + (s+b) y1 = b (1/s - x1)
    M = np.array([[s + a, a], [b, s + b]], dtype=complex)
    c = np.array([a * (1.0 / s - x[0]), b * (1.0 / s - x[1])], dtype=complex)
    y2, y1 = np.linalg.solve(M, c)
    return PhiVector(j, s, x, complex(y2), complex(y1), N, ok, res)
