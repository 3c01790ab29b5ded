"""Time ``C_j`` to the first effective catastrophe from level ``j``.

An alpha-catastrophe is effective when it fires above level 0, a
beta-catastrophe when it fires away from level 1.  Killing the process at
the first effective event gives the absorbed chain, and the Laplace
transforms of the (sub-)densities of ``C_j`` follow from ``phi_{j,0}`` and
``phi_{j,1}``.  Moments use ``phi`` and ``phi'`` at ``s = 0``.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

from scipy import integrate

from .catastrophe import phi_hat_route
from .errors import CatastropheRequiredError, LimitError
from .model import CatastropheRates, RateSchedule, TruncationPolicy
from .resolvent import DEFAULT_POLICY, hat_resolvent_derivative, hat_resolvent_entry
from .transient import InversionSettings, invert_laplace

__all__ = [
    "TransformTriple",
    "FirstCatastropheReport",
    "delta_transforms",
    "phi_at_zero",
    "phi_prime_at_zero",
    "type_probabilities",
    "moments",
    "moments_single_type",
    "density",
    "cumulative",
    "density_mass",
]

RICHARDSON_STEPS = (1e-2, 5e-3, 2.5e-3)
DERIVATIVE_AGREEMENT = 1e-5
RICHARDSON_SETTLE = 1e-4


@dataclass(frozen=True)
class TransformTriple:
    delta_alpha: complex
    delta_beta: complex
    delta: complex


@dataclass(frozen=True)
class FirstCatastropheReport:
    start: int
    mean: float
    second_moment: float
    variance: float
    p_alpha_first: float
    p_beta_first: float
    method: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def _require_catastrophe(cat: CatastropheRates):
    if not cat.gamma > 0:
        raise CatastropheRequiredError("alpha + beta must be > 0")


def delta_transforms(schedule: RateSchedule, cat: CatastropheRates, j: int, s,
                     policy: TruncationPolicy = DEFAULT_POLICY) -> TransformTriple:
    """Laplace transforms of the density of ``C_j`` and its two typed parts."""
    _require_catastrophe(cat)
    s = complex(s)
    if not s.real > 0:
        raise ValueError(f"frequency must have positive real part, got {s}")
    a, b, g = cat.alpha, cat.beta, cat.gamma
    f0, f1 = phi_hat_route(schedule, cat, j, (0, 1), s, policy)
    x0 = 1.0 - s * f0
    x1 = 1.0 - s * f1
    den = s * s + g * s
    return TransformTriple(
        delta_alpha=(a * (s + b) * x0 - a * b * x1) / den,
        delta_beta=(b * (s + a) * x1 - a * b * x0) / den,
        delta=(a * x0 + b * x1) / (s + g),
    )


def _step_scale(schedule: RateSchedule, cat: CatastropheRates) -> float:
    """Frequency scale on which ``phi`` varies near 0.

    ``gamma`` alone is too coarse when a catastrophe rate dwarfs the
    birth-death rates, since level 0 (or 1) is then left at the much slower
    rate ``lambda_0`` (or ``omega_1``).
    """
    return min(cat.gamma, schedule.birth(0), schedule.omega(1))


def _richardson_limit(f, h0):
    """Limit of ``f(s)`` as ``s -> 0+`` from three geometric steps."""
    h = [h0 * r / RICHARDSON_STEPS[0] for r in RICHARDSON_STEPS]
    v = [f(x) for x in h]
    r1a = 2 * v[1] - v[0]
    r1b = 2 * v[2] - v[1]
    r2 = (4 * r1b - r1a) / 3
    return r2, abs(r2 - r1b)


def phi_at_zero(schedule: RateSchedule, cat: CatastropheRates, j: int, ns=(0, 1),
                policy: TruncationPolicy = DEFAULT_POLICY, method: str = "direct"):
    """``phi_{j,n}(0)`` for each ``n`` in ``ns``.

    ``method="direct"`` evaluates the hat-route closed form at ``s = 0``
    (it only needs ``Pi_hat(gamma)``).  ``method="richardson"``
    extrapolates from ``s in {1e-2, 5e-3, 2.5e-3} * c`` where ``c`` is
    ``gamma`` capped by ``lambda_0`` and ``omega_1``.
    """
    _require_catastrophe(cat)
    ns = tuple(ns)
    if method == "direct":
        return [v.real for v in phi_hat_route(schedule, cat, j, ns, 0.0, policy)]
    if method != "richardson":
        raise ValueError(f"unknown method {method!r}")
    out = []
    for n in ns:
        val, err = _richardson_limit(lambda x: phi_hat_route(schedule, cat, j, (n,), x, policy)[0].real,
                                     RICHARDSON_STEPS[0] * _step_scale(schedule, cat))
        # err is the change from the first-order stage, so it overstates the
        # error of the second-order value by roughly a factor of h / gamma
        if err > RICHARDSON_SETTLE * max(1.0, abs(val)):
            raise LimitError(f"phi[{j},{n}](0+) did not settle (change {err:.3g})")
        out.append(val)
    return out


def phi_prime_at_zero(schedule: RateSchedule, cat: CatastropheRates, j: int, ns=(0, 1),
                      policy: TruncationPolicy = DEFAULT_POLICY, method: str = "chain"):
    """``phi'_{j,n}(0)``, by the chain rule (``"chain"``) or central differences (``"fd"``)."""
    _require_catastrophe(cat)
    ns = tuple(ns)
    if method == "chain":
        return [d.real for d in phi_hat_route(schedule, cat, j, ns, 0.0, policy, derivative=True)[1]]
    if method != "fd":
        raise ValueError(f"unknown method {method!r}")
    h = 1e-2 * _step_scale(schedule, cat)

    def central(step):
        plus = phi_hat_route(schedule, cat, j, ns, step, policy)
        minus = phi_hat_route(schedule, cat, j, ns, -step, policy)
        return [(p - m).real / (2 * step) for p, m in zip(plus, minus)]

    d1, d2 = central(h), central(h / 2)
    return [(4 * b - a) / 3 for a, b in zip(d1, d2)]


def type_probabilities(schedule: RateSchedule, cat: CatastropheRates, j: int,
                       policy: TruncationPolicy = DEFAULT_POLICY):
    """``(P(alpha-type first), P(beta-type first))`` from level ``j``."""
    _require_catastrophe(cat)
    a, b, g = cat.alpha, cat.beta, cat.gamma
    f0, f1 = phi_at_zero(schedule, cat, j, (0, 1), policy)
    return a * (1 + b * (f1 - f0)) / g, b * (1 + a * (f0 - f1)) / g


def moments(schedule: RateSchedule, cat: CatastropheRates, j: int,
            policy: TruncationPolicy = DEFAULT_POLICY, check_derivative: bool = True
            ) -> FirstCatastropheReport:
    """Mean, second moment, variance and type probabilities of ``C_j``.

    ``phi'(0)`` comes from the chain rule; unless ``check_derivative`` is
    off it is confirmed by finite differences and a relative mismatch above
    1e-5 raises :class:`LimitError`.
    """
    _require_catastrophe(cat)
    a, b, g = cat.alpha, cat.beta, cat.gamma
    f0, f1 = phi_at_zero(schedule, cat, j, (0, 1), policy)
    d0, d1 = phi_prime_at_zero(schedule, cat, j, (0, 1), policy, "chain")
    mismatch = None
    if check_derivative:
        e0, e1 = phi_prime_at_zero(schedule, cat, j, (0, 1), policy, "fd")
        mismatch = max(abs(d0 - e0) / max(abs(d0), 1e-300), abs(d1 - e1) / max(abs(d1), 1e-300))
        if mismatch > DERIVATIVE_AGREEMENT:
            raise LimitError(f"phi'(0) chain rule vs finite differences disagree ({mismatch:.3g})")
    core = 1 + a * f0 + b * f1
    mean = core / g
    second = 2 * (core - g * (a * d0 + b * d1)) / g ** 2
    pa = a * (1 + b * (f1 - f0)) / g
    pb = b * (1 + a * (f0 - f1)) / g
    return FirstCatastropheReport(
        start=j, mean=mean, second_moment=second, variance=second - mean ** 2,
        p_alpha_first=pa, p_beta_first=pb,
        method={"phi_zero": "direct", "phi_prime": "chain", "derivative_mismatch": mismatch,
                "rel_tol": policy.rel_tol, "max_level": policy.max_level},
    )


def moments_single_type(schedule: RateSchedule, rate: float, which: str, j: int,
                        policy: TruncationPolicy = DEFAULT_POLICY) -> FirstCatastropheReport:
    """Moments of ``C_j`` when only one catastrophe type is present.

    ``which`` is ``"alpha"`` (the other rate is zero) or ``"beta"``.  Uses
    only ``pi_hat`` and ``pi_hat'`` evaluated at the single rate.
    """
    if not rate > 0:
        raise CatastropheRequiredError("rate must be > 0")
    if which not in ("alpha", "beta"):
        raise ValueError("which must be 'alpha' or 'beta'")
    k = 0 if which == "alpha" else 1
    r = rate
    pj = hat_resolvent_entry(schedule, j, k, r, policy).real
    pkk = hat_resolvent_entry(schedule, k, k, r, policy).real
    dj = hat_resolvent_derivative(schedule, j, k, r, policy).real
    dkk = hat_resolvent_derivative(schedule, k, k, r, policy).real
    den = 1 - r * pkk
    mean = 1 / r + pj / den
    second = 2 / r ** 2 * (1 + r * pj / den - r ** 2 * dj / den - r ** 3 * pj * dkk / den ** 2)
    pa, pb = (1.0, 0.0) if k == 0 else (0.0, 1.0)
    return FirstCatastropheReport(
        start=j, mean=mean, second_moment=second, variance=second - mean ** 2,
        p_alpha_first=pa, p_beta_first=pb,
        method={"single_type": which, "rel_tol": policy.rel_tol, "max_level": policy.max_level},
    )


def density(schedule: RateSchedule, cat: CatastropheRates, j: int, t: float,
            policy: TruncationPolicy = DEFAULT_POLICY,
            inversion: InversionSettings = InversionSettings(), full_output: bool = False):
    """Density of ``C_j`` at ``t > 0`` by numerical Laplace inversion.

    Small negative values inside the inversion error band are clipped to 0.
    """
    _require_catastrophe(cat)
    value, err = invert_laplace(lambda s: delta_transforms(schedule, cat, j, s, policy).delta,
                                t, inversion, full_output=True)
    if -(inversion.tol + err) <= value < 0:
        value = 0.0
    return (value, err) if full_output else value


def cumulative(schedule: RateSchedule, cat: CatastropheRates, j: int, t: float,
               policy: TruncationPolicy = DEFAULT_POLICY,
               inversion: InversionSettings = InversionSettings(), epsabs: float = 1e-9) -> float:
    """``P(C_j <= t)`` by adaptive quadrature of the inverted density."""
    if t <= 0:
        return 0.0
    val, _ = integrate.quad(lambda u: density(schedule, cat, j, u, policy, inversion) if u > 0 else
                            density(schedule, cat, j, 1e-12, policy, inversion),
                            0.0, t, epsabs=epsabs, epsrel=1e-9, limit=200)
    return val


def density_mass(schedule: RateSchedule, cat: CatastropheRates, j: int,
                 policy: TruncationPolicy = DEFAULT_POLICY,
                 inversion: InversionSettings = InversionSettings(), tail: float = 1e-4):
    """Integral of the inverted density over ``[0, T]``.

    ``T = E[C_j] / tail`` so that Markov's inequality bounds the neglected
    mass by ``tail``.  The range is split into geometric panels starting at
    ``E[C_j]``.  Returns ``(mass, T)``.
    """
    mean = moments(schedule, cat, j, policy, check_derivative=False).mean
    T = mean / tail
    edges = [0.0, mean]
    while edges[-1] < T:
        edges.append(min(edges[-1] * 4, T))
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, _ = integrate.quad(lambda u: density(schedule, cat, j, max(u, 1e-12), policy, inversion),
                                lo, hi, epsabs=1e-10, epsrel=1e-9, limit=200)
        total += val
    return total, T
