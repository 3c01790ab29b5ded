"""Event-driven Monte Carlo for the catastrophe process.

Paths are generated with competing exponential clocks.  At level ``i`` the
exit rate is ``lambda_i + mu_i + alpha + beta`` and every event consumes two
uniforms: the holding time ``-log(1 - u1) / total`` and the event choice
``u2 * total`` scanned in the order birth, death, alpha, beta.  Catastrophes
that do not move the process (alpha at 0, beta at 1) are still events; they
are marked as not effective.

Replications are grouped in chunks of ``CHUNK`` and chunk ``c`` draws from
``PCG64(SeedSequence(seed).spawn(...)[c])``, so results depend only on the
seed, never on the backend or buffer sizes.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels
from .errors import CatastropheRequiredError
from .model import CatastropheRates, RateSchedule

__all__ = [
    "EventKind",
    "PathEvent",
    "Estimate",
    "SimulationSummary",
    "TransitionEstimate",
    "simulate_path",
    "estimate_first_catastrophe",
    "estimate_transition",
    "PROTOCOL",
]

PROTOCOL = "seedseq-pcg64-chunk4096-v1"
CHUNK = 4096
EVENT_CAP = 10**6
MIN_REPLICATIONS = 1000


class EventKind(enum.Enum):
    BIRTH = "birth"
    DEATH = "death"
    ALPHA = "alpha-catastrophe"
    BETA = "beta-catastrophe"


@dataclass(frozen=True)
class PathEvent:
    time: float
    kind: EventKind
    state_before: int
    state_after: int
    effective: bool


@dataclass(frozen=True)
class Estimate:
    value: float
    se: float

    def z(self, target: float) -> float:
        """Standardized distance of ``target`` from the estimate."""
        d = self.value - target
        if self.se > 0:
            return d / self.se
        return 0.0 if d == 0 else math.copysign(math.inf, d)

    def to_dict(self) -> dict:
        return {"value": self.value, "se": self.se}


@dataclass(frozen=True)
class SimulationSummary:
    """Monte Carlo estimates for ``C_j``.

    ``replications`` counts finished replications; those that hit the event
    cap are reported in ``cap_exceeded`` and left out of every estimate.
    """

    start: int
    replications: int
    mean_C: Estimate
    second_moment_C: Estimate
    variance_C: Estimate
    p_alpha_first: Estimate
    p_beta_first: Estimate
    cap_exceeded: int
    seed: dict
    times: np.ndarray = field(repr=False, compare=False)
    kinds: np.ndarray = field(repr=False, compare=False)

    def cdf(self, t: float) -> Estimate:
        """Empirical ``P(C_j <= t)`` with its binomial standard error."""
        p = int(np.count_nonzero(self.times <= t)) / self.replications
        return Estimate(p, math.sqrt(p * (1 - p) / self.replications))

    def to_dict(self) -> dict:
        return {
            "start": self.start,
            "replications": self.replications,
            "mean_C": self.mean_C.to_dict(),
            "second_moment_C": self.second_moment_C.to_dict(),
            "variance_C": self.variance_C.to_dict(),
            "p_alpha_first": self.p_alpha_first.to_dict(),
            "p_beta_first": self.p_beta_first.to_dict(),
            "cap_exceeded": self.cap_exceeded,
            "seed": dict(self.seed),
        }


@dataclass(frozen=True)
class TransitionEstimate:
    """Empirical distribution of the level at time ``t``."""

    start: int
    time: float
    replications: int
    counts: np.ndarray
    cap_exceeded: int
    seed: dict

    @property
    def frequencies(self) -> np.ndarray:
        return self.counts / self.replications

    @property
    def standard_errors(self) -> np.ndarray:
        p = self.frequencies
        return np.sqrt(p * (1 - p) / self.replications)

    def __getitem__(self, n) -> Estimate:
        if n >= len(self.counts):
            return Estimate(0.0, 0.0)
        return Estimate(float(self.frequencies[n]), float(self.standard_errors[n]))


def simulate_path(schedule: RateSchedule, cat: CatastropheRates, j: int, horizon: float,
                  rng: np.random.Generator, stop_at_first_effective: bool = False,
                  max_events: int = EVENT_CAP) -> list[PathEvent]:
    """Simulate one path from level ``j`` and return its events up to ``horizon``.

    With ``stop_at_first_effective`` the path ends at (and includes) the
    first effective catastrophe; ``horizon`` may then be ``inf`` as long as
    a catastrophe rate is positive.  Uses the same uniform protocol as the
    batch estimators, so with a matching generator the first replication of
    an estimator reproduces this path.
    """
    if not horizon > 0:
        raise ValueError("horizon must be > 0")
    if math.isinf(horizon) and not (stop_at_first_effective and cat.gamma > 0):
        raise ValueError("an infinite horizon needs stop_at_first_effective and alpha + beta > 0")
    a, b = cat.alpha, cat.beta
    state, t = int(j), 0.0
    events: list[PathEvent] = []
    while len(events) < max_events:
        lam, mu = schedule.birth(state), schedule.death(state)
        total = lam + mu + a + b
        u1, u2 = rng.random(), rng.random()
        t += -math.log(1.0 - u1) / total
        if t > horizon:
            break
        r = u2 * total
        if r < lam:
            ev = PathEvent(t, EventKind.BIRTH, state, state + 1, False)
        elif r < lam + mu:
            ev = PathEvent(t, EventKind.DEATH, state, state - 1, False)
        elif r < lam + mu + a:
            ev = PathEvent(t, EventKind.ALPHA, state, 0, state >= 1)
        else:
            ev = PathEvent(t, EventKind.BETA, state, 1, state != 1)
        events.append(ev)
        state = ev.state_after
        if stop_at_first_effective and ev.effective:
            break
    return events


def _chunks(seed: int, n: int):
    sizes = [min(CHUNK, n - k) for k in range(0, n, CHUNK)]
    children = np.random.SeedSequence(seed).spawn(len(sizes))
    return [(k * CHUNK, size, np.random.Generator(np.random.PCG64(ss)))
            for k, (size, ss) in enumerate(zip(sizes, children))]


def _drive(step, n: int, rng: np.random.Generator, batch: int):
    """Feed uniforms to ``step(offset, count, u) -> (done, used)`` until ``n`` are done."""
    done = 0
    u = rng.random(batch)
    while done < n:
        d, used = step(done, n - done, u)
        done += d
        if d == 0:
            batch *= 2
        u = np.concatenate([u[used:], rng.random(batch)])


def _seed_record(seed: int) -> dict:
    return {"seed": int(seed), "protocol": PROTOCOL, "chunk": CHUNK}


def _check_seed(seed) -> int:
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    return seed


def estimate_first_catastrophe(schedule: RateSchedule, cat: CatastropheRates, j: int,
                               replications: int, seed: int = 0,
                               cap: int = EVENT_CAP) -> SimulationSummary:
    """Monte Carlo estimates of the moments and type of ``C_j``.

    Raises
    ------
    CatastropheRequiredError
        If ``alpha + beta == 0`` (``C_j`` would be infinite).
    ValueError
        If fewer than 1000 replications are requested.
    """
    if not cat.gamma > 0:
        raise CatastropheRequiredError("alpha + beta must be > 0")
    if replications < MIN_REPLICATIONS:
        raise ValueError(f"need at least {MIN_REPLICATIONS} replications, got {replications}")
    seed = _check_seed(seed)
    birth, death, tail = schedule.kernel_params()
    times = np.empty(replications)
    kinds = np.empty(replications, dtype=np.int64)
    counts = np.empty(replications, dtype=np.int64)

    for off, size, rng in _chunks(seed, replications):
        def step(done, todo, u, off=off):
            lo = off + done
            return kernels.first_catastrophe(birth, death, tail, cat.alpha, cat.beta, int(j), todo, u,
                                             int(cap), times[lo:off + size], kinds[lo:off + size],
                                             counts[lo:off + size])
        _drive(step, size, rng, batch=64 * size)

    ok = kinds >= 0
    capped = int(replications - np.count_nonzero(ok))
    x = times[ok]
    k = kinds[ok]
    n = len(x)
    if n == 0:
        nan = Estimate(math.nan, math.nan)
        return SimulationSummary(int(j), 0, nan, nan, nan, nan, nan, capped, _seed_record(seed), x, k)
    m1 = math.fsum(x) / n
    m2 = math.fsum(x * x) / n
    dev = x - m1
    c2 = math.fsum(dev * dev) / n
    c4 = math.fsum(dev ** 4) / n
    sd = math.sqrt(c2 * n / (n - 1))
    sd2 = math.sqrt(max(math.fsum((x * x - m2) ** 2) / (n - 1), 0.0))
    n_alpha = int(np.count_nonzero(k == 0))
    pa = n_alpha / n
    pb = (n - n_alpha) / n
    se_p = math.sqrt(pa * pb / n)
    var = c2 * n / (n - 1)
    return SimulationSummary(
        start=int(j), replications=n,
        mean_C=Estimate(m1, sd / math.sqrt(n)),
        second_moment_C=Estimate(m2, sd2 / math.sqrt(n)),
        # delta-method standard error of the sample variance
        variance_C=Estimate(var, math.sqrt(max(c4 - c2 * c2, 0.0) / n)),
        p_alpha_first=Estimate(pa, se_p),
        p_beta_first=Estimate(pb, se_p),
        cap_exceeded=capped, seed=_seed_record(seed), times=x, kinds=k,
    )


def estimate_transition(schedule: RateSchedule, cat: CatastropheRates, j: int, t: float,
                        replications: int, seed: int = 0, cap: int = EVENT_CAP) -> TransitionEstimate:
    """Fraction of paths from ``j`` found at each level at time ``t``."""
    if not t > 0:
        raise ValueError("t must be > 0")
    if replications < 1:
        raise ValueError("replications must be >= 1")
    seed = _check_seed(seed)
    birth, death, tail = schedule.kernel_params()
    states = np.empty(replications, dtype=np.int64)
    for off, size, rng in _chunks(seed, replications):
        def step(done, todo, u, off=off):
            lo = off + done
            return kernels.state_at_time(birth, death, tail, cat.alpha, cat.beta, int(j), float(t), todo,
                                         u, int(cap), states[lo:off + size])
        _drive(step, size, rng, batch=64 * size)
    ok = states >= 0
    capped = int(replications - np.count_nonzero(ok))
    counts = np.bincount(states[ok])
    return TransitionEstimate(int(j), float(t), int(np.count_nonzero(ok)), counts, capped, _seed_record(seed))
