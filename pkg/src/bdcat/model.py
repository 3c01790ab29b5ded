"""Rate schedules, catastrophe intensities and truncated generators.

A birth-death process with two-type catastrophes lives on ``{0, 1, 2, ...}``.
The catastrophe-free part has birth rates ``lambda_i`` (``i >= 0``) and death
rates ``mu_i`` (``i >= 1``).  On top of it an alpha-catastrophe (rate
``alpha``) empties the system and a beta-catastrophe (rate ``beta``) leaves a
single individual.  The absorbed chain adds two cemetery states, ``-2`` for a
first effective alpha-catastrophe and ``-1`` for a first effective
beta-catastrophe.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np
import scipy.sparse as sp

__all__ = [
    "AbsorbingState",
    "RateSchedule",
    "CatastropheRates",
    "TruncationPolicy",
    "GeneratorRow",
    "ValidationReport",
    "validate_model",
    "hat_generator_row",
    "full_generator_row",
    "absorbed_generator_row",
    "hat_generator_matrix",
    "full_generator_matrix",
    "schedule_from_dict",
    "model_from_dict",
]


class AbsorbingState(enum.IntEnum):
    """Cemetery states of the absorbed chain."""

    ALPHA = -2
    BETA = -1


_KINDS = ("constant", "affine", "table")


@dataclass(frozen=True)
class RateSchedule:
    """Birth and death rates for every level.

    Use the ``constant``, ``affine`` and ``table`` constructors rather than
    the raw initializer.  Construction never rejects rates; call
    :func:`validate_model` to find out whether a schedule is admissible.

    Affine schedules use ``lambda_i = b1*(i+1) + b0`` and
    ``mu_i = d1*i + d0``.  Table schedules hold ``lambda_0..lambda_L`` and
    ``mu_1..mu_{L+1}``; both tails repeat their last entry.
    """

    kind: str
    birth_table: tuple[float, ...] = ()
    death_table: tuple[float, ...] = ()
    birth_slope: float = 0.0
    birth_offset: float = 0.0
    death_slope: float = 0.0
    death_offset: float = 0.0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if self.kind == "table":
            if not self.birth_table or len(self.birth_table) != len(self.death_table):
                raise ValueError("table schedules need equal-length, non-empty birth and death lists")

    @classmethod
    def constant(cls, birth: float, death: float) -> "RateSchedule":
        return cls("constant", birth_offset=float(birth), death_offset=float(death))

    @classmethod
    def affine(cls, birth_slope: float, birth_offset: float,
               death_slope: float, death_offset: float) -> "RateSchedule":
        return cls("affine", birth_slope=float(birth_slope), birth_offset=float(birth_offset),
                   death_slope=float(death_slope), death_offset=float(death_offset))

    @classmethod
    def table(cls, birth, death) -> "RateSchedule":
        """``birth[k]`` is ``lambda_k``; ``death[k]`` is ``mu_{k+1}``."""
        return cls("table", birth_table=tuple(float(x) for x in birth),
                   death_table=tuple(float(x) for x in death))

    def birth(self, i: int) -> float:
        if self.kind == "constant":
            return self.birth_offset
        if self.kind == "affine":
            return self.birth_slope * (i + 1) + self.birth_offset
        return self.birth_table[min(i, len(self.birth_table) - 1)]

    def death(self, i: int) -> float:
        if i <= 0:
            return 0.0
        if self.kind == "constant":
            return self.death_offset
        if self.kind == "affine":
            return self.death_slope * i + self.death_offset
        return self.death_table[min(i - 1, len(self.death_table) - 1)]

    def omega(self, i: int) -> float:
        return self.birth(i) + self.death(i)

    def birth_rates(self, n: int) -> np.ndarray:
        """``lambda_0, ..., lambda_{n-1}``."""
        i = np.arange(n)
        if self.kind == "constant":
            return np.full(n, self.birth_offset)
        if self.kind == "affine":
            return self.birth_slope * (i + 1) + self.birth_offset
        tab = np.asarray(self.birth_table)
        return tab[np.minimum(i, len(tab) - 1)]

    def death_rates(self, n: int) -> np.ndarray:
        """``mu_0, ..., mu_{n-1}`` with ``mu_0 = 0``."""
        i = np.arange(n)
        if self.kind == "constant":
            out = np.full(n, self.death_offset)
        elif self.kind == "affine":
            out = self.death_slope * i + self.death_offset
        else:
            tab = np.asarray(self.death_table)
            out = tab[np.clip(i - 1, 0, len(tab) - 1)]
        out = np.asarray(out, dtype=float)
        if n:
            out[0] = 0.0
        return out

    def kernel_params(self):
        """Compact form for the compiled kernels.

        Returns ``(birth_tab, death_tab, tail)`` where levels below
        ``len(birth_tab)`` read the tables and higher levels use the affine
        tail ``(b1, b0, d1, d0)``.
        """
        if self.kind == "table":
            L = len(self.birth_table)
            birth = np.asarray(self.birth_table, dtype=float)
            death = np.concatenate([[0.0], self.death_table[:L - 1]]).astype(float)
            tail = (0.0, self.birth_table[-1], 0.0, self.death_table[-1])
        else:
            birth = self.birth_rates(1)
            death = np.zeros(1)
            if self.kind == "constant":
                tail = (0.0, self.birth_offset, 0.0, self.death_offset)
            else:
                tail = (self.birth_slope, self.birth_offset, self.death_slope, self.death_offset)
        return np.ascontiguousarray(birth), np.ascontiguousarray(death), np.asarray(tail, dtype=float)

    def to_dict(self) -> dict:
        if self.kind == "constant":
            return {"kind": "constant", "birth": self.birth_offset, "death": self.death_offset}
        if self.kind == "affine":
            return {"kind": "affine", "birth_slope": self.birth_slope, "birth_offset": self.birth_offset,
                    "death_slope": self.death_slope, "death_offset": self.death_offset}
        return {"kind": "table", "birth": list(self.birth_table), "death": list(self.death_table)}


@dataclass(frozen=True)
class CatastropheRates:
    alpha: float = 0.0
    beta: float = 0.0

    @property
    def gamma(self) -> float:
        return self.alpha + self.beta


@dataclass(frozen=True)
class TruncationPolicy:
    """How far the state space is cut and how convergence is judged.

    The level is grown geometrically from ``initial_level`` until entries on
    the probe window move by less than ``rel_tol`` (relative), or until
    ``max_level`` is reached.
    """

    initial_level: int = 64
    max_level: int = 2 ** 20
    rel_tol: float = 1e-10
    growth_factor: int = 2

    def __post_init__(self):
        if self.initial_level < 8:
            raise ValueError("initial_level must be >= 8")
        if self.initial_level >= self.max_level:
            raise ValueError("initial_level must be < max_level")
        if not 0.0 < self.rel_tol < 1.0:
            raise ValueError("rel_tol must lie in (0, 1)")
        if self.growth_factor < 2:
            raise ValueError("growth_factor must be >= 2")

    def levels(self, minimum: int = 0):
        """Successive truncation levels, each at least ``minimum``."""
        n = self.initial_level
        while n < minimum and n < self.max_level:
            n *= self.growth_factor
        while True:
            yield min(n, self.max_level)
            if n >= self.max_level:
                return
            n *= self.growth_factor


@dataclass(frozen=True)
class GeneratorRow:
    level: int
    entries: Mapping[int, float] = field(default_factory=dict)

    @property
    def row_sum(self) -> float:
        return math.fsum(self.entries.values())


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok


def _first_nonpositive(slope: float, at_start: float, start: int):
    """First level ``i >= start`` where ``slope*(i-start) + at_start <= 0``."""
    if at_start <= 0:
        return start
    if slope >= 0:
        return None
    return start + int(math.ceil(at_start / -slope))


def validate_model(schedule: RateSchedule, cat: CatastropheRates) -> ValidationReport:
    """Check the admissibility constraints of the rates.

    Returns a report listing every violated constraint; never raises.
    """
    report = ValidationReport()
    bad = report.violations
    if schedule.kind == "table":
        for i, x in enumerate(schedule.birth_table):
            if not (x > 0 and math.isfinite(x)):
                bad.append(f"λ_{i} must be > 0 (got {x})")
        for i, x in enumerate(schedule.death_table, start=1):
            if not (x > 0 and math.isfinite(x)):
                bad.append(f"μ_{i} must be > 0 (got {x})")
    else:
        lam0 = schedule.birth(0)
        mu1 = schedule.death(1)
        k = _first_nonpositive(schedule.birth_slope, lam0, 0)
        if k is not None:
            bad.append(f"λ_{k} must be > 0 (got {schedule.birth(k)})")
        k = _first_nonpositive(schedule.death_slope, mu1, 1)
        if k is not None:
            bad.append(f"μ_{k} must be > 0 (got {schedule.death(k)})")
        if not all(math.isfinite(v) for v in (schedule.birth_slope, schedule.birth_offset,
                                               schedule.death_slope, schedule.death_offset)):
            bad.append("rate parameters must be finite")
    if not cat.alpha >= 0:
        bad.append(f"alpha ≥ 0 violated (got {cat.alpha})")
    if not cat.beta >= 0:
        bad.append(f"beta ≥ 0 violated (got {cat.beta})")
    return report


def hat_generator_row(schedule: RateSchedule, i: int) -> GeneratorRow:
    lam = schedule.birth(i)
    if i == 0:
        return GeneratorRow(0, {0: -lam, 1: lam})
    mu = schedule.death(i)
    return GeneratorRow(i, {i - 1: mu, i: -(lam + mu), i + 1: lam})


def full_generator_row(schedule: RateSchedule, cat: CatastropheRates, i: int) -> GeneratorRow:
    entries = dict(hat_generator_row(schedule, i).entries)
    a, b = cat.alpha, cat.beta
    if i != 1:
        entries[1] = entries.get(1, 0.0) + b
    if i >= 1:
        entries[0] = entries.get(0, 0.0) + a
    entries[i] -= b if i == 0 else a if i == 1 else a + b
    return GeneratorRow(i, {k: v for k, v in entries.items() if v != 0.0 or k == i})


def absorbed_generator_row(schedule: RateSchedule, cat: CatastropheRates, i: int) -> GeneratorRow:
    if i in (AbsorbingState.ALPHA, AbsorbingState.BETA):
        return GeneratorRow(int(i), {})
    if i < 0:
        raise ValueError(f"level {i} is not in the state space")
    entries: dict[int, float] = dict(hat_generator_row(schedule, i).entries)
    a, b = cat.alpha, cat.beta
    if i >= 1 and a:
        entries[AbsorbingState.ALPHA] = a
    if i != 1 and b:
        entries[AbsorbingState.BETA] = b
    entries[i] -= b if i == 0 else a if i == 1 else a + b
    return GeneratorRow(i, entries)


def hat_generator_matrix(schedule: RateSchedule, N: int) -> sp.csr_matrix:
    """Catastrophe-free generator on levels ``0..N`` with a killed boundary.

    Row ``N`` keeps its full diagonal but loses the birth entry, so the
    matrix is sub-stochastic there.
    """
    lam = schedule.birth_rates(N + 1)
    mu = schedule.death_rates(N + 1)
    diag = -(lam + mu)
    return sp.diags([mu[1:], diag, lam[:N]], [-1, 0, 1], format="csr")


def full_generator_matrix(schedule: RateSchedule, cat: CatastropheRates, N: int) -> sp.csr_matrix:
    """Generator of the catastrophe process on levels ``0..N`` (killed boundary)."""
    Q = hat_generator_matrix(schedule, N).tolil()
    a, b = cat.alpha, cat.beta
    for i in range(N + 1):
        if i != 1:
            Q[i, 1] += b
        if i >= 1:
            Q[i, 0] += a
        Q[i, i] -= b if i == 0 else a if i == 1 else a + b
    return Q.tocsr()


def _strict(obj: Mapping[str, Any], allowed: set[str], where: str):
    extra = set(obj) - allowed
    if extra:
        raise ValueError(f"{where}: unknown field(s) {sorted(extra)}")


def schedule_from_dict(d: Mapping[str, Any]) -> RateSchedule:
    """Build a schedule from its JSON form (see README for the schema)."""
    if not isinstance(d, Mapping) or "kind" not in d:
        raise ValueError("rates: missing field 'kind'")
    kind = d["kind"]
    if kind == "constant":
        _strict(d, {"kind", "birth", "death"}, "rates")
        return RateSchedule.constant(_num(d, "birth", "rates"), _num(d, "death", "rates"))
    if kind == "affine":
        keys = ("birth_slope", "birth_offset", "death_slope", "death_offset")
        _strict(d, {"kind", *keys}, "rates")
        return RateSchedule.affine(*(_num(d, k, "rates", default=0.0) for k in keys))
    if kind == "table":
        _strict(d, {"kind", "birth", "death"}, "rates")
        try:
            return RateSchedule.table([float(x) for x in d["birth"]], [float(x) for x in d["death"]])
        except (KeyError, TypeError) as exc:
            raise ValueError(f"rates: table needs numeric lists 'birth' and 'death' ({exc})") from None
    raise ValueError(f"rates.kind: expected one of constant/affine/table, got {kind!r}")


def _num(d, key, where, default=None) -> float:
    if key not in d:
        if default is None:
            raise ValueError(f"{where}: missing field {key!r}")
        return default
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ValueError(f"{where}.{key}: expected a number, got {v!r}")
    return float(v)


def model_from_dict(d: Mapping[str, Any]) -> tuple[RateSchedule, CatastropheRates]:
    """Parse ``{"rates": {...}, "alpha": a, "beta": b}``."""
    if not isinstance(d, Mapping):
        raise ValueError("model: expected an object")
    _strict(d, {"rates", "alpha", "beta"}, "model")
    if "rates" not in d:
        raise ValueError("model: missing field 'rates'")
    return (schedule_from_dict(d["rates"]),
            CatastropheRates(_num(d, "alpha", "model", 0.0), _num(d, "beta", "model", 0.0)))
