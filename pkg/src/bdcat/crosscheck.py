"""Invariant suite: every analytic route checked against an independent one.

Each check returns a :class:`CheckResult`.  A numerical failure inside a
check (no convergence, singular system, ...) marks that check as failed
rather than aborting the suite.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from . import first_catastrophe as fc
from .catastrophe import (H_value, factors, full_resolvent_direct, full_resolvent_entry, phi_direct, phi_entry,
                          phi_via_FG)
from .errors import BDCatError
from .model import CatastropheRates, RateSchedule, TruncationPolicy
from .resolvent import DEFAULT_POLICY, hat_resolvent_derivative, hat_resolvent_entry
from .simulate import estimate_first_catastrophe
from .transient import InversionSettings, transition_row_direct, transition_row_formula

__all__ = ["CheckResult", "run_checks", "CHECK_NAMES"]

PROBE_STARTS = (0, 1, 2, 5)
PROBE_LEVELS = tuple(range(11))
PROBE_FREQUENCIES = (0.5, 1.0, 3.0)
TIME_STARTS = (0, 1, 5)
TIME_POINTS = (0.5, 2.0, 10.0)
MC_STARTS = (0, 1, 5)
CDF_TIMES = (0.5, 2.0, 5.0)


@dataclass(frozen=True)
class CheckResult:
    name: str
    status: str  # "pass", "fail" or "skipped"
    max_error: float | None
    threshold: float | None
    detail: str = ""

    @property
    def ok(self) -> bool:
        return self.status != "fail"

    def to_dict(self) -> dict:
        return asdict(self)


def _rel(a, b) -> float:
    return abs(a - b) / (abs(b) + 1e-30)


def _verdict(name, err, threshold, detail=""):
    return CheckResult(name, "pass" if err < threshold else "fail", float(err), threshold, detail)


def check_resolvent_identity(schedule, cat, policy, **_):
    err = 0.0
    for s in PROBE_FREQUENCIES:
        for j in PROBE_STARTS:
            row = full_resolvent_direct(schedule, cat, j, s, policy)
            if not row.converged:
                raise BDCatError(f"direct row j={j}, s={s} did not converge by level {row.truncation_level}")
            for n in PROBE_LEVELS:
                err = max(err, _rel(full_resolvent_entry(schedule, cat, j, n, s, policy), row[n]))
    return _verdict("resolvent_identity", err, 1e-9, "closed form vs direct solve, relative")


def check_transition_time_domain(schedule, cat, policy, **_):
    err = 0.0
    mass = 0.0
    for j in TIME_STARTS:
        for t in TIME_POINTS:
            f = transition_row_formula(schedule, cat, j, t, policy)
            d = transition_row_direct(schedule, cat, j, t, policy)
            m = max(len(f.probabilities), len(d.probabilities))
            pf = np.zeros(m)
            pd = np.zeros(m)
            pf[:len(f.probabilities)] = f.probabilities
            pd[:len(d.probabilities)] = d.probabilities
            err = max(err, float(np.max(np.abs(pf - pd))))
            mass = max(mass, abs(f.total - 1), abs(d.total - 1))
    worst = max(err, mass)
    return _verdict("transition_time_domain", worst, 1e-6,
                    f"sup-norm {err:.3g}, row-sum defect {mass:.3g}")


def check_phi_triple(schedule, cat, policy, **_):
    err = 0.0
    mass = 0.0
    for s in PROBE_FREQUENCIES:
        for j in PROBE_STARTS:
            vec = phi_direct(schedule, cat, j, s, policy)
            if not vec.converged:
                raise BDCatError(f"absorbed row j={j}, s={s} did not converge")
            mass = max(mass, abs(vec.total_mass - 1))
            for n in PROBE_LEVELS:
                a = phi_entry(schedule, cat, j, n, s, policy)
                if cat.gamma > 0:
                    b = phi_via_FG(schedule, cat, j, n, s, policy)
                    err = max(err, _rel(b, vec[n]))
                err = max(err, _rel(a, vec[n]))
    return CheckResult("phi_triple", "pass" if err < 1e-9 and mass < 1e-8 else "fail", float(max(err, mass)),
                       1e-9, f"relative agreement {err:.3g}, total-mass defect {mass:.3g}")


def check_H_forms(schedule, cat, policy, **_):
    if cat.gamma == 0:
        return CheckResult("H_dual_form", "skipped", None, None, "skipped (gamma=0)")
    err = 0.0
    ident = 0.0
    a, b = cat.alpha, cat.beta
    for s in PROBE_FREQUENCIES:
        err = max(err, _rel(H_value(schedule, cat, s, policy, "product"), H_value(schedule, cat, s, policy)))
        for j in PROBE_STARTS:
            f = factors(schedule, cat, j, s, policy)
            lhs_u = s * f.H * (f.F + a / s * (1 + f.F + f.G))
            lhs_v = s * f.H * (f.G + b / s * (1 + f.F + f.G))
            ident = max(ident, abs(lhs_u - s * f.U) / (abs(s * f.U) + 1e-30) if f.U != 0 else abs(lhs_u),
                        abs(lhs_v - s * f.V) / (abs(s * f.V) + 1e-30) if f.V != 0 else abs(lhs_v))
    ok = err < 1e-10 and ident < 1e-9
    return CheckResult("H_dual_form", "pass" if ok else "fail", float(max(err, ident)), 1e-10,
                       f"H forms {err:.3g}, U/V identities {ident:.3g}")


def _need_gamma(name, cat):
    if cat.gamma == 0:
        return CheckResult(name, "skipped", None, None, "skipped (gamma=0)")
    return None


def check_transforms(schedule, cat, policy, **_):
    if (r := _need_gamma("delta_transforms", cat)) is not None:
        return r
    split = 0.0
    for s in PROBE_FREQUENCIES:
        for j in PROBE_STARTS:
            tr = fc.delta_transforms(schedule, cat, j, s, policy)
            split = max(split, abs(tr.delta_alpha + tr.delta_beta - tr.delta))
    honest = max(abs(fc.delta_transforms(schedule, cat, j, 1e-6, policy).delta - 1) for j in PROBE_STARTS)
    psum = max(abs(sum(fc.type_probabilities(schedule, cat, j, policy)) - 1) for j in PROBE_STARTS)
    ok = split < 1e-12 and honest < 1e-4 and psum < 1e-9
    return CheckResult("delta_transforms", "pass" if ok else "fail", float(max(split, psum)), 1e-12,
                       f"split {split:.3g}, |Delta(1e-6) - 1| {honest:.3g}, probability sum {psum:.3g}")


def check_single_type(schedule, cat, policy, **_):
    if (r := _need_gamma("single_type_reduction", cat)) is not None:
        return r
    err = 0.0
    for which, rate, reduced in (("alpha", cat.alpha, CatastropheRates(cat.alpha, 0.0)),
                                 ("beta", cat.beta, CatastropheRates(0.0, cat.beta))):
        if rate <= 0:
            continue
        for j in MC_STARTS:
            g = fc.moments(schedule, reduced, j, policy)
            c = fc.moments_single_type(schedule, rate, which, j, policy)
            err = max(err, _rel(g.mean, c.mean), _rel(g.second_moment, c.second_moment))
    return _verdict("single_type_reduction", err, 1e-8, "general moments vs single-type closed form")


def check_derivatives(schedule, cat, policy, **_):
    err = 0.0
    grid = [(j, n, s) for (j, n) in ((0, 0), (0, 1), (1, 0), (2, 3), (5, 5)) for s in (0.5, 1.0, 2.0, 4.0)]
    for j, n, s in grid:
        d = hat_resolvent_derivative(schedule, j, n, s, policy)
        h = 1e-3 * s
        fd = (hat_resolvent_entry(schedule, j, n, s + h, policy)
              - hat_resolvent_entry(schedule, j, n, s - h, policy)) / (2 * h)
        fd2 = (hat_resolvent_entry(schedule, j, n, s + h / 2, policy)
               - hat_resolvent_entry(schedule, j, n, s - h / 2, policy)) / h
        err = max(err, _rel((4 * fd2 - fd) / 3, d))
    detail = f"resolvent derivative {err:.3g} on {len(grid)} points"
    phi_err = 0.0
    if cat.gamma > 0:
        for j in MC_STARTS:
            c = fc.phi_prime_at_zero(schedule, cat, j, (0,), policy, "chain")[0]
            f = fc.phi_prime_at_zero(schedule, cat, j, (0,), policy, "fd")[0]
            phi_err = max(phi_err, _rel(f, c))
        detail += f", phi'(0) chain vs differences {phi_err:.3g}"
    ok = err < 1e-6 and phi_err < 1e-5
    return CheckResult("derivatives", "pass" if ok else "fail", float(max(err, phi_err)), 1e-6, detail)


def check_moments_simulation(schedule, cat, policy, replications=100_000, seed=0, **_):
    if (r := _need_gamma("moments_vs_simulation", cat)) is not None:
        return r
    worst = 0.0
    for k, j in enumerate(MC_STARTS):
        rep = fc.moments(schedule, cat, j, policy)
        sim = estimate_first_catastrophe(schedule, cat, j, replications, seed=seed + k)
        worst = max(worst, abs(sim.mean_C.z(rep.mean)), abs(sim.variance_C.z(rep.variance)),
                    abs(sim.second_moment_C.z(rep.second_moment)), abs(sim.p_alpha_first.z(rep.p_alpha_first)))
    return _verdict("moments_vs_simulation", worst, 4.0, f"largest |z| over starts {MC_STARTS}")


def check_density(schedule, cat, policy, inversion=InversionSettings(), replications=100_000, seed=0, **_):
    if (r := _need_gamma("density", cat)) is not None:
        return r
    j = 0
    ts = np.linspace(0.05, 20.0, 80)
    low = min(fc.density(schedule, cat, j, float(t), policy, inversion) for t in ts)
    mass, _ = fc.density_mass(schedule, cat, j, policy, inversion)
    sim = estimate_first_catastrophe(schedule, cat, j, replications, seed=seed + 100)
    z = max(abs(sim.cdf(t).z(fc.cumulative(schedule, cat, j, t, policy, inversion))) for t in CDF_TIMES)
    ok = low >= -1e-6 and abs(mass - 1) < 2e-3 and z < 4
    return CheckResult("density", "pass" if ok else "fail", float(abs(mass - 1)), 2e-3,
                       f"min density {low:.3g}, mass {mass:.8f}, CDF largest |z| {z:.3g}")


CHECKS: tuple[Callable[..., CheckResult], ...] = (
    check_resolvent_identity,
    check_transition_time_domain,
    check_phi_triple,
    check_H_forms,
    check_transforms,
    check_single_type,
    check_derivatives,
    check_moments_simulation,
    check_density,
)
CHECK_NAMES = ("resolvent_identity", "transition_time_domain", "phi_triple", "H_dual_form", "delta_transforms",
               "single_type_reduction", "derivatives", "moments_vs_simulation", "density")


def run_checks(schedule: RateSchedule, cat: CatastropheRates, policy: TruncationPolicy = DEFAULT_POLICY,
               inversion: InversionSettings = InversionSettings(), replications: int = 100_000,
               seed: int = 0) -> list[CheckResult]:
    """Run the whole suite in a fixed order."""
    out = []
    for name, check in zip(CHECK_NAMES, CHECKS):
        try:
            out.append(check(schedule, cat, policy, inversion=inversion, replications=replications, seed=seed))
        except (BDCatError, ArithmeticError) as exc:
            out.append(CheckResult(name, "fail", None, None, f"{type(exc).__name__}: {exc}"))
    return out
