import pytest
from hypothesis import given, settings, strategies as st

from bdcat.catastrophe import (H_value, aux_A, factors, full_resolvent_direct, full_resolvent_entry,
                               phi_derivative, phi_direct, phi_entry, phi_via_FG)
from bdcat.model import CatastropheRates, RateSchedule
from bdcat.resolvent import hat_resolvent_entry

SCH = RateSchedule.constant(1.0, 1.25)
CAT = CatastropheRates(0.4, 0.3)
ZERO = CatastropheRates()


def rel(a, b):
    return abs(a - b) / (abs(b) + 1e-30)


def test_no_catastrophe_reductions():
    for j, n, s in ((0, 0, 1.0), (2, 3, 0.5), (5, 1, 2 + 1j)):
        hat = hat_resolvent_entry(SCH, j, n, s)
        assert rel(full_resolvent_entry(SCH, ZERO, j, n, s), hat) < 1e-13
        assert rel(phi_entry(SCH, ZERO, j, n, s), hat) < 1e-13
        assert rel(phi_via_FG(SCH, ZERO, j, n, s), hat) < 1e-12


def test_zero_rate_factors():
    f = factors(SCH, ZERO, 3, 1.7)
    assert f.a0 == 1 and f.a1 == 1 and f.alpha_factor == 1 and f.beta_factor == 1
    assert abs(f.H - 1.7) < 1e-15
    assert f.U == f.V == 0 and f.F == f.G == 0


def test_full_entry_matches_direct():
    row = full_resolvent_direct(SCH, CAT, 2, 1.0)
    assert rel(full_resolvent_entry(SCH, CAT, 2, 0, 1.0), row[0]) < 1e-9
    assert abs(1.0 * row.entries.sum() - 1) < 1e-9


def test_full_row_sum_transfers():
    s = 0.8
    total = sum(full_resolvent_entry(SCH, CAT, 1, n, s) for n in range(300))
    assert abs(s * total - 1) < 1e-9


def test_H_forms_and_identities():
    a, b = CAT.alpha, CAT.beta
    for s in (0.5, 1.0, 3.0, 1 + 2j):
        assert rel(H_value(SCH, CAT, s, form="product"), H_value(SCH, CAT, s)) < 1e-10
        for j in (0, 1, 2, 5):
            f = factors(SCH, CAT, j, s)
            assert rel(s * f.H * (f.F + a / s * (1 + f.F + f.G)), s * f.U) < 1e-9
            assert rel(s * f.H * (f.G + b / s * (1 + f.F + f.G)), s * f.V) < 1e-9
            for key, v in f.A_hat.items():
                assert rel(v, f.A_full[key]) < 1e-10


def test_A_bounds_real_frequency():
    for s in (0.3, 2.0):
        for i, n in ((0, 0), (1, 0), (5, 1)):
            A = aux_A(SCH, CAT, i, n, s).real
            assert -1e-12 <= A <= 1 + 1e-12


def test_phi_routes_agree():
    for s in (0.5, 1.0, 3.0, 0.4 + 1.5j):
        for j in (0, 1, 2, 5):
            vec = phi_direct(SCH, CAT, j, s)
            for n in range(11):
                ref = vec[n]
                assert rel(phi_entry(SCH, CAT, j, n, s), ref) < 1e-9
                assert rel(phi_via_FG(SCH, CAT, j, n, s), ref) < 1e-9


def test_FG_extension_continuity():
    # the general F, G formulas evaluated at j = 0, 1 match the special-case forms
    for j in (0, 1):
        for n in (0, 1, 4):
            assert rel(phi_via_FG(SCH, CAT, j, n, 1.3, extended=True), phi_via_FG(SCH, CAT, j, n, 1.3)) < 1e-9


def test_phi_total_mass_and_cemeteries():
    for j in (0, 1, 7):
        vec = phi_direct(SCH, CAT, j, 0.9)
        assert abs(vec.total_mass - 1) < 1e-10
    only_beta = phi_direct(SCH, CatastropheRates(0.0, 0.3), 4, 1.0)
    assert only_beta[-2] == 0


def test_phi_monotone_in_frequency():
    for j, n in ((0, 0), (2, 1), (5, 5)):
        a, b = phi_entry(SCH, CAT, j, n, 0.5).real, phi_entry(SCH, CAT, j, n, 2.0).real
        assert a >= b >= 0


def test_phi_derivative_finite_difference():
    h = 1e-4
    for j, n in ((0, 0), (5, 1)):
        d = phi_derivative(SCH, CAT, j, n, 1.0)
        fd = (phi_entry(SCH, CAT, j, n, 1 + h) - phi_entry(SCH, CAT, j, n, 1 - h)) / (2 * h)
        assert rel(d, fd) < 1e-6


def test_small_frequency_rejected():
    with pytest.raises(ValueError):
        full_resolvent_entry(SCH, CAT, 0, 0, 1e-9)


rates = st.floats(0.1, 3.0)


@settings(max_examples=25, deadline=None)
@given(rates, rates, st.floats(0, 2), st.floats(0, 2), st.integers(0, 8), st.integers(0, 8), st.floats(0.2, 4))
def test_routes_agree_randomly(lam, mu, a, b, j, n, s):
    sch, cat = RateSchedule.constant(lam, mu), CatastropheRates(a, b)
    vec = phi_direct(sch, cat, j, s)
    if not vec.converged:
        return
    assert rel(phi_entry(sch, cat, j, n, s), vec[n]) < 1e-8
    assert abs(vec.total_mass - 1) < 1e-9
    if cat.gamma > 0:
        assert rel(H_value(sch, cat, s, form="product"), H_value(sch, cat, s)) < 1e-9
