
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bdcat import first_catastrophe as fc
from bdcat.catastrophe import phi_direct
from bdcat.errors import CatastropheRequiredError
from bdcat.model import CatastropheRates, RateSchedule

SCH = RateSchedule.constant(1.0, 1.25)
CAT = CatastropheRates(0.4, 0.3)


def test_requires_catastrophe():
    zero = CatastropheRates()
    for call in (lambda: fc.delta_transforms(SCH, zero, 0, 1.0), lambda: fc.moments(SCH, zero, 0),
                 lambda: fc.type_probabilities(SCH, zero, 0), lambda: fc.density(SCH, zero, 0, 1.0)):
        with pytest.raises(CatastropheRequiredError):
            call()
    with pytest.raises(CatastropheRequiredError):
        fc.moments_single_type(SCH, 0.0, "alpha", 0)


def test_transforms_split_and_oracle():
    tr = fc.delta_transforms(SCH, CAT, 0, 1.0)
    vec = phi_direct(SCH, CAT, 0, 1.0)
    assert abs(tr.delta - tr.delta_alpha - tr.delta_beta) < 1e-12
    assert abs(tr.delta_alpha - vec[-2]) < 1e-9 * abs(vec[-2])
    assert abs(tr.delta_beta - vec[-1]) < 1e-9 * abs(vec[-1])


def test_transform_limit_at_zero():
    for j in (0, 1, 5):
        assert abs(fc.delta_transforms(SCH, CAT, j, 1e-6).delta - 1) < 1e-4


def test_beta_free_transform():
    cat = CatastropheRates(0.7, 0.0)
    for s in (0.3, 1.0, 2 + 1j):
        assert fc.delta_transforms(SCH, cat, 3, s).delta_beta == 0


def test_type_probabilities_limits():
    assert fc.type_probabilities(SCH, CatastropheRates(0.7, 0.0), 4) == (1.0, 0.0)
    assert fc.type_probabilities(SCH, CatastropheRates(0.0, 0.7), 4) == (0.0, 1.0)
    pa, pb = fc.type_probabilities(SCH, CAT, 5)
    assert abs(pa + pb - 1) < 1e-9 and 0 <= pa <= 1


def test_limit_methods_agree():
    for j in (0, 5):
        d = fc.phi_at_zero(SCH, CAT, j)
        r = fc.phi_at_zero(SCH, CAT, j, method="richardson")
        assert np.allclose(d, r, rtol=1e-5)
        c = fc.phi_prime_at_zero(SCH, CAT, j)
        f = fc.phi_prime_at_zero(SCH, CAT, j, method="fd")
        assert np.allclose(c, f, rtol=1e-6)
    with pytest.raises(ValueError):
        fc.phi_at_zero(SCH, CAT, 0, method="guess")


def test_moments_report():
    r = fc.moments(SCH, CAT, 0)
    assert r.mean > 0 and r.variance >= 0 and r.second_moment >= r.mean**2
    assert abs(r.p_alpha_first + r.p_beta_first - 1) < 1e-9
    assert r.method["derivative_mismatch"] < 1e-5
    assert set(r.to_dict()) >= {"start", "mean", "second_moment", "variance", "p_alpha_first", "p_beta_first"}


def test_large_alpha_mean():
    a = 1e3
    r = fc.moments(SCH, CatastropheRates(a, 0.0), 3)
    assert (1 - 1e-6) / a <= r.mean < 1.01 / a


def test_start_zero_mean_with_single_alpha():
    # from 0 the alpha clock is idle until the first birth: E = 1/lambda_0 + E[C_1]
    cat = CatastropheRates(0.7, 0.0)
    assert abs(fc.moments(SCH, cat, 0).mean - (1 / 1.0 + fc.moments(SCH, cat, 1).mean)) < 1e-10


@pytest.mark.parametrize("which", ["alpha", "beta"])
def test_single_type_reduction(which):
    cat = CatastropheRates(0.7, 0.0) if which == "alpha" else CatastropheRates(0.0, 0.7)
    for j in (0, 1, 5):
        g = fc.moments(SCH, cat, j)
        c = fc.moments_single_type(SCH, 0.7, which, j)
        assert abs(g.mean - c.mean) < 1e-8 * g.mean
        assert abs(g.second_moment - c.second_moment) < 1e-8 * g.second_moment
        if which == "alpha":
            assert c.mean > 1 / 0.7


rates = st.floats(0.2, 3.0)


@settings(max_examples=20, deadline=None)
@given(rates, rates, st.floats(0.05, 2), st.floats(0, 2), st.integers(0, 8))
def test_report_invariants(lam, mu, a, b, j):
    r = fc.moments(RateSchedule.constant(lam, mu), CatastropheRates(a, b), j)
    assert r.mean > 0 and r.variance >= -1e-9 * r.second_moment
    assert abs(r.p_alpha_first + r.p_beta_first - 1) < 1e-9
    assert -1e-9 <= r.p_alpha_first <= 1 + 1e-9


def test_density_values():
    # near t = 0 from level 0 only the beta clock is effective
    assert abs(fc.density(SCH, CAT, 0, 1e-3) - 0.3) < 1e-3
    assert abs(fc.density(SCH, CAT, 3, 1e-3) - 0.7) < 1e-3
    for t in np.linspace(0.1, 20, 25):
        assert fc.density(SCH, CAT, 1, float(t)) >= -1e-6


def test_density_first_moment():
    # the mean recovered from the inverted density matches the closed form
    cat = CatastropheRates(0.0, 0.5)
    r = fc.moments(SCH, cat, 0)
    ts = np.linspace(0.0, 80.0, 1601)
    d = np.array([fc.density(SCH, cat, 0, max(t, 1e-9)) for t in ts])
    assert abs(np.trapezoid(ts * d, ts) - r.mean) < 2e-3 * r.mean


def test_cumulative_monotone():
    vals = [fc.cumulative(SCH, CAT, 0, t) for t in (0.0, 0.5, 2.0, 5.0)]
    assert vals[0] == 0 and all(b > a for a, b in zip(vals, vals[1:])) and vals[-1] < 1


def test_density_mass():
    mass, T = fc.density_mass(SCH, CAT, 5)
    assert abs(mass - 1) < 2e-3
    assert T == pytest.approx(fc.moments(SCH, CAT, 5).mean / 1e-4)
