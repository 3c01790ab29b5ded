import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bdcat.model import (AbsorbingState, CatastropheRates, RateSchedule, TruncationPolicy, absorbed_generator_row,
                         full_generator_matrix, full_generator_row, hat_generator_matrix, hat_generator_row,
                         model_from_dict, schedule_from_dict, validate_model)

LAM, MU = 1.0, 1.25
SCH = RateSchedule.constant(LAM, MU)
CAT = CatastropheRates(0.4, 0.3)

rates = st.floats(0.05, 5.0)
schedules = st.one_of(
    st.builds(RateSchedule.constant, rates, rates),
    st.builds(RateSchedule.affine, st.floats(0, 1), rates, st.floats(0, 1), rates),
    st.integers(1, 6).flatmap(lambda k: st.builds(RateSchedule.table, st.lists(rates, min_size=k, max_size=k),
                                                  st.lists(rates, min_size=k, max_size=k))),
)
cats = st.builds(CatastropheRates, st.floats(0, 3), st.floats(0, 3))


def approx_row(row, expected):
    assert set(row.entries) == set(expected)
    for k, v in expected.items():
        assert row.entries[k] == pytest.approx(v, abs=1e-15)


def test_validate_standard_ok():
    assert validate_model(SCH, CAT).ok


def test_validate_zero_birth_at_origin():
    rep = validate_model(RateSchedule.affine(1.0, -1.0, 0.0, 1.0), CAT)  # lambda_i = i
    assert not rep.ok
    assert any("λ_0 must be > 0" in v for v in rep.violations)


def test_validate_negative_alpha():
    rep = validate_model(SCH, CatastropheRates(-0.1, 0.3))
    assert any("alpha ≥ 0" in v for v in rep.violations)


def test_validate_affine_turning_negative():
    rep = validate_model(RateSchedule.affine(0.0, 1.0, -0.25, 1.0), CAT)  # mu_i = 1 - 0.25 i
    assert any(v.startswith("μ_4 must be > 0") for v in rep.violations)


def test_validate_table_entries():
    rep = validate_model(RateSchedule.table([1.0, 0.0], [1.0, -2.0]), CAT)
    assert len(rep.violations) == 2


def test_hat_rows():
    approx_row(hat_generator_row(SCH, 0), {0: -1.0, 1: 1.0})
    approx_row(hat_generator_row(SCH, 3), {2: 1.25, 3: -2.25, 4: 1.0})


def test_full_rows():
    approx_row(full_generator_row(SCH, CAT, 0), {0: -1.3, 1: 1.3})
    approx_row(full_generator_row(SCH, CAT, 1), {0: 1.65, 1: -2.65, 2: 1.0})


def test_absorbed_rows():
    assert absorbed_generator_row(SCH, CAT, AbsorbingState.ALPHA).entries == {}
    assert absorbed_generator_row(SCH, CAT, -1).entries == {}
    approx_row(absorbed_generator_row(SCH, CAT, 1), {-2: 0.4, 0: 1.25, 1: -2.65, 2: 1.0})
    approx_row(absorbed_generator_row(SCH, CAT, 2), {-2: 0.4, -1: 0.3, 1: 1.25, 2: -2.95, 3: 1.0})
    approx_row(absorbed_generator_row(SCH, CAT, 0), {-1: 0.3, 0: -1.3, 1: 1.0})
    with pytest.raises(ValueError):
        absorbed_generator_row(SCH, CAT, -3)


def test_no_catastrophe_rows_coincide():
    zero = CatastropheRates()
    for i in range(6):
        assert full_generator_row(SCH, zero, i).entries == hat_generator_row(SCH, i).entries


@given(schedules, cats, st.integers(0, 40))
def test_generator_row_properties(sch, cat, i):
    hat = hat_generator_row(sch, i)
    full = full_generator_row(sch, cat, i)
    absd = absorbed_generator_row(sch, cat, i)
    scale = 1 + sch.omega(i) + cat.gamma
    for row in (hat, full, absd):
        assert abs(row.row_sum) <= 1e-14 * scale
        for k, v in row.entries.items():
            assert (v <= 0) if k == i else (v >= 0)
    # Q = Q_hat + Q_d entrywise
    qd = {1: 0.0, 0: 0.0, i: 0.0}
    if i != 1:
        qd[1] += cat.beta
        qd[i] -= cat.beta
    if i >= 1:
        qd[0] += cat.alpha
        qd[i] -= cat.alpha
    for k in set(full.entries) | set(qd):
        assert full.entries.get(k, 0.0) == pytest.approx(hat.entries.get(k, 0.0) + qd.get(k, 0.0), abs=1e-14 * scale)
    # mass removed from the diagonal of the absorbed row sits on the cemetery states
    removed = hat.entries[i] - absd.entries[i]
    cemetery = absd.entries.get(-2, 0.0) + absd.entries.get(-1, 0.0)
    assert removed == pytest.approx(cemetery, abs=1e-14 * scale)


@given(schedules, st.integers(3, 30))
def test_vector_rates_match_scalar(sch, n):
    lam, mu = sch.birth_rates(n), sch.death_rates(n)
    assert mu[0] == 0
    for i in range(n):
        assert lam[i] == sch.birth(i)
        assert mu[i] == sch.death(i)


def test_table_tail_repeats():
    sch = RateSchedule.table([1.0, 2.0], [3.0, 4.0])
    assert [sch.birth(i) for i in range(4)] == [1.0, 2.0, 2.0, 2.0]
    assert [sch.death(i) for i in range(5)] == [0.0, 3.0, 4.0, 4.0, 4.0]
    with pytest.raises(ValueError):
        RateSchedule.table([1.0], [1.0, 2.0])


def test_truncated_matrices():
    Q = hat_generator_matrix(SCH, 10).toarray()
    sums = Q.sum(axis=1)
    assert np.allclose(sums[:-1], 0, atol=1e-15)
    assert sums[-1] == pytest.approx(-LAM)  # killed boundary
    F = full_generator_matrix(SCH, CAT, 10).toarray()
    assert np.allclose(F.sum(axis=1)[:-1], 0, atol=1e-15)
    assert F[0, 1] == pytest.approx(1.3) and F[2, 1] == pytest.approx(1.55) and F[2, 0] == pytest.approx(0.4)


def test_policy_levels():
    assert list(TruncationPolicy(16, 100).levels()) == [16, 32, 64, 100]
    assert list(TruncationPolicy(16, 128).levels(minimum=40)) == [64, 128]
    for bad in (dict(initial_level=4), dict(initial_level=64, max_level=32), dict(rel_tol=0.0),
                dict(growth_factor=1)):
        with pytest.raises(ValueError):
            TruncationPolicy(**bad)


def test_gamma_is_derived():
    assert CatastropheRates(0.4, 0.3).gamma == 0.4 + 0.3


def test_config_parsing():
    sch, cat = model_from_dict({"rates": {"kind": "constant", "birth": 1, "death": 1.25}, "alpha": 0.4})
    assert sch == SCH and cat == CatastropheRates(0.4, 0.0)
    aff = schedule_from_dict({"kind": "affine", "birth_slope": 1.0, "birth_offset": 0.5, "death_slope": 2.0})
    assert aff.birth(2) == 3.5 and aff.death(3) == 6.0
    for bad in ({"rates": {"kind": "constant", "birth": 1, "death": 1}, "gamma": 1},
                {"rates": {"kind": "constant", "birth": 1, "death": 1, "x": 2}},
                {"rates": {"kind": "weird"}},
                {"rates": {"kind": "constant", "birth": "1", "death": 1}},
                {"rates": {"kind": "table", "birth": [1]}},
                {"alpha": 1}):
        with pytest.raises(ValueError):
            model_from_dict(bad)


@given(schedules)
def test_schedule_roundtrip(sch):
    assert schedule_from_dict(sch.to_dict()) == sch


def test_kernel_params_cover_levels():
    for sch in (SCH, RateSchedule.affine(0.5, 1.0, 1.5, 0.2), RateSchedule.table([1, 2, 3], [4, 5, 6])):
        birth, death, tail = sch.kernel_params()
        for i in range(12):
            if i < len(birth):
                lam, mu = birth[i], death[i]
            else:
                lam, mu = tail[0] * (i + 1) + tail[1], tail[2] * i + tail[3]
            assert math.isclose(lam, sch.birth(i)) and math.isclose(mu, sch.death(i))
