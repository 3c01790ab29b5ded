"""The compiled and pure-Python kernels must agree.

The simulators agree bit for bit.  The tridiagonal sweep may differ in the
last bit because C and Python divide complex numbers differently.
"""
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bdcat import _pykernels as py
from bdcat.model import RateSchedule

ck = pytest.importorskip("bdcat._ckernels")


def _bands(rng, n):
    lower = rng.normal(size=n - 1) + 1j * rng.normal(size=n - 1)
    upper = rng.normal(size=n - 1) + 1j * rng.normal(size=n - 1)
    diag = 4 + rng.normal(size=n) + 1j * rng.normal(size=n)
    return lower, diag, upper


@given(st.integers(1, 60), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_thomas_identical(n, k, seed):
    rng = np.random.default_rng(seed)
    lower, diag, upper = _bands(rng, n)
    rhs = rng.normal(size=(n, k)) + 0j
    x1, b1 = py.thomas(lower, diag, upper, rhs)
    x2, b2 = ck.thomas(lower, diag, upper, rhs)
    assert b1 == b2 == -1
    assert np.allclose(x1, np.asarray(x2), rtol=1e-13, atol=0)


def test_thomas_reports_small_pivot():
    lower = np.array([1.0 + 0j])
    upper = np.array([1.0 + 0j])
    diag = np.array([1.0 + 0j, 1.0 + 0j])  # second pivot is exactly 0
    for mod in (py, ck):
        _, bad = mod.thomas(lower, diag, upper, np.ones((2, 1), dtype=complex))
        assert bad == 1


SCHEDULES = [RateSchedule.constant(1.0, 1.25), RateSchedule.affine(0.3, 0.5, 0.4, 0.8),
             RateSchedule.table([1.0, 2.0, 0.5], [0.7, 1.1, 3.0])]


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(SCHEDULES), st.floats(0, 2), st.floats(0.01, 2), st.integers(0, 6),
       st.integers(0, 2**32 - 1), st.integers(1, 400))
def test_first_catastrophe_identical(sch, a, b, j, seed, nu):
    birth, death, tail = sch.kernel_params()
    u = np.random.default_rng(seed).random(nu)
    outs = []
    for mod in (py, ck):
        t = np.full(50, -7.0)
        k = np.full(50, -9, dtype=np.int64)
        e = np.full(50, -9, dtype=np.int64)
        res = mod.first_catastrophe(birth, death, tail, a, b, j, 50, u, 10**6, t, k, e)
        outs.append((tuple(res), t.tobytes(), k.tobytes(), e.tobytes()))
    assert outs[0] == outs[1]


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(SCHEDULES), st.floats(0, 2), st.floats(0, 2), st.integers(0, 6), st.floats(0.01, 5),
       st.integers(0, 2**32 - 1), st.integers(1, 400), st.integers(1, 50))
def test_state_at_time_identical(sch, a, b, j, horizon, seed, nu, cap):
    birth, death, tail = sch.kernel_params()
    u = np.random.default_rng(seed).random(nu)
    outs = []
    for mod in (py, ck):
        s = np.full(30, -9, dtype=np.int64)
        res = mod.state_at_time(birth, death, tail, a, b, j, horizon, 30, u, cap, s)
        outs.append((tuple(res), s.tobytes()))
    assert outs[0] == outs[1]


def test_resume_contract():
    """A replication that runs out of uniforms is left whole for the caller."""
    birth, death, tail = SCHEDULES[0].kernel_params()
    u = np.random.default_rng(1).random(200)
    t = np.empty(1000)
    k = np.empty(1000, dtype=np.int64)
    e = np.empty(1000, dtype=np.int64)
    done, used = py.first_catastrophe(birth, death, tail, 0.4, 0.3, 0, 1000, u, 10**6, t, k, e)
    assert done < 1000
    assert used == 2 * int(e[:done].sum())


def test_cap_marks_replication():
    birth, death, tail = SCHEDULES[0].kernel_params()
    u = np.random.default_rng(2).random(10_000)
    t = np.empty(3)
    k = np.empty(3, dtype=np.int64)
    e = np.empty(3, dtype=np.int64)
    for mod in (py, ck):
        done, _ = mod.first_catastrophe(birth, death, tail, 1e-9, 0.0, 5, 3, u, 4, t, k, e)
        assert done == 3 and np.all(k == -1) and np.all(np.isnan(t)) and np.all(e == 4)


def _run_backend(env_value):
    import json
    import os
    import subprocess
    import sys
    code = ("import json, bdcat\n"
            "from bdcat.simulate import estimate_first_catastrophe, estimate_transition\n"
            "from bdcat.model import RateSchedule, CatastropheRates\n"
            "sch, cat = RateSchedule.constant(1.0, 1.25), CatastropheRates(0.4, 0.3)\n"
            "s = estimate_first_catastrophe(sch, cat, 2, 5000, seed=8)\n"
            "t = estimate_transition(sch, cat, 2, 1.5, 3000, seed=8)\n"
            "print(json.dumps([bdcat.BACKEND, s.to_dict(), t.counts.tolist()]))\n")
    env = dict(os.environ)
    env.pop("BDCAT_PURE_PYTHON", None)
    if env_value:
        env["BDCAT_PURE_PYTHON"] = env_value
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout)


def test_backend_switch_gives_same_results():
    compiled = _run_backend(None)
    pure = _run_backend("1")
    assert compiled[0] == "cython" and pure[0] == "python"
    assert compiled[1:] == pure[1:]
