import csv
import io
import json

import pytest
from hypothesis import given, settings, strategies as st

from bdcat.cli import ConfigError, main, parse_run_config

STD = {"rates": {"kind": "constant", "birth": 1.0, "death": 1.25}, "alpha": 0.4, "beta": 0.3}


def run(capsys, tmp_path, doc, *args):
    path = tmp_path / "cfg.json"
    path.write_text(doc if isinstance(doc, str) else json.dumps(doc))
    code = main([args[0], "--config", str(path), *args[1:]])
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_validate(capsys, tmp_path):
    assert run(capsys, tmp_path, STD, "validate")[0] == 0
    bad = {"rates": {"kind": "constant", "birth": 0.0, "death": 1.0}}
    code, _, err = run(capsys, tmp_path, bad, "validate")
    assert code == 2 and "λ_0 must be > 0" in err
    assert run(capsys, tmp_path, "{not json", "validate")[0] == 1


def test_stdin(monkeypatch, capsys):
    monkeypatch.setattr("sys.stdin", io.StringIO(json.dumps(STD)))
    assert main(["validate"]) == 0


def test_transition_columns_and_diff(capsys, tmp_path):
    code, out, _ = run(capsys, tmp_path, STD, "transition", "--j", "5", "--t", "2")
    assert code == 0
    assert out.splitlines()[0] == "t,n,p_formula,p_direct,abs_diff"
    assert max(float(r["abs_diff"]) for r in rows(out)) < 1e-6


def test_transition_no_catastrophes(capsys, tmp_path):
    doc = {"rates": STD["rates"]}
    code, out, _ = run(capsys, tmp_path, doc, "transition", "--t", "0.5,3")
    assert code == 0 and max(float(r["abs_diff"]) for r in rows(out)) < 1e-12


def test_transition_time_zero(capsys, tmp_path):
    code, out, _ = run(capsys, tmp_path, STD, "transition", "--j", "2", "--t", "0", "--n", "4")
    got = [float(r["p_formula"]) for r in rows(out)]
    assert code == 0 and got == [0.0, 0.0, 1.0, 0.0, 0.0]


def test_catastrophe_table(capsys, tmp_path):
    code, out, _ = run(capsys, tmp_path, STD, "catastrophe", "--j", "0,1,5")
    assert code == 0
    assert out.splitlines()[0] == "j,mean,second_moment,variance,p_alpha_first,p_beta_first"
    for r in rows(out):
        assert abs(float(r["p_alpha_first"]) + float(r["p_beta_first"]) - 1) < 1e-9


def test_catastrophe_single_type(capsys, tmp_path):
    doc = dict(STD, alpha=0.7, beta=0.0)
    _, general, _ = run(capsys, tmp_path, doc, "catastrophe", "--j", "0,1,5")
    _, single, _ = run(capsys, tmp_path, doc, "catastrophe", "--j", "0,1,5", "--single-type")
    for a, b in zip(rows(general), rows(single)):
        assert float(a["p_alpha_first"]) == 1.0
        for key in ("mean", "second_moment"):
            assert abs(float(a[key]) - float(b[key])) < 1e-8 * float(a[key])
    assert run(capsys, tmp_path, STD, "catastrophe", "--single-type")[0] == 2


def test_catastrophe_needs_gamma(capsys, tmp_path):
    assert run(capsys, tmp_path, {"rates": STD["rates"]}, "catastrophe")[0] == 2


def test_resolvent_json(capsys, tmp_path):
    code, out, _ = run(capsys, tmp_path, STD, "resolvent", "--n", "0,1", "--s", "1,1+2j", "--format", "json")
    data = json.loads(out)
    assert code == 0 and len(data) == 3 * 2 * 2
    assert data[0]["kind"] == "hat" and data[0]["value_re"] == pytest.approx(0.6433981132056603, rel=1e-12)


def test_density(capsys, tmp_path):
    code, out, _ = run(capsys, tmp_path, STD, "density", "--t", "0.5,2")
    assert code == 0 and out.splitlines()[0] == "j,t,density,inversion_error"
    assert run(capsys, tmp_path, STD, "density", "--t", "0")[0] == 1


def test_simulate(capsys, tmp_path):
    code, out, _ = run(capsys, tmp_path, STD, "simulate", "--reps", "2000", "--seed", "3")
    doc = json.loads(out)
    assert code == 0 and doc["replications"] == 2000 and doc["seed"]["seed"] == 3
    assert set(doc["estimates"]["mean_C"]) == {"value", "se", "analytic", "z"}
    assert run(capsys, tmp_path, STD, "simulate", "--reps", "999")[0] == 2


def test_simulate_out_file(capsys, tmp_path):
    target = tmp_path / "o.csv"
    code, out, _ = run(capsys, tmp_path, STD, "simulate", "--reps", "1000", "--format", "csv", "--out", str(target))
    assert code == 0 and out == ""
    assert target.read_text().splitlines()[0] == "quantity,estimate,se,analytic,z"


def test_crosscheck_no_catastrophes(capsys, tmp_path):
    code, out, _ = run(capsys, tmp_path, {"rates": STD["rates"]}, "crosscheck")
    table = {r["name"]: r for r in rows(out)}
    assert code == 0
    assert table["moments_vs_simulation"]["status"] == "skipped"
    assert "gamma=0" in table["density"]["detail"]
    assert table["resolvent_identity"]["status"] == "pass"


def test_crosscheck_truncation_failure(capsys, tmp_path):
    code, out, err = run(capsys, tmp_path, STD, "crosscheck", "--max-level", "32")
    assert code == 4 and "failed checks" in err
    assert any("converge" in r["detail"] for r in rows(out))


def test_numeric_failure_exit(capsys, tmp_path):
    code, _, err = run(capsys, tmp_path, STD, "transition", "--t", "1", "--max-level", "32")
    assert code == 3 and "numerical failure" in err


def test_full_config_blocks(capsys, tmp_path):
    doc = {"model": STD, "task": {"j": [0, 5]}, "numerics": {"rel_tol": 1e-11}, "output": {"format": "json"}}
    code, out, _ = run(capsys, tmp_path, doc, "catastrophe")
    assert code == 0 and [r["j"] for r in json.loads(out)] == [0, 5]


@pytest.mark.parametrize("doc", [
    {"model": STD, "extra": 1},
    {"model": STD, "task": {"bogus": 1}},
    {"model": STD, "numerics": {"rel_tol": 2.0}},
    {"model": STD, "output": {"format": "xml"}},
    {"model": STD, "task": {"method": "magic"}},
    {"task": {}},
    [1, 2],
])
def test_strict_parsing(doc):
    with pytest.raises(ConfigError):
        parse_run_config(doc, "transition")


def test_flag_not_applicable(capsys, tmp_path):
    assert run(capsys, tmp_path, STD, "validate", "--j", "1")[0] == 1


json_values = st.recursive(st.none() | st.booleans() | st.integers() | st.floats(allow_nan=False) | st.text(max_size=5),
                           lambda c: st.lists(c, max_size=3) | st.dictionaries(st.text(max_size=8), c, max_size=3),
                           max_leaves=10)


@settings(max_examples=150, deadline=None)
@given(st.sampled_from(["validate", "transition", "catastrophe", "simulate", "crosscheck"]),
       st.dictionaries(st.sampled_from(["model", "task", "numerics", "output", "rates", "alpha", "zzz"]),
                       json_values, max_size=4))
def test_parsing_is_total(command, doc):
    """Any JSON document either parses or raises a ConfigError naming the problem."""
    try:
        cfg = parse_run_config(doc, command)
    except ConfigError as exc:
        assert str(exc)
    else:
        assert cfg.command == command
