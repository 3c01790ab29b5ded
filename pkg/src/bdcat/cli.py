"""Command-line front end.

Every subcommand reads a JSON run configuration (``--config PATH`` or
stdin) with four blocks::

    {
      "model":    {"rates": {"kind": "constant", "birth": 1.0, "death": 1.25},
                   "alpha": 0.4, "beta": 0.3},
      "task":     {... subcommand parameters ...},
      "numerics": {"initial_level": 64, "max_level": 1048576, "rel_tol": 1e-10,
                   "growth_factor": 2, "inversion_tol": 1e-8, "quad_tol": 1e-8},
      "output":   {"format": "csv" (json for simulate), "path": null}
    }

A document holding only the model block (``{"rates": ..., "alpha": ...}``)
is accepted too.  Unknown fields anywhere are errors.  Command-line flags
override the file.

Exit codes: 0 success, 1 configuration error, 2 constraint violation,
3 numerical failure, 4 cross-check failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from typing import Any

from . import crosscheck
from . import first_catastrophe as fc
from .catastrophe import full_resolvent_entry, phi_entry
from .errors import BDCatError
from .model import CatastropheRates, RateSchedule, TruncationPolicy, model_from_dict, validate_model
from .resolvent import hat_resolvent_entry
from .simulate import MIN_REPLICATIONS, estimate_first_catastrophe
from .transient import (InversionSettings, QuadratureSettings, transition_row_direct,
                        transition_row_formula)

__all__ = ["main", "RunConfig", "parse_run_config", "ConfigError"]

EXIT_OK, EXIT_CONFIG, EXIT_CONSTRAINT, EXIT_NUMERIC, EXIT_CHECK = 0, 1, 2, 3, 4

COMMANDS = ("validate", "transition", "resolvent", "catastrophe", "density", "simulate", "crosscheck")

# task fields per subcommand with their defaults
TASK_DEFAULTS: dict[str, dict[str, Any]] = {
    "validate": {},
    "transition": {"j": 0, "t": [1.0], "method": "both", "n_max": None},
    "resolvent": {"j": 0, "n": [0, 1, 2, 3, 4, 5], "s": [1.0], "kind": "all"},
    "catastrophe": {"j": [0], "single_type": False},
    "density": {"j": 0, "t": [0.5, 1.0, 2.0, 5.0]},
    "simulate": {"j": 0, "replications": 100_000, "seed": 0},
    "crosscheck": {"replications": 100_000, "seed": 0},
}
NUMERICS_DEFAULTS = {"initial_level": 64, "max_level": 2 ** 20, "rel_tol": 1e-10, "growth_factor": 2,
                     "inversion_tol": 1e-8, "quad_tol": 1e-8}
OUTPUT_DEFAULTS = {"format": None, "path": None}
# simulate reports a summary object, everything else is a table
DEFAULT_FORMAT = {"simulate": "json"}
CHOICES = {"method": ("formula", "direct", "both"), "kind": ("hat", "full", "phi", "all"),
           "format": ("csv", "json")}


class ConfigError(ValueError):
    pass


class ConstraintError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    schedule: RateSchedule
    cat: CatastropheRates
    task: dict
    numerics: dict
    output: dict = field(default_factory=lambda: dict(OUTPUT_DEFAULTS))

    @property
    def policy(self) -> TruncationPolicy:
        nm = self.numerics
        # keep room for at least one growth step below a small max_level
        init = min(nm["initial_level"], max(8, nm["max_level"] // nm["growth_factor"]))
        return TruncationPolicy(init, nm["max_level"], nm["rel_tol"], nm["growth_factor"])

    @property
    def inversion(self) -> InversionSettings:
        return InversionSettings(tol=self.numerics["inversion_tol"])

    @property
    def quadrature(self) -> QuadratureSettings:
        return QuadratureSettings(abs_tol=self.numerics["quad_tol"])


def _merge(block: Any, defaults: dict, where: str) -> dict:
    if block is None:
        return dict(defaults)
    if not isinstance(block, dict):
        raise ConfigError(f"{where}: expected an object")
    unknown = sorted(set(block) - set(defaults))
    if unknown:
        raise ConfigError(f"{where}: unknown field(s) {', '.join(unknown)}")
    out = dict(defaults)
    out.update(block)
    return out


def _as_int(v, where, minimum=None):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v) or v != int(v):
        raise ConfigError(f"{where}: expected an integer, got {v!r}")
    v = int(v)
    if minimum is not None and v < minimum:
        raise ConfigError(f"{where}: must be >= {minimum}")
    return v


def _as_float(v, where):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"{where}: expected a finite number, got {v!r}")
    return float(v)


def _as_list(v):
    return list(v) if isinstance(v, (list, tuple)) else [v]


def _as_freq(v, where):
    if isinstance(v, str):
        try:
            return complex(v.replace(" ", ""))
        except ValueError:
            raise ConfigError(f"{where}: cannot read {v!r} as a frequency") from None
    if isinstance(v, list) and len(v) == 2:
        return complex(_as_float(v[0], where), _as_float(v[1], where))
    return complex(_as_float(v, where))


def _check_task(command: str, task: dict) -> dict:
    w = "task.{}"
    out = dict(task)
    for key in ("method", "kind"):
        if key in out and out[key] not in CHOICES[key]:
            raise ConfigError(f"task.{key}: expected one of {', '.join(CHOICES[key])}, got {out[key]!r}")
    if "j" in out:
        if command == "catastrophe":
            out["j"] = [_as_int(x, w.format("j"), 0) for x in _as_list(out["j"])]
        else:
            js = _as_list(out["j"])
            if len(js) != 1:
                raise ConfigError("task.j: this command takes a single start level")
            out["j"] = _as_int(js[0], w.format("j"), 0)
    if "t" in out:
        out["t"] = [_as_float(x, w.format("t")) for x in _as_list(out["t"])]
        if any(x < 0 for x in out["t"]):
            raise ConfigError("task.t: times must be >= 0")
        if command == "density" and any(x <= 0 for x in out["t"]):
            raise ConfigError("task.t: density needs t > 0")
    if "n" in out:
        out["n"] = [_as_int(x, w.format("n"), 0) for x in _as_list(out["n"])]
    if "s" in out:
        out["s"] = [_as_freq(x, w.format("s")) for x in _as_list(out["s"])]
        if any(not x.real > 0 for x in out["s"]):
            raise ConfigError("task.s: frequencies need a positive real part")
    if out.get("n_max") is not None:
        out["n_max"] = _as_int(out["n_max"], w.format("n_max"), 0)
    if "replications" in out:
        out["replications"] = _as_int(out["replications"], w.format("replications"), 1)
    if "seed" in out:
        out["seed"] = _as_int(out["seed"], w.format("seed"), 0)
        if out["seed"] >= 2 ** 64:
            raise ConfigError("task.seed: must fit in 64 bits")
    if "single_type" in out and not isinstance(out["single_type"], bool):
        raise ConfigError("task.single_type: expected true or false")
    return out


def _check_numerics(nm: dict) -> dict:
    out = dict(nm)
    out["initial_level"] = _as_int(nm["initial_level"], "numerics.initial_level", 8)
    out["max_level"] = _as_int(nm["max_level"], "numerics.max_level", 16)
    out["growth_factor"] = _as_int(nm["growth_factor"], "numerics.growth_factor", 2)
    for key in ("rel_tol", "inversion_tol", "quad_tol"):
        out[key] = _as_float(nm[key], f"numerics.{key}")
        if not 0 < out[key] < 1:
            raise ConfigError(f"numerics.{key}: must lie in (0, 1)")
    return out


def parse_run_config(doc: Any, command: str) -> RunConfig:
    """Turn a decoded JSON document into a :class:`RunConfig`.

    Raises :class:`ConfigError` naming the offending field.
    """
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    if not isinstance(doc, dict):
        raise ConfigError("config: expected a JSON object")
    if "rates" in doc:
        doc = {"model": doc}
    unknown = sorted(set(doc) - {"model", "task", "numerics", "output"})
    if unknown:
        raise ConfigError(f"config: unknown field(s) {', '.join(unknown)}")
    if "model" not in doc:
        raise ConfigError("config: missing field 'model'")
    try:
        schedule, cat = model_from_dict(doc["model"])
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None
    task = _check_task(command, _merge(doc.get("task"), TASK_DEFAULTS[command], "task"))
    numerics = _check_numerics(_merge(doc.get("numerics"), NUMERICS_DEFAULTS, "numerics"))
    output = _merge(doc.get("output"), OUTPUT_DEFAULTS, "output")
    if output["format"] is None:
        output["format"] = DEFAULT_FORMAT.get(command, "csv")
    if output["format"] not in CHOICES["format"]:
        raise ConfigError(f"output.format: expected csv or json, got {output['format']!r}")
    if output["path"] is not None and not isinstance(output["path"], str):
        raise ConfigError("output.path: expected a string or null")
    return RunConfig(command, schedule, cat, task, numerics, output)


# -- argument parsing ----------------------------------------------------------

def _split(text: str) -> list[str]:
    return [x for x in text.split(",") if x.strip()]


def _json_number(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        raise ConfigError(f"cannot read {text!r} as a number") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("configuration")
    g.add_argument("--config", metavar="PATH", help="JSON run configuration (default: read stdin)")
    g.add_argument("--format", choices=CHOICES["format"],
                   help="output format (default: json for simulate, csv otherwise)")
    g.add_argument("--out", metavar="PATH", help="write output here instead of stdout")
    g.add_argument("--tol", type=float, metavar="FLOAT",
                   help=f"relative truncation tolerance (default: {NUMERICS_DEFAULTS['rel_tol']})")
    g.add_argument("--max-level", type=int, metavar="N",
                   help=f"largest truncation level (default: {NUMERICS_DEFAULTS['max_level']})")
    g.add_argument("--seed", type=int, metavar="U64", help="master seed for simulation (default: 0)")
    g.add_argument("--reps", type=int, metavar="N", help="Monte Carlo replications (default: 100000)")
    t = common.add_argument_group("task overrides")
    t.add_argument("--j", metavar="J[,J...]", help="start level(s)")
    t.add_argument("--n", metavar="N[,N...]", help="target level(s); for transition, the largest level printed")
    t.add_argument("--t", metavar="T[,T...]", help="time point(s)")
    t.add_argument("--s", metavar="S[,S...]", help="frequencies, complex allowed (e.g. 1+2j)")
    t.add_argument("--method", choices=CHOICES["method"], help="transition method (default: both)")
    t.add_argument("--kind", choices=CHOICES["kind"], help="resolvent kind (default: all)")
    t.add_argument("--single-type", action="store_true", default=None,
                   help="use the single-type closed form (needs alpha=0 or beta=0)")

    defaults = "\n".join(
        [f"  {cmd}: {json.dumps(d) if d else '(no task fields)'}" for cmd, d in TASK_DEFAULTS.items()]
        + [f"  numerics: {json.dumps(NUMERICS_DEFAULTS)}", f"  output: {json.dumps(OUTPUT_DEFAULTS)}"])
    parser = argparse.ArgumentParser(
        prog="bdcat",
        description="Birth-death processes with two-type catastrophes: transient probabilities, "
                    "resolvents, first-catastrophe statistics and Monte Carlo cross-checks.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="configuration defaults per block:\n" + defaults
               + "\n\nexit codes: 0 ok, 1 config error, 2 constraint violation, 3 numerical failure, "
                 "4 cross-check failure",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    helps = {
        "validate": "check the model constraints",
        "transition": "p_{j,n}(t): CSV columns t,n,p_formula,p_direct,abs_diff",
        "resolvent": "resolvent entries: CSV columns kind,j,n,s_re,s_im,value_re,value_im",
        "catastrophe": "moments of C_j: CSV columns j,mean,second_moment,variance,p_alpha_first,p_beta_first",
        "density": "density of C_j: CSV columns j,t,density,inversion_error",
        "simulate": "Monte Carlo summary of C_j with analytic values and z-scores",
        "crosscheck": "run the invariant suite: CSV columns name,status,max_error,threshold,detail",
    }
    for cmd in COMMANDS:
        sub.add_parser(cmd, parents=[common], help=helps[cmd], description=helps[cmd])
    return parser


def _overrides(args, command: str) -> tuple[dict, dict, dict]:
    task: dict[str, Any] = {}
    allowed = TASK_DEFAULTS[command]
    pairs = {"j": args.j, "n": args.n, "t": args.t, "s": args.s}
    for key, text in pairs.items():
        if text is None:
            continue
        items = _split(text)
        if key == "n" and command == "transition":
            if len(items) != 1:
                raise ConfigError("--n: transition takes the largest level to print")
            task["n_max"] = _json_number(items[0])
            continue
        if key not in allowed:
            raise ConfigError(f"--{key} does not apply to '{command}'")
        task[key] = items if key == "s" else [_json_number(x) for x in items]
    for key, val in (("method", args.method), ("kind", args.kind), ("single_type", args.single_type),
                     ("seed", args.seed), ("replications", args.reps)):
        if val is None:
            continue
        if key not in allowed:
            raise ConfigError(f"--{key.replace('_', '-')} does not apply to '{command}'")
        task[key] = val
    numerics = {}
    if args.tol is not None:
        numerics["rel_tol"] = args.tol
    if args.max_level is not None:
        numerics["max_level"] = args.max_level
    output = {}
    if args.format is not None:
        output["format"] = args.format
    if args.out is not None:
        output["path"] = args.out
    return task, numerics, output


def _load(args) -> Any:
    try:
        if args.config and args.config != "-":
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
        else:
            text = sys.stdin.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON: {exc}") from None


def load_config(args) -> RunConfig:
    doc = _load(args)
    task, numerics, output = _overrides(args, args.command)
    if isinstance(doc, dict):
        doc = dict(doc) if "rates" not in doc else {"model": doc}
        for block, extra in (("task", task), ("numerics", numerics), ("output", output)):
            if extra:
                base = doc.get(block) or {}
                if not isinstance(base, dict):
                    raise ConfigError(f"{block}: expected an object")
                doc[block] = {**base, **extra}
    return parse_run_config(doc, args.command)


# -- output --------------------------------------------------------------------

def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return v


def _table(columns: list[str], rows: list[list], fmt: str) -> str:
    if fmt == "json":
        return json.dumps([dict(zip(columns, r)) for r in rows], indent=2, allow_nan=True) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_cell(v) for v in r])
    return buf.getvalue()


def _emit(cfg: RunConfig, text: str):
    path = cfg.output["path"]
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# -- commands ------------------------------------------------------------------

def _require_valid(cfg: RunConfig):
    report = validate_model(cfg.schedule, cfg.cat)
    if not report.ok:
        raise ConstraintError("; ".join(report.violations))


def cmd_validate(cfg: RunConfig) -> int:
    report = validate_model(cfg.schedule, cfg.cat)
    cols = ["ok", "violation"]
    rows = [[report.ok, v] for v in report.violations] or [[True, ""]]
    _emit(cfg, _table(cols, rows, cfg.output["format"]))
    for v in report.violations:
        print(f"bdcat: constraint violated: {v}", file=sys.stderr)
    return EXIT_OK if report.ok else EXIT_CONSTRAINT


def cmd_transition(cfg: RunConfig) -> int:
    _require_valid(cfg)
    task, pol = cfg.task, cfg.policy
    j, method = task["j"], task["method"]
    rows = []
    for t in task["t"]:
        pf = transition_row_formula(cfg.schedule, cfg.cat, j, t, pol, cfg.quadrature).probabilities \
            if method in ("formula", "both") else None
        pd = transition_row_direct(cfg.schedule, cfg.cat, j, t, pol).probabilities \
            if method in ("direct", "both") else None
        m = max(len(x) for x in (pf, pd) if x is not None)
        if task["n_max"] is not None:
            m = task["n_max"] + 1
        for n in range(m):
            a = float(pf[n]) if pf is not None and n < len(pf) else (0.0 if pf is not None else None)
            b = float(pd[n]) if pd is not None and n < len(pd) else (0.0 if pd is not None else None)
            rows.append([t, n, a, b, abs(a - b) if a is not None and b is not None else None])
    _emit(cfg, _table(["t", "n", "p_formula", "p_direct", "abs_diff"], rows, cfg.output["format"]))
    return EXIT_OK


def cmd_resolvent(cfg: RunConfig) -> int:
    _require_valid(cfg)
    task, pol = cfg.task, cfg.policy
    kinds = ("hat", "full", "phi") if task["kind"] == "all" else (task["kind"],)
    fns = {"hat": lambda n, s: hat_resolvent_entry(cfg.schedule, task["j"], n, s, pol),
           "full": lambda n, s: full_resolvent_entry(cfg.schedule, cfg.cat, task["j"], n, s, pol),
           "phi": lambda n, s: phi_entry(cfg.schedule, cfg.cat, task["j"], n, s, pol)}
    rows = []
    for kind in kinds:
        for s in task["s"]:
            for n in task["n"]:
                v = complex(fns[kind](n, s))
                rows.append([kind, task["j"], n, s.real, s.imag, v.real, v.imag])
    _emit(cfg, _table(["kind", "j", "n", "s_re", "s_im", "value_re", "value_im"], rows, cfg.output["format"]))
    return EXIT_OK


def cmd_catastrophe(cfg: RunConfig) -> int:
    _require_valid(cfg)
    cat = cfg.cat
    if not cat.gamma > 0:
        raise ConstraintError("catastrophe statistics need alpha + beta > 0")
    single = cfg.task["single_type"]
    if single and cat.alpha > 0 and cat.beta > 0:
        raise ConstraintError("--single-type needs alpha = 0 or beta = 0")
    rows = []
    for j in cfg.task["j"]:
        if single:
            which, rate = ("alpha", cat.alpha) if cat.beta == 0 else ("beta", cat.beta)
            r = fc.moments_single_type(cfg.schedule, rate, which, j, cfg.policy)
        else:
            r = fc.moments(cfg.schedule, cat, j, cfg.policy)
        rows.append([j, r.mean, r.second_moment, r.variance, r.p_alpha_first, r.p_beta_first])
    cols = ["j", "mean", "second_moment", "variance", "p_alpha_first", "p_beta_first"]
    _emit(cfg, _table(cols, rows, cfg.output["format"]))
    return EXIT_OK


def cmd_density(cfg: RunConfig) -> int:
    _require_valid(cfg)
    if not cfg.cat.gamma > 0:
        raise ConstraintError("the density of C_j needs alpha + beta > 0")
    j = cfg.task["j"]
    rows = []
    for t in cfg.task["t"]:
        d, err = fc.density(cfg.schedule, cfg.cat, j, t, cfg.policy, cfg.inversion, full_output=True)
        rows.append([j, t, d, err])
    _emit(cfg, _table(["j", "t", "density", "inversion_error"], rows, cfg.output["format"]))
    return EXIT_OK


def cmd_simulate(cfg: RunConfig) -> int:
    _require_valid(cfg)
    task = cfg.task
    if task["replications"] < MIN_REPLICATIONS:
        raise ConstraintError(f"need at least {MIN_REPLICATIONS} replications, got {task['replications']}")
    if not cfg.cat.gamma > 0:
        raise ConstraintError("simulating C_j needs alpha + beta > 0")
    j = task["j"]
    sim = estimate_first_catastrophe(cfg.schedule, cfg.cat, j, task["replications"], seed=task["seed"])
    rep = fc.moments(cfg.schedule, cfg.cat, j, cfg.policy)
    pairs = {"mean_C": (sim.mean_C, rep.mean), "second_moment_C": (sim.second_moment_C, rep.second_moment),
             "variance_C": (sim.variance_C, rep.variance), "p_alpha_first": (sim.p_alpha_first, rep.p_alpha_first),
             "p_beta_first": (sim.p_beta_first, rep.p_beta_first)}
    attempted = sim.replications + sim.cap_exceeded
    if cfg.output["format"] == "json":
        doc = {"start": j, "replications": sim.replications, "cap_exceeded": sim.cap_exceeded,
               "seed": sim.seed,
               "estimates": {k: {"value": e.value, "se": e.se, "analytic": a, "z": e.z(a)}
                             for k, (e, a) in pairs.items()}}
        text = json.dumps(doc, indent=2) + "\n"
    else:
        rows = [[k, e.value, e.se, a, e.z(a)] for k, (e, a) in pairs.items()]
        text = _table(["quantity", "estimate", "se", "analytic", "z"], rows, "csv")
    _emit(cfg, text)
    if sim.cap_exceeded > 0.01 * attempted:
        print(f"bdcat: {sim.cap_exceeded} of {attempted} replications hit the event cap", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_crosscheck(cfg: RunConfig) -> int:
    _require_valid(cfg)
    results = crosscheck.run_checks(cfg.schedule, cfg.cat, cfg.policy, cfg.inversion,
                                    replications=cfg.task["replications"], seed=cfg.task["seed"])
    cols = ["name", "status", "max_error", "threshold", "detail"]
    _emit(cfg, _table(cols, [[r.name, r.status, r.max_error, r.threshold, r.detail] for r in results],
                      cfg.output["format"]))
    failed = [r.name for r in results if not r.ok]
    if failed:
        print(f"bdcat: failed checks: {', '.join(failed)}", file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


HANDLERS = {"validate": cmd_validate, "transition": cmd_transition, "resolvent": cmd_resolvent,
            "catastrophe": cmd_catastrophe, "density": cmd_density, "simulate": cmd_simulate,
            "crosscheck": cmd_crosscheck}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args)
        return HANDLERS[args.command](cfg)
    except ConfigError as exc:
        print(f"bdcat: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConstraintError as exc:
        print(f"bdcat: constraint violated: {exc}", file=sys.stderr)
        return EXIT_CONSTRAINT
    except (BDCatError, ArithmeticError) as exc:
        print(f"bdcat: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
