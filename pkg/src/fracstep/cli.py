"""Command-line front end.

Usage::

    fracstep <command> [--key value]... [--config path] [--print-config]

Commands: example1, example2, predprey, weights, converge-time, converge-space.
A config file holds flat ``key=value`` lines (``#`` starts a comment); flags on
the command line override it. Exit codes: 0 success, 1 usage/config error,
2 numerical fault, 3 strict-mode violation.
"""

from __future__ import annotations

import argparse
import io
import json
import sys
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional

import numpy as np

from ._validation import FracstepError, check_alpha
from .fractional_time import TimeGrid, compute_weights
from .models import (
    ConstraintWarning,
    PredatorPreyParams,
    check_constraints,
    cosine_perturbation,
    equilibrium_solve,
    run_system,
)
from .scheme import StabilityWarning, run_scalar
from .spatial import Boundary, SpaceGrid
from .verify import (
    cosine_neumann_case,
    error_at_T,
    sine_dirichlet_case,
    spatial_study,
    temporal_study,
)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_STRICT = 0, 1, 2, 3

COMMANDS = ("example1", "example2", "predprey", "weights", "converge-time", "converge-space")
CASES = {"example1": sine_dirichlet_case, "example2": cosine_neumann_case}


class ConfigError(ValueError):
    pass


class StrictViolation(FracstepError):
    pass


def parse_number(token) -> Fraction:
    """Parse ``"1/256"``, ``"0.125"`` or ``"3"`` exactly."""
    s = str(token).strip()
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"not a number: {token!r}") from None


def _float(token):
    return float(parse_number(token))


def _int(token):
    v = parse_number(token)
    if v.denominator != 1:
        raise ConfigError(f"not an integer: {token!r}")
    return int(v)


def _fraction_list(token):
    parts = [p for p in str(token).split(",") if p.strip()]
    if not parts:
        raise ConfigError(f"empty list: {token!r}")
    return [parse_number(p) for p in parts]


def _bool(token):
    s = str(token).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {token!r}")


def _choice(*options):
    def conv(token):
        s = str(token).strip().lower()
        if s not in options:
            raise ConfigError(f"{token!r} is not one of {', '.join(options)}")
        return s

    return conv


# key -> (converter, commands it applies to)
_ALL = set(COMMANDS)
_SCALAR = {"example1", "example2"}
_GRID = _SCALAR | {"predprey"}
_STUDY = {"converge-time", "converge-space"}
SCHEMA = {
    "alpha": (_float, _ALL),
    "n": (_int, {"weights"}),
    "M": (_int, _GRID),
    "h": (parse_number, _GRID | {"converge-time"}),
    "N": (_int, _GRID),
    "tau": (parse_number, _GRID),
    "T": (_float, _GRID | _STUDY),
    "case": (_choice("example1", "example2"), _STUDY),
    "taus": (_fraction_list, {"converge-time"}),
    "hs": (_fraction_list, {"converge-space"}),
    "tau-factor": (_float, {"converge-space"}),
    "forcing-convention": (_choice("new", "old"), _SCALAR | _STUDY),
    "lipschitz": (_float, _SCALAR),
    "a": (_float, {"predprey"}),
    "sigma": (_float, {"predprey"}),
    "gamma": (_float, {"predprey"}),
    "delta": (_float, {"predprey"}),
    "beta": (_float, {"predprey"}),
    "d1": (_float, {"predprey"}),
    "d2": (_float, {"predprey"}),
    "bc": (_choice("neumann", "dirichlet"), {"predprey"}),
    "amp-N": (_float, {"predprey"}),
    "amp-P": (_float, {"predprey"}),
    "sample-every": (_int, _GRID),
    "strict-constraints": (_bool, {"predprey"}),
    "strict-monitors": (_bool, {"predprey"}),
    "workers": (_int, _STUDY),
    "output": (str, _ALL),
}
FLAGS = ("strict-constraints", "strict-monitors")

_PP = PredatorPreyParams()
DEFAULTS = {
    "example1": {"M": 2000, "N": 64, "T": 1.0, "forcing-convention": "new"},
    "example2": {"M": 2000, "N": 64, "T": 1.0, "forcing-convention": "new"},
    "predprey": {
        "h": Fraction(1, 200),
        "tau": Fraction(1, 10),
        "T": 200.0,
        "a": _PP.a,
        "sigma": _PP.sigma,
        "gamma": _PP.gamma,
        "delta": _PP.delta,
        "beta": _PP.beta,
        "d1": _PP.d1,
        "d2": _PP.d2,
        "bc": "neumann",
        "amp-N": 0.0214,
        "amp-P": 0.0066,
        "strict-constraints": False,
        "strict-monitors": False,
    },
    "weights": {"n": 10},
    "converge-time": {
        "case": "example1",
        "h": Fraction(1, 2000),
        "taus": [Fraction(1, 2**k) for k in range(3, 9)],
        "T": 1.0,
        "forcing-convention": "new",
        "workers": 1,
    },
    "converge-space": {
        "case": "example1",
        "hs": [Fraction(1, 2**k) for k in range(4, 8)],
        "tau-factor": 1.0,
        "T": 1.0,
        "forcing-convention": "new",
        "workers": 1,
    },
}


@dataclass
class RunConfig:
    command: str
    values: Dict[str, object] = field(default_factory=dict)
    print_config: bool = False

    def __getitem__(self, key):
        return self.values[key]

    def get(self, key, default=None):
        return self.values.get(key, default)

    def to_text(self) -> str:
        lines = [f"# fracstep {self.command}"]
        for key in sorted(self.values):
            lines.append(f"{key}={format_value(self.values[key])}")
        return "\n".join(lines) + "\n"


def format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, list):
        return ",".join(format_value(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def read_config_file(path) -> Dict[str, str]:
    out = {}
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = value
    return out


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fracstep", description="L1 semi-implicit fractional reaction-diffusion solver")
    sub = parser.add_subparsers(dest="command", metavar="command")
    for cmd in COMMANDS:
        p = sub.add_parser(cmd)
        p.add_argument("--config", metavar="PATH")
        p.add_argument("--print-config", action="store_true")
        for key, (_, cmds) in SCHEMA.items():
            if cmd not in cmds:
                continue
            if key in FLAGS:
                p.add_argument(f"--{key}", nargs="?", const="true", default=None, dest=key)
            else:
                p.add_argument(f"--{key}", default=None, dest=key)
    return parser


def _resolve_count(values, count_key, step_key, length, what):
    has_count = count_key in values
    has_step = step_key in values
    if has_count and has_step:
        raise ConfigError(f"give either {count_key} or {step_key}, not both")
    if has_step:
        step = values.pop(step_key)
        if step <= 0:
            raise ConfigError(f"{step_key} must be positive, got {step}")
        count = Fraction(length).limit_denominator(10**12) / step
        if count.denominator != 1 and abs(float(count) - round(float(count))) > 1e-9:
            raise ConfigError(f"{step_key}={step} does not divide the {what} of length {length}")
        values[count_key] = int(round(float(count)))
    if values[count_key] < 1:
        raise ConfigError(f"{count_key} must be >= 1")


def parse_config(argv) -> RunConfig:
    """Build a :class:`RunConfig` from ``argv`` plus an optional config file."""
    argv = list(argv)
    if not argv:
        raise ConfigError("missing command; choose one of " + ", ".join(COMMANDS))
    ns = build_parser().parse_args(argv)
    cmd = ns.command
    if cmd is None:
        raise ConfigError("missing command; choose one of " + ", ".join(COMMANDS))
    raw: Dict[str, str] = {}
    if ns.config:
        raw.update(read_config_file(ns.config))
    for key, value in vars(ns).items():
        if key in SCHEMA and value is not None:
            raw[key] = value
    values: Dict[str, object] = {}
    for key, token in raw.items():
        if key not in SCHEMA:
            raise ConfigError(f"unknown key {key!r}")
        conv, cmds = SCHEMA[key]
        if cmd not in cmds:
            raise ConfigError(f"key {key!r} does not apply to command {cmd!r}")
        try:
            values[key] = conv(token)
        except ConfigError as exc:
            raise ConfigError(f"{key}: {exc}") from None
    explicit = set(values)
    for key, default in DEFAULTS[cmd].items():
        if key in explicit:
            continue
        # a user-supplied M or N displaces the default h or tau and vice versa
        if key in ("h", "M") and ({"h", "M"} & explicit) and cmd in _GRID:
            continue
        if key in ("tau", "N") and ({"tau", "N"} & explicit):
            continue
        values[key] = default
    if "alpha" not in values:
        raise ConfigError("alpha is required")
    try:
        check_alpha(values["alpha"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if cmd in _GRID:
        _resolve_count(values, "M", "h", 1, "interval [0, 1]")
        if values["M"] < 2:
            raise ConfigError("M must be >= 2")
        _resolve_count(values, "N", "tau", values["T"], "time interval")
    for key in ("T", "a", "sigma", "beta", "d1", "d2", "gamma", "delta", "tau-factor"):
        if key in values and not values[key] > 0:
            raise ConfigError(f"{key} must be positive, got {values[key]}")
    if cmd == "predprey" and values["gamma"] > values["delta"]:
        raise ConfigError("need gamma <= delta")
    if "workers" in values and values["workers"] < 1:
        raise ConfigError("workers must be >= 1")
    if "sample-every" in values and values["sample-every"] < 1:
        raise ConfigError("sample-every must be >= 1")
    return RunConfig(cmd, values, print_config=ns.print_config)


# --- output -----------------------------------------------------------------


def _e(v):
    return "%.15e" % v


def _rate(v):
    return "" if v is None else "%.5f" % v


def _csv(header, rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(row) + "\n")
    return buf.getvalue()


def _sample_every(cfg):
    return cfg.get("sample-every") or max(1, cfg["N"] // 100)


def _run_weights(cfg):
    w = compute_weights(cfg["alpha"], cfg["n"])
    text = _csv(["j", "b_j"], ([str(j), _e(b)] for j, b in enumerate(w.b)))
    return text, {}


def _run_example(cfg):
    case = CASES[cfg.command](cfg["alpha"])
    problem = case.problem(cfg["M"], cfg["N"], cfg["T"], cfg["forcing-convention"])
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", StabilityWarning)
        run = run_scalar(problem, record=_sample_every(cfg), lipschitz=cfg.get("lipschitz"))
    x = problem.grid.nodes
    rows = []
    for t, u in zip(run.times, run.values):
        ex = case.exact(x, t)
        rows.extend([_e(t), _e(xi), _e(ui), _e(ei), _e(abs(ui - ei))] for xi, ui, ei in zip(x, u, ex))
    linf, l2 = error_at_T(run.final, case, problem.grid, cfg["T"])
    meta = {"linf_error": linf, "l2_error": l2}
    if run.advisory is not None:
        meta["stability"] = {
            "lipschitz": run.advisory.lipschitz,
            "horizon": run.advisory.horizon,
            "within_horizon": run.advisory.within_horizon,
            "warnings": [str(w.message) for w in caught],
        }
    return _csv(["t", "x", "U", "exact", "abs_error"], rows), meta


def _report_csv(report):
    rows = []
    for r in report.rows:
        rows.append([_e(r.tau), _e(r.h), _e(r.error), _e(r.l2_error), _rate(r.rate), r.failure or ""])
    return _csv(["tau", "h", "error", "l2_error", "rate", "failure"], rows)


def _run_converge_time(cfg):
    case = CASES[cfg["case"]](cfg["alpha"])
    report = temporal_study(
        case, float(cfg["h"]), [float(t) for t in cfg["taus"]], cfg["T"], cfg["forcing-convention"], cfg["workers"]
    )
    return _report_csv(report), {"failed_rows": sum(r.failure is not None for r in report.rows)}


def _run_converge_space(cfg):
    case = CASES[cfg["case"]](cfg["alpha"])
    report = spatial_study(
        case,
        [float(h) for h in cfg["hs"]],
        cfg["tau-factor"],
        cfg["T"],
        cfg["forcing-convention"],
        cfg["workers"],
    )
    return _report_csv(report), {"failed_rows": sum(r.failure is not None for r in report.rows)}


def _run_predprey(cfg):
    params = PredatorPreyParams(*(cfg[k] for k in ("a", "sigma", "gamma", "delta", "beta", "d1", "d2")))
    alpha = cfg["alpha"]
    grid = SpaceGrid(cfg["M"])
    time = TimeGrid(cfg["T"], cfg["N"])
    report = check_constraints(params, alpha, time.tau)
    if cfg["strict-constraints"] and not report.satisfied:
        raise StrictViolation("step-size conditions fail: " + "; ".join(report.failures()))
    N_eq, P_eq = equilibrium_solve(params)
    bc = Boundary.coerce(cfg["bc"])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConstraintWarning)
        run = run_system(
            params,
            alpha,
            grid,
            time,
            cosine_perturbation(N_eq, cfg["amp-N"]),
            cosine_perturbation(P_eq, cfg["amp-P"]),
            bc=bc,
            record=_sample_every(cfg),
        )
    mon = run.monitor
    if cfg["strict-monitors"] and mon.count:
        v = mon.log[0]
        raise StrictViolation(f"bounds violated at step {v.step}, node {v.node}: {v.species}={v.value!r}")
    x = grid.nodes
    rows = []
    for t, Nv, Pv in zip(run.times, run.N, run.P):
        rows.extend([_e(t), _e(xi), _e(ni), _e(pi)] for xi, ni, pi in zip(x, Nv, Pv))
    meta = {
        "equilibrium": [N_eq, P_eq],
        "constraints": report.as_dict(),
        "monitor": {
            "L1": mon.L1,
            "violations": mon.count,
            "first_violations": [v._asdict() for v in mon.log[:20]],
        },
    }
    return _csv(["t", "x", "N", "P"], rows), meta


RUNNERS = {
    "weights": _run_weights,
    "example1": _run_example,
    "example2": _run_example,
    "converge-time": _run_converge_time,
    "converge-space": _run_converge_space,
    "predprey": _run_predprey,
}


def _jsonable(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, list):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


def run_and_emit(cfg: RunConfig, stdout=None) -> int:
    """Execute ``cfg``; write the CSV and, with ``output`` set, a ``.meta.json`` sidecar."""
    stdout = stdout or sys.stdout
    text, meta = RUNNERS[cfg.command](cfg)
    out = cfg.get("output")
    if out:
        with open(out, "w", newline="\n") as fh:
            fh.write(text)
        sidecar = {
            "command": cfg.command,
            "config": {k: _jsonable(v) for k, v in sorted(cfg.values.items())},
            "results": meta,
        }
        with open(out + ".meta.json", "w", newline="\n") as fh:
            json.dump(sidecar, fh, indent=2, sort_keys=True, default=_jsonable)
            fh.write("\n")
    else:
        stdout.write(text)
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_config(argv)
    except ConfigError as exc:
        print(f"fracstep: error: {exc}", file=sys.stderr)
        print(f"usage: fracstep {{{','.join(COMMANDS)}}} [--key value]... [--config path]", file=sys.stderr)
        return EXIT_CONFIG
    if cfg.print_config:
        sys.stdout.write(cfg.to_text())
        return EXIT_OK
    try:
        return run_and_emit(cfg)
    except StrictViolation as exc:
        print(f"fracstep: strict mode: {exc}", file=sys.stderr)
        return EXIT_STRICT
    except (FracstepError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"fracstep: numerical fault: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"fracstep: I/O error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
