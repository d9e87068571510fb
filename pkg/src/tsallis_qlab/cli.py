"""Batch experiment driver.

Usage::

    tsallis-qlab <command> [--config FILE] [--key value ...]

Configuration files hold one ``key = value`` pair per line (``#`` starts a
comment). Flags override file values. CSV floats are written with 17
significant digits so reruns with the same configuration are byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .acceptance import CRITERIA, run_criterion
from .estimators import (
    METHODS,
    SWEEP_FIELDS,
    TRIAL_FIELDS,
    _check_order_and_eps,
    prepare_qsvt,
    prepare_shift,
    run_trials,
    sweep_query_scaling,
)
from .hardness import (
    CONST_Q,
    LARGE_Q,
    SANDWICH_FIELDS,
    degree_sandwich_experiment,
    entropy_gap,
    gap_lower_witness,
    hellinger_upper_witness,
    make_hard_instance_constq,
    make_hard_instance_largeq,
    query_lower_value,
)
from .linalg import (
    DensityMatrix,
    QubitBudgetError,
    ValidationError,
    check_qubit_budget,
    purify,
    tsallis_exact,
)
from .polyapprox import CERTIFICATE_FIELDS, truncate_sv14

EXIT_CONFIG = 2
EXIT_BUDGET = 3

MODES = ("analytic-sampler", "full-circuit", "exact-gamma")

COMMAND_KEYS = {
    "poly": ("q", "eps", "grid_size", "out"),
    "estimate": ("q", "eps", "rho", "trials", "seed", "method", "mode", "t", "out"),
    "sweep": ("q", "eps", "eps_scale", "rho", "trials", "seed", "method", "timing",
              "plot", "out"),
    "hardness": ("family", "q", "delta", "delta_scale", "out"),
    "degree": ("q", "eps", "plot", "out"),
    "acceptance": ("criterion", "out"),
}

DEFAULTS = {
    "q": "2", "eps": "0.1", "grid_size": "10000", "rho": "maxmixed:1", "trials": "200",
    "seed": "0", "method": "qsvt", "mode": "analytic-sampler", "t": "0.5",
    "eps_scale": "", "timing": "false", "plot": "false", "out": "-",
    "family": LARGE_Q, "delta": "", "delta_scale": "0.5", "criterion": "1",
}

COMMAND_DEFAULTS = {"sweep": {"method": "qsvt,shift"}}

HELP = {
    "q": "Tsallis order(s): 3, 2,3,5 or a range 2:200",
    "eps": "precision(s), comma separated; fractions such as 1/30 allowed",
    "grid_size": "certificate grid size",
    "rho": "state: pure[:n], maxmixed:n, diag:a,b,... or random:n:seed",
    "trials": "number of seeded trials",
    "seed": "master seed",
    "method": f"estimator ({', '.join(METHODS)}); sweep accepts a comma list",
    "mode": f"amplitude estimation mode ({', '.join(MODES)})",
    "t": "polynomial share of the budget for nonuniform-minimax",
    "eps_scale": "sweep: use eps = eps_scale / q per q instead of eps",
    "timing": "sweep: include the wall_time column (breaks byte-determinism)",
    "plot": "also write an SVG next to the CSV",
    "out": "output CSV path, '-' for stdout",
    "family": f"hard-instance family ({LARGE_Q} or {CONST_Q})",
    "delta": "hardness: perturbation(s); overrides delta_scale",
    "delta_scale": "hardness: delta = delta_scale / q when delta is empty",
    "criterion": "acceptance criterion number(s), comma separated, or 'all'",
}


class ConfigError(ValidationError):
    """A configuration value or key is invalid; the message names the key."""


@dataclass
class ExperimentConfig:
    command: str
    values: dict = field(default_factory=dict)

    def raw(self, key: str) -> str:
        return self.values[key]


def default_for(command: str, key: str) -> str:
    return COMMAND_DEFAULTS.get(command, {}).get(key, DEFAULTS[key])


def parse_config_file(path: str | Path, command: str) -> dict:
    """Read ``key = value`` lines; unknown keys are rejected with their line number."""
    allowed = COMMAND_KEYS[command]
    out = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in allowed:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r} for command {command!r}")
        out[key] = value
    return out


def parse_config(command: str, file_values: dict, flag_values: dict,
                 warn=lambda msg: print(msg, file=sys.stderr)) -> ExperimentConfig:
    """Merge defaults, file and flags (flags win) and validate every key."""
    values = {k: default_for(command, k) for k in COMMAND_KEYS[command]}
    values.update(file_values)
    for key, value in flag_values.items():
        if value is None:
            continue
        if key in file_values and file_values[key] != value:
            warn(f"warning: --{key.replace('_', '-')} {value} overrides config value "
                 f"{file_values[key]!r}")
        values[key] = value
    cfg = ExperimentConfig(command, values)
    validate(cfg)
    return cfg


def _number(key: str, text: str) -> float:
    try:
        return float(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"{key}: cannot parse {text!r} as a number") from None


def _integer(key: str, text: str) -> int:
    try:
        return int(text.strip())
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {text!r} as an integer") from None


def int_list(key: str, text: str) -> list[int]:
    out = []
    for part in text.split(","):
        if ":" in part:
            lo, hi = (_integer(key, s) for s in part.split(":", 1))
            if hi < lo:
                raise ConfigError(f"{key}: empty range {part!r}")
            out.extend(range(lo, hi + 1))
        else:
            out.append(_integer(key, part))
    return out


def float_list(key: str, text: str) -> list[float]:
    return [_number(key, part) for part in text.split(",")]


def boolean(key: str, text: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "1", "yes"):
        return True
    if low in ("false", "0", "no", ""):
        return False
    raise ConfigError(f"{key}: expected true/false, got {text!r}")


def parse_rho(text: str) -> DensityMatrix:
    """Density-matrix literal: ``pure[:n]``, ``maxmixed:n``, ``diag:a,b,...``, ``random:n:seed``."""
    kind, _, rest = text.strip().partition(":")

    def qubits(s: str) -> int:
        n = _integer("rho", s)
        if n < 0:
            raise ConfigError(f"rho: qubit count must be >= 0, got {n}")
        check_qubit_budget(2 * n, f"purifying the {n}-qubit state {text!r}")
        return n

    try:
        if kind == "pure":
            return DensityMatrix.pure(qubits(rest) if rest else 1)
        if kind == "maxmixed":
            return DensityMatrix.maximally_mixed(qubits(rest or "1"))
        if kind == "diag":
            probs = float_list("rho", rest)
            qubits(str(max(len(probs) - 1, 1).bit_length()))
            return DensityMatrix.diagonal(probs)
        if kind == "random":
            n, _, seed = rest.partition(":")
            return DensityMatrix.random(qubits(n), _integer("rho", seed or "0"))
    except (ConfigError, QubitBudgetError):
        raise
    except ValidationError as err:
        raise ConfigError(f"rho: {err}") from None
    raise ConfigError(f"rho: unknown literal {text!r}")


def validate(cfg: ExperimentConfig) -> None:
    """Check every referenced range before any computation starts."""
    v, cmd = cfg.values, cfg.command
    if "trials" in v and _integer("trials", v["trials"]) < 1:
        raise ConfigError("trials: must be >= 1")
    if "seed" in v and _integer("seed", v["seed"]) < 0:
        raise ConfigError("seed: must be >= 0")
    for key in ("plot", "timing"):
        if key in v:
            boolean(key, v[key])
    if "rho" in v:
        parse_rho(v["rho"])
    if cmd == "acceptance":
        criteria(cfg)
        return
    qs = int_list("q", v["q"])
    if cmd == "poly":
        if min(qs) < 1:
            raise ConfigError("q: monomial degree must be >= 1")
        if _integer("grid_size", v["grid_size"]) < 1001:
            raise ConfigError("grid_size: must be >= 1001")
        if any(not 0 < e < 1 for e in float_list("eps", v["eps"])):
            raise ConfigError("eps: must lie in (0, 1)")
    elif cmd in ("estimate", "sweep"):
        methods = [m.strip() for m in v["method"].split(",")]
        if cmd == "estimate" and len(methods) != 1:
            raise ConfigError("method: estimate takes a single method")
        for m in methods:
            if m not in METHODS:
                raise ConfigError(f"method: unknown method {m!r}; choose from {METHODS}")
        if cmd == "estimate":
            if v["mode"] not in MODES:
                raise ConfigError(f"mode: unknown mode {v['mode']!r}; choose from {MODES}")
            if not 0 < _number("t", v["t"]) < 1:
                raise ConfigError("t: must lie in (0, 1)")
        for q in qs:
            for eps in eps_for(cfg, q):
                try:
                    _check_order_and_eps(q, eps)
                except ValidationError as err:
                    key = "eps_scale" if cmd == "sweep" and v.get("eps_scale") else "eps"
                    raise ConfigError(f"{key}: {err}" if q >= 2 else f"q: {err}") from None
    elif cmd == "hardness":
        if v["family"] not in (LARGE_Q, CONST_Q):
            raise ConfigError(f"family: expected {LARGE_Q} or {CONST_Q}, got {v['family']!r}")
        low = 3 if v["family"] == LARGE_Q else 2
        if min(qs) < low:
            raise ConfigError(f"q: family {v['family']} needs q >= {low}")
        for q in qs:
            for d in deltas_for(cfg, q):
                top = 1 / q if v["family"] == LARGE_Q else 1 / 3
                if not 0 < d <= top:
                    raise ConfigError(f"delta: {d} outside (0, {top:.6g}] for q={q}")
    elif cmd == "degree":
        eps = float_list("eps", v["eps"])
        if len(eps) != 1:
            raise ConfigError("eps: degree takes a single eps")
        if not 0 < eps[0] < 1 / (2 * math.e):
            raise ConfigError(f"eps: must lie in (0, 1/(2e)) = (0, {1 / (2 * math.e):.6f})")
        if min(qs) < 1:
            raise ConfigError("q: must be >= 1")


def eps_for(cfg: ExperimentConfig, q: int) -> list[float]:
    scale = cfg.values.get("eps_scale", "")
    if scale:
        return [_number("eps_scale", scale) / q]
    return float_list("eps", cfg.values["eps"])


def deltas_for(cfg: ExperimentConfig, q: int) -> list[float]:
    if cfg.values["delta"]:
        return float_list("delta", cfg.values["delta"])
    return [_number("delta_scale", cfg.values["delta_scale"]) / q]


def criteria(cfg: ExperimentConfig) -> list[int]:
    text = cfg.values["criterion"].strip()
    nums = sorted(CRITERIA) if text == "all" else int_list("criterion", text)
    for n in nums:
        if n not in CRITERIA:
            raise ConfigError(f"criterion: no criterion {n}; choose from {sorted(CRITERIA)}")
    return nums


def format_value(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    if x is None:
        return ""
    return str(x)


def csv_text(rows: list[dict], fields) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(fields)
    for row in rows:
        writer.writerow([format_value(row.get(f)) for f in fields])
    return buf.getvalue()


def emit(rows: list[dict], fields, out: str) -> None:
    text = csv_text(rows, fields)
    if out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _plot_path(out: str) -> Path:
    if out == "-":
        raise ConfigError("plot: needs out to name a file")
    return Path(out).with_suffix(".svg")


def _save_svg(fig, path: Path) -> None:
    import matplotlib

    matplotlib.rcParams["svg.hashsalt"] = "tsallis-qlab"
    fig.savefig(path, format="svg", metadata={"Date": None})


def plot_sweep(rows: list[dict], path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 4))
    for method in dict.fromkeys(r["method"] for r in rows):
        sub = [r for r in rows if r["method"] == method]
        ax.scatter([r["q"] for r in sub], [r["mean_queries"] for r in sub], label=method)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("q")
    ax.set_ylabel("mean ledger queries")
    ax.legend()
    _save_svg(fig, path)
    plt.close(fig)


def plot_sandwich(rows: list[dict], path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 4))
    qs = [r["q"] for r in rows]
    for key, marker in (("floor", "v"), ("minimax", "o"), ("truncation", "^")):
        ax.scatter(qs, [r[key] for r in rows], marker=marker, label=key)
    ax.set_xlabel("q")
    ax.set_ylabel("degree")
    ax.legend()
    _save_svg(fig, path)
    plt.close(fig)


def run_poly(cfg: ExperimentConfig) -> int:
    grid = _integer("grid_size", cfg.raw("grid_size"))
    rows = []
    for q in int_list("q", cfg.raw("q")):
        for eps in float_list("eps", cfg.raw("eps")):
            _, cert = truncate_sv14(q, eps, grid_size=grid)
            rows.append(cert.csv_row())
    emit(rows, CERTIFICATE_FIELDS, cfg.raw("out"))
    return 0 if all(r["sup_error"] <= r["eps"] for r in rows) else 1


def run_estimate(cfg: ExperimentConfig) -> int:
    rho = parse_rho(cfg.raw("rho"))
    oracle = purify(rho)
    method, mode = cfg.raw("method"), cfg.raw("mode")
    trials, seed = _integer("trials", cfg.raw("trials")), _integer("seed", cfg.raw("seed"))
    t = _number("t", cfg.raw("t"))
    rows = []
    for q in int_list("q", cfg.raw("q")):
        exact = tsallis_exact(rho, q)
        for eps in float_list("eps", cfg.raw("eps")):
            if method == "shift":
                pipe = prepare_shift(oracle, q, eps,
                                     "full-circuit" if mode == "full-circuit" else "analytic-sampler")
            else:
                pipe = prepare_qsvt(oracle, q, eps, method=method, t=t)
            if mode == "exact-gamma":
                est = pipe.exact_gamma_estimate()
                rows.append({"method": method, "q": q, "eps": eps, "trial": 0,
                             "estimate": est, "exact": exact, "abs_err": abs(est - exact),
                             "queries": 0, "success": int(abs(est - exact) <= eps),
                             "seed": seed})
            else:
                rows.extend(run_trials(pipe, exact, trials, seed, mode))
    emit(rows, TRIAL_FIELDS, cfg.raw("out"))
    rate = float(np.mean([r["success"] for r in rows]))
    print(f"success rate: {rate:.4f} over {len(rows)} rows", file=sys.stderr)
    return 0


def run_sweep(cfg: ExperimentConfig) -> int:
    oracle = purify(parse_rho(cfg.raw("rho")))
    methods = tuple(m.strip() for m in cfg.raw("method").split(","))
    trials, seed = _integer("trials", cfg.raw("trials")), _integer("seed", cfg.raw("seed"))
    rows = []
    for q in int_list("q", cfg.raw("q")):
        rows.extend(sweep_query_scaling(oracle, [q], eps_for(cfg, q), trials, seed, methods))
    rows.sort(key=lambda r: (methods.index(r["method"]), r["q"], r["eps"]))
    fields = SWEEP_FIELDS if boolean("timing", cfg.raw("timing")) else tuple(
        f for f in SWEEP_FIELDS if f != "wall_time")
    emit(rows, fields, cfg.raw("out"))
    if boolean("plot", cfg.raw("plot")):
        plot_sweep(rows, _plot_path(cfg.raw("out")))
    return 0


HARDNESS_FIELDS = ("family", "q", "delta", "gap", "gap_witness", "hellinger",
                   "hellinger_bound", "query_lower")


def run_hardness(cfg: ExperimentConfig) -> int:
    family = cfg.raw("family")
    rows = []
    for q in int_list("q", cfg.raw("q")):
        for d in deltas_for(cfg, q):
            if family == LARGE_Q:
                inst = make_hard_instance_largeq(q, d)
                witness = gap_lower_witness(inst)
                dh, bound = hellinger_upper_witness(inst)
            else:
                inst = make_hard_instance_constq(q, d)
                witness, bound = math.nan, math.nan
                dh = 1 / query_lower_value(inst)
            rows.append({"family": family, "q": q, "delta": d, "gap": entropy_gap(inst),
                         "gap_witness": witness, "hellinger": dh, "hellinger_bound": bound,
                         "query_lower": query_lower_value(inst)})
    emit(rows, HARDNESS_FIELDS, cfg.raw("out"))
    return 0


def run_degree(cfg: ExperimentConfig) -> int:
    eps = float_list("eps", cfg.raw("eps"))[0]
    rows = degree_sandwich_experiment(int_list("q", cfg.raw("q")), eps)
    emit(rows, SANDWICH_FIELDS, cfg.raw("out"))
    if boolean("plot", cfg.raw("plot")):
        plot_sandwich(rows, _plot_path(cfg.raw("out")))
    ok = all(r["floor"] <= r["minimax"] <= r["truncation"] for r in rows)
    return 0 if ok else 1


ACCEPTANCE_FIELDS = ("criterion", "title", "passed", "summary")


def run_acceptance(cfg: ExperimentConfig) -> int:
    results = []
    for n in criteria(cfg):
        res = run_criterion(n)
        print(res.line(), file=sys.stderr)
        results.append(res)
    out = cfg.raw("out")
    if len(results) == 1 and results[0].rows:
        rows = results[0].rows
        emit(rows, tuple(rows[0]), out)
    else:
        emit([{"criterion": r.number, "title": r.title, "passed": r.passed,
               "summary": r.summary} for r in results], ACCEPTANCE_FIELDS, out)
    return 0 if all(r.passed for r in results) else 1


RUNNERS = {"poly": run_poly, "estimate": run_estimate, "sweep": run_sweep,
           "hardness": run_hardness, "degree": run_degree, "acceptance": run_acceptance}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tsallis-qlab", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for command, keys in COMMAND_KEYS.items():
        p = sub.add_parser(command)
        p.add_argument("--config", help="key = value configuration file")
        for key in keys:
            names = dict.fromkeys([f"--{key.replace('_', '-')}", f"--{key}"])
            p.add_argument(*names, dest=key, default=None,
                           help=f"{HELP[key]} (default: {default_for(command, key) or 'unset'})")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    flags = {k: getattr(args, k) for k in COMMAND_KEYS[args.command]}
    try:
        file_values = parse_config_file(args.config, args.command) if args.config else {}
        cfg = parse_config(args.command, file_values, flags)
        return RUNNERS[cfg.command](cfg)
    except QubitBudgetError as err:
        print(f"error: qubit budget exceeded: {err}", file=sys.stderr)
        return EXIT_BUDGET
    except (ValidationError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
