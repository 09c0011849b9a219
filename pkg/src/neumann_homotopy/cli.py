"""Command-line front end.

    neumann-homotopy solve --p 2 --q 3 --n 100 --alpha 1 --eps 1e-12 --format json

Every command writes one report, as CSV (``#`` comment lines carrying the
resolved config and a summary, then a fixed header row) or as JSON with
``"schema": 1``.  Reports go to ``--output``, else to
``$NEUMANN_HOMOTOPY_OUTDIR/<command>.<format>`` when that variable is set,
else to stdout.  Floats are written with 17 significant digits and wall
times are left out unless ``--include-timing`` is given, so identical
configs give byte-identical reports.

Exit codes: 0 success, 2 configuration error, 3 solver failure,
4 validation failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np

from . import __version__
from .dynamics import DynamicsConfig, integrate_to_steady
from .errors import DomainError, NeumannHomotopyError
from .homotopy import ContinuationConfig, continuation_solve, delta_beta, eta_beta, path_trace, theoretical_schedule
from .jacobian import condition_sweep
from .nonlinearity import PAIR_REGISTRY, NonlinearityPair, PowerLawPair, pair_from_config, validate_pair
from .shooting import Mesh, oracle_solution, solution_bounds, solve_u1_oracle

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_VALIDATION = 0, 2, 3, 4
OUTDIR_ENV = "NEUMANN_HOMOTOPY_OUTDIR"
COMMANDS = ("solve", "oracle", "path", "condition", "dynamics", "convergence-table", "constants")
VALIDATION_GRID = np.geomspace(1e-3, 1e2, 51)


class ConfigError(ValueError):
    pass


class ValidationFailure(RuntimeError):
    pass


@dataclass
class Report:
    command: str
    config: dict
    summary: dict
    columns: list[str]
    rows: list[list[Any]] = field(default_factory=list)


# -- serialisation ---------------------------------------------------------------


def _fmt_float(x: float) -> str:
    return format(x, ".17g")


def _json_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return _fmt_float(v) if math.isfinite(v) else "null"
    if v is None:
        return "null"
    if isinstance(v, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_json_value(x)}" for k, x in v.items()) + "}"
    if isinstance(v, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_json_value(x) for x in v) + "]"
    return json.dumps(str(v))


def _csv_cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return _fmt_float(float(v))
    if v is None:
        return ""
    text = str(v)
    if any(c in text for c in ',"\n'):
        text = '"' + text.replace('"', '""') + '"'
    return text


def render(report: Report, fmt: str) -> str:
    if fmt == "json":
        body = {
            "schema": 1,
            "command": report.command,
            "config": report.config,
            "summary": report.summary,
            "columns": report.columns,
            "rows": report.rows,
        }
        return _json_value(body) + "\n"
    lines = [f"# command: {report.command}"]
    lines += [f"# config.{k}: {_csv_cell(v) if not isinstance(v, (list, dict)) else _json_value(v)}"
              for k, v in report.config.items()]
    lines += [f"# summary.{k}: {_csv_cell(v) if not isinstance(v, (list, dict)) else _json_value(v)}"
              for k, v in report.summary.items()]
    lines.append(",".join(report.columns))
    lines += [",".join(_csv_cell(v) for v in row) for row in report.rows]
    return "\n".join(lines) + "\n"


def emit_report(report: Report, fmt: str = "csv", path: Optional[str] = None) -> Optional[Path]:
    """Write ``report`` to ``path`` (``None`` or ``'-'`` means stdout)."""
    if fmt not in ("csv", "json"):
        raise ConfigError(f"unknown format {fmt!r}; use csv or json")
    text = render(report, fmt)
    if path is None or str(path) == "-":
        sys.stdout.write(text)
        return None
    target = Path(path)
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        with open(target, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write report to {target}: {exc.strerror or exc}") from exc
    return target


# -- configuration ---------------------------------------------------------------


def _parse_n_list(text) -> list[int]:
    if isinstance(text, (list, tuple)):
        items = list(text)
    else:
        items = [s for s in str(text).split(",") if s.strip()]
    try:
        out = [int(str(s).strip()) for s in items]
    except ValueError:
        raise ConfigError(f"n must be an integer or a comma-separated list, got {text!r}") from None
    if not out or any(v < 2 for v in out):
        raise ConfigError(f"every n must be at least 2, got {text!r}")
    return out


def _parse_interval(text) -> tuple[float, float]:
    if isinstance(text, (list, tuple)) and len(text) == 2:
        a, b = text
    else:
        parts = str(text).split(":")
        if len(parts) != 2:
            raise ConfigError(f"interval must look like lo:hi, got {text!r}")
        a, b = parts
    try:
        lo, hi = float(a), float(b)
    except ValueError:
        raise ConfigError(f"interval bounds must be numbers, got {text!r}") from None
    if not (lo > 0 and hi > 0):
        raise ConfigError(f"interval bounds must be positive, got {text!r}")
    return min(lo, hi), max(lo, hi)


def read_config_file(path: str) -> dict:
    """Flat ``key = value`` lines (``#`` comments), or a JSON object."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror or exc}") from None
    stripped = text.strip()
    if stripped.startswith("{"):
        try:
            data = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: JSON config must be an object")
        return {k.replace("-", "_"): v for k, v in data.items()}
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


DEFAULTS = {
    "p": None,
    "q": None,
    "pair": None,
    "n": "100",
    "alpha": 1.0,
    "alpha_interval": "0.5:2",
    "eps": 1e-12,
    "tol": None,
    "schedule": "adaptive",
    "beta_lo": None,
    "samples": None,
    "format": "csv",
    "output": None,
    "seed": 0,
    "initial": None,
    "probes": 0,
    "dt": None,
    "t_max": 1e6,
    "include_timing": False,
}

NUMERIC = {"p", "q", "alpha", "eps", "tol", "beta_lo", "dt", "t_max", "initial"}
INTEGER = {"samples", "seed", "probes"}


def resolve_config(command: str, file_cfg: dict, flags: dict) -> dict:
    """Merge defaults < config file < flags and coerce types."""
    unknown = set(file_cfg) - set(DEFAULTS) - {"command"}
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    cfg = dict(DEFAULTS)
    cfg.update({k: v for k, v in file_cfg.items() if k != "command"})
    cfg.update({k: v for k, v in flags.items() if v is not None and k in DEFAULTS})
    for key in NUMERIC:
        if cfg[key] is not None:
            try:
                cfg[key] = float(cfg[key])
            except (TypeError, ValueError):
                raise ConfigError(f"{key} must be a number, got {cfg[key]!r}") from None
    for key in INTEGER:
        if cfg[key] is not None:
            try:
                cfg[key] = int(cfg[key])
            except (TypeError, ValueError):
                raise ConfigError(f"{key} must be an integer, got {cfg[key]!r}") from None
    if isinstance(cfg["include_timing"], str):
        cfg["include_timing"] = cfg["include_timing"].lower() in ("1", "true", "yes", "on")
    cfg["n"] = _parse_n_list(cfg["n"])
    cfg["alpha_interval"] = list(_parse_interval(cfg["alpha_interval"]))
    for key in ("alpha", "eps"):
        if not cfg[key] > 0:
            raise ConfigError(f"{key} must be positive, got {cfg[key]!r}")
    for key in ("tol", "beta_lo", "dt", "initial"):
        if cfg[key] is not None and not cfg[key] > 0:
            raise ConfigError(f"{key} must be positive, got {cfg[key]!r}")
    if cfg["schedule"] not in ("adaptive", "theoretical"):
        raise ConfigError(f"schedule must be adaptive or theoretical, got {cfg['schedule']!r}")
    if cfg["format"] not in ("csv", "json"):
        raise ConfigError(f"format must be csv or json, got {cfg['format']!r}")
    if cfg["samples"] is not None and cfg["samples"] < 2:
        raise ConfigError("samples must be at least 2")
    if cfg["probes"] < 0:
        raise ConfigError("probes must be nonnegative")
    if cfg["pair"] is None and (cfg["p"] is None or cfg["q"] is None):
        raise ConfigError("give the pair as --p and --q, or --pair NAME")
    if cfg["pair"] is not None and cfg["pair"] not in PAIR_REGISTRY and cfg["pair"] != "power-law":
        raise ConfigError(f"unknown pair {cfg['pair']!r}; known: {', '.join(sorted(PAIR_REGISTRY))}")
    cfg["command"] = command
    return cfg


def _build_pair(cfg) -> NonlinearityPair:
    try:
        if cfg["pair"] in (None, "power-law"):
            return PowerLawPair(cfg["p"], cfg["q"])
        return pair_from_config({"kind": cfg["pair"]})
    except (DomainError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def _validate(pair: NonlinearityPair):
    rep = validate_pair(pair, VALIDATION_GRID)
    if not rep.ok:
        raise ValidationFailure(f"pair {pair.name} violates: {', '.join(rep.failed())}")


def _single_n(cfg) -> Mesh:
    if len(cfg["n"]) != 1:
        raise ConfigError(f"{cfg['command']} takes a single n, got {cfg['n']}")
    return Mesh(cfg["n"][0])


def _public_config(cfg, pair) -> dict:
    out = {k: v for k, v in cfg.items() if k not in ("output", "include_timing", "command")}
    out["pair"] = pair.to_config()
    out.pop("p", None)
    out.pop("q", None)
    return out


# -- commands --------------------------------------------------------------------


def _cmd_solve(cfg, pair):
    mesh = _single_n(cfg)
    cc = ContinuationConfig.from_alpha(
        cfg["alpha"], epsilon=cfg["eps"], mode=cfg["schedule"], beta_star_lo=cfg["beta_lo"],
        residual_tol=cfg["tol"],
    )
    rep = continuation_solve(pair, mesh, cc)
    summary = {
        "u1": rep.u1,
        "un": float(rep.u[-1]),
        "residual": rep.residual,
        "phase1_nodes": rep.phase1_nodes,
        "phase2_iterations": rep.phase2_iterations,
        "total_solves": rep.total_solves,
        "rejected_steps": rep.rejected_steps,
        "beta_star_lo": rep.beta_star_lo,
        "certified_start": rep.certified_start,
        "bounds_ok": rep.bounds_ok,
        "flux_residual": rep.flux_residual,
        "phase2_steps": rep.phase2_steps,
    }
    if rep.constants is not None:
        summary.update({"N": rep.constants.N, "k0": rep.constants.k0, "delta": rep.constants.delta})
    if cfg["include_timing"]:
        summary["elapsed_s"] = rep.elapsed
    rows = [[k + 1, float(x), float(v)] for k, (x, v) in enumerate(zip(mesh.x, rep.u))]
    report = Report("solve", {}, summary, ["k", "x", "u"], rows)
    failed = not rep.bounds_ok or rep.flux_residual > 1e-10
    return report, failed


def _cmd_oracle(cfg, pair):
    mesh = _single_n(cfg)
    tol = cfg["tol"] or 1e-13
    tr = oracle_solution(pair, mesh, cfg["alpha"], tol)
    b = solution_bounds(pair, cfg["alpha"])
    summary = {"u1": tr.u1, "a": tr.a, "a_prime": tr.a_prime, "un": float(tr.u[-1]),
               "u1_lower": b.u1_lower, "un_upper": b.un_upper, "growth": b.growth,
               "bounds_ok": b.contains(tr.u)}
    rows = [[k + 1, float(x), float(v), float(d)] for k, (x, v, d) in enumerate(zip(mesh.x, tr.u, tr.u_prime))]
    return Report("oracle", {}, summary, ["k", "x", "u", "u_prime"], rows), not b.contains(tr.u)


def _cmd_path(cfg, pair):
    mesh = _single_n(cfg)
    a_lo, a_hi = cfg["alpha_interval"]
    cc = ContinuationConfig(beta_star_hi=1.0 / a_lo)
    pts = path_trace(pair, mesh, cc, cfg["samples"] or 9, beta_lo=1.0 / a_hi)
    rows = [[p.beta, p.alpha, p.u1, p.phi_prime_beta, p.residual, p.ok, p.error] for p in pts]
    summary = {"samples": len(pts), "failed": sum(not p.ok for p in pts)}
    report = Report("path", {}, summary, ["beta", "alpha", "u1", "phi_prime_beta", "residual", "ok", "error"], rows)
    if summary["failed"]:
        raise _PartialFailure(report, f"{summary['failed']} path samples failed")
    return report, False


def _cmd_condition(cfg, pair):
    a_lo, a_hi = cfg["alpha_interval"]
    rows = []
    maxima = {}
    for n in sorted(cfg["n"]):
        samples = condition_sweep(pair, Mesh(n), a_lo, a_hi, cfg["samples"] or 33)
        for s in samples:
            rows.append([n, s.alpha, s.u1, s.phi_prime_inf_norm, s.phi_prime_beta])
        maxima[str(n)] = max(s.phi_prime_inf_norm for s in samples)
    vals = list(maxima.values())
    summary = {"max_phi_prime_inf": maxima,
               "relative_spread": (max(vals) - min(vals)) / max(vals) if vals else 0.0}
    return Report("condition", {}, summary, ["n", "alpha", "u1", "phi_prime_inf", "phi_prime_beta"], rows), False


def _cmd_dynamics(cfg, pair):
    mesh = _single_n(cfg)
    alpha = cfg["alpha"]
    ref = continuation_solve(pair, mesh, ContinuationConfig.from_alpha(alpha, epsilon=cfg["eps"])).u
    upper = solution_bounds(pair, alpha).un_upper
    if cfg["probes"]:
        rng = np.random.default_rng(cfg["seed"])
        # constants above the stationary state, below its a priori upper bound
        initials = list(rng.uniform(float(np.max(ref)), upper, cfg["probes"]))
    else:
        initials = [cfg["initial"] if cfg["initial"] is not None else 0.5 * (float(np.max(ref)) + upper)]
    rows = []
    worst = 0.0
    all_ok = True
    for c in initials:
        res = integrate_to_steady(pair, mesh, DynamicsConfig(alpha, float(c), dt=cfg["dt"], t_max=cfg["t_max"]))
        diff = float(np.max(np.abs(res.u - ref)))
        ok = res.converged and diff <= 1e-7
        all_ok &= ok
        worst = max(worst, diff)
        rows.append([float(c), res.converged, res.reason, res.steps, res.t, res.rhs_norm, diff])
    summary = {"probes": len(initials), "all_agree": all_ok, "max_diff": worst}
    cols = ["initial", "converged", "reason", "steps", "t", "rhs_norm", "diff_to_homotopy"]
    return Report("dynamics", {}, summary, cols, rows), not all_ok


def _cmd_convergence(cfg, pair):
    n0 = _single_n(cfg).n
    ns = [n0, 2 * n0 - 1, 4 * n0 - 3]
    u1 = [solve_u1_oracle(pair, Mesh(n), cfg["alpha"], cfg["tol"] or 1e-14) for n in ns]
    rows = []
    for i, (n, v) in enumerate(zip(ns, u1)):
        diff = u1[i - 1] - v if i else None
        ratio = (u1[0] - u1[1]) / (u1[1] - u1[2]) if i == 2 else None
        rows.append([n, 1.0 / (n - 1), v, diff, ratio])
    summary = {"richardson_ratio": rows[-1][-1]}
    return Report("convergence-table", {}, summary, ["n", "h", "u1", "diff", "richardson_ratio"], rows), False


def _cmd_constants(cfg, pair):
    if not isinstance(pair, PowerLawPair):
        raise ConfigError("constants needs a power-law pair (--p, --q)")
    mesh = _single_n(cfg)
    cc = ContinuationConfig.from_alpha(cfg["alpha"], epsilon=cfg["eps"], beta_star_lo=cfg["beta_lo"])
    consts = theoretical_schedule(pair, mesh, cc)
    summary = consts.to_dict()
    rows = []
    for beta in np.geomspace(consts.beta_star_lo, consts.beta_star_hi, cfg["samples"] or 64):
        beta = float(beta)
        rows.append([beta, consts.C(pair, beta), eta_beta(pair, beta),
                     delta_beta(pair, beta, consts.beta_star_hi, consts.rho_star)])
    return Report("constants", {}, summary, ["beta", "C", "eta_beta", "delta_beta"], rows), False


class _PartialFailure(Exception):
    def __init__(self, report, message):
        super().__init__(message)
        self.report = report


HANDLERS = {
    "solve": _cmd_solve,
    "oracle": _cmd_oracle,
    "path": _cmd_path,
    "condition": _cmd_condition,
    "dynamics": _cmd_dynamics,
    "convergence-table": _cmd_convergence,
    "constants": _cmd_constants,
}


def _output_path(cfg) -> Optional[str]:
    if cfg["output"]:
        return cfg["output"]
    outdir = os.environ.get(OUTDIR_ENV)
    if outdir:
        return str(Path(outdir) / f"{cfg['command']}.{cfg['format']}")
    return None


def run(cfg: dict) -> int:
    """Execute a resolved config; returns the exit code."""
    pair = _build_pair(cfg)
    try:
        _validate(pair)
    except ValidationFailure as exc:
        print(f"validation failure: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    code = EXIT_OK
    try:
        report, failed = HANDLERS[cfg["command"]](cfg, pair)
    except _PartialFailure as exc:
        report, failed = exc.report, False
        print(f"solver failure: {exc}", file=sys.stderr)
        code = EXIT_SOLVER
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DomainError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NeumannHomotopyError as exc:
        print(f"solver failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    report.config = _public_config(cfg, pair)
    emit_report(report, cfg["format"], _output_path(cfg))
    if failed:
        print("validation failure: result failed its checks (see summary)", file=sys.stderr)
        return EXIT_VALIDATION
    return code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="neumann-homotopy", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("pair and mesh")
    g.add_argument("--p", type=float, help="exponent of g1 = x^p")
    g.add_argument("--q", type=float, help="exponent of g2 = x^q")
    g.add_argument("--pair", help=f"named pair ({', '.join(sorted(PAIR_REGISTRY))})")
    g.add_argument("--n", help="number of nodes, or a comma-separated list")
    g = common.add_argument_group("problem")
    g.add_argument("--alpha", type=float, help="boundary flux coefficient alpha")
    g.add_argument("--alpha-interval", dest="alpha_interval", help="alpha range lo:hi")
    g.add_argument("--eps", type=float, help="target accuracy (inf-norm)")
    g.add_argument("--tol", type=float, help="residual / oracle tolerance")
    g.add_argument("--schedule", choices=("adaptive", "theoretical"))
    g.add_argument("--beta-lo", dest="beta_lo", type=float, help="starting beta_* (default: automatic)")
    g.add_argument("--samples", type=int, help="number of samples for sweeps")
    g = common.add_argument_group("dynamics")
    g.add_argument("--initial", type=float, help="constant initial value")
    g.add_argument("--probes", type=int, help="number of random admissible initial constants")
    g.add_argument("--dt", type=float, help="implicit Euler step")
    g.add_argument("--t-max", dest="t_max", type=float, help="time horizon")
    g = common.add_argument_group("output")
    g.add_argument("--config", help="key=value or JSON config file; flags override it")
    g.add_argument("--format", choices=("csv", "json"))
    g.add_argument("--output", "-o", help=f"report path ('-' for stdout; default ${OUTDIR_ENV} or stdout)")
    g.add_argument("--seed", type=int, help="seed for random probes")
    g.add_argument("--include-timing", dest="include_timing", action="store_true", default=None,
                   help="add wall time to the summary (breaks byte-identical output)")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    helps = {
        "solve": "homotopy continuation solve with bound checks",
        "oracle": "shooting oracle solve and trajectory",
        "path": "homotopy path samples over an alpha interval",
        "condition": "condition number sweep for each n",
        "dynamics": "implicit Euler steady state vs homotopy",
        "convergence-table": "u1 on n, 2n-1, 4n-3 with Richardson ratio",
        "constants": "theoretical schedule constants",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    try:
        file_cfg = read_config_file(args.config) if args.config else {}
        cfg = resolve_config(args.command, file_cfg, flags)
        return run(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
