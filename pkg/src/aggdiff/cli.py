"""Command-line entry point: ``python -m aggdiff <subcommand>``.

Exit codes: 0 success, 1 invalid input, 2 numerical failure.
"""

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, fields

import numpy as np

from .energy import free_energy, hls_ratio
from .evolution import EvolutionConfig, EvolutionError, evolve, potential_1d
from .model import (
    LineDensity,
    LineGrid,
    RadialGrid,
    density_csv_text,
    make_params,
    read_density_csv,
)
from .riesz import riesz_potential
from .stationary import SolverConfig, SolverError, solve_stationary, uniqueness_harness

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 1, 2


class ConfigError(ValueError):
    pass


# ------------------------------------------------------------------ output

def fmt(x):
    return format(float(x), ".17g")


def _json_value(obj):
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt(obj) if math.isfinite(obj) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        items = (f"{json.dumps(str(k))}: {_json_value(v)}" for k, v in obj.items())
        return "{" + ", ".join(items) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_json_value(v) for v in obj) + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj):
    """JSON text with every float at 17 significant digits."""
    return _json_value(obj) + "\n"


def atomic_write(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def table_csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


# ------------------------------------------------------------------ config

@dataclass(frozen=True)
class IOConfig:
    output_dir: str = "."
    precision: int = 17
    dump_profiles: bool = False


@dataclass(frozen=True)
class RunConfig:
    params: object
    grid: object
    solver: SolverConfig
    evolution: dict
    io: IOConfig


def _strict(cls, data, where, skip=()):
    if not isinstance(data, dict):
        raise ConfigError(f"'{where}' must be an object")
    allowed = {f.name for f in fields(cls)} - set(skip)
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown field(s) in '{where}': {sorted(unknown)}")
    return data


def parse_config(doc):
    """Validate a config document; unknown fields are errors."""
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(doc) - {"params", "grid", "solver", "evolution", "io"}
    if unknown:
        raise ConfigError(f"unknown top-level field(s): {sorted(unknown)}")
    if "params" not in doc or "grid" not in doc:
        raise ConfigError("config needs 'params' and 'grid'")
    p = doc["params"]
    if not isinstance(p, dict) or set(p) != {"N", "k", "m", "chi"}:
        raise ConfigError("'params' must have exactly the fields N, k, m, chi")
    params = make_params(p["N"], p["k"], p["m"], p["chi"])

    g = doc["grid"]
    if not isinstance(g, dict) or "n" not in g or len(set(g) & {"L", "r_max"}) != 1 or set(g) - {"n", "L", "r_max"}:
        raise ConfigError("'grid' must have 'n' and exactly one of 'L' (line) or 'r_max' (radial)")
    if "L" in g:
        if params.N != 1:
            raise ConfigError("line grids ('L') need N = 1")
        grid = LineGrid(float(g["L"]), int(g["n"]))
    else:
        grid = RadialGrid(float(g["r_max"]), int(g["n"]))

    s = dict(_strict(SolverConfig, doc.get("solver", {}), "solver"))
    if "D_bracket" in s and s["D_bracket"] is not None:
        s["D_bracket"] = tuple(float(x) for x in s["D_bracket"])
    solver = SolverConfig(**s)

    ev = dict(_strict(EvolutionConfig, doc.get("evolution", {}), "evolution", skip=("L", "n")))
    if isinstance(grid, LineGrid):
        EvolutionConfig(L=grid.L, n=grid.n, **ev)
    io_cfg = IOConfig(**_strict(IOConfig, doc.get("io", {}), "io"))
    if io_cfg.precision != 17:
        raise ConfigError("only 17-digit output is supported")
    return RunConfig(params, grid, solver, ev, io_cfg)


def load_config(path):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return parse_config(doc)


def _load_density(path, cfg):
    rho = read_density_csv(path, N=cfg.params.N)
    if rho.N != cfg.params.N:
        raise ConfigError(f"density dimension {rho.N} does not match N = {cfg.params.N}")
    return rho


def _out(cfg, name):
    return os.path.join(cfg.io.output_dir, name)


# ------------------------------------------------------------- subcommands

def cmd_stationary(args):
    cfg = load_config(args.config)
    initial = _load_density(args.initial, cfg).normalize() if args.initial else None
    rep = solve_stationary(cfg.params, cfg.solver, initial=initial, grid=cfg.grid)
    atomic_write(_out(cfg, "profile.csv"), density_csv_text(rep.profile))
    atomic_write(_out(cfg, "report.json"), dumps(rep.summary()))
    return EXIT_OK


def cmd_evolve(args):
    cfg = load_config(args.config)
    initial = _load_density(args.initial, cfg)
    if not isinstance(initial, LineDensity):
        raise ConfigError("evolve needs a line density (header x,rho)")
    initial = initial.normalize()
    ev = EvolutionConfig(L=initial.grid.L, n=initial.grid.n, **cfg.evolution)

    def dump(t, rho):
        if cfg.io.dump_profiles:
            atomic_write(_out(cfg, f"profile_{fmt(t)}.csv"), density_csv_text(rho))

    trace = evolve(initial, cfg.params, ev, callback=dump)
    atomic_write(_out(cfg, "trace.csv"), table_csv(["t", "mass", "Hm", "Wk", "F"], trace.rows()))
    atomic_write(_out(cfg, "final.csv"), density_csv_text(trace.final))
    return EXIT_OK


def cmd_potential(args):
    cfg = load_config(args.config)
    rho = _load_density(args.density, cfg)
    if isinstance(rho, LineDensity):
        S = potential_1d(rho, cfg.params)
        rows = zip(rho.grid.centers, S * cfg.params.k, S)
        text = table_csv(["x", "raw_riesz", "S_k"], rows)
    else:
        prof = riesz_potential(rho, cfg.params)
        text = table_csv(["r", "raw_riesz", "S_k"], zip(prof.radii, prof.raw_riesz, prof.values))
    atomic_write(_out(cfg, "potential.csv"), text)
    return EXIT_OK


def cmd_energy(args):
    cfg = load_config(args.config)
    rho = _load_density(args.density, cfg)
    e = free_energy(rho, cfg.params)
    out = e.as_dict()
    out["hls_ratio"] = hls_ratio(rho, cfg.params)
    sys.stdout.write(dumps(out))
    return EXIT_OK


def cmd_uniqueness(args):
    cfg = load_config(args.config)
    rep = uniqueness_harness(cfg.params, cfg.grid, cfg.solver)
    out = {
        "distances": rep.distances,
        "max_distance": rep.max_distance,
        "asserted": cfg.params.N == 1,
        "el_residuals": {k: r.el_residual for k, r in rep.reports.items()},
    }
    text = dumps(out)
    atomic_write(_out(cfg, "uniqueness.json"), text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_verify(args):
    from .verify import SUITES, run_suite

    if args.suite not in SUITES and args.suite != "all":
        raise ConfigError(f"unknown suite {args.suite!r}; choose from {sorted(SUITES)} or 'all'")
    names = sorted(SUITES) if args.suite == "all" else [args.suite]
    ok = True
    for name in names:
        ok &= run_suite(name, seed=args.seed, stream=sys.stdout)
    return EXIT_OK if ok else EXIT_NUMERIC


# ------------------------------------------------------------------ parser

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def build_parser():
    ap = _Parser(prog="aggdiff", description="Aggregation-diffusion stationary states and dynamics.")
    sub = ap.add_subparsers(dest="command", metavar="SUBCOMMAND", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("stationary", help="solve for the stationary profile")
    p.add_argument("--config", required=True)
    p.add_argument("--initial")
    p.set_defaults(func=cmd_stationary)

    p = sub.add_parser("evolve", help="run the 1D gradient-flow scheme")
    p.add_argument("--config", required=True)
    p.add_argument("--initial", required=True)
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("potential", help="Riesz potential of a density")
    p.add_argument("--config", required=True)
    p.add_argument("--density", required=True)
    p.set_defaults(func=cmd_potential)

    p = sub.add_parser("energy", help="free-energy breakdown as JSON")
    p.add_argument("--config", required=True)
    p.add_argument("--density", required=True)
    p.set_defaults(func=cmd_energy)

    p = sub.add_parser("uniqueness", help="solve from three initial data and compare")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_uniqueness)

    p = sub.add_parser("verify", help="run a property-check suite")
    p.add_argument("--suite", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except (SolverError, EvolutionError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, TypeError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


def main_exit():
    sys.exit(main())
