"""Command-line front end: solve, convergence and export commands.

Configuration comes from an optional JSON file plus flag overrides; unknown
keys are rejected. Exit codes: 0 success, 2 configuration error, 3 solver
error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field, fields as dc_fields
from pathlib import Path

from .analysis import convergence_study, temporal_study
from .export import write_diagnostics_csv, write_fields_csv, write_vtk
from .manufactured import CASE_NAMES, make_case
from .params import ParameterError, PhysicalParams
from .solver import (LinearSolveFailed, PicardDiverged, Problem, SolverConfig,
                     time_march)

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_IO = 0, 2, 3, 4

_PARAM_KEYS = ("E", "nu", "alpha", "c0", "K", "mu_f")


class ConfigError(ValueError):
    """Invalid run configuration; the message names the offending key."""


@dataclass
class RunConfig:
    case: str = "test1"
    law: str | None = None              # defaults to the case's own law
    theta: int = 1
    n: int = 8                          # mesh level for single solves
    levels: list = field(default_factory=lambda: [4, 8, 16, 32])
    dt: object = "h2"                   # number or the string 'h2'
    dt_list: list | None = None         # temporal-study steps
    t_end: float = 1.0
    study: str = "spatial"              # 'spatial' | 'temporal'
    boundary: str = "dirichlet-xi-eta"
    elements: str = "p2-p1-p1"
    picard_tol: float = 1e-9
    picard_max: int = 50
    c_stab: float = 1.0
    enforce_dt_proviso: bool = True
    params: dict = field(default_factory=dict)
    out: str = "."
    export: list = field(default_factory=list)   # subset of ('vtk', 'csv')
    deterministic: bool = True

    def validate(self) -> None:
        if self.case not in CASE_NAMES:
            raise ConfigError(f"key 'case': unknown case {self.case!r}")
        if self.law is not None and self.law not in ("linear", "test1", "test2"):
            raise ConfigError(f"key 'law': unknown law {self.law!r}")
        if self.theta not in (0, 1):
            raise ConfigError(f"key 'theta': must be 0 or 1, got {self.theta!r}")
        if not (isinstance(self.n, int) and self.n >= 1):
            raise ConfigError(f"key 'n': need a positive integer, got {self.n!r}")
        if (not isinstance(self.levels, list) or not self.levels
                or not all(isinstance(v, int) and v >= 1 for v in self.levels)):
            raise ConfigError(f"key 'levels': need positive integers, got {self.levels!r}")
        if not (self.dt == "h2" or (isinstance(self.dt, (int, float)) and self.dt > 0)):
            raise ConfigError(f"key 'dt': need 'h2' or a positive number, got {self.dt!r}")
        if self.dt_list is not None and (
                not isinstance(self.dt_list, list)
                or not all(isinstance(v, (int, float)) and v > 0 for v in self.dt_list)):
            raise ConfigError(f"key 'dt_list': need positive numbers, got {self.dt_list!r}")
        if not (isinstance(self.t_end, (int, float)) and self.t_end > 0):
            raise ConfigError(f"key 't_end': need a positive number, got {self.t_end!r}")
        if self.study not in ("spatial", "temporal"):
            raise ConfigError(f"key 'study': need 'spatial' or 'temporal', got {self.study!r}")
        if self.boundary not in ("dirichlet-xi-eta", "neumann-flux"):
            raise ConfigError(f"key 'boundary': unknown strategy {self.boundary!r}")
        if self.elements != "p2-p1-p1":
            raise ConfigError(f"key 'elements': only 'p2-p1-p1' is implemented, "
                              f"got {self.elements!r}")
        if not (isinstance(self.picard_tol, float) and 0 < self.picard_tol < 1):
            raise ConfigError(f"key 'picard_tol': need a float in (0, 1), "
                              f"got {self.picard_tol!r}")
        if not (isinstance(self.picard_max, int) and self.picard_max >= 1):
            raise ConfigError(f"key 'picard_max': need a positive integer, "
                              f"got {self.picard_max!r}")
        if not (isinstance(self.c_stab, (int, float)) and self.c_stab > 0):
            raise ConfigError(f"key 'c_stab': need a positive number, got {self.c_stab!r}")
        bad = set(self.params) - set(_PARAM_KEYS)
        if bad:
            raise ConfigError(f"key 'params': unknown parameter keys {sorted(bad)}")
        bad_export = set(self.export) - {"vtk", "csv"}
        if bad_export:
            raise ConfigError(f"key 'export': unknown formats {sorted(bad_export)}")

    @classmethod
    def load(cls, path: str | None, overrides: dict) -> "RunConfig":
        data = {}
        if path is not None:
            try:
                with open(path) as fh:
                    data = json.load(fh)
            except OSError as exc:
                raise ConfigError(f"cannot read config file {path}: {exc}") from exc
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
            if not isinstance(data, dict):
                raise ConfigError("config file must hold a JSON object")
        known = {f.name for f in dc_fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        data.update({k: v for k, v in overrides.items() if v is not None})
        cfg = cls(**data)
        cfg.validate()
        return cfg

    def physical_params(self, case_name: str) -> PhysicalParams | None:
        if not self.params:
            return None
        base = make_case(case_name).params
        merged = {k: getattr(base, k) for k in _PARAM_KEYS}
        merged.update(self.params)
        try:
            return PhysicalParams(**merged)
        except ParameterError as exc:
            raise ConfigError(f"key 'params': {exc}") from exc


def _build_problem(cfg: RunConfig):
    case = make_case(cfg.case, cfg.physical_params(cfg.case))
    problem = Problem.from_case(case, cfg.n, strategy=cfg.boundary)
    if cfg.law is not None and cfg.law != case.law_name:
        from .constitutive import make_law
        print(f"warning: law {cfg.law!r} overrides the case law "
              f"{case.law_name!r}; manufactured forcing no longer matches",
              file=sys.stderr)
        problem.law = make_law(cfg.law, case.coeffs)
    return case, problem


def _resolve_dt(cfg: RunConfig) -> float:
    if cfg.dt == "h2":
        return 1.0 / (cfg.n * cfg.n)
    return float(cfg.dt)


def _solver_config(cfg: RunConfig, dt: float) -> SolverConfig:
    return SolverConfig(dt=dt, t_end=cfg.t_end, theta=cfg.theta,
                        picard_tol=cfg.picard_tol, picard_max=cfg.picard_max,
                        c_stab=cfg.c_stab,
                        enforce_dt_proviso=cfg.enforce_dt_proviso)


def _run_solve(cfg: RunConfig, out: Path, do_export: bool) -> int:
    case, problem = _build_problem(cfg)
    try:
        result = time_march(_solver_config(cfg, _resolve_dt(cfg)), problem)
    except (PicardDiverged, LinearSolveFailed, ValueError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    try:
        out.mkdir(parents=True, exist_ok=True)
        write_diagnostics_csv(out / "diagnostics.csv", result.diagnostics)
        formats = list(cfg.export)
        if do_export and not formats:
            formats = ["vtk", "csv"]
        if "vtk" in formats:
            write_vtk(out / "fields.vtk", problem.ctx.mesh, result.state)
        if "csv" in formats:
            write_fields_csv(out / "fields.csv", problem.ctx.mesh, result.state)
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"solve finished at t={result.state.t:g} "
          f"({len(result.diagnostics)} steps); outputs in {out}")
    return EXIT_OK


def _run_convergence(cfg: RunConfig, out: Path) -> int:
    case = make_case(cfg.case, cfg.physical_params(cfg.case))
    if cfg.study == "spatial":
        dt_rule = "h2" if cfg.dt == "h2" else "fixed"
        fixed = None if cfg.dt == "h2" else float(cfg.dt)
        report = convergence_study(case, cfg.levels, theta=cfg.theta,
                                   dt_rule=dt_rule, fixed_dt=fixed,
                                   t_end=cfg.t_end, strategy=cfg.boundary,
                                   picard_tol=cfg.picard_tol, on_error="mark")
    else:
        if not cfg.dt_list:
            print("config error: key 'dt_list' is required for temporal studies",
                  file=sys.stderr)
            return EXIT_CONFIG
        report = temporal_study(case, cfg.n, cfg.dt_list, theta=cfg.theta,
                                t_end=cfg.t_end, strategy=cfg.boundary,
                                picard_tol=cfg.picard_tol, on_error="mark")
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / "convergence.csv").write_text(report.to_csv())
        (out / "convergence.md").write_text(report.to_markdown())
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(report.to_markdown())
    failures = report.metadata.get("failures", [])
    for where, message in failures:
        print(f"failed level {where}: {message}", file=sys.stderr)
    return EXIT_SOLVER if failures else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="porofem",
        description="Three-field finite element solver for nonlinear poroelasticity")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (("solve", "run one time march"),
                           ("convergence", "run a refinement study"),
                           ("export", "run one march and export fields")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", help="JSON configuration file")
        p.add_argument("--case", choices=CASE_NAMES)
        p.add_argument("--theta", type=int, choices=(0, 1))
        p.add_argument("--n", type=int, help="mesh subdivisions per side")
        p.add_argument("--levels", help="comma-separated mesh levels")
        p.add_argument("--dt", help="time step (number) or 'h2'")
        p.add_argument("--dt-list", help="comma-separated time steps (temporal study)")
        p.add_argument("--study", choices=("spatial", "temporal"))
        p.add_argument("--out", help="output directory")
        p.add_argument("--export", help="comma-separated formats: vtk,csv")
        p.add_argument("--deterministic", action="store_true", default=None)
    return parser


def _overrides(args: argparse.Namespace) -> dict:
    over = {"case": args.case, "theta": args.theta, "n": args.n,
            "study": args.study, "out": args.out,
            "deterministic": args.deterministic}
    if args.levels is not None:
        try:
            over["levels"] = [int(v) for v in args.levels.split(",") if v]
        except ValueError as exc:
            raise ConfigError(f"flag --levels: {exc}") from exc
    if args.dt is not None:
        over["dt"] = args.dt if args.dt == "h2" else _parse_number(args.dt, "--dt")
    if args.dt_list is not None:
        over["dt_list"] = [_parse_number(v, "--dt-list")
                           for v in args.dt_list.split(",") if v]
    if args.export is not None:
        over["export"] = [v for v in args.export.split(",") if v]
    return over


def _parse_number(text: str, flag: str) -> float:
    try:
        if "/" in text:
            num, den = text.split("/")
            value = float(num) / float(den)
        else:
            value = float(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"flag {flag}: cannot parse {text!r}") from exc
    if not math.isfinite(value) or value <= 0:
        raise ConfigError(f"flag {flag}: need a positive number, got {text!r}")
    return value


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = RunConfig.load(args.config, _overrides(args))
    except (ConfigError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(cfg.out)
    try:
        if args.command == "solve":
            return _run_solve(cfg, out, do_export=bool(cfg.export))
        if args.command == "export":
            return _run_solve(cfg, out, do_export=True)
        return _run_convergence(cfg, out)
    except (ConfigError, ParameterError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (PicardDiverged, LinearSolveFailed) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
