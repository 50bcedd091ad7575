"""Command line interface.

Subcommands take a JSON configuration file and write their reports
(CSV, JSON, optional VTK) into an output directory together with an
echo of the configuration and the package version.  Exit codes: 0 on
success, 1 for configuration or setup errors, 2 when some cases failed
but others completed.
"""

from __future__ import annotations

import argparse
import json
import sys
from importlib import metadata
from pathlib import Path

import numpy as np

from . import output as out_mod
from .experiments import (
    SweepSpec,
    infsup_study,
    robin_consistency_case,
    run_case,
    sweep,
    three_cylinder_case,
)
from .mesh import StructuredMesh
from .problems import PROBLEM_IDS

__all__ = ["main", "parse_config", "ConfigError"]


class ConfigError(Exception):
    """Invalid configuration; the message names the offending key path."""


def _type_name(t):
    return {float: "number", int: "integer", str: "string", bool: "boolean"}[t]


def _check_scalar(value, types, path):
    if bool in types and isinstance(value, bool):
        return value
    if isinstance(value, bool) or not isinstance(value, tuple(types)):
        wanted = " or ".join(_type_name(t) for t in types)
        raise ConfigError(f"{path}: expected {wanted}, got {value!r}")
    return value


def _check_list(value, types, path, min_len=1):
    if not isinstance(value, list):
        raise ConfigError(f"{path}: expected a list")
    if len(value) < min_len:
        raise ConfigError(f"{path}: needs at least {min_len} entries")
    return [
        _check_scalar(v, types, f"{path}[{i}]") for i, v in enumerate(value)
    ]


# Field specs: name -> (kind, types, required, default)
_PROBLEM_FIELD = ("scalar", (str,), True, None)

_SCHEMAS = {
    "solve": {
        "problem": _PROBLEM_FIELD,
        "level": ("scalar", (int,), True, None),
        "epsilon": ("scalar", (float, int), True, None),
        "n": ("scalar", (int,), True, None),
        "kappa": ("scalar", (float, int), False, 0.0),
        "method": ("scalar", (str,), False, "reduced"),
        "solver_path": ("scalar", (str,), False, "schur"),
        "solver_tol": ("scalar", (float,), False, 1e-10),
        "vtk": ("scalar", (bool,), False, False),
    },
    "sweep": {
        "problem": _PROBLEM_FIELD,
        "levels": ("list", (int,), True, None),
        "epsilons": ("list", (float, int), True, None),
        "orders": ("list", (int,), True, None),
        "kappas": ("list", (float, int), False, [0.0]),
        "method": ("scalar", (str,), False, "reduced"),
        "solver_path": ("scalar", (str,), False, "schur"),
        "solver_tol": ("scalar", (float,), False, 1e-10),
    },
    "infsup": {
        "problem": _PROBLEM_FIELD,
        "level": ("scalar", (int,), True, None),
        "epsilon": ("scalar", (float, int), True, None),
        "orders": ("list", (int,), True, None),
    },
    "compare-full": {
        "problem": _PROBLEM_FIELD,
        "level": ("scalar", (int,), True, None),
        "epsilon": ("scalar", (float, int), True, None),
        "orders": ("list", (int,), True, None),
        "full_segments": ("scalar", (int,), False, 64),
        "solver_tol": ("scalar", (float,), False, 1e-10),
    },
    "robin": {
        "problem": _PROBLEM_FIELD,
        "level": ("scalar", (int,), True, None),
        "epsilon": ("scalar", (float, int), True, None),
        "n": ("scalar", (int,), True, None),
        "kappas": ("list", (float, int), True, None),
        "solver_tol": ("scalar", (float,), False, 1e-10),
    },
}


def parse_config(command: str, raw: dict) -> dict:
    """Validate a configuration dict against the subcommand schema.

    Unknown keys are rejected with the exact key path in the message.
    """
    schema = _SCHEMAS[command]
    if not isinstance(raw, dict):
        raise ConfigError("configuration root must be a JSON object")
    for key in raw:
        if key not in schema:
            raise ConfigError(f"unknown configuration key {key!r}")
    cfg = {}
    for key, (kind, types, required, default) in schema.items():
        if key not in raw:
            if required:
                raise ConfigError(f"missing required configuration key {key!r}")
            cfg[key] = default
            continue
        if kind == "scalar":
            cfg[key] = _check_scalar(raw[key], types, key)
        else:
            cfg[key] = _check_list(raw[key], types, key)
    if "problem" in cfg and cfg["problem"] not in PROBLEM_IDS:
        raise ConfigError(
            f"problem: unknown problem id {cfg['problem']!r}, "
            f"expected one of {list(PROBLEM_IDS)}"
        )
    for key in ("method",):
        if key in cfg and cfg[key] not in ("reduced", "full", "both"):
            raise ConfigError(f"{key}: expected 'reduced', 'full', or 'both'")
    if "solver_path" in cfg and cfg["solver_path"] not in ("schur", "direct"):
        raise ConfigError("solver_path: expected 'schur' or 'direct'")
    return cfg


def _version() -> str:
    try:
        return metadata.version("modalfem")
    except metadata.PackageNotFoundError:
        return "unknown"


def _prepare_output(out_dir: Path, command: str, cfg: dict) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    echo = {"command": command, "version": _version(), "config": cfg}
    with open(out_dir / "run.json", "w") as fh:
        json.dump(echo, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _cmd_solve(cfg: dict, out_dir: Path) -> int:
    row = run_case(
        cfg["problem"],
        cfg["level"],
        float(cfg["epsilon"]),
        cfg["n"],
        kappa=float(cfg["kappa"]),
        method=cfg["method"],
        solver_path=cfg["solver_path"],
        solver_tol=cfg["solver_tol"],
    )
    out_mod.emit_csv(out_dir / "results.csv", [row])
    if cfg["vtk"]:
        from .experiments import _bulk_context
        from .problems import make_problem
        from .modal import ModalBasis
        from .experiments import _assemble_case
        from .solve import solve_saddle

        prob = make_problem(cfg["problem"], float(cfg["epsilon"]))
        ctx = _bulk_context(prob.domain, cfg["level"])
        system, _ = _assemble_case(ctx, prob, ModalBasis(cfg["n"]), float(cfg["kappa"]))
        sol = solve_saddle(
            system,
            tol=cfg["solver_tol"],
            path=cfg["solver_path"],
            bulk_solver=ctx.solver if cfg["solver_path"] == "schur" else None,
        )
        out_mod.emit_vtk(out_dir / "solution.vtk", ctx.mesh, sol.u)
    return 0


def _cmd_sweep(cfg: dict, out_dir: Path, workers: int) -> int:
    spec = SweepSpec(
        problem=cfg["problem"],
        levels=tuple(cfg["levels"]),
        epsilons=tuple(float(e) for e in cfg["epsilons"]),
        orders=tuple(cfg["orders"]),
        kappas=tuple(float(k) for k in cfg["kappas"]),
        method=cfg["method"],
        solver_path=cfg["solver_path"],
        solver_tol=cfg["solver_tol"],
    )
    rows, fits, errors = sweep(spec, workers=workers)
    out_mod.emit_csv(out_dir / "results.csv", rows)
    with open(out_dir / "fits.json", "w") as fh:
        json.dump(fits, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if errors:
        with open(out_dir / "errors.json", "w") as fh:
            json.dump(
                [{"case": list(e["case"]), "error": e["error"]} for e in errors],
                fh,
                indent=2,
            )
            fh.write("\n")
        print(f"{len(errors)} of {len(errors) + len(rows)} cases failed", file=sys.stderr)
        return 2
    return 0


def _cmd_infsup(cfg: dict, out_dir: Path) -> int:
    estimates = infsup_study(
        cfg["problem"], cfg["level"], float(cfg["epsilon"]), cfg["orders"]
    )
    payload = [
        {"params": e.params, "beta": e.beta, "eigen_residual": e.eigen_residual}
        for e in estimates
    ]
    with open(out_dir / "infsup.json", "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return 0


def _cmd_compare_full(cfg: dict, out_dir: Path) -> int:
    rows = []
    failures = 0
    for n in cfg["orders"]:
        try:
            rows.append(
                run_case(
                    cfg["problem"],
                    cfg["level"],
                    float(cfg["epsilon"]),
                    n,
                    method="both",
                    solver_tol=cfg["solver_tol"],
                    full_segments=cfg["full_segments"],
                )
            )
        except Exception as exc:
            failures += 1
            print(f"order {n} failed: {exc}", file=sys.stderr)
    out_mod.emit_csv(out_dir / "results.csv", rows)
    if failures and rows:
        return 2
    if failures:
        raise ConfigError("all comparison cases failed")
    return 0


def _cmd_robin(cfg: dict, out_dir: Path) -> int:
    rows, diffs = robin_consistency_case(
        cfg["problem"],
        cfg["level"],
        float(cfg["epsilon"]),
        cfg["n"],
        [float(k) for k in cfg["kappas"]],
        solver_tol=cfg["solver_tol"],
    )
    out_mod.emit_csv(out_dir / "results.csv", rows)
    payload = [
        {"kappa": float(k), "diff_L2_vs_dirichlet": d}
        for k, d in zip(cfg["kappas"], diffs)
    ]
    with open(out_dir / "robin.json", "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="modalfem",
        description="Finite element solver coupling a bulk Poisson problem "
        "to small circular or cylindrical inclusions through a reduced "
        "modal Lagrange multiplier.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, descr in [
        ("solve", "solve a single case and write a one-row report"),
        ("sweep", "run a Cartesian parameter sweep with rate fits"),
        ("infsup", "estimate the discrete inf-sup constant"),
        ("compare-full", "compare the reduced method to the full-order oracle"),
        ("robin", "Robin-parameter consistency study against kappa = 0"),
    ]:
        p = sub.add_parser(name, help=descr)
        p.add_argument("--config", required=True, help="path to a JSON config file")
        p.add_argument("--output", default="./out", help="output directory")
        p.add_argument("--workers", type=int, default=1, help="parallel workers")
    args = parser.parse_args(argv)
    try:
        with open(args.config) as fh:
            raw = json.load(fh)
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return 1
    except json.JSONDecodeError as exc:
        print(f"config is not valid JSON: {exc}", file=sys.stderr)
        return 1
    try:
        cfg = parse_config(args.command, raw)
        out_dir = Path(args.output)
        _prepare_output(out_dir, args.command, cfg)
        if args.command == "solve":
            return _cmd_solve(cfg, out_dir)
        if args.command == "sweep":
            return _cmd_sweep(cfg, out_dir, max(1, args.workers))
        if args.command == "infsup":
            return _cmd_infsup(cfg, out_dir)
        if args.command == "compare-full":
            return _cmd_compare_full(cfg, out_dir)
        return _cmd_robin(cfg, out_dir)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # setup failures map to exit code 1
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
