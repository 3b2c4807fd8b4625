"""Command line entry point: ``sldg <experiment> [--config FILE] [overrides]``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import fields
from pathlib import Path

import yaml

from .experiments import EXPERIMENTS, RunConfig, run
from .mesh import MeshError
from .solve import SolverError

EXIT_OK, EXIT_FAILURE, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


def _ints(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def load_config_file(path) -> dict:
    """Read a YAML (or JSON) mapping of RunConfig keys; dashes become underscores."""
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config file {path} is not valid YAML: {exc}") from exc
    if doc is None:
        return {}
    if not isinstance(doc, dict):
        raise ConfigError(f"config file {path} must contain a key-value mapping")
    doc = {str(k).replace("-", "_"): v for k, v in doc.items()}
    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(doc) - known)
    if unknown:
        raise ConfigError(f"unknown configuration keys: {unknown}")
    return doc


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sldg", description="hp-adaptive SIPG solver for the "
                                 "strain-limiting anti-plane shear problem")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="YAML/JSON key-value file with RunConfig keys")
        p.add_argument("--alpha", type=float)
        p.add_argument("--beta", type=float)
        p.add_argument("--mu", type=float)
        p.add_argument("--sigma", type=float)
        p.add_argument("--gamma", type=float)
        p.add_argument("--degree", type=_ints,
                       help="polynomial degree; a comma list for converge-p and converge-hp")
        p.add_argument("--levels", type=_ints,
                       help="cells per side, comma list (converge-h, converge-hp) or one value")
        p.add_argument("--tol", type=float, help="Picard tolerance")
        p.add_argument("--max-picard", type=int, dest="max_picard")
        p.add_argument("--relaxation", type=float)
        p.add_argument("--anderson", type=int, help="Anderson mixing depth (0 = off)")
        p.add_argument("--theta", type=float, help="fraction of elements marked per step")
        p.add_argument("--depth", type=int, help="number of adaptive refinements")
        p.add_argument("--betas", type=_floats, help="beta sweep for the crack run")
        p.add_argument("--out", help="output directory")
    return ap


def config_from_args(args: argparse.Namespace) -> RunConfig:
    values = load_config_file(args.config) if args.config else {}
    if values.get("experiment", args.experiment) != args.experiment:
        raise ConfigError(f"config file is for {values['experiment']!r}, "
                          f"command line asks for {args.experiment!r}")
    values.pop("experiment", None)
    for key in ("alpha", "beta", "mu", "sigma", "gamma", "tol", "max_picard", "relaxation",
                "anderson", "theta", "depth", "betas", "out"):
        v = getattr(args, key)
        if v is not None:
            values[key] = v
    exp = args.experiment
    if exp == "converge-hp" and (args.levels is not None or args.degree is not None):
        if args.levels is None or args.degree is None or len(args.levels) != len(args.degree):
            raise ConfigError("converge-hp needs --levels and --degree of equal length")
        values["hp_ladder"] = [[n, d] for n, d in zip(args.levels, args.degree)]
    else:
        if args.degree is not None:
            if exp == "converge-p":
                values["degrees"] = args.degree
            elif len(args.degree) != 1:
                raise ConfigError(f"{exp} takes a single --degree")
            else:
                values["degree"] = args.degree[0]
        if args.levels is not None:
            if exp == "converge-h":
                values["levels"] = args.levels
            elif len(args.levels) != 1:
                raise ConfigError(f"{exp} runs on one mesh; give a single --levels value")
            else:
                values["mesh_n"] = args.levels[0]
    try:
        return RunConfig.defaults_for(exp, **values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _summary(cfg: RunConfig, result) -> dict:
    doc = {"status": "ok", "experiment": cfg.experiment, "out": str(Path(cfg.out))}
    if cfg.experiment == "crack":
        doc["betas"] = {f"{b:g}": {"elements": r.meshes[-1].n_elements,
                                   "converged": all(r.converged)} for b, r in result.items()}
    else:
        doc["rows"] = [{"label": r.label, "l2_error": r.l2_error, "eoc_l2": r.eoc_l2,
                        "energy_error": r.energy_error, "eoc_energy": r.eoc_energy}
                       for r in result]
    return doc


def _fail(code: int, kind: str, exc: BaseException) -> int:
    doc = {"status": "error", "error_type": kind, "exception": type(exc).__name__,
           "message": str(exc)}
    residual = getattr(exc, "residual", None)
    if residual is not None:
        doc["residual"] = residual
    print(json.dumps(doc), file=sys.stderr)
    return code


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        if exc.code in (0, None):
            return EXIT_OK
        return _fail(EXIT_CONFIG, "usage", ValueError("invalid command line"))
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, "config", exc)
    try:
        result = run(cfg)
    except SolverError as exc:
        return _fail(EXIT_SOLVER, "solver", exc)
    except (MeshError, ValueError) as exc:
        return _fail(EXIT_CONFIG, "input", exc)
    except Exception as exc:  # noqa: BLE001 - reported as a machine-readable failure
        return _fail(EXIT_FAILURE, "internal", exc)
    print(json.dumps(_summary(cfg, result), indent=2, default=float))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
