"""Command-line front end.

Every subcommand writes its outputs (CSV for grids and curves, JSON for
reports and verdicts) into the output directory together with a run manifest
recording the resolved configuration, the master seed, timestamps, and a
SHA-256 digest of every output file.  Floats are serialized with repr
(shortest round-trip form), so reruns with the same seed produce
byte-identical files.

Exit codes: 0 success, 2 configuration error, 3 numeric failure,
4 experiment verdict "fail".
"""

from __future__ import annotations

import argparse
import csv
import datetime
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, experiments, fluid, lcp, matclass, pursuit
from .model import (
    ConstraintViolation,
    DimensionError,
    ExampleDeltas,
    SrbmModel,
    StateVec,
    example_model,
    model_from_dict,
    model_to_dict,
    validate_deltas,
)
from .sde import NumericError, SimConfig, hitting_time, simulate, validate_path
from .seeds import replica_seed

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_VERDICT_FAIL = 4


class ConfigError(ValueError):
    pass


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _write_csv(path: Path, header: list[str], rows) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _write_json(path: Path, doc: dict) -> None:
    doc = {"tool_version": __version__, **doc}
    path.write_text(json.dumps(doc, indent=2) + "\n")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


class RunManifest:
    """Collects output files and writes the manifest alongside them."""

    def __init__(self, subcommand: str, config: dict, master_seed: int | None, out_dir: Path):
        self.subcommand = subcommand
        self.config = config
        self.master_seed = master_seed
        self.out_dir = out_dir
        self.outputs: list[Path] = []
        self.started = datetime.datetime.now(datetime.timezone.utc).isoformat()

    def add(self, path: Path) -> None:
        self.outputs.append(path)

    def write(self) -> Path:
        doc = {
            "manifest_schema": 1,
            "tool_version": __version__,
            "subcommand": self.subcommand,
            "config": self.config,
            "master_seed": self.master_seed,
            "started": self.started,
            "finished": datetime.datetime.now(datetime.timezone.utc).isoformat(),
            "outputs": {p.name: _sha256(p) for p in self.outputs},
        }
        path = self.out_dir / f"{self.subcommand}_manifest.json"
        path.write_text(json.dumps(doc, indent=2) + "\n")
        return path


def load_model_arg(args) -> SrbmModel:
    if getattr(args, "deltas", None) is not None:
        deltas = ExampleDeltas(*args.deltas)
        report = validate_deltas(deltas)
        if not report.ok:
            raise ConfigError("invalid deltas: " + "; ".join(report.failures))
        return example_model(deltas)
    if getattr(args, "model", None) is not None:
        doc = load_config(args.model)
        try:
            return model_from_dict(doc)
        except (ConstraintViolation, DimensionError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
    raise ConfigError("provide either --model FILE or --deltas D1 D2 D3 D4")


def load_config(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"top level of {path} must be a JSON object")
    return doc


def resolve_config(doc: dict, schema: dict) -> dict:
    """Fill defaults and reject unknown keys.

    schema maps key -> (type, default); a default of ... marks a required key.
    """
    unknown = set(doc) - set(schema)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    out = {}
    for key, (typ, default) in schema.items():
        if key in doc:
            value = doc[key]
            try:
                if typ is float and isinstance(value, (int, float)):
                    value = float(value)
                elif typ is int and isinstance(value, int):
                    value = int(value)
                elif typ is list and isinstance(value, list):
                    value = list(value)
                elif not isinstance(value, typ):
                    raise TypeError
            except TypeError:
                raise ConfigError(
                    f"config key {key!r} expects {typ.__name__}, got {type(value).__name__}"
                ) from None
            out[key] = value
        elif default is ...:
            raise ConfigError(f"missing required config key {key!r}")
        else:
            out[key] = default
    return out


def _state_arg(values, d: int) -> StateVec:
    z = np.asarray(values, dtype=float)
    if z.shape != (d,):
        raise ConfigError(f"--z0 needs {d} components, got {z.shape[0]}")
    try:
        return StateVec(z)
    except (ConstraintViolation, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def cmd_classify(args) -> int:
    model = load_model_arg(args)
    report = matclass.classify_matrix(model.r_matrix, theta=model.theta)
    out_dir = Path(args.out)
    manifest = RunManifest("classify", {"model": model_to_dict(model)}, None, out_dir)
    path = out_dir / "classify_report.json"
    _write_json(path, report.to_dict())
    manifest.add(path)
    manifest.write()
    print(json.dumps(report.to_dict()))
    return EXIT_OK


def cmd_lcp(args) -> int:
    model = load_model_arg(args)
    solutions, skipped = lcp.solve_all(model.theta, model.r_matrix)
    doc = {
        "solutions": [s.to_dict() for s in solutions],
        "skipped_supports": [list(s) for s in skipped],
    }
    out_dir = Path(args.out)
    manifest = RunManifest("lcp", {"model": model_to_dict(model)}, None, out_dir)
    path = out_dir / "lcp_solutions.json"
    _write_json(path, doc)
    manifest.add(path)
    manifest.write()
    print(json.dumps(doc["solutions"]))
    return EXIT_OK


def _grid_csv(path: Path, grid) -> None:
    d = grid.d
    header = ["t"] + [f"z{k+1}" for k in range(d)] + [f"y{k+1}" for k in range(d)]
    rows = (
        [grid.times[i], *grid.z_path[i], *grid.y_path[i]]
        for i in range(grid.steps + 1)
    )
    _write_csv(path, header, rows)


def cmd_fluid(args) -> int:
    model = load_model_arg(args)
    z0 = _state_arg(args.z0, model.d)
    grid = fluid.integrate(z0.z, model.theta, model.r_matrix, args.h, args.horizon)
    verdict = fluid.attraction_verdict(
        grid, eps_origin=args.eps_origin, growth_threshold=args.growth_threshold
    )
    out_dir = Path(args.out)
    config = {
        "model": model_to_dict(model),
        "z0": z0.z.tolist(),
        "h": args.h,
        "horizon": args.horizon,
    }
    manifest = RunManifest("fluid", config, None, out_dir)
    grid_path = out_dir / "fluid_grid.csv"
    _grid_csv(grid_path, grid)
    manifest.add(grid_path)
    verdict_path = out_dir / "fluid_verdict.json"
    _write_json(verdict_path, verdict.to_dict())
    manifest.add(verdict_path)
    manifest.write()
    print(json.dumps(verdict.to_dict()))
    return EXIT_OK


def cmd_simulate(args) -> int:
    model = load_model_arg(args)
    z0 = _state_arg(args.z0, model.d)
    cfg = SimConfig(h=args.h, T=args.horizon, seed=args.seed)
    grid = simulate(model, z0, cfg)
    report = validate_path(grid, model)
    out_dir = Path(args.out)
    config = {
        "model": model_to_dict(model),
        "z0": z0.z.tolist(),
        "h": args.h,
        "horizon": args.horizon,
        "seed": args.seed,
    }
    manifest = RunManifest("simulate", config, args.seed, out_dir)
    grid_path = out_dir / "simulate_grid.csv"
    _grid_csv(grid_path, grid)
    manifest.add(grid_path)
    report_path = out_dir / "simulate_validation.json"
    _write_json(report_path, report.to_dict())
    manifest.add(report_path)
    manifest.write()
    print(json.dumps(report.to_dict()))
    return EXIT_OK


def cmd_hit(args) -> int:
    model = load_model_arg(args)
    z0 = _state_arg(args.z0, model.d)
    out_dir = Path(args.out)
    config = {
        "model": model_to_dict(model),
        "z0": z0.z.tolist(),
        "kappa": args.kappa,
        "delta": args.delta,
        "cap": args.cap,
        "h": args.h,
        "seed": args.seed,
        "reps": args.reps,
        "norm": args.norm,
    }
    manifest = RunManifest("hit", config, args.seed, out_dir)
    path = out_dir / "hit_samples.jsonl"
    with path.open("w") as fh:
        for i in range(args.reps):
            seed_i = replica_seed(args.seed, i)
            cfg = SimConfig(h=args.h, T=max(args.h, args.delta + args.h), seed=seed_i)
            sample = hitting_time(
                model, z0, args.kappa, args.delta, cfg, args.cap, norm=args.norm
            )
            row = {"seed": seed_i, **sample.to_dict()}
            fh.write(json.dumps(row) + "\n")
    manifest.add(path)
    manifest.write()
    return EXIT_OK


EXPERIMENT_SCHEMAS = {
    "contraction": {
        "model": (dict, {"example_deltas": [0.05, 0.05, 0.05, 0.6]}),
        "scales": (list, [8.0, 16.0, 32.0]),
        "c": (float, experiments.DEFAULT_C),
        "reps": (int, 500),
        "h": (float, 2e-3),
        "seed": (int, 2024),
        "gamma": (float, experiments.DEFAULT_GAMMA),
        "kappa": (float, experiments.DEFAULT_KAPPA),
        "norm": (str, "foster"),
    },
    "return-time": {
        "model": (dict, {"example_deltas": [0.05, 0.05, 0.05, 0.6]}),
        "scales": (list, [8.0, 16.0, 32.0]),
        "kappa": (float, experiments.DEFAULT_KAPPA),
        "delta": (float, experiments.DEFAULT_DELTA),
        "reps": (int, 500),
        "h": (float, 2e-3),
        "seed": (int, 2024),
        "cap": (float, 200.0),
        "norm": (str, "foster"),
    },
    "fluid-vs-diffusion": {
        "model": (dict, {"example_deltas": [0.05, 0.05, 0.05, 0.6]}),
        "horizon": (float, 100.0),
        "reps": (int, 500),
        "h": (float, 2e-3),
        "seed": (int, 2024),
    },
}


def run_experiment(name: str, config: dict) -> experiments.ExperimentResult:
    model = model_from_dict(config["model"])
    if name == "contraction":
        return experiments.contraction_experiment(
            model,
            scales=[float(m) for m in config["scales"]],
            c=config["c"],
            reps=config["reps"],
            h=config["h"],
            master_seed=config["seed"],
            gamma=config["gamma"],
            kappa=config["kappa"],
            norm=config["norm"],
        )
    if name == "return-time":
        return experiments.return_time_experiment(
            model,
            scales=[float(m) for m in config["scales"]],
            kappa=config["kappa"],
            delta=config["delta"],
            reps=config["reps"],
            h=config["h"],
            master_seed=config["seed"],
            cap=config["cap"],
            norm=config["norm"],
        )
    if name == "fluid-vs-diffusion":
        return experiments.fluid_vs_diffusion(
            model,
            horizon=config["horizon"],
            reps=config["reps"],
            h=config["h"],
            master_seed=config["seed"],
        )
    raise ConfigError(f"unknown experiment {name!r}")


def cmd_experiment(args) -> int:
    schema = EXPERIMENT_SCHEMAS.get(args.name)
    if schema is None:
        raise ConfigError(f"unknown experiment {args.name!r}")
    doc = load_config(args.config) if args.config else {}
    config = resolve_config(doc, schema)
    if "example_deltas" in config["model"]:
        deltas = ExampleDeltas(*[float(v) for v in config["model"]["example_deltas"]])
        report = validate_deltas(deltas)
        if not report.ok:
            raise ConfigError("invalid example_deltas: " + "; ".join(report.failures))
    result = run_experiment(args.name, config)
    out_dir = Path(args.out)
    manifest = RunManifest(f"experiment_{args.name}", config, config["seed"], out_dir)
    rows_path = out_dir / f"{args.name}_rows.csv"
    header = ["scale", "state", "estimate", "std_error", "n_samples", "censored_fraction"]
    _write_csv(rows_path, header, ([r[k] for k in header] for r in result.rows))
    manifest.add(rows_path)
    verdict_path = out_dir / f"{args.name}_verdict.json"
    _write_json(verdict_path, result.to_dict())
    manifest.add(verdict_path)
    manifest.write()
    print(json.dumps({"name": result.name, "verdict": result.verdict, "notes": result.notes}))
    return EXIT_OK if result.verdict == "pass" else EXIT_VERDICT_FAIL


def cmd_pursuit(args) -> int:
    gaps = args.gaps if args.gaps is not None else [1.0] * args.n
    try:
        cfg = pursuit.PursuitConfig(
            n=args.n,
            gaps=np.asarray(gaps, dtype=float),
            h=args.h,
            cap=args.cap,
            seed=args.seed,
            bridge_correction=not args.no_bridge,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if args.t_grid is not None:
        t_grid = np.asarray(args.t_grid, dtype=float)
    else:
        t_grid = np.geomspace(max(10 * args.h, 0.1), args.cap, 25)
        t_grid = np.unique(np.maximum(np.round(t_grid / args.h), 1.0) * args.h)
    curve = pursuit.survival_curve(cfg, args.reps, t_grid)
    out_dir = Path(args.out)
    config = {
        "n": args.n,
        "gaps": list(map(float, gaps)),
        "h": args.h,
        "cap": args.cap,
        "seed": args.seed,
        "reps": args.reps,
        "bridge_correction": not args.no_bridge,
        "t_grid": t_grid.tolist(),
    }
    manifest = RunManifest("pursuit", config, args.seed, out_dir)
    curve_path = out_dir / "pursuit_curve.csv"
    _write_csv(
        curve_path,
        ["t", "survival", "stderr"],
        zip(curve.t_grid, curve.survival, curve.std_error),
    )
    manifest.add(curve_path)
    fit_path = out_dir / "pursuit_fit.json"
    _write_json(fit_path, curve.to_dict())
    manifest.add(fit_path)
    manifest.write()
    print(json.dumps(curve.to_dict()))
    return EXIT_OK


def _add_model_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", help="model JSON file")
    p.add_argument(
        "--deltas",
        nargs=4,
        type=float,
        metavar=("D1", "D2", "D3", "D4"),
        help="shorthand for the 6-d example model",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="orthant-lab",
        description="Reflecting Brownian motions in the orthant: "
        "classification, fluid paths, and Monte Carlo stress tests.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand")

    p = sub.add_parser("classify", help="matrix classification report")
    _add_model_args(p)
    p.add_argument("--out", default=".", help="output directory")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("lcp", help="all linear-complementarity solutions")
    _add_model_args(p)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_lcp)

    p = sub.add_parser("fluid", help="integrate the fluid dynamics")
    _add_model_args(p)
    p.add_argument("--z0", nargs="+", type=float, required=True)
    p.add_argument("--h", type=float, default=1e-2)
    p.add_argument("--horizon", type=float, default=100.0)
    p.add_argument("--eps-origin", type=float, default=None)
    p.add_argument("--growth-threshold", type=float, default=1.5)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_fluid)

    p = sub.add_parser("simulate", help="simulate one trajectory")
    _add_model_args(p)
    p.add_argument("--z0", nargs="+", type=float, required=True)
    p.add_argument("--h", type=float, default=1e-3)
    p.add_argument("--horizon", type=float, default=10.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("hit", help="first-passage samples into a norm ball")
    _add_model_args(p)
    p.add_argument("--z0", nargs="+", type=float, required=True)
    p.add_argument("--kappa", type=float, required=True)
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--cap", type=float, required=True)
    p.add_argument("--h", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--norm", choices=["foster", "l1"], default="foster")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_hit)

    p = sub.add_parser("experiment", help="run a Monte Carlo experiment suite")
    p.add_argument(
        "--name",
        required=True,
        choices=sorted(EXPERIMENT_SCHEMAS),
    )
    p.add_argument("--config", help="experiment config JSON (defaults used if omitted)")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("pursuit", help="Brownian pursuit survival curve")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--gaps", nargs="+", type=float)
    p.add_argument("--reps", type=int, default=10000)
    p.add_argument("--cap", type=float, default=1e4)
    p.add_argument("--h", type=float, default=1e-2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--t-grid", nargs="+", type=float)
    p.add_argument("--no-bridge", action="store_true")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_pursuit)

    return parser


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not getattr(args, "func", None):
        parser.print_usage(sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConstraintViolation, DimensionError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
