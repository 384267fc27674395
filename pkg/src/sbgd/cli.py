"""Experiment harness: seeded runs, parameter sweeps and trajectory CSVs.

Configs are YAML files with flat keys::

    objective: paper-f
    variant: basic          # basic | tolerance | baseline
    J: 20
    p: 1
    q: 1
    lambda: 0.2
    gamma: 0.9
    L: 3.0                  # number, "estimate", or omitted
    init: left-cluster
    seed: 0
    repeats: 5
    sweep.p: [1, 2, 3]      # nested ``sweep: {p: [...]}`` works too
    out: results/
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import logging
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from .core import LineSearchError, ParameterError, RunResult, SBGDError, SBGDParams
from .objectives import (
    Objective,
    OracleResourceError,
    OracleResult,
    estimate_lipschitz,
    get_objective,
    grid_oracle,
    reference_minimum,
)
from .solver import run

log = logging.getLogger(__name__)

EXIT_OK, EXIT_CONFIG, EXIT_LINESEARCH, EXIT_IO = 0, 2, 3, 4
SUCCESS_TOL = 1e-2


class ConfigError(SBGDError):
    pass


# config key -> SBGDParams field
_PARAM_KEYS = {
    "J": "J", "p": "p", "q": "q", "lambda": "lam", "gamma": "gamma", "L": "L",
    "L_exact": "L_exact", "tolm": "tolm", "tolmerge": "tolmerge", "tolres": "tolres",
    "max_iterations": "max_iterations", "max_shrinks": "max_shrinks",
    "init": "init_scheme", "seed": "seed", "variant": "variant",
}
_OTHER_KEYS = {"objective", "repeats", "out", "sweep"}
_SWEEP_KEYS = ("p", "q", "J")


@dataclass
class ExperimentConfig:
    objective_name: str
    params: SBGDParams
    repeats: int = 1
    sweep: dict[str, list] = field(default_factory=dict)
    output_dir: str = "results"
    estimate_L: bool = False
    pinned_max_iterations: bool = False

    def __post_init__(self):
        if int(self.repeats) != self.repeats or self.repeats < 1:
            raise ConfigError(f"repeats: must be a positive integer, got {self.repeats!r}")
        for key, values in self.sweep.items():
            if key not in _SWEEP_KEYS:
                raise ConfigError(f"sweep.{key}: unknown sweep key (allowed: {_SWEEP_KEYS})")
            if not isinstance(values, list) or not values:
                raise ConfigError(f"sweep.{key}: must be a non-empty list")
            for v in values:
                try:
                    replace(self.params, **{key: v})
                except ParameterError as exc:
                    raise ConfigError(f"sweep.{key}: {exc}") from None

    def objective(self) -> Objective:
        try:
            return get_objective(self.objective_name)
        except ParameterError as exc:
            raise ConfigError(f"objective: {exc}") from None

    def replicate_params(self, k: int, **overrides) -> SBGDParams:
        params = replace(self.params, seed=self.params.seed + k, **overrides)
        if self.estimate_L:
            params = replace(params, L=estimate_lipschitz(self.objective(), seed=params.seed),
                             L_exact=False)
        return params


def config_from_mapping(raw: dict) -> ExperimentConfig:
    raw = dict(raw or {})
    sweep = dict(raw.pop("sweep", None) or {})
    for key in list(raw):
        if key.startswith("sweep."):
            sweep[key[len("sweep."):]] = raw.pop(key)
    unknown = set(raw) - set(_PARAM_KEYS) - _OTHER_KEYS
    if unknown:
        raise ConfigError(f"{sorted(unknown)[0]}: unknown config key")
    if "objective" not in raw:
        raise ConfigError("objective: missing")

    kwargs = {}
    estimate = False
    for key, name in _PARAM_KEYS.items():
        if key not in raw:
            continue
        value = raw[key]
        if key == "L" and isinstance(value, str):
            if value != "estimate":
                raise ConfigError(f"L: expected a number or 'estimate', got {value!r}")
            estimate = True
            continue
        kwargs[name] = value
    try:
        params = SBGDParams(**kwargs)
    except (ParameterError, TypeError, ValueError) as exc:
        raise ConfigError(f"params: {exc}") from None
    cfg = ExperimentConfig(
        objective_name=str(raw["objective"]),
        params=params,
        repeats=raw.get("repeats", 1),
        sweep=sweep,
        output_dir=str(raw.get("out", "results")),
        estimate_L=estimate,
        pinned_max_iterations="max_iterations" in raw,
    )
    cfg.objective()
    return cfg


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"config: invalid YAML in {path}: {exc}") from None
    if raw is not None and not isinstance(raw, dict):
        raise ConfigError("config: top level must be a mapping")
    return config_from_mapping(raw)


def _prepare_output(path) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"out: cannot create {out}: {exc}") from None
    if not out.is_dir():
        raise ConfigError(f"out: {out} is not a directory")
    return out


# -- CSV I/O ------------------------------------------------------------------

def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def trajectory_header(dim: int) -> list[str]:
    return (["iteration", "agent_id", "active", "mass", "f_value"]
            + [f"x_{k}" for k in range(dim)] + ["is_minimizer", "is_heaviest"])


def emit_trajectory_csv(result: RunResult, path) -> Path:
    path = Path(path)
    dim = result.trajectory[0].positions.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(trajectory_header(dim))
        for rec in result.trajectory:
            for i in range(rec.positions.shape[0]):
                w.writerow(
                    [rec.iteration, i, int(rec.active[i]), _fmt(rec.masses[i]), _fmt(rec.f_values[i])]
                    + [_fmt(v) for v in rec.positions[i]]
                    + [int(i == rec.minimizer_index), int(i == rec.heaviest_index)]
                )
    return path


def read_trajectory_csv(path) -> dict[str, np.ndarray]:
    """Columns of a trajectory CSV as arrays; positions stacked as ``x`` with shape (rows, d)."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    cols = {name: [r[k] for r in body] for k, name in enumerate(header)}
    xs = sorted((c for c in header if c.startswith("x_")), key=lambda c: int(c[2:]))
    out = {name: np.array(cols[name], dtype=int)
           for name in ("iteration", "agent_id", "active", "is_minimizer", "is_heaviest")}
    out["mass"] = np.array([float(v) for v in cols["mass"]])
    out["f_value"] = np.array([float(v) for v in cols["f_value"]])
    out["x"] = np.column_stack([[float(v) for v in cols[c]] for c in xs])
    return out


def _deviation(result: RunResult, oracle: OracleResult) -> float:
    return float(np.linalg.norm(result.solution - oracle.argmin))


SUMMARY_NAME = "summary.csv"


def write_summary(results, oracle: OracleResult, path) -> Path:
    dim = len(results[0].solution)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["seed", "termination", "iterations_used"]
                   + [f"solution_{k}" for k in range(dim)]
                   + ["f_solution", "deviation_from_oracle"])
        for r in results:
            w.writerow([r.seed, r.termination, r.iterations_used]
                       + [_fmt(v) for v in r.solution]
                       + [_fmt(r.f_solution), _fmt(_deviation(r, oracle))])
    return Path(path)


# -- experiments --------------------------------------------------------------

def run_experiment(config: ExperimentConfig) -> list[RunResult]:
    """Run ``repeats`` seeded replicates, writing one CSV each plus a summary."""
    objective = config.objective()
    out = _prepare_output(config.output_dir)
    oracle = reference_minimum(objective)
    results = []
    for k in range(config.repeats):
        params = config.replicate_params(k)
        result = run(params, objective)
        emit_trajectory_csv(result, out / f"trajectory_{k:03d}_seed{params.seed}.csv")
        log.info("replicate %d seed=%d termination=%s f=%.6g", k, params.seed,
                 result.termination, result.f_solution)
        results.append(result)
    write_summary(results, oracle, out / SUMMARY_NAME)
    return results


@dataclass(frozen=True)
class SweepRow:
    J: int
    p: float
    q: float
    mean_deviation: float
    min_deviation: float
    iterations_mean: float
    success_rate: float


@dataclass
class SweepReport:
    rows: list[SweepRow]
    oracle: OracleResult

    def to_csv(self, path) -> Path:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["J", "p", "q", "mean_deviation", "min_deviation",
                        "iterations_mean", "success_rate"])
            for r in self.rows:
                w.writerow([r.J, _fmt(r.p), _fmt(r.q), _fmt(r.mean_deviation),
                            _fmt(r.min_deviation), _fmt(r.iterations_mean), _fmt(r.success_rate)])
        return Path(path)

    def format_table(self) -> str:
        lines = [f"{'J':>6} {'p':>5} {'q':>5} {'mean dev':>11} {'min dev':>11} {'iters':>7} {'success':>8}"]
        for r in self.rows:
            lines.append(f"{r.J:>6} {r.p:>5g} {r.q:>5g} {r.mean_deviation:>11.3e} "
                         f"{r.min_deviation:>11.3e} {r.iterations_mean:>7.2f} {r.success_rate:>8.2f}")
        return "\n".join(lines)


def run_sweep(config: ExperimentConfig) -> SweepReport:
    """Cartesian product over the sweep lists; rows ordered by (q, J, p)."""
    objective = config.objective()
    out = _prepare_output(config.output_dir)
    oracle = reference_minimum(objective)
    base = config.params
    grid = {k: config.sweep.get(k, [getattr(base, k)]) for k in _SWEEP_KEYS}
    rows = []
    for p, q, J in itertools.product(grid["p"], grid["q"], grid["J"]):
        devs, iters = [], []
        for k in range(config.repeats):
            # max_iterations follows J unless the config pins it
            cap = base.max_iterations if config.pinned_max_iterations else None
            params = config.replicate_params(k, p=p, q=q, J=J, max_iterations=cap)
            result = run(params, objective)
            devs.append(_deviation(result, oracle))
            iters.append(result.iterations_used)
        devs = np.array(devs)
        rows.append(SweepRow(int(J), float(p), float(q), float(devs.mean()), float(devs.min()),
                             float(np.mean(iters)), float(np.mean(devs <= SUCCESS_TOL))))
    rows.sort(key=lambda r: (r.q, r.J, r.p))
    report = SweepReport(rows, oracle)
    report.to_csv(out / "sweep.csv")
    return report


# -- command line -------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sbgd", description="Swarm-based gradient descent experiments.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_ in (("run", "run seeded replicates of the configured variant"),
                        ("baseline", "like run, but without communication between agents")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None)

    p = sub.add_parser("sweep", help="sweep over p, q and J")
    p.add_argument("--config", required=True)

    p = sub.add_parser("oracle", help="brute-force grid minimum of an objective")
    p.add_argument("--objective", required=True)
    p.add_argument("--resolution", type=float, default=1e-4)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "oracle":
            try:
                objective = get_objective(args.objective)
            except ParameterError as exc:
                raise ConfigError(f"objective: {exc}") from None
            res = grid_oracle(objective, args.resolution)
            print(json.dumps({"objective": objective.name, "argmin": res.argmin.tolist(),
                              "f_min": res.f_min, "grid_resolution": res.grid_resolution}))
            return EXIT_OK

        cfg = load_config(args.config)
        if args.command == "sweep":
            report = run_sweep(cfg)
            print(report.format_table())
            return EXIT_OK

        if args.command == "baseline":
            cfg.params = replace(cfg.params, variant="baseline")
        if args.seed is not None:
            cfg.params = replace(cfg.params, seed=args.seed)
        if args.out is not None:
            cfg.output_dir = args.out
        results = run_experiment(cfg)
        for r in results:
            sol = " ".join(f"{v:.10g}" for v in r.solution)
            print(f"seed={r.seed} termination={r.termination} iterations={r.iterations_used} "
                  f"solution=[{sol}] f={r.f_solution:.10g}")
        return EXIT_OK
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ParameterError, OracleResourceError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except LineSearchError as exc:
        print(f"line search failed: {exc}", file=sys.stderr)
        return EXIT_LINESEARCH
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
