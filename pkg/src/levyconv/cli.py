"""Command-line front end.

Subcommands::

    simulate SCENARIO        atoms of the random measure for each draw
    convolve SCENARIO        solution paths u on the event grid
    project PATHS --grid n   dyadic projections of step paths
    distance PATHS --grid g  pairwise Skorokhod upper bounds
    lawtest FILE             two-sample test of functional laws
    verify-bounds SCENARIO   maximal-ratio and L^p bound experiments

Exit status: 0 on success, 2 for usage, configuration or input errors, 1 for
runtime failures (including a violated bound in ``verify-bounds``). Outputs
are deterministic functions of the inputs and the seed.
"""

from __future__ import annotations

import argparse
import copy
import csv
import json
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from levyconv import __version__
from levyconv.errors import ConfigurationError, InvalidInputError, LevyConvError, ResolutionError
from levyconv.lawlab import (
    DEFAULT_N_PERM,
    Scenario,
    analytic_bound_experiment,
    law_equality_experiment,
    maximal_ratio_experiment,
)
from levyconv.paths import read_step_paths_csv, write_paths_csv, write_step_paths_csv
from levyconv.projections import dyadic_project
from levyconv.rng import SEED_BITS, check_seed
from levyconv.skorokhod import d0_symmetrized, distance_matrix
from levyconv.stochint import solve_spde

OUT_ENV = "LEVYCONV_OUT"
DEFAULT_OUT = "levyconv_out"

log = logging.getLogger("levyconv")


@dataclass(frozen=True)
class RunConfig:
    command: str
    input: str
    out: Path
    seed: Optional[int]
    samples: Optional[int]
    grid: Optional[int]
    force: bool
    n_perm: int
    q: float
    workers: int
    verbosity: int


def _seed_arg(text):
    try:
        return check_seed(int(text, 0))
    except (ValueError, InvalidInputError):
        raise argparse.ArgumentTypeError(f"seed must be an integer in [0, 2**{SEED_BITS})") from None


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("expected a positive integer")
    return v


def build_parser():
    parser = argparse.ArgumentParser(prog="levyconv", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"levyconv {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=None, help=f"output directory (default ${OUT_ENV} or ./{DEFAULT_OUT})")
    common.add_argument("--seed", type=_seed_arg, default=None, help="override the scenario seed")
    common.add_argument("--samples", type=_positive_int, default=None, help="override the sample count")
    common.add_argument("--grid", type=_positive_int, default=None, help="dyadic order")
    common.add_argument("--force", action="store_true", help="compare scenarios with different laws")
    common.add_argument("--n-perm", type=_positive_int, default=DEFAULT_N_PERM, help="permutations")
    common.add_argument("--q", type=float, default=1.0, help="moment q' of the maximal ratio")
    common.add_argument("--workers", type=_positive_int, default=1, help="worker processes")
    common.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True
    for name, helptext in [
        ("simulate", "simulate the random measure"),
        ("convolve", "solve the linear SPDE for each draw"),
        ("project", "dyadic projections of step paths (needs --grid)"),
        ("distance", "pairwise Skorokhod upper bounds (needs --grid)"),
        ("lawtest", "two-sample test of functional laws"),
        ("verify-bounds", "maximal-ratio and L^p bound experiments"),
    ]:
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("input", help="scenario JSON or path CSV")
    return parser


def _config(ns):
    out = ns.out or os.environ.get(OUT_ENV) or DEFAULT_OUT
    return RunConfig(ns.command, ns.input, Path(out), ns.seed, ns.samples, ns.grid, ns.force,
                     ns.n_perm, ns.q, ns.workers, ns.verbose)


# --------------------------------------------------------------------------
# output helpers


def _write_json(path, doc):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2, ensure_ascii=True, allow_nan=True)
        fh.write("\n")


def _scenario(cfg, doc=None):
    s = Scenario.from_json(cfg.input) if doc is None else Scenario.from_dict(doc)
    changes = {}
    if cfg.seed is not None:
        changes["seed"] = cfg.seed
    if cfg.samples is not None:
        changes["samples"] = cfg.samples
    return s.with_(**changes) if changes else s


def _header(cfg, s=None):
    doc = {"command": cfg.command, "version": __version__}
    if s is not None:
        doc.update({"scenario_digest": s.digest, "seed": s.seed, "samples": s.samples,
                    "variant": s.variant})
    return doc


def _need_grid(cfg):
    if cfg.grid is None:
        raise ConfigurationError(f"{cfg.command} needs --grid")
    return cfg.grid


# --------------------------------------------------------------------------
# subcommands


def cmd_simulate(cfg):
    s = _scenario(cfg)
    c = s.components
    path = cfg.out / "atoms.csv"
    counts = []
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["draw", "time", "mark"])
        for i in range(s.samples):
            eta = s.simulate(i)
            counts.append(len(eta))
            for t, z in zip(eta.times, eta.marks):
                w.writerow([i, f"{t:.17g}", c.space.marks[z]])
    report = _header(cfg, s)
    report.update({"atoms_csv": path.name, "total_atoms": int(sum(counts)),
                   "mean_count": float(np.mean(counts)),
                   "expected_count": s.horizon * c.space.total_mass})
    _write_json(cfg.out / "simulate.json", report)
    return [path, cfg.out / "simulate.json"]


def cmd_convolve(cfg):
    s = _scenario(cfg)
    c = s.components
    paths = []
    for i in range(s.samples):
        eta = s.simulate(i)
        paths.append(solve_spde(c.op, c.drift, c.xi, eta, s.dt, s.probe_times))
    path = cfg.out / "paths.csv"
    write_paths_csv(path, paths, ids=list(range(len(paths))))
    report = _header(cfg, s)
    report.update({"paths_csv": path.name, "dim": c.op.dim,
                   "u_at_horizon": [[float(v) for v in u.values[-1]] for u in paths]})
    _write_json(cfg.out / "convolve.json", report)
    return [path, cfg.out / "convolve.json"]


def _read_paths(cfg):
    try:
        paths = read_step_paths_csv(cfg.input)
    except InvalidInputError as exc:
        raise ConfigurationError(str(exc)) from exc
    if not paths:
        raise ConfigurationError(f"{cfg.input}: no paths")
    return paths


def cmd_project(cfg):
    n = _need_grid(cfg)
    paths = _read_paths(cfg)
    proj = {k: dyadic_project(n, x) for k, x in paths.items()}
    out = cfg.out / "projected.csv"
    write_step_paths_csv(out, proj)
    report = _header(cfg)
    report.update({"order": n, "projected_csv": out.name,
                   "d0_upper_to_projection": {k: d0_symmetrized(paths[k], proj[k], n + 3) for k in paths},
                   "d0_grid": n + 3})
    _write_json(cfg.out / "project.json", report)
    return [out, cfg.out / "project.json"]


def cmd_distance(cfg):
    g = _need_grid(cfg)
    paths = _read_paths(cfg)
    ids = list(paths)
    mat = distance_matrix([paths[k] for k in ids], g, workers=cfg.workers)
    out = cfg.out / "distance.csv"
    with open(out, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["path"] + ids)
        for k, row in zip(ids, mat):
            w.writerow([k] + [f"{v:.17g}" for v in row])
    report = _header(cfg)
    report.update({"grid": g, "bound": "upper", "distance_csv": out.name, "paths": ids})
    _write_json(cfg.out / "distance.json", report)
    return [out, cfg.out / "distance.json"]


def _flip(variant):
    return "binomial" if variant == "exponential" else "exponential"


def lawtest_pair(doc, seed=None, samples=None):
    """Resolve a lawtest document into two scenarios.

    Accepted forms: ``{"a": scenario, "b": scenario}``, or one scenario with
    an optional ``"compare"`` object of overrides for the second scenario
    (default: the other construction and the next seed). A seed override
    sets the first seed and gives the second scenario ``seed + 1``.
    """
    if not isinstance(doc, dict):
        raise ConfigurationError("a lawtest file must be a JSON object")
    if "a" in doc or "b" in doc:
        if set(doc) != {"a", "b"}:
            raise ConfigurationError("a paired lawtest file needs exactly the keys 'a' and 'b'")
        da, db = copy.deepcopy(doc["a"]), copy.deepcopy(doc["b"])
    else:
        da = copy.deepcopy(doc)
        compare = da.pop("compare", None)
        db = copy.deepcopy(da)
        if compare is None:
            compare = {"variant": _flip(da.get("variant", "exponential")),
                       "seed": (int(da.get("seed", 0)) + 1) % 2**SEED_BITS}
        if not isinstance(compare, dict):
            raise ConfigurationError("'compare' must be an object of overrides")
        db.update(copy.deepcopy(compare))
    if seed is not None:
        da["seed"], db["seed"] = seed, (seed + 1) % 2**SEED_BITS
    if samples is not None:
        da["samples"] = db["samples"] = samples
    return Scenario.from_dict(da), Scenario.from_dict(db)


def _load_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON ({exc})") from exc


def cmd_lawtest(cfg):
    sA, sB = lawtest_pair(_load_json(cfg.input), cfg.seed, cfg.samples)
    rep = law_equality_experiment(sA, sB, n_perm=cfg.n_perm, force=cfg.force, workers=cfg.workers)
    report = _header(cfg, sA)
    report.update(rep.to_dict())
    report["seed"] = [sA.seed, sB.seed]
    report["samples"] = [sA.samples, sB.samples]
    report["variant"] = [sA.variant, sB.variant]
    _write_json(cfg.out / "lawtest.json", report)
    rep.ks_csv(cfg.out / "lawtest_ks.csv")
    log.info("energy statistic %.6g, permutation p-value %.4g", rep.energy_statistic, rep.pvalue)
    return [cfg.out / "lawtest.json", cfg.out / "lawtest_ks.csv"]


class BoundViolation(LevyConvError):
    pass


def cmd_verify_bounds(cfg):
    s = _scenario(cfg)
    report = _header(cfg, s)
    results = {"maximal_ratio": maximal_ratio_experiment(s, cfg.q).to_dict()}
    if s.components.op.invertible:
        results["analytic_bound"] = analytic_bound_experiment(s).to_dict()
    report.update(results)
    _write_json(cfg.out / "bounds.json", report)
    ab = results.get("analytic_bound")
    if ab is not None and not ab["holds"]:
        raise BoundViolation(f"lhs {ab['lhs']:.6g} exceeds rhs {ab['rhs']:.6g}")
    return [cfg.out / "bounds.json"]


COMMANDS = {
    "simulate": cmd_simulate,
    "convolve": cmd_convolve,
    "project": cmd_project,
    "distance": cmd_distance,
    "lawtest": cmd_lawtest,
    "verify-bounds": cmd_verify_bounds,
}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    cfg = _config(ns)
    logging.basicConfig(level=logging.WARNING - 10 * min(cfg.verbosity, 2),
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        cfg.out.mkdir(parents=True, exist_ok=True)
        written = COMMANDS[cfg.command](cfg)
    except (ConfigurationError, InvalidInputError, ResolutionError) as exc:
        print(f"levyconv {cfg.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except (FileNotFoundError, IsADirectoryError, PermissionError, UnicodeDecodeError) as exc:
        print(f"levyconv {cfg.command}: cannot read input: {exc}", file=sys.stderr)
        return 2
    except BoundViolation as exc:
        print(f"levyconv {cfg.command}: bound violated: {exc}", file=sys.stderr)
        return 1
    except (LevyConvError, ArithmeticError, MemoryError, OSError) as exc:
        print(f"levyconv {cfg.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    for p in written:
        print(p)
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
