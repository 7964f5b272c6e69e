"""Command-line front end.

Subcommands: simulate, exact, laplace, mean-tau, tv, cutoff, limit, verify,
validate-marginals.  Every run writes its artifact (CSV or JSON) plus a
``<file>.meta.json`` sidecar with the seed, parameters, and versions; with
no --out the artifact goes to stdout and no sidecar is written.  Flags win
over values from an optional JSON config file (--config).

Exit codes: 0 success, 2 invalid configuration, 1 runtime failure,
3 internal assertion failure.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__, exact, io, optimality, simulate, tvcutoff
from .ratfun import format_rational
from .states import WalkParams
from .strategies import Strategy

_STRATEGY_NAMES = [s.value for s in Strategy]


@dataclass
class ExperimentConfig:
    """Merged, validated run parameters (flags over config file)."""

    d: int | None = None
    n: int | None = None
    m: int | None = None
    m_max: int | None = None
    strategy: str | None = None
    replicates: int = 100_000
    seed: int = 0
    eps: float = 1e-12
    horizon: float = 10.0
    out: str | None = None
    fmt: str = "csv"
    workers: int | None = None
    t_values: list[float] | None = None
    t_start: float = 0.0
    t_stop: float = 10.0
    t_points: int = 50
    t_spacing: str = "linear"
    theta: list[float] | None = None
    d_list: list[int] | None = None
    samples: int = 50

    def validate(self):
        if self.d is not None and self.d < 2:
            raise ValueError("d must be >= 2")
        if self.n is not None and self.n < 1:
            raise ValueError("n must be >= 1")
        if self.m is not None and self.m < 0:
            raise ValueError("m must be >= 0")
        if self.m_max is not None and self.m_max < 1:
            raise ValueError("mmax must be >= 1")
        if self.replicates < 100:
            raise ValueError("replicates must be >= 100")
        if not (0.0 < self.eps <= 1e-2):
            raise ValueError("eps must lie in (0, 1e-2]")
        if self.fmt not in ("csv", "json"):
            raise ValueError("format must be csv or json")
        if self.t_spacing not in ("linear", "log"):
            raise ValueError("t-spacing must be linear or log")
        if self.t_points < 1:
            raise ValueError("t-points must be >= 1")
        return self

    def t_grid(self) -> np.ndarray:
        if self.t_values is not None:
            return np.asarray(self.t_values, dtype=float)
        if self.t_spacing == "log":
            if self.t_start <= 0:
                raise ValueError("log spacing needs t-start > 0")
            return np.geomspace(self.t_start, self.t_stop, self.t_points)
        return np.linspace(self.t_start, self.t_stop, self.t_points)


def _csv_floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip() != ""]


def _csv_ints(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip() != ""]


def _add_common(p: argparse.ArgumentParser, grid: bool = True):
    p.add_argument("--config", type=str, help="JSON config file; flags win")
    p.add_argument("--out", type=str, help="output file (default: stdout)")
    p.add_argument("--format", dest="fmt", choices=["csv", "json"], default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--eps", type=float, default=None, help="certified error bound")
    p.add_argument("--workers", type=int, default=None,
                   help="replicate-chunk workers (default: COWALK_WORKERS or 1)")
    if grid:
        p.add_argument("--t", type=str, default=None,
                       help="comma-separated time points (overrides grid flags)")
        p.add_argument("--t-start", type=float, default=None)
        p.add_argument("--t-stop", type=float, default=None)
        p.add_argument("--t-points", type=int, default=None)
        p.add_argument("--t-spacing", choices=["linear", "log"], default=None)


def _build_config(args: argparse.Namespace) -> ExperimentConfig:
    cfg = ExperimentConfig()
    if getattr(args, "config", None):
        with open(args.config) as fh:
            file_vals = json.load(fh)
        unknown = set(file_vals) - {f for f in cfg.__dataclass_fields__}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        for key, val in file_vals.items():
            setattr(cfg, key, val)
    mapping = {
        "d": "d", "n": "n", "m": "m", "mmax": "m_max", "strategy": "strategy",
        "replicates": "replicates", "seed": "seed", "eps": "eps",
        "horizon": "horizon", "out": "out", "fmt": "fmt", "workers": "workers",
        "t_start": "t_start", "t_stop": "t_stop", "t_points": "t_points",
        "t_spacing": "t_spacing", "samples": "samples",
    }
    for arg_name, cfg_name in mapping.items():
        val = getattr(args, arg_name, None)
        if val is not None:
            setattr(cfg, cfg_name, val)
    if getattr(args, "t", None) is not None:
        cfg.t_values = _csv_floats(args.t)
    if getattr(args, "theta", None) is not None:
        cfg.theta = _csv_floats(args.theta)
    if getattr(args, "d_list", None) is not None:
        cfg.d_list = _csv_ints(args.d_list)
    return cfg.validate()


def _emit(cfg: ExperimentConfig, command: str, writer_csv, payload) -> None:
    """Write the artifact per --out/--format, plus the metadata sidecar."""
    if cfg.out is None:
        if cfg.fmt == "json" or writer_csv is None:
            json.dump(io.to_jsonable(payload), sys.stdout, indent=2, sort_keys=True)
            sys.stdout.write("\n")
        else:
            import tempfile

            with tempfile.NamedTemporaryFile("w+", suffix=".csv", delete=False) as fh:
                pass
            writer_csv(Path(fh.name))
            sys.stdout.write(Path(fh.name).read_text())
            Path(fh.name).unlink()
        return
    path = Path(cfg.out)
    if cfg.fmt == "json" or writer_csv is None:
        io.write_json(payload, path)
    else:
        writer_csv(path)
    io.write_metadata(path, command, {k: v for k, v in vars(cfg).items() if k != "out"},
                      cfg.seed)
    print(f"wrote {path}", file=sys.stderr)


def _require(cfg: ExperimentConfig, *names):
    for name in names:
        if getattr(cfg, name) is None:
            raise ValueError(f"missing required parameter --{name.replace('_', '-')}")


# ---------------------------------------------------------------------------
# subcommand handlers


def _cmd_simulate(cfg: ExperimentConfig):
    _require(cfg, "d", "m", "strategy")
    curve = simulate.estimate_survival(Strategy(cfg.strategy), cfg.d, cfg.m,
                                       cfg.t_grid(), cfg.replicates, cfg.seed,
                                       n_workers=cfg.workers)
    _emit(cfg, "simulate", lambda p: io.write_survival_csv(curve, p), curve)


def _cmd_exact(cfg: ExperimentConfig):
    _require(cfg, "d")
    if cfg.m is None and cfg.m_max is None:
        raise ValueError("need --m or --mmax")
    m_max = cfg.m_max if cfg.m_max is not None else max(cfg.m, 1)
    table = exact.survival_table(cfg.d, m_max, cfg.t_grid(), cfg.eps)
    if cfg.m_max is None:
        table = exact.TailTable(d=table.d, m_max=cfg.m, t_grid=table.t_grid,
                                values=table.values[: cfg.m + 1], eps=table.eps,
                                uniformization_rate=table.uniformization_rate,
                                n_terms=table.n_terms)
    _emit(cfg, "exact", lambda p: io.write_tail_csv(table, p), table)


def _cmd_laplace(cfg: ExperimentConfig):
    _require(cfg, "d", "m")
    d, m = cfg.d, cfg.m
    rows = []
    for level in range(0, m + 1):
        entry = {"m": level, "V": format_rational(exact.laplace_V(d, level))}
        if level >= 1:
            entry["R"] = format_rational(exact.laplace_R(d, level))
            entry["expected_tau"] = str(exact.expected_tau(d, level))
        rows.append(entry)
    from .ratfun import Poly, RationalFn

    checks = {
        "V1_closed_form":
            exact.laplace_V(d, 1) == RationalFn(Poly([d - 1]), Poly([d, d - 1])),
        "R2_closed_form":
            exact.laplace_R(d, 2)
            == RationalFn(Poly([d - 2]), Poly([2, 1]) * Poly([d, d - 1])),
        "R1_minus_R2_is_1_over_2_plus_alpha":
            exact.laplace_R(d, 1) - exact.laplace_R(d, 2)
            == RationalFn(Poly([1]), Poly([2, 1])),
    }
    if d >= 4:
        checks["R2_minus_R3_closed_form"] = (
            exact.laplace_R(d, 2) - exact.laplace_R(d, 3)
            == RationalFn(Poly([d - 4]), Poly([2, 1]) * Poly([3, 1]) * Poly([d - 1])))
    payload = {"d": d, "levels": rows, "identities": {k: bool(v) for k, v in checks.items()}}
    _emit(cfg, "laplace", None, payload)


def _cmd_mean_tau(cfg: ExperimentConfig):
    _require(cfg, "d")
    payload: dict = {"d": cfg.d}
    if cfg.m is not None:
        value = exact.expected_tau(cfg.d, cfg.m)
        payload["m"] = cfg.m
        payload["expected_tau"] = str(value)
        payload["expected_tau_float"] = float(value)
        if cfg.m % 2 == 0 and cfg.m > 0:
            half = cfg.m // 2
            lower = exact.mk_bound_mean(2, half)
            upper = exact.mk_bound_mean(1, cfg.m)
            payload["sandwich"] = {
                "lower": str(lower), "upper": str(upper),
                "holds": bool(lower <= value <= upper),
            }
    if cfg.n is not None:
        mean = tvcutoff.mean_tau_stationary(cfg.d, cfg.n)
        mean_f = float(mean)
        payload["n"] = cfg.n
        payload["mean_tau_stationary"] = str(mean) if isinstance(mean, Fraction) else mean
        payload["mean_tau_stationary_float"] = mean_f
        if cfg.n > 1:
            ratio = mean_f / math.log(cfg.n)
            payload["log_n"] = math.log(cfg.n)
            payload["ratio_to_log_n"] = ratio
            payload["in_half_to_one"] = bool(0.5 <= ratio <= 1.0)
    _emit(cfg, "mean-tau", None, payload)


def _cmd_tv(cfg: ExperimentConfig):
    _require(cfg, "d", "n")
    grid = cfg.t_grid()
    values = [tvcutoff.tv_exact(cfg.d, cfg.n, t) for t in grid]

    def write(path):
        import csv as _csv

        with open(path, "w", newline="") as fh:
            w = _csv.writer(fh)
            w.writerow(["t", "tv_exact"])
            for t, v in zip(grid, values):
                w.writerow([repr(float(t)), repr(float(v))])

    _emit(cfg, "tv", write, {"d": cfg.d, "n": cfg.n,
                             "t": list(map(float, grid)), "tv_exact": values})


def _cmd_cutoff(cfg: ExperimentConfig):
    _require(cfg, "d", "n")
    theta = cfg.theta if cfg.theta is not None else [-1.0, 0.0, 1.0]
    points = tvcutoff.cutoff_profile(cfg.d, cfg.n, theta)
    _emit(cfg, "cutoff", lambda p: io.write_cutoff_csv(points, p), points)


def _cmd_limit(cfg: ExperimentConfig):
    _require(cfg, "n")
    grid = cfg.t_grid()
    payload: dict = {"n": cfg.n, "t": list(map(float, grid)),
                     "limit_tail": list(map(float, tvcutoff.limit_tail(cfg.n, grid)))}
    if cfg.d_list:
        gaps = tvcutoff.dinfty_convergence(cfg.n, cfg.d_list, grid, cfg.eps)
        payload["gaps"] = gaps
        payload["strictly_decreasing"] = bool(
            all(a.sup_gap > b.sup_gap for a, b in zip(gaps, gaps[1:])))

    def write(path):
        import csv as _csv

        with open(path, "w", newline="") as fh:
            w = _csv.writer(fh)
            w.writerow(["t", "limit_tail"])
            for t, v in zip(payload["t"], payload["limit_tail"]):
                w.writerow([repr(t), repr(v)])

    _emit(cfg, "limit", write, payload)


def _cmd_verify(cfg: ExperimentConfig):
    _require(cfg, "d", "m_max")
    grid = cfg.t_grid()
    grid = grid[grid > 0]  # t = 0 objectives vanish identically
    if grid.size == 0:
        raise ValueError("verify needs at least one positive time point")
    argmax = optimality.verify_argmax_grid(cfg.d, cfg.m_max, grid, cfg.eps)
    statuses = {}
    for cell in argmax.cells:
        statuses[f"m={cell.m},t={cell.t:g}"] = cell.status
    rng_gaps = []
    for m in range(1, cfg.m_max + 1):
        tails = exact.survival_table(cfg.d, m + 2, grid, cfg.eps).values
        for j, t in enumerate(grid):
            for sched in optimality.sample_feasible_schedules(
                    cfg.d, m, cfg.samples, seed=cfg.seed + 7919 * m + j):
                rng_gaps.append(optimality.bellman_gap(
                    cfg.d, m, float(t), sched, tails=tails[:, j]))
    dominance = {}
    m0 = min(max(2, cfg.m_max // 2), cfg.m_max)
    for comp in (Strategy.INDEPENDENT, Strategy.SYNCHRONOUS, Strategy.PAIRWISE_CLASSIC):
        rep = optimality.dominance_test(cfg.d, m0, comp, grid,
                                        cfg.replicates, cfg.seed, cfg.eps,
                                        n_workers=cfg.workers)
        dominance[comp.value] = {"passed": rep.passed,
                                 "violations": list(rep.violations),
                                 "max_deficit": rep.max_deficit}
    sign_table = exact.r_diff_table(cfg.d, cfg.m_max, grid, cfg.eps)
    payload = {
        "d": cfg.d, "m_max": cfg.m_max, "eps": cfg.eps,
        "argmax": {"cells": statuses, "violations": argmax.n_violations,
                   "ties": argmax.n_ties,
                   "all_equal_optimal": bool(all(c.equals_optimal for c in argmax.cells))},
        "bellman": {"sampled": len(rng_gaps), "max_gap": max(rng_gaps),
                    "all_nonpositive_within_slack": bool(max(rng_gaps) <= 4 * cfg.eps * cfg.m_max)},
        "dominance": dominance,
        "sign_tables": {
            "undetermined_cells": len(sign_table.undetermined_cells()),
            "r_nonpositive_rows": sorted({
                int(sign_table.r_rows[i])
                for i, j in zip(*np.nonzero(~np.isin(sign_table.r_certs, ["positive"])))}),
        },
    }
    _emit(cfg, "verify", None, payload)


def _cmd_validate_marginals(cfg: ExperimentConfig):
    _require(cfg, "d", "n", "strategy")
    report = simulate.validate_marginals(Strategy(cfg.strategy),
                                         WalkParams(d=cfg.d, n=cfg.n),
                                         cfg.horizon, cfg.replicates, cfg.seed)
    payload = io.to_jsonable(report)
    payload["passed"] = report.passed
    _emit(cfg, "validate-marginals", None, payload)


_HANDLERS = {
    "simulate": _cmd_simulate,
    "exact": _cmd_exact,
    "laplace": _cmd_laplace,
    "mean-tau": _cmd_mean_tau,
    "tv": _cmd_tv,
    "cutoff": _cmd_cutoff,
    "limit": _cmd_limit,
    "verify": _cmd_verify,
    "validate-marginals": _cmd_validate_marginals,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cowalk",
        description="Couplings of random walks on products of complete graphs",
    )
    parser.add_argument("--version", action="version", version=f"cowalk {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="empirical survival curve of a coupling")
    p.add_argument("--d", type=int)
    p.add_argument("--m", "--m0", dest="m", type=int, help="initial unmatched count")
    p.add_argument("--strategy", choices=_STRATEGY_NAMES)
    p.add_argument("--replicates", "-R", type=int, default=None)
    _add_common(p)

    p = sub.add_parser("exact", help="certified tail probabilities of the optimum")
    p.add_argument("--d", type=int)
    p.add_argument("--m", type=int, help="single start level")
    p.add_argument("--mmax", type=int, help="tabulate all levels up to mmax")
    _add_common(p)

    p = sub.add_parser("laplace", help="exact transforms and identities")
    p.add_argument("--d", type=int)
    p.add_argument("--m", type=int)
    _add_common(p, grid=False)

    p = sub.add_parser("mean-tau", help="exact expected coupling times and bounds")
    p.add_argument("--d", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--n", type=int, help="coordinates, for the uniform-start mean")
    _add_common(p, grid=False)

    p = sub.add_parser("tv", help="exact total-variation distance from uniform")
    p.add_argument("--d", type=int)
    p.add_argument("--n", type=int)
    _add_common(p)

    p = sub.add_parser("cutoff", help="TV cutoff profile vs the normal asymptotic")
    p.add_argument("--d", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--theta", type=str, help="comma-separated offsets")
    _add_common(p, grid=False)

    p = sub.add_parser("limit", help="large-d limiting tail and convergence gaps")
    p.add_argument("--n", type=int)
    p.add_argument("--d-list", type=str, help="comma-separated increasing d values")
    _add_common(p)

    p = sub.add_parser("verify", help="optimality certification report")
    p.add_argument("--d", type=int)
    p.add_argument("--mmax", type=int)
    p.add_argument("--replicates", "-R", type=int, default=None)
    p.add_argument("--samples", type=int, default=None,
                   help="random feasible rate schedules per cell")
    _add_common(p)

    p = sub.add_parser("validate-marginals", help="chi-square marginal-law checks")
    p.add_argument("--d", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--strategy", choices=["optimal", "independent", "synchronous"])
    p.add_argument("--horizon", "-T", type=float, default=None)
    p.add_argument("--replicates", "-R", type=int, default=None)
    _add_common(p, grid=False)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _build_config(args)
    except (ValueError, OSError, json.JSONDecodeError) as err:
        print(f"error: invalid configuration: {err}", file=sys.stderr)
        return 2
    try:
        _HANDLERS[args.command](cfg)
    except AssertionError as err:
        print(f"error: internal assertion failed: {err}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2 if isinstance(err, ValueError) else 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
