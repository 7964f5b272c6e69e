"""Event-driven simulation of coupled walks and empirical survival curves.

For every built-in strategy the unmatched count N is an autonomous Markov
chain, so coupling times are sampled from the lumped jump chain of N; the
full-coordinate construction (explicit state vectors, one event per accepted
Poisson mark) is retained for validating that each chain's marginal law is a
correct random walk.  Equivalence of the two views is a tested property via
``strategies.lump_rates``.

Randomness contract: a master seed is split per replicate chunk through
``numpy.random.SeedSequence``; inside a chunk, replicate r owns row r of a
counter-based (Philox) uniform block.  Replicates are therefore independent,
reproducible, and safe to fan out across workers; aggregation is a
deterministic reduction by chunk index.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import _kernels
from .states import WalkParams, hamming
from .strategies import Strategy, rate_table
from ._kernels import INDEPENDENT_CODE, OPTIMAL_CODE, SYNCHRONOUS_CODE

__all__ = [
    "ReplicateResult",
    "SurvivalCurve",
    "ChiSquareResult",
    "MarginalReport",
    "simulate_coupling",
    "sample_coupling_times",
    "estimate_survival",
    "validate_marginals",
    "default_workers",
]

_CHUNK = 1 << 15


def default_workers() -> int:
    return max(1, int(os.environ.get("COWALK_WORKERS", "1")))


@dataclass(frozen=True)
class ReplicateResult:
    """One sampled coupling: time to full agreement and jump count of N."""

    tau: float
    n_jumps: int
    seed: int


@dataclass(frozen=True)
class SurvivalCurve:
    """P(tau > t) on a grid; empirical with Wald half-widths, or exact."""

    t_grid: np.ndarray
    value: np.ndarray
    half_width_95: np.ndarray
    half_width_3sigma: np.ndarray
    replicates: int
    kind: str = "empirical"
    eps: float | None = None  # certified bound, exact kind only


def _chunk_bounds(replicates: int, m0: int):
    chunk = _CHUNK
    if m0 > 0:
        chunk = max(1, min(chunk, (1 << 24) // max(m0, 1)))
    return [(lo, min(lo + chunk, replicates)) for lo in range(0, replicates, chunk)]


def _run_lumped_chunk(seed, index, lo, hi, total, p2, m0, t_max):
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence((seed, index))))
    u = rng.random((hi - lo, m0, 2))
    exp_draws = -np.log1p(-u[:, :, 0])  # holding-time deviates, host-side
    return _kernels.lumped_batch(total, p2, m0, t_max, exp_draws, u[:, :, 1])


def sample_coupling_times(strategy: Strategy, d: int, m0: int, replicates: int,
                          seed: int, t_max: float = math.inf,
                          n_workers: int | None = None):
    """Coupling times (and N-jump counts) of ``replicates`` independent runs
    started at unmatched count m0.  Censored runs (no possible move, or
    absorption after t_max) carry tau = +inf."""
    if m0 < 0:
        raise ValueError("m0 must be >= 0")
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    if t_max <= 0:
        raise ValueError("t_max must be positive")
    total, p2 = rate_table(Strategy(strategy), d, max(m0, 1))
    bounds = _chunk_bounds(replicates, m0)
    n_workers = n_workers or default_workers()
    tau = np.empty(replicates)
    njumps = np.empty(replicates, dtype=np.int64)

    def run(idx):
        lo, hi = bounds[idx]
        return idx, _run_lumped_chunk(seed, idx, lo, hi, total, p2, m0, t_max)

    if n_workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(run, range(len(bounds))))
    else:
        results = [run(i) for i in range(len(bounds))]
    for idx, (tau_c, nj_c) in results:
        lo, hi = bounds[idx]
        tau[lo:hi] = tau_c
        njumps[lo:hi] = nj_c
    return tau, njumps


def simulate_coupling(strategy: Strategy, params: WalkParams, x0, y0,
                      seed: int, t_max: float = math.inf) -> ReplicateResult:
    """Simulate one coupled run from (x0, y0) until the chains agree."""
    m0 = hamming(x0, y0)
    if len(np.asarray(x0)) != params.n:
        raise ValueError("state length does not match params.n")
    if m0 == 0:
        return ReplicateResult(tau=0.0, n_jumps=0, seed=seed)
    tau, nj = sample_coupling_times(strategy, params.d, m0, 1, seed, t_max)
    return ReplicateResult(tau=float(tau[0]), n_jumps=int(nj[0]), seed=seed)


def estimate_survival(strategy: Strategy, d: int, start, t_grid, replicates: int,
                      seed: int, n_workers: int | None = None) -> SurvivalCurve:
    """Empirical survival curve of the coupling time.

    ``start`` is either an initial unmatched count m0 or a pair of states
    (x0, y0).  Runs not absorbed by max(t_grid) are censored, which still
    gives unbiased pointwise estimates on the grid.
    """
    t_grid = np.atleast_1d(np.asarray(t_grid, dtype=float))
    if t_grid.size == 0:
        raise ValueError("empty time grid")
    if replicates < 100:
        raise ValueError("need at least 100 replicates")
    if isinstance(start, (int, np.integer)):
        m0 = int(start)
    else:
        x0, y0 = start
        m0 = hamming(x0, y0)
    t_max = float(t_grid.max())
    tau, _ = sample_coupling_times(strategy, d, m0, replicates, seed,
                                   t_max=np.inf if t_max == 0 else t_max * (1 + 1e-12),
                                   n_workers=n_workers)
    value = (tau[None, :] > t_grid[:, None]).mean(axis=1)
    sigma = np.sqrt(value * (1.0 - value) / replicates)
    return SurvivalCurve(t_grid=t_grid, value=value,
                         half_width_95=1.959963984540054 * sigma,
                         half_width_3sigma=3.0 * sigma,
                         replicates=replicates, kind="empirical")


# ---------------------------------------------------------------------------
# marginal-law validation


@dataclass(frozen=True)
class ChiSquareResult:
    name: str
    statistic: float
    dof: int
    p_value: float
    p_bonferroni: float = field(default=float("nan"))


@dataclass(frozen=True)
class MarginalReport:
    """Chi-square validation that both chains are correct random walks."""

    strategy: str
    d: int
    n: int
    horizon: float
    replicates: int
    tests: tuple[ChiSquareResult, ...]
    mean_changes_x: float
    mean_changes_y: float
    all_moves_joint: bool
    alpha: float = 1e-3

    @property
    def passed(self) -> bool:
        return all(t.p_bonferroni > self.alpha for t in self.tests)


_STRATEGY_CODES = {
    Strategy.OPTIMAL: OPTIMAL_CODE,
    Strategy.INDEPENDENT: INDEPENDENT_CODE,
    Strategy.SYNCHRONOUS: SYNCHRONOUS_CODE,
}


def _poisson_chisq(counts: np.ndarray, mean: float, name: str) -> ChiSquareResult:
    """Chi-square of observed counts against Poisson(mean), tail-pooled."""
    n_obs = counts.size
    hi = int(stats.poisson.isf(1e-9, mean)) + 1
    pmf = stats.poisson.pmf(np.arange(hi), mean)
    # pool bins from the right until every expected count is >= 5
    expected = pmf * n_obs
    edges = [0]
    acc = 0.0
    for k in range(hi):
        acc += expected[k]
        if acc >= 5.0:
            edges.append(k + 1)
            acc = 0.0
    if len(edges) < 3:
        raise ValueError("horizon too short for a Poisson chi-square")
    edges[-1] = hi
    observed = np.histogram(np.minimum(counts, hi - 1), bins=edges)[0].astype(float)
    probs = np.add.reduceat(pmf, edges[:-1])
    probs[-1] += 1.0 - pmf.sum()
    stat, p = stats.chisquare(observed, probs * n_obs)
    return ChiSquareResult(name=name, statistic=float(stat), dof=len(probs) - 1,
                           p_value=float(p))


def _uniform_chisq(hist: np.ndarray, name: str) -> ChiSquareResult:
    total = hist.sum()
    if total == 0:
        raise ValueError("no increments observed")
    stat, p = stats.chisquare(hist.astype(float))
    return ChiSquareResult(name=name, statistic=float(stat), dof=hist.size - 1,
                           p_value=float(p))


def validate_marginals(strategy: Strategy, params: WalkParams, horizon: float,
                       replicates: int, seed: int) -> MarginalReport:
    """Full-coordinate simulation over [0, horizon] plus chi-square checks.

    Both chains start unmatched in every coordinate (x = 0, y = 1 shifted),
    which exercises the coupled moves; per-coordinate value-change counts
    are tested against Poisson(horizon) and pooled increments against the
    uniform law on {1, .., d-1}, separately for X and Y.
    """
    strategy = Strategy(strategy)
    if strategy not in _STRATEGY_CODES:
        raise ValueError(f"{strategy.value} has no full-coordinate realization")
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    code = _STRATEGY_CODES[strategy]
    d, n = params.d, params.n
    x0 = np.zeros(n, dtype=np.int64)
    y0 = np.ones(n, dtype=np.int64)
    rate_dom = _kernels._DOMINATING_BLOCK_RATE * n

    xchg_all = []
    ychg_all = []
    xinc = np.zeros(d, dtype=np.int64)
    yinc = np.zeros(d, dtype=np.int64)
    joint_total = 0
    move_total = 0
    for idx, (lo, hi) in enumerate(_chunk_bounds(replicates, 1)):
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence((seed, idx))))
        ev_count = rng.poisson(rate_dom * horizon, hi - lo).astype(np.int64)
        offsets = np.zeros(hi - lo + 1, dtype=np.int64)
        np.cumsum(ev_count, out=offsets[1:])
        u = rng.random((int(offsets[-1]), 4))
        xchg, ychg, xi, yi, joint = _kernels.marginal_batch(
            code, d, n, x0, y0, ev_count, offsets[:-1], u)
        xchg_all.append(xchg)
        ychg_all.append(ychg)
        xinc += xi
        yinc += yi
        joint_total += int(joint.sum())
        move_total += int(xchg.sum() + ychg.sum())
    xchg = np.concatenate(xchg_all)
    ychg = np.concatenate(ychg_all)

    tests = [
        _poisson_chisq(xchg.ravel(), horizon, "x_changes_poisson"),
        _poisson_chisq(ychg.ravel(), horizon, "y_changes_poisson"),
        _uniform_chisq(xinc[1:], "x_increments_uniform"),
        _uniform_chisq(yinc[1:], "y_increments_uniform"),
    ]
    k = len(tests)
    tests = tuple(
        ChiSquareResult(t.name, t.statistic, t.dof, t.p_value,
                        min(1.0, t.p_value * k))
        for t in tests
    )
    return MarginalReport(
        strategy=strategy.value, d=d, n=n, horizon=horizon, replicates=replicates,
        tests=tests,
        mean_changes_x=float(xchg.mean()), mean_changes_y=float(ychg.mean()),
        all_moves_joint=bool(2 * joint_total == move_total),
    )
