"""Hot simulation loops, compiled with numba when available.

Backend selection: set ``COWALK_BACKEND=numpy`` to force the uncompiled
fallback (vectorized numpy for the lumped kernel, plain Python for the
event kernel); ``COWALK_BACKEND=numba`` to require numba.  Default is numba
when importable.  Both backends consume pre-generated uniform deviates
positionally, so results agree across backends and replicate chunks can run
in parallel with a deterministic reduction.

Strategy codes for the event kernel: 0 optimal, 1 independent, 2 synchronous.
"""
from __future__ import annotations

import math
import os

import numpy as np

OPTIMAL_CODE = 0
INDEPENDENT_CODE = 1
SYNCHRONOUS_CODE = 2

_env = os.environ.get("COWALK_BACKEND", "").strip().lower()
if _env not in ("", "numba", "numpy"):
    raise RuntimeError(f"COWALK_BACKEND must be 'numba' or 'numpy', got {_env!r}")

if _env in ("", "numba"):
    try:
        from numba import njit

        _HAVE_NUMBA = True
    except ImportError:
        if _env == "numba":
            raise
        _HAVE_NUMBA = False
else:
    _HAVE_NUMBA = False

USE_NUMBA = _HAVE_NUMBA


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# lumped death-chain batch


def _lumped_batch_loop(total, p2, m0, t_max, exp_draws, u_jump, tau, njumps):
    """Per-replicate jump chain of the unmatched count.

    total[m]: exit rate at level m; p2[m]: probability a jump is -2.
    exp_draws: (R, m0) unit-mean exponential deviates (transformed on the
    host so both backends see bit-identical inputs); u_jump: (R, m0)
    uniforms.  Consumed positionally.  tau is +inf when the chain cannot
    move or absorption exceeds t_max.
    """
    n_rep = exp_draws.shape[0]
    for r in range(n_rep):
        m = m0
        t = 0.0
        jumps = 0
        step = 0
        while m > 0:
            rate = total[m]
            if rate <= 0.0:
                t = math.inf
                break
            t += exp_draws[r, step] / rate
            if t > t_max:
                t = math.inf
                break
            if u_jump[r, step] < p2[m]:
                m -= 2
            else:
                m -= 1
            if m < 0:
                m = 0
            jumps += 1
            step += 1
        tau[r] = t
        njumps[r] = jumps


def _lumped_batch_numpy(total, p2, m0, t_max, exp_draws, u_jump, tau, njumps):
    """Vectorized fallback; identical draw consumption per replicate."""
    n_rep = exp_draws.shape[0]
    m = np.full(n_rep, m0, dtype=np.int64)
    t = np.zeros(n_rep)
    done = np.zeros(n_rep, dtype=bool)
    for step in range(m0):
        live = ~done & (m > 0)
        if not live.any():
            break
        rate = total[m]
        stuck = live & (rate <= 0.0)
        t[stuck] = np.inf
        njumps[stuck] = step
        done |= stuck
        move = live & ~stuck
        dt = np.zeros(n_rep)
        dt[move] = exp_draws[move, step] / rate[move]
        t[move] += dt[move]
        censored = move & (t > t_max)
        t[censored] = np.inf
        njumps[censored] = step
        done |= censored
        move &= ~censored
        jump = np.where(u_jump[:, step] < p2[m], 2, 1)
        m[move] -= jump[move]
        np.maximum(m, 0, out=m)
        finished = move & (m == 0)
        njumps[finished] = step + 1
        done |= finished
    tau[:] = t


# ---------------------------------------------------------------------------
# full-coordinate event simulation (marginal validation)

_DOMINATING_BLOCK_RATE = 2.0  # >= per-coordinate pair-event rate of any strategy


def _marginal_batch_loop(code, d, n, x0, y0, ev_count, offsets, u,
                         xchg, ychg, xinc, yinc, joint_moves):
    """Thinned event loop for the coupled pair at full coordinate detail.

    Candidate events arrive at rate 2*n (the dominating rate); each consumes
    four uniforms: thinning, coordinate choice, row/class choice, sub-choice.
    Records per-coordinate value-change counts, pooled increment tallies
    (index by increment size 1..d-1), and per-replicate counts of events
    that moved both chains at once.
    """
    n_rep = ev_count.shape[0]
    x = np.empty(n, dtype=np.int64)
    y = np.empty(n, dtype=np.int64)
    for r in range(n_rep):
        for i in range(n):
            x[i] = x0[i]
            y[i] = y0[i]
        base = offsets[r]
        for e in range(ev_count[r]):
            row = base + e
            u0 = u[row, 0]
            u1 = u[row, 1]
            u2 = u[row, 2]
            u3 = u[row, 3]
            i = int(u1 * n)
            if i >= n:
                i = n - 1
            matched = x[i] == y[i]
            if code == OPTIMAL_CODE:
                block = d / (d - 1.0)
            elif code == INDEPENDENT_CODE:
                block = 1.0 if matched else 2.0
            else:
                block = 1.0
            if u0 * _DOMINATING_BLOCK_RATE >= block:
                continue

            if code == SYNCHRONOUS_CODE:
                delta = 1 + int(u2 * (d - 1))
                if delta >= d:
                    delta = d - 1
                x[i] = (x[i] + delta) % d
                y[i] = (y[i] + delta) % d
                xchg[r, i] += 1
                ychg[r, i] += 1
                xinc[delta] += 1
                yinc[delta] += 1
                joint_moves[r] += 1
                continue

            if code == INDEPENDENT_CODE:
                if matched:
                    k = int(u2 * (d - 1))
                    if k >= d - 1:
                        k = d - 2
                    if k >= x[i]:
                        k += 1
                    xinc[(k - x[i]) % d] += 1
                    yinc[(k - y[i]) % d] += 1
                    x[i] = k
                    y[i] = k
                    xchg[r, i] += 1
                    ychg[r, i] += 1
                    joint_moves[r] += 1
                else:
                    k = int(u3 * (d - 1))
                    if k >= d - 1:
                        k = d - 2
                    if u2 < 0.5:
                        if k >= x[i]:
                            k += 1
                        xinc[(k - x[i]) % d] += 1
                        x[i] = k
                        xchg[r, i] += 1
                    else:
                        if k >= y[i]:
                            k += 1
                        yinc[(k - y[i]) % d] += 1
                        y[i] = k
                        ychg[r, i] += 1
                continue

            # optimal strategy
            if matched:
                k = int(u2 * d)
                if k >= d:
                    k = d - 1
                if k != x[i]:
                    xinc[(k - x[i]) % d] += 1
                    yinc[(k - y[i]) % d] += 1
                    x[i] = k
                    y[i] = k
                    xchg[r, i] += 1
                    ychg[r, i] += 1
                    joint_moves[r] += 1
                continue
            n_unm = 0
            for c in range(n):
                if x[c] != y[c]:
                    n_unm += 1
            singles_mode = (n_unm % 2 == 1) and (n_unm * (d - 2) < 2 * (d - 1))
            if singles_mode:
                k = int(u2 * d)
                if k >= d:
                    k = d - 1
                moved_both = k != x[i] and k != y[i]
                if k != x[i]:
                    xinc[(k - x[i]) % d] += 1
                    x[i] = k
                    xchg[r, i] += 1
                if k != y[i]:
                    yinc[(k - y[i]) % d] += 1
                    y[i] = k
                    ychg[r, i] += 1
                if moved_both:
                    joint_moves[r] += 1
                continue
            c = int(u2 * d)
            if c >= d:
                c = d - 1
            if c == 0:
                # pairing row: X(i) makes a match, a uniformly-chosen other
                # unmatched coordinate of Y makes a second match
                target = int(u3 * (n_unm - 1))
                if target >= n_unm - 1:
                    target = n_unm - 2
                j = -1
                seen = 0
                for cc in range(n):
                    if cc != i and x[cc] != y[cc]:
                        if seen == target:
                            j = cc
                            break
                        seen += 1
                xinc[(y[i] - x[i]) % d] += 1
                x[i] = y[i]
                xchg[r, i] += 1
                yinc[(x[j] - y[j]) % d] += 1
                y[j] = x[j]
                ychg[r, j] += 1
                joint_moves[r] += 1
            elif c == 1:
                pass  # completion row: both chains keep their value
            else:
                k = c - 2
                lo = x[i] if x[i] < y[i] else y[i]
                hi = x[i] if x[i] > y[i] else y[i]
                if k >= lo:
                    k += 1
                if k >= hi:
                    k += 1
                xinc[(k - x[i]) % d] += 1
                yinc[(k - y[i]) % d] += 1
                x[i] = k
                y[i] = k
                xchg[r, i] += 1
                ychg[r, i] += 1
                joint_moves[r] += 1


if USE_NUMBA:
    _lumped_batch_jit = njit(cache=True, nogil=True)(_lumped_batch_loop)
    _marginal_batch_jit = njit(cache=True, nogil=True)(_marginal_batch_loop)


def lumped_batch(total, p2, m0, t_max, u_exp, u_jump):
    """Dispatch the lumped batch kernel; returns (tau, n_jumps)."""
    n_rep = u_exp.shape[0]
    tau = np.empty(n_rep)
    njumps = np.zeros(n_rep, dtype=np.int64)
    if m0 == 0:
        tau.fill(0.0)
        return tau, njumps
    args = (np.asarray(total), np.asarray(p2), m0, t_max, u_exp, u_jump, tau, njumps)
    if USE_NUMBA:
        _lumped_batch_jit(*args)
    else:
        _lumped_batch_numpy(*args)
    return tau, njumps


def marginal_batch(code, d, n, x0, y0, ev_count, offsets, u):
    """Dispatch the event kernel; returns (xchg, ychg, xinc, yinc, joint)."""
    n_rep = ev_count.shape[0]
    xchg = np.zeros((n_rep, n), dtype=np.int64)
    ychg = np.zeros((n_rep, n), dtype=np.int64)
    xinc = np.zeros(d, dtype=np.int64)
    yinc = np.zeros(d, dtype=np.int64)
    joint = np.zeros(n_rep, dtype=np.int64)
    fn = _marginal_batch_jit if USE_NUMBA else _marginal_batch_loop
    fn(code, d, n,
       np.ascontiguousarray(x0, dtype=np.int64),
       np.ascontiguousarray(y0, dtype=np.int64),
       ev_count, offsets, u, xchg, ychg, xinc, yinc, joint)
    return xchg, ychg, xinc, yinc, joint
