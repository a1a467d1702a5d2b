"""Skorokhod distance upper bounds for step paths on [0, 1].

The distance of interest is

    d0(x, y) = inf_lambda max(||lambda||_log, sup_t |x(t) - y(lambda(t))|)

over increasing homeomorphisms ``lambda`` of [0, 1], where
``||lambda||_log = sup_{s<t} |log((lambda(t) - lambda(s)) / (t - s))|``.

:func:`d0_upper` minimizes the same expression over piecewise-linear time
changes whose nodes lie on a lattice (order-``g`` dyadic points plus the jump
times of each path) and returns the value together with the minimizing
``lambda``. The value is then re-evaluated independently from the witness
(:func:`time_change_cost`), so every reported number is the cost of an
explicit admissible time change, hence an upper bound on ``d0``.

Lattice DP
----------
Between two consecutive jumps of ``x`` (columns) and of ``y`` (rows) both
paths are constant, so ``|x(t) - y(lambda(t))|`` along a segment is fixed by
its start node as long as the segment does not cross a jump of either path.
The searched class is the lattice time changes none of whose segments has a
jump of ``x`` or ``y`` strictly inside its time or value range. Within a
block between jumps, merging consecutive segments never increases the cost
(the merged slope lies between the two), so the DP only needs segments that
end on the next jump of either path. A segment from ``(t0, s0)`` to
``(t1, s1)`` contributes ``max(|x(t0) - y(s0)|, |log((s1 - s0) / (t1 - t0))|)``
and the path cost is the largest contribution together with the terminal
mismatch ``|x(1) - y(1)|``. Segments that cross a jump at a point off the
lattice are not in the class; refining ``g`` approximates them.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from levyconv.errors import InvalidInputError, ResourceError
from levyconv.paths import GridPath, PiecewiseConstPath

DEFAULT_BUDGET = 2**26
_CHUNK = 2**20
_TIE = 1e-12


@dataclass(frozen=True)
class TimeChange:
    """Piecewise-linear increasing bijection of [0, 1] through ``(t[i], lam[i])``."""

    t: np.ndarray
    lam: np.ndarray

    def __post_init__(self):
        t = np.array(self.t, dtype=float).reshape(-1)
        lam = np.array(self.lam, dtype=float).reshape(-1)
        if t.size != lam.size or t.size < 2:
            raise InvalidInputError("a time change needs at least two matching node pairs")
        if t[0] != 0 or lam[0] != 0 or t[-1] != 1 or lam[-1] != 1:
            raise InvalidInputError("a time change must fix 0 and 1")
        if np.any(np.diff(t) <= 0) or np.any(np.diff(lam) <= 0):
            raise InvalidInputError("a time change must be strictly increasing")
        t.setflags(write=False)
        lam.setflags(write=False)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "lam", lam)

    @classmethod
    def identity(cls):
        return cls([0.0, 1.0], [0.0, 1.0])

    @property
    def slopes(self):
        return np.diff(self.lam) / np.diff(self.t)

    def __call__(self, s):
        return np.interp(s, self.t, self.lam)

    def inverse(self):
        return TimeChange(self.lam, self.t)

    def to_csv(self, path):
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "lambda"])
            for a, b in zip(self.t, self.lam):
                w.writerow([f"{a:.17g}", f"{b:.17g}"])

    @classmethod
    def from_csv(cls, path):
        with open(path, encoding="utf-8", newline="") as fh:
            rows = list(csv.DictReader(fh))
        return cls([float(r["t"]) for r in rows], [float(r["lambda"]) for r in rows])


def lambda_log_norm(lam) -> float:
    """``max |log slope|`` over the segments of a piecewise-linear time change.

    Every difference quotient of a piecewise-linear map is a convex
    combination of segment slopes, so the extreme slopes attain the sup.
    ``lam`` is a :class:`TimeChange` or a ``(t, lambda)`` pair of node arrays.
    """
    if not isinstance(lam, TimeChange):
        t, l = lam
        lam = TimeChange(t, l)
    return float(np.max(np.abs(np.log(lam.slopes))))


def _as_step(x, horizon=None):
    if isinstance(x, GridPath):
        return x.to_piecewise_const(), x.horizon
    if isinstance(x, PiecewiseConstPath):
        return x, 1.0 if horizon is None else horizon
    raise InvalidInputError(f"expected a path, got {type(x).__name__}")


def _pair(x, y):
    xs, hx = _as_step(x)
    ys, hy = _as_step(y)
    if hx != hy:
        raise InvalidInputError(f"paths live on different horizons ({hx} vs {hy})")
    if xs.dim != ys.dim:
        raise InvalidInputError(f"paths have different dimensions ({xs.dim} vs {ys.dim})")
    return xs, ys


def sup_distance(x, y) -> float:
    """``sup_t |x(t) - y(t)|``, evaluated at 0 and at every jump of either path."""
    x, y = _pair(x, y)
    pts = np.unique(np.concatenate([[0.0], x.jump_times, y.jump_times]))
    return float(np.max(np.linalg.norm(x.at(pts) - y.at(pts), axis=-1)))


def time_change_cost(x, y, lam: TimeChange) -> float:
    """``max(||lam||_log, sup_t |x(t) - y(lam(t))|)`` evaluated exactly.

    ``t -> y(lam(t))`` jumps at ``lam^{-1}`` of the jumps of ``y``, so the
    difference is constant between consecutive points of
    ``{0, 1} U J(x) U lam^{-1}(J(y))``; it is sampled at the midpoint of
    every such interval and at ``t = 1``.
    """
    x, y = _pair(x, y)
    inv = lam.inverse()
    brk = np.unique(np.concatenate([[0.0, 1.0], x.jump_times, inv(y.jump_times)]))
    pts = np.concatenate([0.5 * (brk[:-1] + brk[1:]), [1.0]])
    sup = np.max(np.linalg.norm(x.at(pts) - y.at(lam(pts)), axis=-1))
    return max(lambda_log_norm(lam), float(sup))


def _lattice(g, jumps):
    return np.unique(np.concatenate([np.arange(2**g + 1) / 2**g, jumps]))


def _states(g, nx, ny):
    return (2**g + nx + 1) * (2**g + ny + 1)


def _check_budget(g, nx, ny, budget):
    if _states(g, nx, ny) <= budget:
        return
    best = g
    while best >= 1 and _states(best, nx, ny) > budget:
        best -= 1
    raise ResourceError(
        f"grid order {g} exceeds the lattice budget of {budget} cells; "
        f"largest feasible order is {best}",
        max_feasible=best if best >= 1 else None,
    )


class _Nodes:
    """Append-only store of DP node coordinates, values and predecessors."""

    def __init__(self):
        self.blocks = []
        self.size = 0

    def add(self, t, s, v, pred):
        base = self.size
        self.blocks.append((np.broadcast_to(np.asarray(t, float), v.shape).copy(),
                            np.broadcast_to(np.asarray(s, float), v.shape).copy(), v, pred))
        self.size += v.size
        return base + np.arange(v.size)

    def finish(self):
        t, s, _, pred = (np.concatenate(c) for c in zip(*self.blocks))
        return t, s, pred


def _relax(sx, sy, sW, sid, key, lo, hi, tx, ty):
    """Bottleneck relaxation of targets from a window of sorted sources.

    ``key`` (sorted, one entry per source) is searched for each target's
    ``[lo, hi]`` window; sources outside it cannot give a cost within the
    current pruning bound. Returns ``(value, predecessor id)`` per target.
    """
    nt = tx.size
    best = np.full(nt, np.inf)
    pred = np.full(nt, -1, dtype=np.int64)
    if nt == 0 or key.size == 0:
        return best, pred
    a = np.searchsorted(key, lo, side="left")
    b = np.searchsorted(key, hi, side="right")
    width = int(np.max(b - a, initial=0))
    if width <= 0:
        return best, pred
    step = max(1, _CHUNK // width)
    offs = np.arange(width)
    for c0 in range(0, nt, step):
        c1 = min(nt, c0 + step)
        idx = a[c0:c1, None] + offs
        valid = idx < b[c0:c1, None]
        idx = np.minimum(idx, key.size - 1)
        dy = ty[c0:c1, None] - sy[idx]
        dx = tx[c0:c1, None] - sx[idx]
        valid &= (dy > 0) & (dx > 0)
        with np.errstate(divide="ignore", invalid="ignore"):
            cost = np.abs(np.log(dy / dx))
        val = np.where(valid, np.maximum(sW[idx], cost), np.inf)
        arg = np.argmin(val, axis=1)
        rows = np.arange(c1 - c0)
        best[c0:c1] = val[rows, arg]
        pred[c0:c1] = np.where(np.isfinite(best[c0:c1]), sid[idx[rows, arg]], -1)
    return best, pred


def _lattice_dp(x, y, g, ub):
    """Lowest lattice cost, or ``inf`` if none is below ``ub``; plus the witness."""
    Lx = _lattice(g, x.jump_times)
    Ly = _lattice(g, y.jump_times)
    C = np.unique(np.concatenate([[0.0, 1.0], x.jump_times]))
    sig = np.unique(np.concatenate([[0.0, 1.0], y.jump_times]))
    Q = sig.size - 1
    eu = math.exp(ub) if math.isfinite(ub) else math.inf
    el = math.exp(-ub) if math.isfinite(ub) else 0.0
    cut = ub * (1 + _TIE) + _TIE

    nodes = _Nodes()
    colV = np.full(Ly.size, np.inf)
    colV[0] = 0.0
    col_id = nodes.add(0.0, Ly, colV, np.full(Ly.size, -1, dtype=np.int64))
    # per-cell index ranges in Ly: sources [sig_j, sig_j+1), targets (sig_j, sig_j+1]
    src_lo = np.searchsorted(Ly, sig[:-1], side="left")
    src_hi = np.searchsorted(Ly, sig[1:], side="left")
    tgt_lo = np.searchsorted(Ly, sig[:-1], side="right")
    tgt_hi = np.searchsorted(Ly, sig[1:], side="right")
    ylev = y.at(sig[:-1])

    for k in range(C.size - 1):
        c0, c1 = C[k], C[k + 1]
        inner = Lx[(Lx > c0) & (Lx < c1)]
        w = np.linalg.norm(x.at(c0) - ylev, axis=-1)  # mismatch on strip k, cell j
        newV = np.full(Ly.size, np.inf)
        newP = np.full(Ly.size, -1, dtype=np.int64)
        rowV = rowI = None
        for j in range(Q):
            sl = slice(src_lo[j], src_hi[j])
            s_src = Ly[sl]
            sW = np.maximum(colV[sl], w[j])
            sid = col_id[sl]
            live = np.isfinite(sW) & (sW <= cut)
            s_src, sW, sid = s_src[live], sW[live], sid[live]
            if rowV is not None:
                rW = np.maximum(rowV, w[j])
                rlive = np.isfinite(rW) & (rW <= cut)
                r_t, rW, rid = inner[rlive], rW[rlive], rowI[rlive]
            tl = slice(tgt_lo[j], tgt_hi[j])
            st = Ly[tl]
            # column k -> column k+1 inside cell j
            L = c1 - c0
            v, p = _relax(np.full(s_src.size, c0), s_src, sW, sid, s_src,
                          np.maximum(sig[j], st - L * eu), st - L * el,
                          np.full(st.size, c1), st)
            if rowV is not None:
                dy = st - sig[j]
                v2, p2 = _relax(r_t, np.full(r_t.size, sig[j]), rW, rid, r_t,
                                c1 - dy * eu, c1 - dy * el, np.full(st.size, c1), st)
                take = v2 < v
                v, p = np.where(take, v2, v), np.where(take, p2, p)
            better = v < newV[tl]
            newV[tl] = np.where(better, v, newV[tl])
            newP[tl] = np.where(better, p, newP[tl])
            # rows on the next y-jump, strictly inside the strip
            if j + 1 < Q and inner.size:
                top = sig[j + 1]
                dx = inner - c0
                v, p = _relax(np.full(s_src.size, c0), s_src, sW, sid, s_src,
                              np.maximum(sig[j], top - dx * eu), top - dx * el,
                              inner, np.full(inner.size, top))
                if rowV is not None:
                    h = top - sig[j]
                    v2, p2 = _relax(r_t, np.full(r_t.size, sig[j]), rW, rid, r_t,
                                    inner - h * eu, inner - h * el,
                                    inner, np.full(inner.size, top))
                    take = v2 < v
                    v, p = np.where(take, v2, v), np.where(take, p2, p)
                rowV = v
                rowI = nodes.add(inner, top, v, p)
            else:
                rowV = rowI = None
        colV = newV
        col_id = nodes.add(c1, Ly, newV, newP)

    end = colV[-1]
    if not np.isfinite(end):
        return math.inf, None
    t, s, pred = nodes.finish()
    path = [int(col_id[-1])]
    while pred[path[-1]] >= 0:
        path.append(int(pred[path[-1]]))
    path.reverse()
    value = max(float(end), float(np.linalg.norm(x.at(1.0) - y.at(1.0))))
    return value, TimeChange(t[path], s[path])


def _matched_jumps(x, y):
    """Time change pairing the k-th jump of ``x`` with the k-th of ``y``."""
    if x.jump_times.size != y.jump_times.size:
        return None
    t = np.concatenate([[0.0], x.jump_times, [1.0]])
    s = np.concatenate([[0.0], y.jump_times, [1.0]])
    keep = np.concatenate([[True], (t[1:-1] < 1) & (s[1:-1] < 1), [True]])
    t, s = t[keep], s[keep]
    if np.any(np.diff(t) <= 0) or np.any(np.diff(s) <= 0):
        return None
    return TimeChange(t, s)


def d0_upper(x, y, g, budget=DEFAULT_BUDGET):
    """Certified upper bound on ``d0(x, y)`` and the time change attaining it.

    Minimizes ``max(||lambda||_log, sup_t |x(t) - y(lambda(t))|)`` over
    piecewise-linear time changes with nodes on the order-``g`` dyadic
    lattice augmented by the jump times of both paths, then takes the minimum
    with :func:`sup_distance` (identity time change). The bound is
    nonincreasing in ``g``.

    Raises :class:`ResourceError` when the lattice exceeds ``budget`` cells.
    """
    if int(g) != g or g < 1:
        raise InvalidInputError(f"grid order must be an integer >= 1, got {g}")
    g = int(g)
    x, y = _pair(x, y)
    x, y = x.simplified(), y.simplified()
    _check_budget(g, x.jump_times.size, y.jump_times.size, budget)

    ident = TimeChange.identity()
    best, witness = time_change_cost(x, y, ident), ident
    guess = _matched_jumps(x, y)
    if guess is not None:
        cost = time_change_cost(x, y, guess)
        if cost < best:
            best, witness = cost, guess
    if best == 0.0:
        return 0.0, witness
    _, lam = _lattice_dp(x, y, g, best)
    if lam is not None:
        cost = time_change_cost(x, y, lam)
        if cost < best:
            best, witness = cost, lam
    return float(best), witness


def d0_symmetrized(x, y, g, budget=DEFAULT_BUDGET) -> float:
    """``min(d0_upper(x, y, g), d0_upper(y, x, g))``."""
    a, _ = d0_upper(x, y, g, budget)
    b, _ = d0_upper(y, x, g, budget)
    return min(a, b)


def _pair_task(args):
    x, y, g, budget, sym = args
    return d0_symmetrized(x, y, g, budget) if sym else d0_upper(x, y, g, budget)[0]


def distance_matrix(paths, g, symmetrized=True, budget=DEFAULT_BUDGET, workers=1):
    """Pairwise upper bounds; zero diagonal, symmetric when ``symmetrized``.

    ``workers > 1`` distributes pairs over processes; the result does not
    depend on the number of workers.
    """
    paths = list(paths)
    n = len(paths)
    if symmetrized:
        pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    else:
        pairs = [(i, j) for i in range(n) for j in range(n) if i != j]
    tasks = [(paths[i], paths[j], g, budget, symmetrized) for i, j in pairs]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            vals = list(ex.map(_pair_task, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    else:
        vals = [_pair_task(t) for t in tasks]
    out = np.zeros((n, n))
    for (i, j), v in zip(pairs, vals):
        out[i, j] = v
        if symmetrized:
            out[j, i] = v
    return out
