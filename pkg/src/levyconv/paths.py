"""Cadlag path representations.

:class:`GridPath` is a sampled path on ``[0, T]``: node values are right
limits, and ``left_values`` (when known) are the left limits at the same
nodes, so a jump at a node is ``values[i] - left_values[i]``.

:class:`PiecewiseConstPath` is an exact step path on ``[0, 1]``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from levyconv.errors import InvalidInputError


def _as_values(values, n):
    v = np.array(values, dtype=float)
    if v.ndim == 1 and n and v.size % n == 0:
        v = v.reshape(n, -1)
    if v.ndim != 2 or v.shape[0] != n:
        raise InvalidInputError(f"expected {n} value rows, got shape {v.shape}")
    return v


@dataclass(frozen=True)
class GridPath:
    horizon: float
    times: np.ndarray
    values: np.ndarray
    left_values: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        t = np.array(self.times, dtype=float).reshape(-1)
        if t.size < 2:
            raise InvalidInputError("a grid path needs at least two nodes")
        if t[0] != 0.0 or t[-1] != self.horizon:
            raise InvalidInputError("grid path nodes must start at 0 and end at the horizon")
        if np.any(np.diff(t) <= 0):
            raise InvalidInputError("grid path nodes must be strictly increasing")
        v = _as_values(self.values, t.size)
        t.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "horizon", float(self.horizon))
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)
        if self.left_values is not None:
            lv = _as_values(self.left_values, t.size)
            if lv.shape != v.shape:
                raise InvalidInputError("left limits must match values in shape")
            lv.setflags(write=False)
            object.__setattr__(self, "left_values", lv)

    @property
    def dim(self):
        return int(self.values.shape[1])

    def left(self):
        return self.values if self.left_values is None else self.left_values

    def at(self, t):
        """Cadlag evaluation: value at the last node ``<= t``."""
        t = np.asarray(t, dtype=float)
        if np.any(t < 0) or np.any(t > self.horizon):
            raise InvalidInputError("evaluation time outside [0, horizon]")
        idx = np.searchsorted(self.times, t, side="right") - 1
        return self.values[idx]

    def scaled(self, c):
        lv = None if self.left_values is None else c * self.left_values
        return GridPath(self.horizon, self.times, c * self.values, lv)

    def __add__(self, other):
        if not isinstance(other, GridPath):
            return NotImplemented
        if self.times.shape != other.times.shape or not np.array_equal(self.times, other.times):
            raise InvalidInputError("paths must share their nodes to be added")
        if self.left_values is None and other.left_values is None:
            lv = None
        else:
            lv = self.left() + other.left()
        return GridPath(self.horizon, self.times, self.values + other.values, lv)

    def integral_p(self, p, transform=None):
        """``int_0^T |f(u(t))|^p dt`` by the trapezoid rule on the nodes.

        Each cell uses the right value at its left end and the left limit at
        its right end, so jumps at nodes cost no accuracy. ``transform`` maps
        an ``(n, d)`` array of values to an ``(n, d')`` array (e.g. ``A^alpha``).
        """
        f = (lambda x: x) if transform is None else transform
        a = np.linalg.norm(f(self.values[:-1]), axis=-1) ** p
        b = np.linalg.norm(f(self.left()[1:]), axis=-1) ** p
        return float(np.sum(0.5 * np.diff(self.times) * (a + b)))

    def lp_norm(self, p, transform=None):
        return self.integral_p(p, transform) ** (1.0 / p)

    def cumulative_trapezoid(self):
        """``int_0^{t_i} u(s) ds`` at every node (left-limit trapezoid)."""
        h = np.diff(self.times)[:, None]
        cells = 0.5 * h * (self.values[:-1] + self.left()[1:])
        out = np.zeros_like(self.values)
        np.cumsum(cells, axis=0, out=out[1:])
        return out

    def to_piecewise_const(self):
        """Step path on [0, 1] holding each node value until the next node.

        Time is rescaled by ``1 / horizon``. Between nodes the sampled path is
        treated as constant.
        """
        s = self.times / self.horizon
        return PiecewiseConstPath(self.values[0], s[1:], self.values[1:])

    def to_csv(self, path):
        write_paths_csv(path, [self], ids=None)


@dataclass(frozen=True)
class PiecewiseConstPath:
    """Right-continuous step path on [0, 1].

    Equals ``initial`` on ``[0, jump_times[0])`` and ``values[k]`` on
    ``[jump_times[k], jump_times[k+1])``; the last value holds through t = 1.
    """

    initial: np.ndarray
    jump_times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        x0 = np.array(self.initial, dtype=float).reshape(-1)
        jt = np.array(self.jump_times, dtype=float).reshape(-1)
        v = np.array(self.values, dtype=float)
        if v.size == 0:
            v = v.reshape(0, x0.size)
        elif v.ndim == 1:
            v = v.reshape(jt.size, -1)
        if v.shape != (jt.size, x0.size):
            raise InvalidInputError(
                f"values shape {v.shape} does not match {jt.size} jumps of dimension {x0.size}"
            )
        if jt.size and (jt[0] <= 0 or jt[-1] > 1):
            raise InvalidInputError("jump times must lie in (0, 1]")
        if np.any(np.diff(jt) <= 0):
            raise InvalidInputError("jump times must be strictly increasing")
        for a in (x0, jt, v):
            a.setflags(write=False)
        object.__setattr__(self, "initial", x0)
        object.__setattr__(self, "jump_times", jt)
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, c):
        c = np.atleast_1d(np.asarray(c, dtype=float))
        return cls(c, np.empty(0), np.empty((0, c.size)))

    @classmethod
    def indicator(cls, a, height=1.0):
        """``height * 1_{[a, 1]}``."""
        if a <= 0:
            return cls.constant(height)
        return cls(np.zeros(1), [a], [[height]])

    @classmethod
    def from_jumps(cls, initial, jumps):
        """From an initial value and ``(time, new_value)`` pairs."""
        jumps = sorted(jumps, key=lambda p: p[0])
        initial = np.atleast_1d(np.asarray(initial, dtype=float))
        return cls(initial, [p[0] for p in jumps],
                   np.array([np.atleast_1d(p[1]) for p in jumps], dtype=float).reshape(len(jumps), initial.size))

    @property
    def dim(self):
        return int(self.initial.size)

    @property
    def levels(self):
        """All values taken, ``initial`` first."""
        return np.vstack([self.initial[None, :], self.values])

    def at(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.jump_times, t, side="right")
        return self.levels[idx]

    def simplified(self):
        """Drop jumps that do not change the value."""
        lv = self.levels
        keep = np.any(lv[1:] != lv[:-1], axis=1)
        return PiecewiseConstPath(self.initial, self.jump_times[keep], self.values[keep])

    def __eq__(self, other):
        if not isinstance(other, PiecewiseConstPath):
            return NotImplemented
        return (np.array_equal(self.initial, other.initial)
                and np.array_equal(self.jump_times, other.jump_times)
                and np.array_equal(self.values, other.values))

    __hash__ = None


def write_paths_csv(path, paths, ids=None):
    """Write grid paths as ``t,v1..vd`` (one path) or ``path,t,v1..vd``."""
    d = paths[0].dim
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        head = ["t"] + [f"v{k + 1}" for k in range(d)]
        if ids is not None:
            head = ["path"] + head
        w.writerow(head)
        for j, gp in enumerate(paths):
            for t, row in zip(gp.times, gp.values):
                rec = [f"{t:.17g}"] + [f"{x:.17g}" for x in row]
                if ids is not None:
                    rec = [ids[j]] + rec
                w.writerow(rec)


def read_step_paths_csv(path):
    """Read ``[path,]t,v1..vd`` rows into step paths on [0, 1].

    Within each path, rows are (time, value) samples of a cadlag step
    function: the first row must be at t = 0 and gives the initial value,
    later rows are values taken from their time on. Returns an ordered dict
    ``{id: PiecewiseConstPath}``.
    """
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            head = next(reader)
        except StopIteration:
            raise InvalidInputError(f"{path}: empty CSV") from None
        rows = [r for r in reader if r]
    has_id = head[0] == "path"
    vcols = head[2:] if has_id else head[1:]
    if not vcols or (head[1] if has_id else head[0]) != "t":
        raise InvalidInputError(f"{path}: expected header [path,]t,v1..vd")
    groups = {}
    for r in rows:
        key = r[0] if has_id else "0"
        vals = r[1:] if has_id else r
        try:
            groups.setdefault(key, []).append([float(x) for x in vals])
        except ValueError as exc:
            raise InvalidInputError(f"{path}: non-numeric entry ({exc})") from exc
    out = {}
    for key, recs in groups.items():
        arr = np.array(recs, dtype=float)
        if arr.shape[1] != 1 + len(vcols):
            raise InvalidInputError(f"{path}: ragged row in path {key}")
        if arr[0, 0] != 0.0:
            raise InvalidInputError(f"{path}: path {key} must start at t = 0")
        out[key] = PiecewiseConstPath(arr[0, 1:], arr[1:, 0], arr[1:, 1:])
    return out


def write_step_paths_csv(path, paths: dict):
    """Inverse of :func:`read_step_paths_csv`."""
    d = next(iter(paths.values())).dim
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["path", "t"] + [f"v{k + 1}" for k in range(d)])
        for key, x in paths.items():
            w.writerow([key, "0"] + [f"{v:.17g}" for v in x.initial])
            for t, row in zip(x.jump_times, x.values):
                w.writerow([key, f"{t:.17g}"] + [f"{v:.17g}" for v in row])
