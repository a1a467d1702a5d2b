"""Compensated Poisson integrals, stochastic convolutions and linear SPDE solutions.

All paths live on an event grid: a uniform grid of step ``dt`` on ``[0, T]``
augmented with every atom time of the driving realization. Between events the
eigenmodes of the generator evolve by exact exponentials, so for step
integrands the stochastic convolution is exact at every node; the only
approximation anywhere is the cell-midpoint rule used for the compensator of
non-step (grid-sampled) integrands and for drift terms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from levyconv.errors import InvalidInputError, SingularityError
from levyconv.paths import GridPath
from levyconv.prm import MarkSpace, PrmRealization
from levyconv.projections import SampledFunction
from levyconv.semigroup import GeneratorOp, apply_power

# Largest exponent mu * (t_i - t_ref) used inside one cumulative-sum block.
_BLOCK_EXPONENT = 30.0


# --------------------------------------------------------------------------
# integrands


@dataclass(frozen=True)
class StepIntegrand:
    """``xi(t, z) = values[j, z]`` for ``t`` in ``(partition[j], partition[j+1]]``.

    Zero for ``t > partition[-1]``. ``values`` has shape ``(n_cells, n_marks, d)``.
    """

    partition: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        p = np.array(self.partition, dtype=float).reshape(-1)
        v = np.array(self.values, dtype=float)
        if p.size < 2 or p[0] != 0.0:
            raise InvalidInputError("partition must start at 0 and have at least one cell")
        if np.any(np.diff(p) <= 0):
            raise InvalidInputError("partition must be strictly increasing")
        if v.ndim != 3 or v.shape[0] != p.size - 1:
            raise InvalidInputError(
                f"values must have shape (n_cells={p.size - 1}, n_marks, d), got {v.shape}"
            )
        p.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "partition", p)
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, horizon, per_mark):
        """Time-constant integrand on ``(0, horizon]``; ``per_mark`` is ``(n_marks, d)``."""
        per_mark = np.asarray(per_mark, dtype=float)
        if per_mark.ndim == 1:
            per_mark = per_mark[:, None]
        return cls([0.0, horizon], per_mark[None])

    @property
    def n_marks(self):
        return self.values.shape[1]

    @property
    def dim(self):
        return self.values.shape[2]

    def resolve(self, eta):
        return self

    def value(self, t, z, eta=None):
        j = int(np.searchsorted(self.partition, t, side="left"))
        if j == 0 or j >= self.partition.size:
            return np.zeros(self.dim)
        return self.values[j - 1, z]

    def mean_rate(self, space: MarkSpace):
        """``sum_z nu(z) xi_j(z)`` for every cell, shape ``(n_cells, d)``."""
        return np.einsum("jzd,z->jd", self.values, space.weights)

    def scaled(self, c):
        return StepIntegrand(self.partition, c * self.values)

    def transformed(self, fn):
        """Apply ``fn`` to every d-vector (batched on the last axis)."""
        return StepIntegrand(self.partition, fn(self.values))

    def lp_mass(self, space: MarkSpace, horizon, p):
        """``int_0^T sum_z nu(z) |xi(t, z)|^p dt``, exact."""
        lengths = np.diff(np.minimum(self.partition, horizon))
        per_cell = np.einsum("jz,z->j", np.linalg.norm(self.values, axis=-1) ** p, space.weights)
        return float(np.dot(lengths, per_cell))


@dataclass(frozen=True)
class GridIntegrand:
    """Deterministic integrand sampled on a time grid, linear in between.

    ``values`` has shape ``(n_times, n_marks, d)``; the grid must cover the
    horizon of every realization it is used with.
    """

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.array(self.times, dtype=float).reshape(-1)
        v = np.array(self.values, dtype=float)
        if t.size < 2 or np.any(np.diff(t) <= 0) or t[0] > 0:
            raise InvalidInputError("grid times must be strictly increasing and start at <= 0")
        if v.ndim != 3 or v.shape[0] != t.size:
            raise InvalidInputError("values must have shape (n_times, n_marks, d)")
        t.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, fn, horizon, n_marks, n_samples=1025):
        """Sample ``fn(t) -> (n_marks, d)`` on a uniform grid."""
        ts = np.linspace(0.0, horizon, n_samples)
        vals = np.array([np.asarray(fn(t), dtype=float).reshape(n_marks, -1) for t in ts])
        return cls(ts, vals)

    @property
    def n_marks(self):
        return self.values.shape[1]

    @property
    def dim(self):
        return self.values.shape[2]

    def resolve(self, eta):
        return self

    def _check_cover(self, horizon):
        if self.times[-1] < horizon:
            raise InvalidInputError("grid integrand does not cover the horizon")

    def sample(self, t):
        """Values at times ``t``, shape ``(len(t), n_marks, d)``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        idx = np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, self.times.size - 2)
        t0 = self.times[idx]
        w = ((t - t0) / (self.times[idx + 1] - t0))[:, None, None]
        return (1 - w) * self.values[idx] + w * self.values[idx + 1]

    def value(self, t, z, eta=None):
        return self.sample([t])[0, z]

    def scaled(self, c):
        return GridIntegrand(self.times, c * self.values)

    def transformed(self, fn):
        return GridIntegrand(self.times, fn(self.values))

    def lp_mass(self, space: MarkSpace, horizon, p, nodes_per_cell=5):
        """``int_0^T sum_z nu(z) |xi|^p dt`` by Gauss-Legendre on every grid cell."""
        self._check_cover(horizon)
        x, w = np.polynomial.legendre.leggauss(nodes_per_cell)
        edges = np.concatenate([self.times[self.times < horizon], [horizon]])
        edges = edges[edges >= 0]
        a, b = edges[:-1], edges[1:]
        ts = (0.5 * (b - a))[:, None] * x[None, :] + (0.5 * (a + b))[:, None]
        vals = self.sample(ts.reshape(-1))
        f = np.einsum("nz,z->n", np.linalg.norm(vals, axis=-1) ** p, space.weights)
        f = f.reshape(ts.shape)
        return float(np.sum(0.5 * (b - a) * (f @ w)))


@dataclass(frozen=True)
class JumpCountIntegrand:
    """Predictable integrand ``xi(t, z) = base[z] / (1 + damping * N(t-, Z))``.

    ``N(t-, Z)`` counts atoms with time strictly before ``t``, so the value
    at ``t`` depends only on the strict past of the realization.
    """

    base: np.ndarray
    damping: float = 1.0

    def __post_init__(self):
        b = np.array(self.base, dtype=float)
        if b.ndim == 1:
            b = b[:, None]
        if b.ndim != 2:
            raise InvalidInputError("base must have shape (n_marks, d)")
        if self.damping < 0:
            raise InvalidInputError("damping must be nonnegative")
        b.setflags(write=False)
        object.__setattr__(self, "base", b)

    @property
    def n_marks(self):
        return self.base.shape[0]

    @property
    def dim(self):
        return self.base.shape[1]

    def _gain(self, n_before):
        return 1.0 / (1.0 + self.damping * np.asarray(n_before, dtype=float))

    def value(self, t, z, eta: PrmRealization):
        past_times, _ = eta.restricted_before(t)
        return self.base[z] * self._gain(past_times.size)

    def resolve(self, eta: PrmRealization) -> StepIntegrand:
        """The step integrand this functional takes on a fixed realization."""
        inner = np.unique(eta.times[eta.times < eta.horizon])
        partition = np.concatenate([[0.0], inner, [eta.horizon]])
        n_before = np.searchsorted(eta.times, partition[:-1], side="right")
        values = self._gain(n_before)[:, None, None] * self.base[None]
        return StepIntegrand(partition, values)

    def scaled(self, c):
        return JumpCountIntegrand(c * self.base, self.damping)


Integrand = Union[StepIntegrand, GridIntegrand, JumpCountIntegrand]


def integrand_from_dict(doc, horizon=None) -> Integrand:
    """Build an integrand from its JSON form.

    Kinds: ``step`` (``partition``, ``values``), ``constant`` (``values``
    per mark; needs ``horizon``), ``grid`` (``times``, ``values``) and
    ``jumpcount`` (``base``, ``damping``).
    """
    kind = doc.get("kind")
    try:
        if kind == "step":
            return StepIntegrand(doc["partition"], doc["values"])
        if kind == "constant":
            if horizon is None:
                raise InvalidInputError("a constant integrand needs the horizon")
            return StepIntegrand.constant(horizon, doc["values"])
        if kind == "grid":
            return GridIntegrand(doc["times"], doc["values"])
        if kind == "jumpcount":
            return JumpCountIntegrand(doc["base"], float(doc.get("damping", 1.0)))
    except KeyError as exc:
        raise InvalidInputError(f"integrand description missing field {exc}") from exc
    raise InvalidInputError(f"unknown integrand kind {kind!r}")


def _check_marks(xi, eta):
    if xi.n_marks != len(eta.space):
        raise InvalidInputError(
            f"integrand has {xi.n_marks} mark blocks but the mark space has {len(eta.space)}"
        )


def lp_mass(xi: Integrand, eta: PrmRealization, p):
    """``int_0^T int_Z |xi|^p dnu dt`` for the integrand realized on ``eta``."""
    return xi.resolve(eta).lp_mass(eta.space, eta.horizon, p)


# --------------------------------------------------------------------------
# drift terms


@dataclass(frozen=True)
class SampledDrift:
    """Drift given by samples: ``b(t) = values[i]`` on ``[times[i], times[i+1])``."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.array(self.times, dtype=float).reshape(-1)
        v = np.array(self.values, dtype=float)
        if t.size == 0 or v.size == 0:
            raise InvalidInputError("empty drift sample")
        if v.ndim == 1:
            v = v[:, None]
        if v.shape[0] != t.size or np.any(np.diff(t) <= 0) or t[0] > 0:
            raise InvalidInputError("drift samples must be on an increasing grid starting at <= 0")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    def __call__(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if np.any(t > self.times[-1]) and self.times.size > 1 and t.max() > self.times[-1] + (
            self.times[-1] - self.times[-2]
        ):
            raise InvalidInputError("drift sample grid does not cover the horizon")
        idx = np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, None)
        return self.values[idx]


@dataclass(frozen=True)
class AffineDrift:
    """``b(t) = intercept + slope * t``."""

    intercept: np.ndarray
    slope: np.ndarray = None

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.intercept, dtype=float))
        s = np.zeros_like(a) if self.slope is None else np.atleast_1d(np.asarray(self.slope, dtype=float))
        if s.shape != a.shape:
            raise InvalidInputError("intercept and slope must have the same dimension")
        object.__setattr__(self, "intercept", a)
        object.__setattr__(self, "slope", s)

    def __call__(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return self.intercept[None, :] + t[:, None] * self.slope[None, :]

    def scaled(self, c):
        return AffineDrift(c * self.intercept, c * self.slope)

    def lp_norm(self, horizon, p, n=2049):
        ts = np.linspace(0.0, horizon, n)
        f = np.linalg.norm(self(ts), axis=-1) ** p
        return float(np.trapezoid(f, ts) ** (1.0 / p))


def drift_from_dict(doc, dim):
    """Kinds: ``zero``, ``constant`` (``value``), ``affine`` (``intercept``, ``slope``)."""
    if doc is None:
        return None
    kind = doc.get("kind", "zero")
    if kind == "zero":
        return None
    try:
        if kind == "constant":
            return AffineDrift(np.broadcast_to(np.asarray(doc["value"], dtype=float), (dim,)))
        if kind == "affine":
            return AffineDrift(
                np.broadcast_to(np.asarray(doc["intercept"], dtype=float), (dim,)),
                np.broadcast_to(np.asarray(doc.get("slope", 0.0), dtype=float), (dim,)),
            )
    except KeyError as exc:
        raise InvalidInputError(f"drift description missing field {exc}") from exc
    raise InvalidInputError(f"unknown drift kind {kind!r}")


# --------------------------------------------------------------------------
# grids and the modal recurrence


def event_grid(horizon, dt, atom_times=()):
    """Uniform grid of step at most ``dt`` on ``[0, horizon]`` plus atom times."""
    if not dt > 0:
        raise InvalidInputError(f"grid step must be > 0, got {dt}")
    n = max(1, int(math.ceil(horizon / dt - 1e-9)))
    grid = np.linspace(0.0, horizon, n + 1)
    if len(atom_times):
        grid = np.union1d(grid, np.asarray(atom_times, dtype=float))
    return grid


def _phi(x):
    """``(1 - e^{-x}) / x`` with the removable singularity at 0."""
    small = np.abs(x) < 1e-8
    safe = np.where(small, 1.0, x)
    return np.where(small, 1.0 - 0.5 * x, -np.expm1(-safe) / safe)


def _decay_sum(nodes, mu, incr):
    """Solve ``y_i = e^{-mu (t_i - t_{i-1})} y_{i-1} + incr_i`` for all nodes.

    ``incr`` has shape ``(K, d)``; ``mu`` has shape ``(d,)``. Uses blocked
    rescaled cumulative sums so the exponentials stay in range.
    """
    K = nodes.size
    mmax = float(np.max(np.abs(mu))) if mu.size else 0.0
    if mmax == 0.0:
        return np.cumsum(incr, axis=0)
    out = np.empty_like(incr)
    carry = np.zeros(incr.shape[1])
    start = 0
    while start < K:
        t_ref = nodes[start]
        stop = max(int(np.searchsorted(nodes, t_ref + _BLOCK_EXPONENT / mmax, side="right")), start + 1)
        up = np.exp(mu[None, :] * (nodes[start:stop, None] - t_ref))
        out[start:stop] = (np.cumsum(incr[start:stop] * up, axis=0) + carry[None, :]) / up
        if stop < K:
            carry = out[stop - 1] * np.exp(-mu * (nodes[stop] - nodes[stop - 1]))
        start = stop
    return out


def _modal_solution(op, nodes, forcing, jumps):
    """Modes of ``y`` (right values) and ``y-`` (left limits) at the nodes.

    ``forcing[i]`` is the modal increment accumulated over cell ``(t_i, t_{i+1}]``
    already propagated to ``t_{i+1}``; ``jumps[i]`` are modal jumps at node i.
    """
    incr = jumps.copy()
    incr[1:] += forcing
    y = _decay_sum(nodes, op.eigenvalues, incr)
    left = y - jumps
    return y, left


# --------------------------------------------------------------------------
# stochastic integrals


def _atom_nodes(nodes, eta):
    idx = np.searchsorted(nodes, eta.times, side="left")
    return idx


def step_integral(xi: StepIntegrand, eta: PrmRealization, dt=None, nodes=None) -> GridPath:
    """Compensated integral ``int_0^t int_Z xi d(eta - gamma)`` of a step process.

    Evaluated exactly from the defining sum over partition cells: jumps of
    ``xi_j(z)`` at atoms in each cell minus the linear compensator.
    Nodes default to ``{0, T}``, the atom times and the partition points (or
    the event grid of step ``dt`` when given).
    """
    if isinstance(xi, JumpCountIntegrand):
        xi = xi.resolve(eta)
    if not isinstance(xi, StepIntegrand):
        raise InvalidInputError("step_integral needs a step integrand")
    _check_marks(xi, eta)
    T = eta.horizon
    if xi.partition[-1] > T * (1 + 1e-12):
        raise InvalidInputError("integrand partition exceeds the horizon")
    if nodes is None:
        if dt is None:
            nodes = np.union1d(np.concatenate([[0.0, T], xi.partition]), eta.times)
        else:
            nodes = event_grid(T, dt, eta.times)
    p = xi.partition
    lo, hi = p[:-1], p[1:]
    # compensator: sum_j ((t_j ^ t) - (t_{j-1} ^ t)) * xibar_j
    overlap = np.clip(nodes[:, None], lo[None, :], hi[None, :]) - lo[None, :]
    drift = overlap @ xi.mean_rate(eta.space)
    # jumps: sum over atoms tau <= t in cell j of xi_j(z)
    d = xi.dim
    jumps_at_node = np.zeros((nodes.size, d))
    if len(eta):
        cell = np.searchsorted(p, eta.times, side="left") - 1
        live = (cell >= 0) & (cell < lo.size)
        jv = np.zeros((len(eta), d))
        jv[live] = xi.values[cell[live], eta.marks[live]]
        np.add.at(jumps_at_node, _atom_nodes(nodes, eta), jv)
    jump_sum = np.cumsum(jumps_at_node, axis=0)
    values = jump_sum - drift
    return GridPath(T, nodes, values, values - jumps_at_node)


def _jump_vectors(xi, eta):
    if isinstance(xi, StepIntegrand):
        cell = np.searchsorted(xi.partition, eta.times, side="left") - 1
        live = (cell >= 0) & (cell < xi.partition.size - 1)
        out = np.zeros((len(eta), xi.dim))
        out[live] = xi.values[cell[live], eta.marks[live]]
        return out
    vals = xi.sample(eta.times)
    return vals[np.arange(len(eta)), eta.marks]


def _compensator_forcing(op, xi, space, nodes):
    """Modal ``int_{t_i}^{t_{i+1}} e^{-mu (t_{i+1} - s)} xibar(s) ds`` per cell."""
    mu = op.eigenvalues
    if isinstance(xi, StepIntegrand):
        p = xi.partition
        inner = p[(p > nodes[0]) & (p < nodes[-1])]
        fine = np.union1d(nodes, inner)
        l, r = fine[:-1], fine[1:]
        cell = np.searchsorted(p, r, side="left") - 1
        rates = np.zeros((r.size, xi.dim))
        live = cell < p.size - 1
        rates[live] = xi.mean_rate(space)[cell[live]]
        owner = np.searchsorted(nodes, r, side="left") - 1
        h = (r - l)[:, None]
        lag = (nodes[owner + 1] - r)[:, None]
        w = np.exp(-mu[None, :] * lag) * _phi(mu[None, :] * h) * h
        contrib = op.to_modes(rates) * w
        if fine.size == nodes.size:
            return contrib
        forcing = np.zeros((nodes.size - 1, mu.size))
        np.add.at(forcing, owner, contrib)
        return forcing
    xi._check_cover(nodes[-1])
    mid = 0.5 * (nodes[:-1] + nodes[1:])
    rates = np.einsum("nzd,z->nd", xi.sample(mid), space.weights)
    h = np.diff(nodes)[:, None]
    return op.to_modes(rates) * _phi(mu[None, :] * h) * h


def convolve(op: GeneratorOp, xi: Integrand, eta: PrmRealization, dt, extra_times=()) -> GridPath:
    """Stochastic convolution ``u(t) = int_0^t int_Z S(t-s) xi(s,z) (eta - gamma)(ds,dz)``.

    ``u(t) = sum_{tau_k <= t} S(t - tau_k) xi(tau_k, z_k) - int_0^t S(t-s) xibar(s) ds``
    with ``xibar = sum_z nu(z) xi(., z)``. The result carries left limits.
    ``extra_times`` are added to the nodes (e.g. probe times).
    """
    if not dt > 0:
        raise InvalidInputError(f"grid step must be > 0, got {dt}")
    xi = xi.resolve(eta)
    _check_marks(xi, eta)
    if xi.dim != op.dim:
        raise InvalidInputError(f"integrand dimension {xi.dim} != generator dimension {op.dim}")
    nodes = event_grid(eta.horizon, dt, np.concatenate([eta.times, np.asarray(extra_times, float)]))
    jumps = np.zeros((nodes.size, op.dim))
    if len(eta):
        np.add.at(jumps, _atom_nodes(nodes, eta), op.to_modes(_jump_vectors(xi, eta)))
    forcing = -_compensator_forcing(op, xi, eta.space, nodes)
    y, left = _modal_solution(op, nodes, forcing, jumps)
    return GridPath(eta.horizon, nodes, op.from_modes(y), op.from_modes(left))


def drift_convolve(op: GeneratorOp, b: Callable, dt=None, horizon=None, nodes=None) -> GridPath:
    """``v(t) = int_0^t S(t-s) b(s) ds`` with ``b`` frozen at each cell midpoint.

    ``b`` maps an array of times to an ``(n, d)`` array (see
    :class:`AffineDrift`, :class:`SampledDrift`). Pass either ``nodes`` or
    ``dt`` and ``horizon``. The error is O(dt) for Lipschitz ``b`` and zero
    for constant ``b``.
    """
    if isinstance(b, SampledDrift) and b.values.size == 0:
        raise InvalidInputError("empty drift sample")
    if nodes is None:
        if dt is None or horizon is None:
            raise InvalidInputError("drift_convolve needs nodes or (dt, horizon)")
        nodes = event_grid(horizon, dt)
    nodes = np.asarray(nodes, dtype=float)
    mu = op.eigenvalues
    mid = 0.5 * (nodes[:-1] + nodes[1:])
    bv = np.asarray(b(mid), dtype=float)
    if bv.ndim != 2 or bv.shape != (mid.size, op.dim):
        raise InvalidInputError(f"drift must return shape (n, {op.dim})")
    h = np.diff(nodes)[:, None]
    forcing = op.to_modes(bv) * _phi(mu[None, :] * h) * h
    y, left = _modal_solution(op, nodes, forcing, np.zeros((nodes.size, op.dim)))
    v = op.from_modes(y)
    return GridPath(nodes[-1], nodes, v, v)


def solve_spde(op: GeneratorOp, b: Optional[Callable], xi: Integrand, eta: PrmRealization, dt,
               extra_times=()) -> GridPath:
    """Mild solution of ``du + Au dt = b dt + int_Z xi d(eta - gamma)``, ``u(0) = 0``."""
    u = convolve(op, xi, eta, dt, extra_times)
    if b is None:
        return u
    return u + drift_convolve(op, b, nodes=u.times)


def phi_apply(op: GeneratorOp, xi: SampledFunction, t) -> SampledFunction:
    """``s -> 1_{[0,t)}(s) S(t - s) xi(s)`` on the sample points of ``xi``.

    ``xi`` lives on [0, 1]; its last axis is the state dimension.
    """
    if not 0 <= t <= 1:
        raise InvalidInputError(f"t must lie in [0, 1], got {t}")
    s = xi.sample_points
    live = s < t
    decay = np.exp(-np.outer(np.where(live, t - s, 0.0), op.eigenvalues))
    vals = xi.values
    extra = vals.ndim - 2
    modes = op.to_modes(vals)
    decay = decay.reshape((s.size,) + (1,) * extra + (op.dim,))
    out = op.from_modes(modes * decay)
    out[~live] = 0.0
    return SampledFunction(out, mark_weights=xi.mark_weights)


def strong_identity_residual(op: GeneratorOp, xi: Integrand, eta: PrmRealization, dt) -> float:
    """Largest violation of ``A^{-1}u(t) + int_0^t u ds = int_0^t int_Z A^{-1} xi d(eta - gamma)``.

    The time integral uses the trapezoid rule on the event grid with left
    limits at jump nodes; the right side is evaluated exactly.
    """
    if not op.invertible:
        raise SingularityError("the strong identity needs an invertible generator")
    xi = xi.resolve(eta)
    u = convolve(op, xi, eta, dt)
    inv = lambda v: apply_power(op, -1.0, v)
    xi_inv = xi.transformed(inv)
    if isinstance(xi_inv, StepIntegrand):
        rhs = step_integral(xi_inv, eta, nodes=u.times).values
    else:
        rhs = convolve(GeneratorOp.zero(op.dim), xi_inv, eta, dt).values
    lhs = inv(u.values) + u.cumulative_trapezoid()
    return float(np.max(np.linalg.norm(lhs - rhs, axis=-1)))


# --------------------------------------------------------------------------
# many realizations at once


@dataclass(frozen=True)
class PathBatch:
    """Solutions for ``M`` realizations on padded node arrays.

    ``times`` has shape ``(M, K)``; each row is nondecreasing and is padded
    by repeating the horizon. ``modes`` and ``left_modes`` (shape
    ``(M, K, d)``) are right values and left limits in the eigenbasis of
    ``op``. Repeated nodes span zero-length cells and change nothing.
    """

    horizon: float
    times: np.ndarray
    modes: np.ndarray
    left_modes: np.ndarray
    op: GeneratorOp = field(repr=False)

    def __len__(self):
        return int(self.times.shape[0])

    def values(self):
        return self.op.from_modes(self.modes)

    def path(self, m) -> GridPath:
        """Draw ``m`` as a :class:`GridPath`, repeated nodes merged."""
        t = self.times[m]
        first = np.concatenate([[True], np.diff(t) > 0])
        last = np.concatenate([np.diff(t) > 0, [True]])
        vals = self.op.from_modes(self.modes[m][last])
        left = self.op.from_modes(self.left_modes[m][first])
        return GridPath(self.horizon, t[first], vals, left)


def _common_horizon(etas):
    if not etas:
        raise InvalidInputError("no realizations supplied")
    T = etas[0].horizon
    space = etas[0].space
    for e in etas:
        if e.horizon != T or e.space != space:
            raise InvalidInputError("all realizations must share horizon and mark space")
    return T, space


def _padded_atoms(etas, T):
    counts = np.array([len(e) for e in etas], dtype=np.int64)
    width = int(counts.max(initial=0))
    times = np.full((len(etas), width), T)
    marks = np.zeros((len(etas), width), dtype=np.int64)
    for m, e in enumerate(etas):
        times[m, : counts[m]] = e.times
        marks[m, : counts[m]] = e.marks
    real = np.arange(width)[None, :] < counts[:, None]
    return times, marks, real


def _gain_rank(xi, real):
    """``1 / (1 + damping * rank)`` for every padded atom."""
    rank = np.cumsum(real, axis=1) - 1
    return xi._gain(np.maximum(rank, 0))


def convolve_batch(op: GeneratorOp, xi: Integrand, etas, dt, extra_times=(), drift=None) -> PathBatch:
    """:func:`solve_spde` for a list of realizations sharing horizon and marks.

    The nodes of draw ``m`` are the event grid of step ``dt`` together with
    ``extra_times``, the partition points of a step integrand and the atoms
    of ``etas[m]``; the recurrence runs over all draws at once.
    """
    T, space = _common_horizon(etas)
    if xi.dim != op.dim:
        raise InvalidInputError(f"integrand dimension {xi.dim} != generator dimension {op.dim}")
    if xi.n_marks != len(space):
        raise InvalidInputError("integrand and mark space disagree on the number of marks")
    fixed = [np.asarray(extra_times, dtype=float)]
    if isinstance(xi, StepIntegrand):
        p = xi.partition
        fixed.append(p[(p > 0) & (p < T)])
    grid = event_grid(T, dt, np.concatenate(fixed))
    M, K0, d = len(etas), grid.size, op.dim
    mu = op.eigenvalues

    atom_t, atom_z, real = _padded_atoms(etas, T)
    comb = np.concatenate([np.broadcast_to(grid, (M, K0)), atom_t], axis=1)
    order = np.argsort(comb, axis=1, kind="stable")
    times = np.take_along_axis(comb, order, axis=1)
    K = times.shape[1]

    # jump vectors of the padded atoms, shape (M, A, d)
    if isinstance(xi, StepIntegrand):
        cell = np.searchsorted(xi.partition, atom_t, side="left") - 1
        live = real & (cell >= 0) & (cell < xi.partition.size - 1)
        jv = xi.values[np.clip(cell, 0, xi.values.shape[0] - 1), atom_z]
        jv = np.where(live[..., None], jv, 0.0)
    elif isinstance(xi, JumpCountIntegrand):
        jv = _gain_rank(xi, real)[..., None] * xi.base[atom_z]
        jv = np.where(real[..., None], jv, 0.0)
    else:
        xi._check_cover(T)
        jv = xi.sample(atom_t.reshape(-1)).reshape(atom_t.shape + (xi.n_marks, d))
        jv = np.take_along_axis(jv, atom_z[..., None, None], axis=2)[:, :, 0]
        jv = np.where(real[..., None], jv, 0.0)
    col_atom = order - K0
    is_atom = col_atom >= 0
    pick = np.clip(col_atom, 0, max(atom_t.shape[1] - 1, 0))
    jumps = np.zeros((M, K, d))
    if atom_t.shape[1]:
        jumps = np.where(is_atom[..., None], np.take_along_axis(jv, pick[..., None], axis=1), 0.0)

    # compensator rate on every cell (t_i, t_{i+1}]
    h = np.diff(times, axis=1)
    if isinstance(xi, StepIntegrand):
        cell = np.searchsorted(xi.partition, times[:, 1:], side="left") - 1
        live = (cell >= 0) & (cell < xi.partition.size - 1)
        rate = xi.mean_rate(space)[np.clip(cell, 0, xi.values.shape[0] - 1)]
        rate = np.where(live[..., None], rate, 0.0)
    elif isinstance(xi, JumpCountIntegrand):
        real_node = is_atom & np.take_along_axis(
            np.concatenate([np.zeros((M, K0), bool), real], axis=1), order, axis=1)
        n_le = np.cumsum(real_node, axis=1)[:, :-1]
        rate = xi._gain(n_le)[..., None] * (space.weights @ xi.base)
    else:
        mid = 0.5 * (times[:, 1:] + times[:, :-1])
        rate = np.einsum("nzd,z->nd", xi.sample(mid.reshape(-1)), space.weights).reshape(M, K - 1, d)
    forcing = -rate
    if drift is not None:
        mid = 0.5 * (times[:, 1:] + times[:, :-1])
        forcing = forcing + np.asarray(drift(mid.reshape(-1)), dtype=float).reshape(M, K - 1, d)
    weight = _phi(mu * h[..., None]) * h[..., None]
    incr = op.to_modes(jumps)
    incr[:, 1:] += op.to_modes(forcing) * weight
    decay = np.exp(-mu * h[..., None])
    y = np.empty_like(incr)
    y[:, 0] = incr[:, 0]
    for i in range(1, K):
        y[:, i] = decay[:, i - 1] * y[:, i - 1] + incr[:, i]
    left = y - op.to_modes(jumps)
    return PathBatch(T, times, y, left, op)


def lp_mass_batch(xi: Integrand, etas, p):
    """``int_0^T int_Z |xi|^p dnu dt`` for every realization."""
    T, space = _common_horizon(etas)
    if isinstance(xi, JumpCountIntegrand):
        atom_t, _, real = _padded_atoms(etas, T)
        edges = np.concatenate([np.zeros((len(etas), 1)), atom_t, np.full((len(etas), 1), T)], axis=1)
        n_before = np.arange(edges.shape[1] - 1)
        per = xi._gain(n_before)[None, :] ** p * np.diff(edges, axis=1)
        scale = float(space.weights @ np.linalg.norm(xi.base, axis=-1) ** p)
        return per.sum(axis=1) * scale
    return np.full(len(etas), xi.lp_mass(space, T, p))
