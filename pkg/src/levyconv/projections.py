"""Haar, shifted Haar and dyadic projections on [0, 1].

Functions in ``L^p([0,1]; Y)`` are represented by :class:`SampledFunction`:
piecewise constant on the ``2^m`` cells ``(k 2^-m, (k+1) 2^-m]``. Cell
averages over coarser dyadic cells are then exact, so every projection of
order ``n <= m`` is computed without quadrature error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from levyconv.errors import InvalidInputError, ResolutionError
from levyconv.paths import PiecewiseConstPath


@dataclass(frozen=True)
class SampledFunction:
    """Cell values on the uniform dyadic grid of order ``m``.

    ``values`` has shape ``(2**m, ...)``; the trailing axes hold a vector in
    ``Y``. When ``mark_weights`` is given the values have shape
    ``(2**m, n_marks, d)`` and represent ``L^p(Z, nu; R^d)``-valued functions,
    normed by ``(sum_z nu(z) |v_z|^p)^(1/p)``.
    """

    values: np.ndarray
    mark_weights: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        n = v.shape[0]
        if n < 1 or n & (n - 1):
            raise InvalidInputError(f"number of cells must be a power of two, got {n}")
        if self.mark_weights is not None:
            w = np.asarray(self.mark_weights, dtype=float).reshape(-1)
            if v.ndim != 3 or v.shape[1] != w.size:
                raise InvalidInputError("per-mark values must have shape (cells, n_marks, d)")
            object.__setattr__(self, "mark_weights", w)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_callable(cls, fn, m, mark_weights=None):
        """Sample ``fn`` at the midpoints of the order-``m`` cells."""
        s = (np.arange(2**m) + 0.5) / 2**m
        return cls(np.array([np.asarray(fn(x), dtype=float) for x in s]), mark_weights)

    @classmethod
    def from_step(cls, coarse_values, m):
        """Refine values given on ``2^r`` cells to the order-``m`` grid (``r <= m``)."""
        c = np.asarray(coarse_values, dtype=float)
        r = int(round(math.log2(c.shape[0])))
        if 2**r != c.shape[0] or r > m:
            raise ResolutionError("coarse grid must be dyadic and no finer than the target")
        return cls(np.repeat(c, 2 ** (m - r), axis=0))

    @property
    def order(self):
        return int(self.values.shape[0]).bit_length() - 1

    @property
    def n_cells(self):
        return int(self.values.shape[0])

    @property
    def sample_points(self):
        return (np.arange(self.n_cells) + 0.5) / self.n_cells

    def _like(self, values):
        return SampledFunction(values, self.mark_weights)

    def pointwise_norm_p(self, p):
        """``|f(s)|^p`` on every cell."""
        if self.mark_weights is not None:
            return np.einsum("kz,z->k", np.linalg.norm(self.values, axis=-1) ** p, self.mark_weights)
        flat = self.values.reshape(self.n_cells, -1)
        return np.linalg.norm(flat, axis=-1) ** p

    def lp_norm(self, p):
        return float(np.mean(self.pointwise_norm_p(p)) ** (1.0 / p))

    def __sub__(self, other):
        return self._like(self.values - other.values)

    def __eq__(self, other):
        if not isinstance(other, SampledFunction):
            return NotImplemented
        return np.array_equal(self.values, other.values)

    __hash__ = None


def _check_order(n, f):
    if n < 0:
        raise InvalidInputError(f"projection order must be >= 0, got {n}")
    if f.order < n:
        raise ResolutionError(
            f"sample grid of order {f.order} is coarser than projection order {n}"
        )


def _block_means(n, f):
    blocks = f.values.reshape((2**n, 2 ** (f.order - n)) + f.values.shape[1:])
    return blocks.mean(axis=1)


def cell_average(n, j, f: SampledFunction):
    """Mean of ``f`` over the dyadic cell ``((j-1) 2^-n, j 2^-n]``, ``1 <= j <= 2^n``."""
    _check_order(n, f)
    if not 1 <= j <= 2**n:
        raise InvalidInputError(f"cell index {j} outside 1..{2**n}")
    w = 2 ** (f.order - n)
    return f.values[(j - 1) * w: j * w].mean(axis=0)


def haar_project(n, f: SampledFunction) -> SampledFunction:
    """Conditional expectation onto functions constant on order-``n`` dyadic cells."""
    _check_order(n, f)
    means = _block_means(n, f)
    return f._like(np.repeat(means, 2 ** (f.order - n), axis=0))


def delay(n, f: SampledFunction) -> SampledFunction:
    """Shift right by one order-``n`` cell, zero on the first cell."""
    _check_order(n, f)
    w = 2 ** (f.order - n)
    out = np.zeros_like(f.values)
    if w < f.n_cells:
        out[w:] = f.values[:-w]
    return f._like(out)


def shifted_haar_project(n, f: SampledFunction, convention="shift1") -> SampledFunction:
    """Haar projection delayed so that each cell only sees earlier cells.

    ``shift1`` (default): zero on ``(0, 2^-n]`` and the average over cell
    ``j`` on ``(j 2^-n, (j+1) 2^-n]``; this is ``haar_project(n, delay(n, f))``.
    ``shift2``: zero on the first two cells and the average over cell
    ``j - 1`` on ``(j 2^-n, (j+1) 2^-n]``.
    """
    _check_order(n, f)
    shift = {"shift1": 1, "shift2": 2}.get(convention)
    if shift is None:
        raise InvalidInputError(f"unknown convention {convention!r}")
    means = _block_means(n, f)
    out = np.zeros_like(means)
    if shift < means.shape[0]:
        out[shift:] = means[:-shift]
    return f._like(np.repeat(out, 2 ** (f.order - n), axis=0))


def dyadic_project(n, x: PiecewiseConstPath) -> PiecewiseConstPath:
    """``t -> x(2^-n floor(2^n t))`` on [0, 1) and ``x(1)`` at ``t = 1``.

    The result is right-continuous: it holds ``x(k 2^-n)`` on
    ``[k 2^-n, (k+1) 2^-n)``.
    """
    if n < 0:
        raise InvalidInputError(f"projection order must be >= 0, got {n}")
    if not isinstance(x, PiecewiseConstPath):
        raise InvalidInputError("dyadic_project expects a PiecewiseConstPath")
    k = np.arange(1, 2**n)
    grid = np.concatenate([k / 2**n, [1.0]])
    out = PiecewiseConstPath(x.at(0.0), grid, x.at(grid))
    return out.simplified()
