"""Finite-dimensional symmetric generators and the semigroups they generate.

A :class:`GeneratorOp` stores the spectral decomposition ``A = Q diag(mu) Q^T``
of a symmetric nonnegative matrix. ``S(t) = exp(-tA)``, fractional powers
``A^alpha`` and the norms of ``E``, ``E_{-beta}`` and ``D(A^alpha)`` all act
diagonally in the eigenbasis.

Vectors may carry leading batch axes; the last axis always has length ``d``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from levyconv.errors import HypothesisError, InvalidInputError, SingularityError

ORTHONORMAL_TOL = 1e-10


@dataclass(frozen=True)
class GeneratorOp:
    """Symmetric nonnegative generator ``A`` with orthonormal eigenbasis.

    ``basis[:, k]`` is the eigenvector for ``eigenvalues[k]``.
    """

    eigenvalues: np.ndarray
    basis: np.ndarray = field(repr=False)
    allow_expanding: bool = field(default=False, repr=False)

    def __post_init__(self):
        mu = np.array(self.eigenvalues, dtype=float).reshape(-1)
        q = np.array(self.basis, dtype=float)
        d = mu.size
        if d == 0:
            raise InvalidInputError("generator dimension must be >= 1")
        if q.shape != (d, d):
            raise InvalidInputError(f"basis must be {d}x{d}, got {q.shape}")
        if not np.all(np.isfinite(mu)):
            raise InvalidInputError("eigenvalues must be finite")
        if np.any(mu < 0) and not self.allow_expanding:
            raise InvalidInputError("eigenvalues must be nonnegative")
        if np.max(np.abs(q.T @ q - np.eye(d))) > ORTHONORMAL_TOL:
            raise InvalidInputError("eigenbasis is not orthonormal")
        mu.setflags(write=False)
        q.setflags(write=False)
        object.__setattr__(self, "eigenvalues", mu)
        object.__setattr__(self, "basis", q)

    # builders -----------------------------------------------------------

    @classmethod
    def diagonal(cls, mu, allow_expanding=False):
        mu = np.asarray(mu, dtype=float).reshape(-1)
        return cls(mu, np.eye(mu.size), allow_expanding=allow_expanding)

    @classmethod
    def dirichlet_laplacian_1d(cls, d, scale=1.0):
        """``scale`` times the tridiagonal (2, -1) matrix of size ``d``.

        Eigenvalues ``scale * 4 sin^2(k pi / (2(d+1)))`` with the discrete sine
        eigenvectors.
        """
        if d < 1:
            raise InvalidInputError("dimension must be >= 1")
        if scale < 0:
            raise InvalidInputError("scale must be nonnegative")
        k = np.arange(1, d + 1)
        mu = scale * 4.0 * np.sin(k * np.pi / (2 * (d + 1))) ** 2
        j = np.arange(1, d + 1)
        q = np.sqrt(2.0 / (d + 1)) * np.sin(np.outer(j, k) * np.pi / (d + 1))
        return cls(mu, q)

    @classmethod
    def zero(cls, d):
        return cls(np.zeros(d), np.eye(d))

    @classmethod
    def from_matrix(cls, a):
        a = np.asarray(a, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise InvalidInputError("generator matrix must be square")
        if not np.allclose(a, a.T, rtol=0, atol=1e-12 * max(1.0, np.abs(a).max())):
            raise InvalidInputError("generator matrix must be symmetric")
        mu, q = np.linalg.eigh(0.5 * (a + a.T))
        mu = np.where(np.abs(mu) < 1e-14 * max(1.0, np.abs(mu).max()), 0.0, mu)
        return cls(mu, q)

    @classmethod
    def from_dict(cls, doc):
        kind = doc.get("kind")
        try:
            if kind == "diagonal":
                return cls.diagonal(doc["mu"])
            if kind == "laplacian1d":
                return cls.dirichlet_laplacian_1d(int(doc["d"]), float(doc.get("scale", 1.0)))
            if kind == "zero":
                return cls.zero(int(doc["d"]))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, InvalidInputError):
                raise
            raise InvalidInputError(f"malformed generator description: {exc}") from exc
        raise InvalidInputError(f"unknown generator kind {kind!r}")

    @classmethod
    def from_json(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    # properties ---------------------------------------------------------

    @property
    def dim(self):
        return int(self.eigenvalues.size)

    @property
    def invertible(self):
        return bool(self.eigenvalues.min() > 0)

    @property
    def is_contraction(self):
        return bool(self.eigenvalues.min() >= 0)

    @property
    def is_zero(self):
        return bool(np.all(self.eigenvalues == 0))

    def matrix(self):
        return (self.basis * self.eigenvalues) @ self.basis.T

    def to_modes(self, v):
        """Coordinates ``<v, e_k>`` (batched over leading axes)."""
        return np.asarray(v, dtype=float) @ self.basis

    def from_modes(self, c):
        return np.asarray(c, dtype=float) @ self.basis.T

    def spectral_apply(self, factors, v):
        """Apply the operator that multiplies mode ``k`` by ``factors[k]``."""
        v = np.asarray(v, dtype=float)
        if v.shape[-1] != self.dim:
            raise InvalidInputError(f"vector dimension {v.shape[-1]} != {self.dim}")
        return self.from_modes(self.to_modes(v) * factors)


def apply_S(op: GeneratorOp, t, v):
    """``S(t) v = exp(-tA) v``."""
    if t < 0:
        raise InvalidInputError(f"semigroup time must be >= 0, got {t}")
    return op.spectral_apply(np.exp(-op.eigenvalues * t), v)


def _powers(op, alpha):
    mu = op.eigenvalues
    if alpha < 0 and not op.invertible:
        raise SingularityError(
            f"A^{alpha} requested but the generator has a zero eigenvalue"
        )
    if alpha == 0:
        return np.ones_like(mu)
    return mu ** alpha


def apply_power(op: GeneratorOp, alpha, v):
    """``A^alpha v`` by spectral calculus."""
    return op.spectral_apply(_powers(op, alpha), v)


def sharp_constant(alpha):
    """``sup_{x >= 0} x^alpha e^{-x} = (alpha/e)^alpha`` (equal to 1 at alpha = 0)."""
    if alpha < 0:
        raise InvalidInputError("alpha must be >= 0")
    if alpha == 0:
        return 1.0
    return (alpha / math.e) ** alpha


def operator_power_semigroup_norm(op: GeneratorOp, alpha, t):
    """Exact operator norm of ``A^alpha S(t)``: ``max_k mu_k^alpha e^{-mu_k t}``."""
    if t <= 0:
        raise InvalidInputError(f"t must be > 0, got {t}")
    if alpha < 0:
        raise InvalidInputError(f"alpha must be >= 0, got {alpha}")
    return float(np.max(_powers(op, alpha) * np.exp(-op.eigenvalues * t)))


def semigroup_bound(op: GeneratorOp, horizon=1.0, n_grid=1001):
    """``M = sup_{0<=t<=horizon} |S(t)|`` measured on a time grid.

    For nonnegative spectra this is attained at ``t = 0`` and equals 1.
    """
    ts = np.linspace(0.0, horizon, n_grid)
    return float(max(np.max(np.exp(-op.eigenvalues * t)) for t in ts))


def norm_E(v):
    """Euclidean norm over the last axis."""
    return np.linalg.norm(np.asarray(v, dtype=float), axis=-1)


def norm_extrapolation(op: GeneratorOp, beta, v):
    """``|A^{-beta} v|``, the norm of the extrapolation space ``E_{-beta}``."""
    if beta <= 0:
        raise InvalidInputError("beta must be > 0")
    if not op.invertible:
        raise SingularityError("extrapolation norm needs an invertible generator")
    return norm_E(apply_power(op, -beta, v))


def norm_domain(op: GeneratorOp, alpha, v):
    """``|A^alpha v|``, the graph-type norm of ``D(A^alpha)``."""
    if alpha <= 0:
        raise InvalidInputError("alpha must be > 0")
    if not op.invertible:
        raise SingularityError("domain norm needs an invertible generator")
    return norm_E(apply_power(op, alpha, v))


def require_contraction(op: GeneratorOp):
    if not op.is_contraction:
        raise HypothesisError("the semigroup is not of contraction type")
