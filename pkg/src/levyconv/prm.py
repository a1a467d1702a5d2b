"""Time-homogeneous Poisson random measures on (0, T] x Z for a finite mark space.

A realization is a finite, time-ordered list of atoms ``(time, mark)``. Two
constructions with the same law are provided: exponential inter-arrival times
(:func:`simulate_prm_exponential`) and a Poisson total count with uniform
order statistics (:func:`simulate_prm_binomial`).
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

import numpy as np
from scipy import stats

from levyconv.errors import InvalidInputError
from levyconv.rng import as_generator, stream

MarkSubset = Optional[Iterable[Union[int, str]]]


@dataclass(frozen=True)
class MarkSpace:
    """Finite mark space with per-mark intensities ``nu(z) > 0``."""

    marks: tuple
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        marks = tuple(str(m) for m in self.marks)
        w = np.array(self.weights, dtype=float).reshape(-1)
        if len(marks) == 0:
            raise InvalidInputError("mark space must contain at least one mark")
        if len(marks) != w.size:
            raise InvalidInputError(
                f"{len(marks)} marks but {w.size} weights"
            )
        if len(set(marks)) != len(marks):
            raise InvalidInputError("mark identifiers must be unique")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise InvalidInputError("every mark weight must be finite and > 0")
        w.setflags(write=False)
        object.__setattr__(self, "marks", marks)
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, n_marks, total_mass=1.0):
        return cls(tuple(f"z{k}" for k in range(n_marks)),
                   np.full(n_marks, total_mass / n_marks))

    @classmethod
    def from_dict(cls, doc):
        try:
            return cls(tuple(doc["marks"]), np.asarray(doc["weights"], dtype=float))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInputError(f"malformed mark space document: {exc}") from exc

    @classmethod
    def from_json(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self):
        return {"marks": list(self.marks), "weights": [float(w) for w in self.weights]}

    def __len__(self):
        return len(self.marks)

    def __eq__(self, other):
        if not isinstance(other, MarkSpace):
            return NotImplemented
        return self.marks == other.marks and np.array_equal(self.weights, other.weights)

    def __hash__(self):
        return hash((self.marks, self.weights.tobytes()))

    @property
    def total_mass(self):
        return math.fsum(self.weights)

    @property
    def probabilities(self):
        return self.weights / self.total_mass

    def scaled(self, factor):
        """Same marks with every intensity multiplied by ``factor``."""
        return MarkSpace(self.marks, self.weights * factor)

    def index(self, mark):
        if isinstance(mark, (int, np.integer)) and not isinstance(mark, bool):
            if not 0 <= mark < len(self.marks):
                raise InvalidInputError(f"mark index {mark} out of range")
            return int(mark)
        try:
            return self.marks.index(str(mark))
        except ValueError:
            raise InvalidInputError(f"unknown mark {mark!r}") from None

    def mask(self, subset: MarkSubset = None):
        """Boolean indicator of a mark subset; ``None`` means all of Z."""
        m = np.zeros(len(self.marks), dtype=bool)
        if subset is None:
            m[:] = True
        else:
            for z in subset:
                m[self.index(z)] = True
        return m

    def measure(self, subset: MarkSubset = None):
        """``nu(U)``."""
        return math.fsum(self.weights[self.mask(subset)])


@dataclass(frozen=True)
class PrmRealization:
    """Atoms of a point measure on (0, horizon] x Z, sorted by time."""

    horizon: float
    times: np.ndarray
    marks: np.ndarray
    space: MarkSpace

    def __post_init__(self):
        t = np.array(self.times, dtype=float).reshape(-1)
        z = np.array(self.marks, dtype=np.int64).reshape(-1)
        T = float(self.horizon)
        if not T > 0 or not math.isfinite(T):
            raise InvalidInputError(f"horizon must be positive, got {self.horizon}")
        if t.size != z.size:
            raise InvalidInputError("times and marks must have equal length")
        if t.size:
            if np.any(t <= 0) or np.any(t > T):
                raise InvalidInputError("atom times must lie in (0, horizon]")
            if np.any(np.diff(t) < 0):
                raise InvalidInputError("atom times must be nondecreasing")
            if z.min() < 0 or z.max() >= len(self.space):
                raise InvalidInputError("atom mark index out of range")
        t.setflags(write=False)
        z.setflags(write=False)
        object.__setattr__(self, "horizon", T)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "marks", z)

    @classmethod
    def from_atoms(cls, space, horizon, atoms: Sequence):
        """Build from ``(time, mark)`` pairs; marks may be names or indices."""
        atoms = list(atoms)
        times = np.array([a[0] for a in atoms], dtype=float)
        marks = np.array([space.index(a[1]) for a in atoms], dtype=np.int64)
        order = np.argsort(times, kind="stable")
        return cls(horizon, times[order], marks[order], space)

    def __len__(self):
        return int(self.times.size)

    @property
    def atoms(self):
        return list(zip(self.times.tolist(), self.marks.tolist()))

    def restricted_before(self, t):
        """Atoms with time strictly less than ``t`` (the strict past)."""
        k = int(np.searchsorted(self.times, t, side="left"))
        return self.times[:k], self.marks[:k]

    def to_csv(self, path):
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["time", "mark"])
            for t, z in zip(self.times, self.marks):
                w.writerow([f"{t:.17g}", self.space.marks[z]])

    @classmethod
    def from_csv(cls, path, space, horizon):
        with open(path, encoding="utf-8", newline="") as fh:
            rows = list(csv.DictReader(fh))
        return cls.from_atoms(space, horizon, [(float(r["time"]), r["mark"]) for r in rows])


def _check(space, T):
    if not isinstance(space, MarkSpace) or len(space) == 0:
        raise InvalidInputError("an empty mark space cannot carry a Poisson random measure")
    if not (isinstance(T, (int, float, np.floating, np.integer)) and math.isfinite(T) and T > 0):
        raise InvalidInputError(f"horizon must be positive and finite, got {T!r}")


def _draw_marks(rng, space, n):
    cdf = np.cumsum(space.probabilities)
    cdf[-1] = 1.0
    return np.searchsorted(cdf, rng.random(n), side="right").astype(np.int64)


def simulate_prm_exponential(space: MarkSpace, T: float, seed) -> PrmRealization:
    """Atoms from exponential inter-arrival times at rate ``nu(Z)``.

    Each arrival independently carries mark ``z`` with probability
    ``nu(z) / nu(Z)``. ``seed`` is a 64-bit integer or a ``numpy`` generator.
    """
    _check(space, T)
    rng = as_generator(seed)
    rate = space.total_mass
    mean = rate * T
    chunk = int(mean + 5.0 * math.sqrt(mean) + 10)
    times = []
    last = 0.0
    while True:
        arrivals = last + np.cumsum(rng.exponential(1.0 / rate, size=chunk))
        inside = arrivals[arrivals <= T]
        times.append(inside)
        if inside.size < chunk:
            break
        last = arrivals[-1]
    t = np.concatenate(times)
    return PrmRealization(T, t, _draw_marks(rng, space, t.size), space)


def simulate_prm_binomial(space: MarkSpace, T: float, seed) -> PrmRealization:
    """Poisson(``T nu(Z)``) many atoms placed at sorted uniform times in (0, T]."""
    _check(space, T)
    rng = as_generator(seed)
    n = int(rng.poisson(T * space.total_mass))
    t = np.sort(T - T * rng.random(n), kind="stable")
    return PrmRealization(T, t, _draw_marks(rng, space, n), space)


CONSTRUCTIONS = {
    "exponential": simulate_prm_exponential,
    "binomial": simulate_prm_binomial,
}


def simulate(space, T, seed, variant="exponential"):
    try:
        fn = CONSTRUCTIONS[variant]
    except KeyError:
        raise InvalidInputError(f"unknown construction {variant!r}") from None
    return fn(space, T, seed)


def simulate_ensemble(space, T, master_seed, n_draws, variant="exponential"):
    """``n_draws`` independent realizations on derived per-draw streams."""
    return [simulate(space, T, stream(master_seed, i), variant) for i in range(n_draws)]


def count(eta: PrmRealization, a, b, U: MarkSubset = None) -> int:
    """Number of atoms with time in (a, b] and mark in U."""
    if not (0 <= a <= b <= eta.horizon):
        raise InvalidInputError(
            f"interval ({a}, {b}] must satisfy 0 <= a <= b <= {eta.horizon}"
        )
    lo = np.searchsorted(eta.times, a, side="right")
    hi = np.searchsorted(eta.times, b, side="right")
    if U is None:
        return int(hi - lo)
    mask = eta.space.mask(U)
    return int(np.count_nonzero(mask[eta.marks[lo:hi]]))


def compensator(space: MarkSpace, a, b, U: MarkSubset = None) -> float:
    """Mean measure of the box: ``(b - a) nu(U)``."""
    if a < 0 or b < a:
        raise InvalidInputError(f"need 0 <= a <= b, got a={a}, b={b}")
    return (b - a) * space.measure(U)


def box_counts(realizations, a, b, U: MarkSubset = None):
    return np.array([count(eta, a, b, U) for eta in realizations], dtype=np.int64)


def poisson_chi_square(counts, mean, min_expected=5.0):
    """Chi-square goodness of fit of integer counts against Poisson(mean).

    Bins are the integers 0, 1, ... with adjacent low-probability bins pooled
    until every bin expects at least ``min_expected`` observations; the upper
    tail is absorbed into the last bin. Returns ``(statistic, pvalue, dof)``.
    """
    counts = np.asarray(counts, dtype=np.int64)
    n = counts.size
    if n == 0:
        raise InvalidInputError("no counts supplied")
    if mean <= 0:
        if np.any(counts != 0):
            return math.inf, 0.0, 0
        return 0.0, 1.0, 0
    kmax = int(max(counts.max(), stats.poisson.ppf(1 - 1e-12, mean))) + 1
    ks = np.arange(kmax + 1)
    probs = stats.poisson.pmf(ks, mean)
    probs[-1] += stats.poisson.sf(kmax, mean)
    observed = np.bincount(counts, minlength=kmax + 1)[: kmax + 1].astype(float)

    edges = [0]
    acc = 0.0
    for k in range(kmax + 1):
        acc += probs[k] * n
        if acc >= min_expected:
            edges.append(k + 1)
            acc = 0.0
    if edges[-1] != kmax + 1:
        if len(edges) > 1:
            edges[-1] = kmax + 1
        else:
            edges.append(kmax + 1)
    exp_b = np.array([probs[a:b].sum() * n for a, b in zip(edges[:-1], edges[1:])])
    obs_b = np.array([observed[a:b].sum() for a, b in zip(edges[:-1], edges[1:])])
    if exp_b.size < 2:
        return 0.0, 1.0, 0
    exp_b *= obs_b.sum() / exp_b.sum()
    stat, pval = stats.chisquare(obs_b, exp_b)
    return float(stat), float(pval), int(exp_b.size - 1)


def count_correlation(counts_1, counts_2):
    """Pearson correlation of two count samples (0 when either is constant)."""
    x = np.asarray(counts_1, dtype=float)
    y = np.asarray(counts_2, dtype=float)
    if x.std() == 0 or y.std() == 0:
        return 0.0
    return float(np.corrcoef(x, y)[0, 1])
