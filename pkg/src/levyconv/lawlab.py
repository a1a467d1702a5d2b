"""Monte-Carlo experiments on the law of ``(u, xi, eta)``.

A :class:`Scenario` fixes a generator, a mark space, an integrand, a drift
and the numerical parameters. Each draw produces a fixed vector of
functionals (:class:`FunctionalVector`) that probes every factor of the
triple: values of ``u`` at probe times, the ``L^p(D(A^alpha))`` norm of
``u``, its sup in the extrapolation norm ``|A^{-1} .|``, the number of atoms
and ``int int |xi|^p``. Three experiments are provided:

* :func:`law_equality_experiment` compares the functional laws of two
  scenarios that differ only in the construction of the random measure;
* :func:`maximal_ratio_experiment` measures
  ``E sup_t |u(t)|^q / E (int int |xi|^p)^(q/p)``;
* :func:`analytic_bound_experiment` compares ``E ||A^alpha u||_{L^p}^p``
  with ``C_{alpha,p} E int int |xi|^p``.

Draw ``i`` of a scenario uses the stream ``(seed, i)``, so ensembles are
reproducible and independent of batching and of the number of workers.
"""

from __future__ import annotations

import copy
import csv
import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from functools import cached_property
from typing import Optional

import numpy as np
from scipy import stats
from scipy.spatial.distance import cdist

from levyconv import prm
from levyconv.errors import ConfigurationError, HypothesisError, InvalidInputError, LevyConvError
from levyconv.paths import PiecewiseConstPath
from levyconv.rng import check_seed, stream
from levyconv.semigroup import GeneratorOp, apply_power, sharp_constant
from levyconv.skorokhod import d0_upper
from levyconv.stochint import (
    JumpCountIntegrand,
    convolve,
    convolve_batch,
    drift_from_dict,
    integrand_from_dict,
    lp_mass,
    lp_mass_batch,
    solve_spde,
)

# decision thresholds, fixed here rather than per run
DEFAULT_N_PERM = 199
MIN_N_PERM = 99
NULL_LEVEL = 0.05
POWER_LEVEL = 0.01
BATCH = 500

_LAW_EXEMPT = {"name", "seed", "variant", "samples"}


def _digest(doc):
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class Components:
    op: GeneratorOp
    space: prm.MarkSpace
    xi: object
    drift: object
    reference: Optional[PiecewiseConstPath]
    reference_grid: int


@dataclass(frozen=True)
class Scenario:
    """Everything needed to simulate one ensemble.

    ``generator``, ``marks``, ``integrand``, ``drift`` and ``reference`` are
    the JSON documents of the components; they are validated on
    construction. ``integrand`` may carry a ``scale`` factor.
    """

    generator: dict
    marks: dict
    integrand: dict
    drift: Optional[dict] = None
    horizon: float = 1.0
    dt: float = 0.05
    p: float = 2.0
    alpha: float = 0.25
    probe_times: tuple = (0.5, 1.0)
    samples: int = 1000
    seed: int = 0
    variant: str = "exponential"
    reference: Optional[dict] = None
    name: str = "scenario"

    def __post_init__(self):
        object.__setattr__(self, "probe_times", tuple(float(t) for t in self.probe_times))
        object.__setattr__(self, "horizon", float(self.horizon))
        object.__setattr__(self, "dt", float(self.dt))
        object.__setattr__(self, "p", float(self.p))
        object.__setattr__(self, "alpha", float(self.alpha))
        if not (math.isfinite(self.horizon) and self.horizon > 0):
            raise ConfigurationError(f"horizon must be positive, got {self.horizon}")
        if not (self.dt > 0 and self.dt <= self.horizon):
            raise ConfigurationError(f"grid step must lie in (0, horizon], got {self.dt}")
        if not 1 < self.p <= 2:
            raise ConfigurationError(f"p must lie in (1, 2], got {self.p}")
        if not self.alpha > 0:
            raise ConfigurationError(f"alpha must be > 0, got {self.alpha}")
        if self.alpha * self.p >= 1:
            raise HypothesisError(
                f"alpha * p = {self.alpha * self.p:g} >= 1: the L^p(D(A^alpha)) bound needs alpha < 1/p"
            )
        if not self.probe_times or any(not 0 < t <= self.horizon for t in self.probe_times):
            raise ConfigurationError("probe times must be nonempty and lie in (0, horizon]")
        if int(self.samples) != self.samples or self.samples < 1:
            raise ConfigurationError(f"samples must be a positive integer, got {self.samples}")
        object.__setattr__(self, "samples", int(self.samples))
        try:
            object.__setattr__(self, "seed", check_seed(self.seed))
        except InvalidInputError as exc:
            raise ConfigurationError(str(exc)) from exc
        if self.variant not in prm.CONSTRUCTIONS:
            raise ConfigurationError(f"unknown construction {self.variant!r}")
        self.components  # noqa: B018  (validate the component documents now)

    # io -----------------------------------------------------------------

    @classmethod
    def from_dict(cls, doc):
        if not isinstance(doc, dict):
            raise ConfigurationError("a scenario must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ConfigurationError(f"unknown scenario fields: {sorted(unknown)}")
        missing = {"generator", "marks", "integrand"} - set(doc)
        if missing:
            raise ConfigurationError(f"missing scenario fields: {sorted(missing)}")
        try:
            return cls(**copy.deepcopy(doc))
        except TypeError as exc:
            raise ConfigurationError(f"malformed scenario: {exc}") from exc

    @classmethod
    def from_json(cls, path):
        try:
            with open(path, encoding="utf-8") as fh:
                doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{path}: invalid JSON ({exc})") from exc
        return cls.from_dict(doc)

    def to_dict(self):
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = list(v) if isinstance(v, tuple) else copy.deepcopy(v)
        return out

    @property
    def digest(self):
        return _digest(self.to_dict())

    def law_key(self):
        """The fields that determine the law of the functional vector."""
        return {k: v for k, v in self.to_dict().items() if k not in _LAW_EXEMPT}

    def with_(self, **changes):
        return replace(self, **changes)

    def with_integrand_scale(self, c):
        doc = copy.deepcopy(self.integrand)
        doc["scale"] = float(doc.get("scale", 1.0)) * c
        return replace(self, integrand=doc)

    def with_intensity_scale(self, c):
        space = prm.MarkSpace.from_dict(self.marks).scaled(c)
        return replace(self, marks=space.to_dict())

    # components -----------------------------------------------------------

    @cached_property
    def components(self) -> Components:
        try:
            op = GeneratorOp.from_dict(self.generator)
            space = prm.MarkSpace.from_dict(self.marks)
            doc = dict(self.integrand)
            scale = float(doc.pop("scale", 1.0))
            xi = integrand_from_dict(doc, self.horizon)
            if scale != 1.0:
                xi = xi.scaled(scale)
            b = drift_from_dict(self.drift, op.dim)
            ref, grid = None, 0
            if self.reference is not None:
                r = self.reference
                ref = PiecewiseConstPath.from_jumps(r["initial"], [tuple(j) for j in r.get("jumps", [])])
                grid = int(r.get("grid", 4))
                if ref.dim != op.dim:
                    raise InvalidInputError("reference path dimension differs from the state dimension")
        except (LevyConvError, KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ConfigurationError):
                raise
            raise ConfigurationError(f"invalid scenario component: {exc}") from exc
        if xi.dim != op.dim:
            raise ConfigurationError(f"integrand dimension {xi.dim} != generator dimension {op.dim}")
        if xi.n_marks != len(space):
            raise ConfigurationError(
                f"integrand has {xi.n_marks} mark blocks but the mark space has {len(space)} marks"
            )
        return Components(op, space, xi, b, ref, grid)

    def simulate(self, index):
        c = self.components
        return prm.simulate(c.space, self.horizon, stream(self.seed, index), self.variant)

    def coordinate_names(self):
        d = self.components.op.dim
        names = [f"u(t={t:g})[{k}]" for t in self.probe_times for k in range(d)]
        names += ["lp_domain_norm", "sup_extrapolation_norm", "jump_count", "xi_lp_mass"]
        if self.drift is not None and self.components.drift is not None:
            names.append("drift_lp_norm")
        if self.components.reference is not None:
            names.append("d0_to_reference")
        return names


def load_scenario(path_or_doc):
    if isinstance(path_or_doc, Scenario):
        return path_or_doc
    if isinstance(path_or_doc, dict):
        return Scenario.from_dict(path_or_doc)
    return Scenario.from_json(path_or_doc)


# --------------------------------------------------------------------------
# functionals


@dataclass(frozen=True)
class FunctionalVector:
    """Per-draw functionals of ``(u, xi, eta)``.

    ``u_probe`` has shape ``(n_probes, d)``.
    """

    u_probe: np.ndarray
    lp_domain_norm: float
    sup_extrapolation_norm: float
    jump_count: int
    xi_lp_mass: float
    drift_lp_norm: Optional[float] = None
    d0_to_reference: Optional[float] = None

    def as_array(self):
        extra = [v for v in (self.drift_lp_norm, self.d0_to_reference) if v is not None]
        return np.concatenate([
            np.asarray(self.u_probe, dtype=float).reshape(-1),
            [self.lp_domain_norm, self.sup_extrapolation_norm, float(self.jump_count), self.xi_lp_mass],
            extra,
        ])


def _extrapolation_factors(op):
    """Spectral factors of the ``E_{-1}`` norm: ``1/mu`` (or ``1/(1+mu)`` if singular)."""
    mu = op.eigenvalues
    return 1.0 / mu if op.invertible else 1.0 / (1.0 + mu)


def _drift_norm(s):
    b = s.components.drift
    if b is None or s.drift is None:
        return None
    return b.lp_norm(s.horizon, s.p)


def sample_triple_functionals(s: Scenario, index) -> FunctionalVector:
    """Simulate draw ``index`` of ``s`` and evaluate its functional vector.

    Reference route: one realization, :func:`~levyconv.stochint.solve_spde`
    and :class:`~levyconv.paths.GridPath` norms.
    """
    c = s.components
    eta = s.simulate(index)
    u = solve_spde(c.op, c.drift, c.xi, eta, s.dt, s.probe_times)
    probe = u.values[np.searchsorted(u.times, s.probe_times)]
    lp = u.lp_norm(s.p, transform=lambda v: apply_power(c.op, s.alpha, v))
    fac = _extrapolation_factors(c.op)
    both = np.concatenate([u.values, u.left()])
    sup_ext = float(np.max(np.linalg.norm(c.op.spectral_apply(fac, both), axis=-1)))
    d0 = None
    if c.reference is not None:
        d0, _ = d0_upper(u.to_piecewise_const(), c.reference, c.reference_grid)
    return FunctionalVector(
        probe, lp, sup_ext, len(eta), lp_mass(c.xi, eta, s.p), _drift_norm(s), d0
    )


def _batch_rows(s: Scenario, start, stop):
    c = s.components
    etas = [s.simulate(i) for i in range(start, stop)]
    batch = convolve_batch(c.op, c.xi, etas, s.dt, s.probe_times, c.drift)
    mu = c.op.eigenvalues
    M = len(etas)
    # probe values: last node at each probe time
    cols = np.stack([
        np.sum(batch.times <= t, axis=1) - 1 for t in s.probe_times
    ], axis=1)
    probe_modes = np.take_along_axis(batch.modes, cols[..., None], axis=1)
    probe = c.op.from_modes(probe_modes).reshape(M, -1)
    # trapezoid for int |A^alpha u|^p with left limits at the right ends
    pw = mu ** s.alpha
    a = np.linalg.norm(batch.modes[:, :-1] * pw, axis=-1) ** s.p
    b = np.linalg.norm(batch.left_modes[:, 1:] * pw, axis=-1) ** s.p
    lp = np.sum(0.5 * np.diff(batch.times, axis=1) * (a + b), axis=1) ** (1.0 / s.p)
    fac = _extrapolation_factors(c.op)
    sup_ext = np.maximum(
        np.linalg.norm(batch.modes * fac, axis=-1).max(axis=1),
        np.linalg.norm(batch.left_modes * fac, axis=-1).max(axis=1),
    )
    counts = np.array([len(e) for e in etas], dtype=float)
    mass = lp_mass_batch(c.xi, etas, s.p)
    cols_out = [probe, lp[:, None], sup_ext[:, None], counts[:, None], mass[:, None]]
    dn = _drift_norm(s)
    if dn is not None:
        cols_out.append(np.full((M, 1), dn))
    if c.reference is not None:
        d0 = [d0_upper(batch.path(m).to_piecewise_const(), c.reference, c.reference_grid)[0]
              for m in range(M)]
        cols_out.append(np.asarray(d0)[:, None])
    return np.hstack(cols_out)


def _rows_task(args):
    s, start, stop = args
    return _batch_rows(s, start, stop)


def run_ensemble(s: Scenario, n=None, workers=1):
    """Functional vectors of draws ``0..n-1`` as an ``(n, k)`` array.

    Draws are processed in fixed blocks of :data:`BATCH`, so the array does
    not depend on ``workers``.
    """
    n = s.samples if n is None else int(n)
    if n < 1:
        raise InvalidInputError("need at least one draw")
    blocks = [(s, a, min(n, a + BATCH)) for a in range(0, n, BATCH)]
    if workers > 1 and len(blocks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_rows_task, blocks))
    else:
        parts = [_rows_task(b) for b in blocks]
    return np.vstack(parts)


# --------------------------------------------------------------------------
# two-sample statistics


def _as_matrix(X):
    if isinstance(X, (list, tuple)) and X and isinstance(X[0], FunctionalVector):
        X = [x.as_array() for x in X]
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] == 0:
        raise InvalidInputError("sample sets must be nonempty")
    return X


def _standardized(A, B, standardize):
    if A.shape[1] != B.shape[1]:
        raise InvalidInputError("sample sets have different numbers of coordinates")
    Z = np.vstack([A, B])
    if standardize:
        scale = Z.std(axis=0)
        scale[scale == 0] = 1.0
        Z = (Z - Z.mean(axis=0)) / scale
    return Z


def _energy_from_distances(D, n):
    m = D.shape[0] - n
    s_aa = D[:n, :n].sum()
    s_bb = D[n:, n:].sum()
    s_ab = D[:n, n:].sum()
    return 2.0 * s_ab / (n * m) - s_aa / n**2 - s_bb / m**2


def energy_distance(A, B, standardize=True) -> float:
    """``2 E|a - b| - E|a - a'| - E|b - b'|`` with all pairs (V-statistic).

    With ``standardize`` every coordinate is centred and divided by its
    pooled standard deviation (constant coordinates are left unscaled).
    """
    A, B = _as_matrix(A), _as_matrix(B)
    Z = _standardized(A, B, standardize)
    return float(_energy_from_distances(cdist(Z, Z), A.shape[0]))


def _permutation_test(A, B, n_perm, seed, standardize=True):
    if int(n_perm) != n_perm or n_perm < MIN_N_PERM:
        raise InvalidInputError(f"n_perm must be an integer >= {MIN_N_PERM}, got {n_perm}")
    A, B = _as_matrix(A), _as_matrix(B)
    n, m = A.shape[0], B.shape[0]
    Z = _standardized(A, B, standardize)
    D = cdist(Z, Z)
    observed = _energy_from_distances(D, n)
    total = D.sum()
    rows = D.sum(axis=1)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(check_seed(seed))))
    N = n + m
    perm_stats = np.empty(int(n_perm))
    chunk = 64
    for c0 in range(0, int(n_perm), chunk):
        k = min(chunk, int(n_perm) - c0)
        lab = np.zeros((N, k))
        for j in range(k):
            lab[rng.permutation(N)[:n], j] = 1.0
        s_aa = np.einsum("ij,ij->j", lab, D @ lab)
        s_ab = lab.T @ rows - s_aa
        s_bb = total - s_aa - 2.0 * s_ab
        perm_stats[c0:c0 + k] = 2.0 * s_ab / (n * m) - s_aa / n**2 - s_bb / m**2
    tol = 1e-12 * max(1.0, abs(observed))
    exceed = int(np.count_nonzero(perm_stats >= observed - tol))
    return float(observed), (1.0 + exceed) / (1.0 + n_perm)


def permutation_pvalue(A, B, n_perm=DEFAULT_N_PERM, seed=0, standardize=True) -> float:
    """Permutation p-value of the energy distance, ``(1 + #{T* >= T}) / (1 + n_perm)``."""
    return _permutation_test(A, B, n_perm, seed, standardize)[1]


def ks_per_coordinate(A, B, names=None):
    """Two-sample KS statistic and p-value for every coordinate."""
    A, B = _as_matrix(A), _as_matrix(B)
    names = names or [f"c{k}" for k in range(A.shape[1])]
    out = []
    for k, name in enumerate(names):
        r = stats.ks_2samp(A[:, k], B[:, k])
        out.append({"coordinate": name, "statistic": float(r.statistic), "pvalue": float(r.pvalue)})
    return out


# --------------------------------------------------------------------------
# experiments


@dataclass(frozen=True)
class TestReport:
    """Outcome of a two-sample comparison of functional laws."""

    __test__ = False  # not a pytest class

    energy_statistic: float
    pvalue: float
    ks: list
    n_a: int
    n_b: int
    seeds: tuple
    variants: tuple
    digests: tuple
    n_perm: int
    forced: bool = False

    def to_dict(self):
        return {
            "kind": "law_equality",
            "energy_statistic": self.energy_statistic,
            "pvalue": self.pvalue,
            "n_perm": self.n_perm,
            "samples": [self.n_a, self.n_b],
            "seeds": list(self.seeds),
            "variants": list(self.variants),
            "scenario_digests": list(self.digests),
            "forced": self.forced,
            "ks": self.ks,
        }

    def ks_csv(self, path):
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["coordinate", "statistic", "pvalue"])
            for r in self.ks:
                w.writerow([r["coordinate"], f"{r['statistic']:.17g}", f"{r['pvalue']:.17g}"])


def check_same_law(sA: Scenario, sB: Scenario):
    """Raise :class:`ConfigurationError` unless only construction, seed, size or name differ."""
    ka, kb = sA.law_key(), sB.law_key()
    diff = sorted(k for k in ka if ka[k] != kb[k])
    if diff:
        raise ConfigurationError(
            "scenarios differ in law parameters " + ", ".join(diff)
            + "; pass force=True to compare them anyway"
        )


def _perm_seed(sA, sB):
    ss = np.random.SeedSequence([sA.seed & 0xFFFFFFFF, sA.seed >> 32, sB.seed & 0xFFFFFFFF, sB.seed >> 32])
    return int(ss.generate_state(2, dtype=np.uint64)[0])


def law_equality_experiment(sA: Scenario, sB: Scenario, n_perm=DEFAULT_N_PERM, force=False,
                            workers=1) -> TestReport:
    """Compare the functional laws of two ensembles.

    Refuses scenarios whose law parameters differ unless ``force``.
    """
    if not force:
        check_same_law(sA, sB)
    if sA.coordinate_names() != sB.coordinate_names():
        raise ConfigurationError("scenarios produce different functional vectors")
    A = run_ensemble(sA, workers=workers)
    B = run_ensemble(sB, workers=workers)
    stat, pval = _permutation_test(A, B, n_perm, _perm_seed(sA, sB))
    return TestReport(
        energy_statistic=stat,
        pvalue=pval,
        ks=ks_per_coordinate(A, B, sA.coordinate_names()),
        n_a=A.shape[0],
        n_b=B.shape[0],
        seeds=(sA.seed, sB.seed),
        variants=(sA.variant, sB.variant),
        digests=(sA.digest, sB.digest),
        n_perm=int(n_perm),
        forced=bool(force),
    )


@dataclass(frozen=True)
class MaximalRatio:
    """``E sup|u|^q / E (int int |xi|^p)^(q/p)`` with its two sides."""

    ratio: float
    lhs: float
    rhs: float
    q: float
    samples: int
    degenerate: bool = False

    def __float__(self):
        return self.ratio

    def to_dict(self):
        return {"kind": "maximal_ratio", "ratio": self.ratio, "lhs": self.lhs, "rhs": self.rhs,
                "q": self.q, "samples": self.samples, "degenerate": self.degenerate}


def _convolution_batches(s, n):
    c = s.components
    for a in range(0, n, BATCH):
        etas = [s.simulate(i) for i in range(a, min(n, a + BATCH))]
        yield etas, convolve_batch(c.op, c.xi, etas, s.dt, s.probe_times)


def maximal_ratio_experiment(s: Scenario, q_prime=1.0, n=None) -> MaximalRatio:
    """Monte-Carlo ratio for the maximal inequality of the stochastic convolution.

    The sup runs over all nodes, right values and left limits. Needs a
    contraction semigroup and ``0 < q_prime <= p``.
    """
    c = s.components
    if not c.op.is_contraction:
        raise HypothesisError("the maximal inequality needs a contraction semigroup")
    if not 0 < q_prime <= s.p:
        raise ConfigurationError(f"q' must lie in (0, p] = (0, {s.p}], got {q_prime}")
    n = s.samples if n is None else int(n)
    lhs = rhs = 0.0
    for etas, batch in _convolution_batches(s, n):
        sup = np.maximum(np.linalg.norm(batch.modes, axis=-1).max(axis=1),
                         np.linalg.norm(batch.left_modes, axis=-1).max(axis=1))
        lhs += math.fsum(sup ** q_prime)
        rhs += math.fsum(lp_mass_batch(c.xi, etas, s.p) ** (q_prime / s.p))
    lhs, rhs = lhs / n, rhs / n
    if rhs == 0.0:
        return MaximalRatio(0.0, lhs, rhs, float(q_prime), n, degenerate=True)
    return MaximalRatio(lhs / rhs, lhs, rhs, float(q_prime), n)


def young_constant(alpha, p, horizon):
    """``C^p T^(1 - alpha p) / (1 - alpha p)`` with ``C = (alpha/e)^alpha``."""
    if alpha * p >= 1:
        raise HypothesisError(f"alpha * p = {alpha * p:g} must be < 1")
    return sharp_constant(alpha) ** p * horizon ** (1 - alpha * p) / (1 - alpha * p)


@dataclass(frozen=True)
class BoundCheck:
    """``lhs = E ||A^alpha u||_{L^p}^p`` against ``rhs = C_{alpha,p} E int int |xi|^p``.

    Unpacks as ``(lhs, rhs, ratio)``.
    """

    lhs: float
    rhs: float
    ratio: float
    constant: float
    samples: int
    degenerate: bool = False

    def __iter__(self):
        return iter((self.lhs, self.rhs, self.ratio))

    @property
    def holds(self):
        return self.lhs <= self.rhs

    def to_dict(self):
        return {"kind": "analytic_bound", "lhs": self.lhs, "rhs": self.rhs, "ratio": self.ratio,
                "constant": self.constant, "samples": self.samples, "holds": self.holds,
                "degenerate": self.degenerate}


def analytic_bound_experiment(s: Scenario, n=None) -> BoundCheck:
    """Monte-Carlo check of the ``L^p(0, T; D(A^alpha))`` bound of the convolution."""
    c = s.components
    if s.alpha * s.p >= 1:
        raise HypothesisError("the bound needs alpha * p < 1")
    if not c.op.invertible:
        raise HypothesisError("the bound needs an invertible generator")
    const = young_constant(s.alpha, s.p, s.horizon)
    pw = c.op.eigenvalues ** s.alpha
    n = s.samples if n is None else int(n)
    lhs = mass = 0.0
    for etas, batch in _convolution_batches(s, n):
        a = np.linalg.norm(batch.modes[:, :-1] * pw, axis=-1) ** s.p
        b = np.linalg.norm(batch.left_modes[:, 1:] * pw, axis=-1) ** s.p
        lhs += math.fsum(np.sum(0.5 * np.diff(batch.times, axis=1) * (a + b), axis=1))
        mass += math.fsum(lp_mass_batch(c.xi, etas, s.p))
    lhs, rhs = lhs / n, const * mass / n
    if rhs == 0.0:
        return BoundCheck(lhs, rhs, 0.0, const, n, degenerate=True)
    return BoundCheck(lhs, rhs, lhs / rhs, const, n)
