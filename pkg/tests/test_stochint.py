import math

import numpy as np
import pytest

from levyconv.errors import InvalidInputError, SingularityError
from levyconv.paths import GridPath
from levyconv.prm import MarkSpace, PrmRealization, simulate, simulate_ensemble
from levyconv.projections import SampledFunction
from levyconv.semigroup import GeneratorOp
from levyconv.stochint import (
    AffineDrift,
    GridIntegrand,
    JumpCountIntegrand,
    SampledDrift,
    StepIntegrand,
    convolve,
    convolve_batch,
    drift_convolve,
    event_grid,
    lp_mass,
    lp_mass_batch,
    phi_apply,
    solve_spde,
    step_integral,
    strong_identity_residual,
)

TWO = MarkSpace(("z0", "z1"), [1.0, 1.0])
ETA = PrmRealization.from_atoms(TWO, 1.0, [(0.3, "z0"), (0.7, "z1")])
ONES = StepIntegrand.constant(1.0, [[1.0], [1.0]])


def scalar_solution(mu, c, nu, taus, t):
    """Closed form of the scalar convolution for xi == c."""
    jumps = sum(c * math.exp(-mu * (t - s)) for s in taus if s <= t)
    return jumps - c * nu * (1 - math.exp(-mu * t)) / mu


def scalar_integral(mu, c, nu, taus, t):
    """Closed form of int_0^t u ds for the same path."""
    jumps = sum(c * (1 - math.exp(-mu * (t - s))) / mu for s in taus if s <= t)
    return jumps - c * nu / mu * (t - (1 - math.exp(-mu * t)) / mu)


class TestStepIntegral:
    def test_zero_integrand(self):
        xi = StepIntegrand.constant(1.0, np.zeros((2, 1)))
        assert np.all(step_integral(xi, ETA).values == 0)

    def test_direct_evaluation(self):
        path = step_integral(ONES, ETA, dt=0.5)
        assert path.at(1.0)[0] == pytest.approx(0.0, abs=1e-14)
        assert path.at(0.5)[0] == pytest.approx(1.0 - 2 * 0.5, abs=1e-14)
        assert path.left()[np.searchsorted(path.times, 0.3)][0] == pytest.approx(-0.6)

    def test_partition_exceeding_horizon(self):
        xi = StepIntegrand([0.0, 2.0], np.ones((1, 2, 1)))
        with pytest.raises(InvalidInputError):
            step_integral(xi, ETA)

    def test_mean_zero_and_isometry(self):
        # Var I(T) = T sum_z nu(z) c_z^2 for time-constant xi
        sp = MarkSpace(("a", "b"), [0.7, 1.8])
        xi = StepIntegrand([0.0, 0.4, 1.0], [[[1.0], [-2.0]], [[0.5], [3.0]]])
        vals = np.array([step_integral(xi, e).values[-1, 0]
                         for e in simulate_ensemble(sp, 1.0, 11, 10_000)])
        var = 0.4 * (0.7 * 1 + 1.8 * 4) + 0.6 * (0.7 * 0.25 + 1.8 * 9)
        assert abs(vals.mean()) <= 3 * math.sqrt(var / vals.size)
        se = math.sqrt(np.var((vals - vals.mean()) ** 2) / vals.size)
        assert abs(vals.var() - var) <= 4 * se

    def test_zero_generator_equals_convolve(self):
        xi = StepIntegrand([0.0, 0.25, 1.0], [[[1.0], [2.0]], [[-1.0], [0.5]]])
        for i in range(20):
            eta = simulate(TWO, 1.0, i)
            a = convolve(GeneratorOp.zero(1), xi, eta, 0.1)
            b = step_integral(xi, eta, dt=0.1)
            assert np.array_equal(a.times, b.times)
            assert np.max(np.abs(a.values - b.values)) < 1e-12


class TestConvolve:
    def test_scalar_example(self):
        u = convolve(GeneratorOp.diagonal([1.0]), ONES, ETA, 0.05)
        expected = math.exp(-0.7) + math.exp(-0.3) - 2 * (1 - math.exp(-1))
        assert expected == pytest.approx(-0.02684, abs=1e-5)
        assert u.at(1.0)[0] == pytest.approx(expected, abs=1e-12)

    @pytest.mark.parametrize("a,c", [(0.5, 1.0), (3.0, -2.0), (40.0, 0.7)])
    def test_no_atoms(self, a, c):
        sp = MarkSpace(("a",), [1.0])
        eta = PrmRealization(1.0, [], [], sp)
        u = convolve(GeneratorOp.diagonal([a]), StepIntegrand.constant(1.0, [[c]]), eta, 0.1)
        for t in (0.5, 1.0):
            assert u.at(t)[0] == pytest.approx(-(c / a) * (1 - math.exp(-a * t)), abs=1e-10)

    def test_matches_closed_form_on_random_draws(self):
        for i in range(20):
            eta = simulate(TWO, 1.0, 100 + i)
            u = convolve(GeneratorOp.diagonal([2.5]), ONES.scaled(1.5), eta, 0.03, extra_times=(0.2, 0.5))
            for t in (0.2, 0.5, 1.0):
                ref = scalar_solution(2.5, 1.5, 2.0, eta.times, t)
                assert u.at(t)[0] == pytest.approx(ref, abs=1e-12)

    def test_left_limits_at_atoms(self):
        u = convolve(GeneratorOp.diagonal([1.0]), ONES, ETA, 0.05)
        k = np.searchsorted(u.times, 0.7)
        assert u.values[k, 0] - u.left()[k, 0] == pytest.approx(1.0, abs=1e-14)

    def test_bad_step(self):
        with pytest.raises(InvalidInputError):
            convolve(GeneratorOp.diagonal([1.0]), ONES, ETA, 0.0)

    def test_linearity(self):
        op = GeneratorOp.dirichlet_laplacian_1d(3, 2.0)
        rng = np.random.default_rng(4)
        x1 = StepIntegrand([0, 0.5, 1.0], rng.normal(size=(2, 2, 3)))
        x2 = StepIntegrand([0, 0.5, 1.0], rng.normal(size=(2, 2, 3)))
        eta = simulate(TWO, 1.0, 5)
        lhs = convolve(op, StepIntegrand(x1.partition, 2 * x1.values - 3 * x2.values), eta, 0.05)
        rhs = convolve(op, x1, eta, 0.05).scaled(2.0) + convolve(op, x2, eta, 0.05).scaled(-3.0)
        assert np.max(np.abs(lhs.values - rhs.values)) < 1e-12

    def test_mean_zero(self):
        op = GeneratorOp.diagonal([1.0])
        vals = np.array([convolve(op, ONES, e, 0.1).at(1.0)[0]
                         for e in simulate_ensemble(TWO, 1.0, 21, 10_000)])
        var = 2.0 * (1 - math.exp(-2.0)) / 2.0
        assert abs(vals.mean()) <= 3 * math.sqrt(var / vals.size)

    def test_grid_integrand_matches_step_when_constant(self):
        op = GeneratorOp.diagonal([1.3])
        grid = GridIntegrand([0.0, 1.0], np.ones((2, 2, 1)))
        for i in range(5):
            eta = simulate(TWO, 1.0, i)
            a = convolve(op, grid, eta, 0.05).values
            b = convolve(op, ONES, eta, 0.05).values
            assert np.max(np.abs(a - b)) < 1e-12


class TestPredictable:
    def test_value_ignores_atoms_at_or_after_t(self):
        xi = JumpCountIntegrand([[1.0], [2.0]], damping=0.5)
        base = PrmRealization.from_atoms(TWO, 1.0, [(0.2, "z0"), (0.4, "z1")])
        later = PrmRealization.from_atoms(TWO, 1.0, [(0.2, "z0"), (0.4, "z1"), (0.5, "z0"), (0.9, "z1")])
        for t in (0.1, 0.3, 0.45, 0.5):
            for z in (0, 1):
                assert np.array_equal(xi.value(t, z, base), xi.value(t, z, later))
        assert xi.value(0.5, 0, base)[0] == pytest.approx(1 / (1 + 0.5 * 2))

    def test_resolved_jump_uses_strict_past(self):
        xi = JumpCountIntegrand([[1.0], [1.0]], damping=1.0)
        u = step_integral(xi, ETA)
        # jumps of size 1 at 0.3 and 1/2 at 0.7; compensator 2*(0.3 + 0.4/2 + 0.3/3)
        assert u.at(1.0)[0] == pytest.approx(1.5 - 2 * (0.3 + 0.2 + 0.1), abs=1e-12)


class TestDrift:
    def test_zero_drift(self):
        v = drift_convolve(GeneratorOp.diagonal([1.0]), AffineDrift([0.0]), dt=0.1, horizon=1.0)
        assert np.all(v.values == 0)

    def test_unit_drift(self):
        v = drift_convolve(GeneratorOp.diagonal([1.0]), AffineDrift([1.0]), dt=1e-3, horizon=1.0)
        assert v.at(1.0)[0] == pytest.approx(1 - math.exp(-1), abs=1e-3)

    def test_zero_generator_is_plain_integral(self):
        v = drift_convolve(GeneratorOp.zero(2), AffineDrift([0.5, -2.0]), dt=0.1, horizon=1.0)
        assert np.allclose(v.values, np.outer(v.times, [0.5, -2.0]), atol=1e-14)

    def test_linear_drift_converges(self):
        op = GeneratorOp.diagonal([2.0])
        b = AffineDrift([0.0], [1.0])
        exact = (1.0 / 2.0) - (1 - math.exp(-2.0)) / 4.0  # int_0^1 e^{-2(1-s)} s ds
        errs = [abs(drift_convolve(op, b, dt=dt, horizon=1.0).at(1.0)[0] - exact) for dt in (0.1, 0.05)]
        assert errs[1] < errs[0] or errs[1] < 1e-12

    def test_empty_sample(self):
        with pytest.raises(InvalidInputError):
            SampledDrift([], [])

    def test_solve_spde_components(self):
        op = GeneratorOp.diagonal([1.0])
        b = AffineDrift([0.7])
        u = solve_spde(op, None, ONES, ETA, 0.05)
        assert np.array_equal(u.values, convolve(op, ONES, ETA, 0.05).values)
        zero = StepIntegrand.constant(1.0, np.zeros((2, 1)))
        w = solve_spde(op, b, zero, ETA, 0.05)
        assert np.allclose(w.values, drift_convolve(op, b, nodes=w.times).values, atol=1e-15)


class TestPhi:
    F = SampledFunction(np.random.default_rng(6).normal(size=(64, 2, 3)), mark_weights=[0.5, 1.5])
    OP = GeneratorOp.dirichlet_laplacian_1d(3, 4.0)

    def test_t_zero(self):
        assert np.all(phi_apply(self.OP, self.F, 0.0).values == 0)

    def test_zero_generator_truncates(self):
        out = phi_apply(GeneratorOp.zero(3), self.F, 0.5)
        s = self.F.sample_points
        assert np.array_equal(out.values[s < 0.5], self.F.values[s < 0.5])
        assert np.all(out.values[s >= 0.5] == 0)

    @pytest.mark.parametrize("t", [0.1, 0.5, 1.0])
    @pytest.mark.parametrize("p", [1.5, 2.0])
    def test_bounded(self, t, p):
        assert phi_apply(self.OP, self.F, t).lp_norm(p) <= self.F.lp_norm(p) + 1e-12

    def test_bad_time(self):
        with pytest.raises(InvalidInputError):
            phi_apply(self.OP, self.F, 1.5)


class TestStrongIdentity:
    def test_zero_integrand(self):
        zero = StepIntegrand.constant(1.0, np.zeros((2, 1)))
        assert strong_identity_residual(GeneratorOp.diagonal([3.0]), zero, ETA, 0.1) <= 1e-12

    def test_closed_form_integral(self):
        u = convolve(GeneratorOp.diagonal([3.0]), ONES, ETA, 1e-3)
        ref = [scalar_integral(3.0, 1.0, 2.0, ETA.times, t) for t in u.times]
        assert np.max(np.abs(u.cumulative_trapezoid()[:, 0] - ref)) < 1e-5

    def test_residual_shrinks(self):
        op = GeneratorOp.dirichlet_laplacian_1d(4, 10.0)
        xi = StepIntegrand.constant(1.0, np.random.default_rng(7).normal(size=(2, 4)))
        r = [strong_identity_residual(op, xi, ETA, dt) for dt in (2e-3, 1e-3)]
        assert r[1] <= 1e-4 and r[1] <= 0.6 * r[0]

    def test_singular(self):
        with pytest.raises(SingularityError):
            strong_identity_residual(GeneratorOp.zero(1), ONES, ETA, 0.1)


class TestBatch:
    OP = GeneratorOp.dirichlet_laplacian_1d(2, 5.0)
    ETAS = simulate_ensemble(TWO, 1.0, 31, 25)

    @pytest.mark.parametrize("xi", [
        StepIntegrand([0.0, 0.3, 1.0], [[[1.0, 0.0], [0.5, 2.0]], [[-1.0, 1.0], [0.0, 0.3]]]),
        JumpCountIntegrand([[1.0, 0.5], [-1.0, 2.0]], damping=0.7),
        GridIntegrand([0.0, 0.5, 1.0], np.arange(12.0).reshape(3, 2, 2) / 10),
    ])
    def test_matches_per_draw(self, xi):
        b = AffineDrift([0.3, -0.2], [1.0, 0.0])
        batch = convolve_batch(self.OP, xi, self.ETAS, 0.05, extra_times=(0.5,), drift=b)
        for m, eta in enumerate(self.ETAS):
            ref = solve_spde(self.OP, b, xi, eta, 0.05, extra_times=(0.5,))
            got = batch.path(m)
            assert np.max(np.abs(got.at(ref.times) - ref.values)) < 1e-12

    def test_lp_mass_batch(self):
        xi = JumpCountIntegrand([[1.0, 0.5], [-1.0, 2.0]], damping=0.7)
        got = lp_mass_batch(xi, self.ETAS, 2.0)
        ref = [lp_mass(xi, e, 2.0) for e in self.ETAS]
        assert np.allclose(got, ref, rtol=1e-12)


def test_event_grid_contains_atoms_and_respects_step():
    g = event_grid(1.0, 0.3, [0.11, 0.5])
    assert g[0] == 0 and g[-1] == 1 and {0.11, 0.5} <= set(g)
    assert np.max(np.diff(g)) <= 0.3 + 1e-15
    with pytest.raises(InvalidInputError):
        event_grid(1.0, -1)
