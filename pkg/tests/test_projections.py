import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from levyconv.errors import InvalidInputError, ResolutionError
from levyconv.paths import PiecewiseConstPath
from levyconv.projections import (
    SampledFunction,
    cell_average,
    delay,
    dyadic_project,
    haar_project,
    shifted_haar_project,
)

M = 10
IDENT = SampledFunction.from_callable(lambda t: t, M)


def random_step(seed, m=M, d=2):
    rng = np.random.default_rng(seed)
    r = int(rng.integers(0, m + 1))
    return SampledFunction.from_step(rng.normal(size=(2**r, d)), m)


class TestCellAverage:
    @pytest.mark.parametrize("n", [0, 1, 3, 7])
    def test_constant(self, n):
        f = SampledFunction(np.full((2**M, 2), 1.5))
        for j in (1, 2**n):
            assert np.allclose(cell_average(n, j, f), 1.5)

    def test_identity_examples(self):
        assert cell_average(2, 3, IDENT)[0] == pytest.approx(5 / 8, abs=1e-15)
        assert cell_average(1, 1, IDENT)[0] == pytest.approx(1 / 4, abs=1e-15)

    @pytest.mark.parametrize("j", [0, 5])
    def test_index_range(self, j):
        with pytest.raises(InvalidInputError):
            cell_average(2, j, IDENT)


class TestHaar:
    def test_constant_unchanged(self):
        f = SampledFunction(np.full(2**M, -0.3))
        assert haar_project(4, f) == f

    def test_identity_order_one(self):
        h = haar_project(1, IDENT).values[:, 0]
        assert np.allclose(h[: 2 ** (M - 1)], 0.25) and np.allclose(h[2 ** (M - 1):], 0.75)

    def test_resolution(self):
        with pytest.raises(ResolutionError):
            haar_project(M + 1, IDENT)

    @pytest.mark.parametrize("seed", range(10))
    def test_idempotent(self, seed):
        f = random_step(seed)
        h = haar_project(5, f)
        assert np.allclose(haar_project(5, h).values, h.values, atol=1e-15)

    @settings(max_examples=80, deadline=None)
    @given(st.integers(0, 2**31), st.integers(0, 8), st.sampled_from([1.0, 1.5, 2.0, 4.0]))
    def test_contraction(self, seed, n, p):
        f = random_step(seed)
        assert haar_project(n, f).lp_norm(p) <= f.lp_norm(p) * (1 + 1e-12)

    def test_error_halves_for_lipschitz(self):
        f = SampledFunction.from_callable(lambda t: np.sin(3 * t), 14)
        errs = [(haar_project(n, f) - f).lp_norm(2) for n in range(2, 9)]
        ratios = np.array(errs[1:]) / np.array(errs[:-1])
        assert np.all(np.abs(ratios - 0.5) <= 0.1)


class TestShifted:
    def test_zero(self):
        z = SampledFunction(np.zeros(2**M))
        assert np.all(shifted_haar_project(3, z).values == 0)

    def test_identity_order_one(self):
        h = shifted_haar_project(1, IDENT).values[:, 0]
        assert np.allclose(h[: 2 ** (M - 1)], 0.0) and np.allclose(h[2 ** (M - 1):], 0.25)

    def test_second_convention(self):
        h = shifted_haar_project(2, IDENT, convention="shift2").values[:, 0]
        q = 2 ** (M - 2)
        assert np.allclose(h[: 2 * q], 0) and np.allclose(h[2 * q: 3 * q], 1 / 8)
        with pytest.raises(InvalidInputError):
            shifted_haar_project(2, IDENT, convention="shift3")

    @pytest.mark.parametrize("n", [1, 3, 6])
    def test_factorizes_through_delay(self, n):
        f = random_step(3)
        assert np.allclose(shifted_haar_project(n, f).values, haar_project(n, delay(n, f)).values)

    @pytest.mark.parametrize("convention", ["shift1", "shift2"])
    @pytest.mark.parametrize("seed", range(5))
    def test_adapted(self, convention, seed):
        # values on a cell depend only on f over earlier cells
        n = 4
        f = random_step(seed)
        g_vals = f.values.copy()
        cut = 6 * 2 ** (M - n)
        g_vals[cut:] = np.random.default_rng(seed + 99).normal(size=g_vals[cut:].shape)
        a = shifted_haar_project(n, f, convention).values
        b = shifted_haar_project(n, SampledFunction(g_vals), convention).values
        assert np.array_equal(a[: cut + 2 ** (M - n)], b[: cut + 2 ** (M - n)])

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**31), st.integers(0, 8), st.sampled_from([1.0, 2.0, 3.0]))
    def test_contraction(self, seed, n, p):
        f = random_step(seed)
        assert shifted_haar_project(n, f).lp_norm(p) <= f.lp_norm(p) * (1 + 1e-12)

    def test_converges_for_lipschitz(self):
        # f(0) = 0 so the zeroed first cell costs O(2^-n) as well
        f = SampledFunction.from_callable(lambda t: np.sin(3 * t), 14)
        errs = np.array([(shifted_haar_project(n, f) - f).lp_norm(2) for n in range(2, 9)])
        assert np.all(np.diff(errs) < 0) and errs[-1] < 0.01


class TestDyadic:
    def test_constant(self):
        x = PiecewiseConstPath.constant([1.0, 2.0])
        assert dyadic_project(5, x) == x

    def test_jump_on_node(self):
        x = PiecewiseConstPath.indicator(0.5)
        assert dyadic_project(2, x) == x

    def test_jump_off_node(self):
        assert dyadic_project(1, PiecewiseConstPath.indicator(0.3)) == PiecewiseConstPath.indicator(0.5)

    def test_value_at_one_kept(self):
        x = PiecewiseConstPath.from_jumps([0.0], [(0.4, [1.0]), (1.0, [5.0])])
        assert dyadic_project(3, x).at(1.0)[0] == 5.0

    @pytest.mark.parametrize("n", [1, 4])
    def test_idempotent(self, n):
        x = PiecewiseConstPath.from_jumps([0.0], [(0.13, [1.0]), (0.61, [-2.0]), (0.9, [0.5])])
        once = dyadic_project(n, x)
        assert dyadic_project(n, once) == once

    def test_negative_order(self):
        with pytest.raises(InvalidInputError):
            dyadic_project(-1, PiecewiseConstPath.constant(0.0))


def test_from_step_rejects_finer_grid():
    with pytest.raises(ResolutionError):
        SampledFunction.from_step(np.zeros(8), 2)
    with pytest.raises(InvalidInputError):
        SampledFunction(np.zeros(3))
