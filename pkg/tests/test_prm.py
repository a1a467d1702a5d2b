import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from levyconv.errors import InvalidInputError
from levyconv.prm import (
    MarkSpace,
    PrmRealization,
    box_counts,
    compensator,
    count,
    count_correlation,
    poisson_chi_square,
    simulate,
    simulate_ensemble,
    simulate_prm_binomial,
    simulate_prm_exponential,
)
from levyconv.rng import stream

SPACE = MarkSpace(("z0", "z1", "z2"), [0.5, 1.0, 0.5])


def binomial_band(p, n, k=3.0):
    sd = math.sqrt(p * (1 - p) / n)
    return p - k * sd, p + k * sd


class TestMarkSpace:
    def test_total_mass_is_sum(self):
        sp = MarkSpace(("a", "b"), [0.1, 0.2])
        assert sp.total_mass == pytest.approx(0.3, rel=1e-12)

    @pytest.mark.parametrize("weights", [[1.0, 0.0], [1.0, -1.0], [1.0, math.inf]])
    def test_rejects_bad_weights(self, weights):
        with pytest.raises(InvalidInputError):
            MarkSpace(("a", "b"), weights)

    def test_rejects_empty_and_duplicates(self):
        with pytest.raises(InvalidInputError):
            MarkSpace((), [])
        with pytest.raises(InvalidInputError):
            MarkSpace(("a", "a"), [1.0, 1.0])

    def test_json_roundtrip(self, tmp_path):
        p = tmp_path / "marks.json"
        p.write_text('{"marks": ["x", "y"], "weights": [0.25, 2]}', encoding="utf-8")
        sp = MarkSpace.from_json(p)
        assert sp.marks == ("x", "y")
        assert MarkSpace.from_dict(sp.to_dict()) == sp

    def test_measure_of_subsets(self):
        assert SPACE.measure() == 2.0
        assert SPACE.measure(["z1"]) == 1.0
        assert SPACE.measure([]) == 0.0


class TestSimulation:
    @pytest.mark.parametrize("fn", [simulate_prm_exponential, simulate_prm_binomial])
    def test_deterministic_given_seed(self, fn):
        a, b = fn(SPACE, 2.0, 123), fn(SPACE, 2.0, 123)
        assert np.array_equal(a.times, b.times) and np.array_equal(a.marks, b.marks)

    @pytest.mark.parametrize("fn", [simulate_prm_exponential, simulate_prm_binomial])
    def test_invariants(self, fn):
        for i in range(50):
            eta = fn(SPACE, 1.5, stream(9, i))
            assert np.all(eta.times > 0) and np.all(eta.times <= 1.5)
            assert np.all(np.diff(eta.times) >= 0)
            assert eta.marks.min(initial=0) >= 0 and eta.marks.max(initial=0) < 3

    @pytest.mark.parametrize("fn", [simulate_prm_exponential, simulate_prm_binomial])
    @pytest.mark.parametrize("T", [0.0, -1.0, math.inf])
    def test_bad_horizon(self, fn, T):
        with pytest.raises(InvalidInputError):
            fn(SPACE, T, 1)

    def test_unknown_variant(self):
        with pytest.raises(InvalidInputError):
            simulate(SPACE, 1.0, 1, "gamma")

    def test_mean_count_exponential(self):
        # nu(Z) = 2: mean count on (0, 1] is 2, sd of the mean sqrt(2 / n)
        n = 10_000
        c = box_counts(simulate_ensemble(SPACE, 1.0, 77, n, "exponential"), 0, 1)
        assert abs(c.mean() - 2.0) <= 3 * math.sqrt(2.0 / n)

    @pytest.mark.parametrize("variant", ["exponential", "binomial"])
    def test_empty_fraction_low_intensity(self, variant):
        sp = MarkSpace(("a",), [0.001])
        n = 20_000
        empty = np.mean([len(e) == 0 for e in simulate_ensemble(sp, 1.0, 5, n, variant)])
        lo, hi = binomial_band(math.exp(-0.001), n)
        assert lo <= empty <= hi

    def test_constructions_agree_on_counts(self):
        n = 10_000
        a = box_counts(simulate_ensemble(SPACE, 1.0, 1, n, "exponential"), 0, 1)
        b = box_counts(simulate_ensemble(SPACE, 1.0, 2, n, "binomial"), 0, 1)
        assert stats.ks_2samp(a, b).pvalue > 0.001

    def test_ensemble_streams_are_order_independent(self):
        ens = simulate_ensemble(SPACE, 1.0, 42, 5)
        single = simulate(SPACE, 1.0, stream(42, 3))
        assert np.array_equal(ens[3].times, single.times)
        assert not np.array_equal(ens[2].times, ens[3].times)

    def test_binomial_zero_count_gives_empty(self):
        # find a seed whose Poisson count is 0 for a tiny intensity
        sp = MarkSpace(("a",), [1e-6])
        eta = simulate_prm_binomial(sp, 1.0, 0)
        assert len(eta) == 0 and eta.atoms == []


class TestCounts:
    ETA = PrmRealization.from_atoms(SPACE, 1.0, [(0.7, "z1"), (0.3, "z0")])

    def test_direct_count(self):
        assert count(self.ETA, 0, 0.5, ["z0"]) == 1
        assert count(self.ETA, 0, 1) == 2
        assert count(self.ETA, 0.3, 0.7) == 1  # (a, b] excludes a

    def test_empty(self):
        eta = PrmRealization(1.0, [], [], SPACE)
        assert count(eta, 0, 1, ["z2"]) == 0

    @pytest.mark.parametrize("ab", [(-0.1, 0.5), (0.5, 1.1), (0.6, 0.5)])
    def test_interval_outside(self, ab):
        with pytest.raises(InvalidInputError):
            count(self.ETA, *ab)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32), st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
    def test_additivity(self, seed, a, b, c):
        a, b, c = sorted((a, b, c))
        eta = simulate(SPACE, 1.0, seed, "binomial")
        for U in (None, ["z0"], ["z1", "z2"]):
            assert count(eta, a, b, U) + count(eta, b, c, U) == count(eta, a, c, U)

    def test_ties_keep_generation_order(self):
        eta = PrmRealization.from_atoms(SPACE, 1.0, [(0.5, "z2"), (0.5, "z0"), (0.2, "z1")])
        assert eta.marks.tolist() == [1, 2, 0]

    def test_csv_roundtrip(self, tmp_path):
        eta = simulate(SPACE, 1.0, 3)
        p = tmp_path / "eta.csv"
        eta.to_csv(p)
        back = PrmRealization.from_csv(p, SPACE, 1.0)
        assert np.array_equal(back.times, eta.times) and np.array_equal(back.marks, eta.marks)

    def test_disjoint_boxes_uncorrelated(self):
        n = 10_000
        ens = simulate_ensemble(SPACE, 1.0, 8, n)
        rho = count_correlation(box_counts(ens, 0, 0.5), box_counts(ens, 0.5, 1))
        assert abs(rho) < 3 / math.sqrt(n)


class TestCompensator:
    def test_values(self):
        assert compensator(SPACE, 0.4, 0.4) == 0.0
        sp = MarkSpace(("a", "b"), [1.0, 2.0])
        assert compensator(sp, 0, 0.5) == pytest.approx(1.5)
        assert compensator(sp, 0, 0.5, []) == 0.0

    def test_reversed_interval(self):
        with pytest.raises(InvalidInputError):
            compensator(SPACE, 0.5, 0.4)


def test_chi_square_detects_wrong_mean():
    rng = np.random.default_rng(0)
    good = rng.poisson(1.0, 10_000)
    assert poisson_chi_square(good, 1.0)[1] > 0.001
    assert poisson_chi_square(good, 1.3)[1] < 1e-6
