import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fgatt.errors import ConfigError, InputError
from fgatt.fuzzy_rough import (
    Kernel,
    fuzzy_lower_approx,
    fuzzy_upper_approx,
    kernel_matrix,
    kernel_similarity,
    lower_approx_matrix,
    node_membership,
    similarity_class,
)

# Independent scalar oracles: plain Python loops, no shared code with the library.


def brute_kernel(x, y, sigma):
    sq = sum((a - b) ** 2 for a, b in zip(x, y))
    return math.exp(-sq / (2.0 * sigma * sigma))


def brute_lower(x, degrees, universe, sigma):
    return min(max(1.0 - brute_kernel(x, y, sigma), d) for y, d in zip(universe, degrees))


def brute_upper(x, degrees, universe, sigma):
    return max(min(brute_kernel(x, y, sigma), d) for y, d in zip(universe, degrees))


@st.composite
def fr_instances(draw):
    n = draw(st.integers(1, 8))
    dim = draw(st.integers(1, 4))
    finite = st.floats(-3.0, 3.0, allow_nan=False)
    universe = np.array([[draw(finite) for _ in range(dim)] for _ in range(n)])
    degrees = np.array([draw(st.floats(0.0, 1.0, allow_nan=False)) for _ in range(n)])
    x = universe[draw(st.integers(0, n - 1))]
    sigma = draw(st.floats(0.3, 3.0, allow_nan=False))
    return x, degrees, universe, sigma


class TestKernel:
    def test_reflexive(self):
        assert kernel_similarity([1.5, -2.0], [1.5, -2.0], Kernel(1.0)) == 1.0

    def test_unit_distance(self):
        # exp(-1 / 2) for points one unit apart at sigma = 1
        assert kernel_similarity([0.0], [1.0], Kernel(1.0)) == pytest.approx(0.6065306597126334, abs=1e-12)

    def test_wide_bandwidth_limit(self):
        assert kernel_similarity([0.0, 0.0], [3.0, 4.0], Kernel(1e8)) == pytest.approx(1.0, abs=1e-9)

    def test_dimension_mismatch(self):
        with pytest.raises(InputError):
            kernel_similarity([0.0], [0.0, 1.0], Kernel(1.0))

    @pytest.mark.parametrize("sigma", [0.0, -1.0, float("nan")])
    def test_bad_bandwidth(self, sigma):
        with pytest.raises(ConfigError):
            Kernel(sigma)

    @given(fr_instances())
    @settings(max_examples=100, deadline=None)
    def test_range_symmetry_reflexivity(self, instance):
        _, _, universe, sigma = instance
        r = kernel_matrix(universe, universe, Kernel(sigma))
        assert np.all(r >= 0.0) and np.all(r <= 1.0)
        assert np.array_equal(r, r.T)
        assert np.array_equal(np.diag(r), np.ones(len(universe)))


class TestNodeMembership:
    def test_self(self):
        assert node_membership([0.5], [0.5], Kernel(1.0)) == 1.0

    def test_unit_distance(self):
        assert node_membership([0.0], [1.0], Kernel(1.0)) == pytest.approx(math.exp(-0.5), abs=1e-12)

    def test_narrow_bandwidth_limit(self):
        assert node_membership([0.0], [1.0], Kernel(1e-4)) == pytest.approx(0.0, abs=1e-12)

    def test_matches_similarity_class(self):
        universe = np.array([[0.0], [0.7], [2.0]])
        cls = similarity_class(universe, [0.7], Kernel(1.0))
        for i, y in enumerate(universe):
            assert cls[i] == node_membership([0.7], y, Kernel(1.0))


class TestApproximations:
    def test_lower_full_membership(self):
        u = np.array([[0.0], [1.0], [2.0]])
        assert fuzzy_lower_approx([0.0], np.ones(3), u, Kernel(1.0)) == 1.0

    def test_lower_identical_samples(self):
        u = np.zeros((4, 2))
        d = np.array([0.8, 0.3, 0.6, 0.9])
        assert fuzzy_lower_approx([0.0, 0.0], d, u, Kernel(1.0)) == 0.3

    def test_lower_three_point(self):
        # min(max(0, .9), max(1 - e^-.5, .5), max(1 - e^-2, .1)) = .5
        u = np.array([[0.0], [1.0], [2.0]])
        d = np.array([0.9, 0.5, 0.1])
        assert fuzzy_lower_approx([0.0], d, u, Kernel(1.0)) == pytest.approx(0.5, abs=1e-12)

    def test_upper_empty_membership(self):
        u = np.array([[0.0], [1.0]])
        assert fuzzy_upper_approx([0.0], np.zeros(2), u, Kernel(1.0)) == 0.0

    def test_upper_member_of_class(self):
        u = np.array([[0.0], [1.0]])
        assert fuzzy_upper_approx([0.0], np.array([1.0, 0.2]), u, Kernel(1.0)) == 1.0

    def test_upper_three_point(self):
        u = np.array([[0.0], [1.0], [2.0]])
        d = np.array([0.9, 0.5, 0.1])
        assert fuzzy_upper_approx([0.0], d, u, Kernel(1.0)) == pytest.approx(0.9, abs=1e-12)

    def test_empty_universe(self):
        with pytest.raises(InputError):
            fuzzy_lower_approx([0.0], np.array([]), np.empty((0, 1)), Kernel(1.0))

    def test_membership_out_of_range(self):
        with pytest.raises(InputError):
            fuzzy_upper_approx([0.0], np.array([1.2]), np.array([[0.0]]), Kernel(1.0))

    @given(fr_instances())
    @settings(max_examples=150, deadline=None)
    def test_matches_brute_force(self, instance):
        x, d, u, sigma = instance
        k = Kernel(sigma)
        assert fuzzy_lower_approx(x, d, u, k) == pytest.approx(brute_lower(x, d, u, sigma), abs=1e-12)
        assert fuzzy_upper_approx(x, d, u, k) == pytest.approx(brute_upper(x, d, u, sigma), abs=1e-12)

    @given(fr_instances())
    @settings(max_examples=100, deadline=None)
    def test_sandwich_at_universe_points(self, instance):
        # x is drawn from the universe, so reflexivity pins d(x) between the two.
        x, d, u, sigma = instance
        k = Kernel(sigma)
        i = next(j for j in range(len(u)) if np.array_equal(u[j], x))
        assert fuzzy_lower_approx(x, d, u, k) <= d[i] <= fuzzy_upper_approx(x, d, u, k)

    @given(fr_instances())
    @settings(max_examples=100, deadline=None)
    def test_duality(self, instance):
        x, d, u, sigma = instance
        k = Kernel(sigma)
        assert fuzzy_upper_approx(x, d, u, k) == pytest.approx(
            1.0 - fuzzy_lower_approx(x, 1.0 - d, u, k), abs=1e-12
        )

    @given(fr_instances(), st.floats(0.0, 1.0))
    @settings(max_examples=100, deadline=None)
    def test_monotone_in_membership(self, instance, shrink):
        x, d, u, sigma = instance
        k = Kernel(sigma)
        smaller = d * shrink
        assert fuzzy_lower_approx(x, smaller, u, k) <= fuzzy_lower_approx(x, d, u, k) + 1e-15
        assert fuzzy_upper_approx(x, smaller, u, k) <= fuzzy_upper_approx(x, d, u, k) + 1e-15


class TestLowerApproxMatrix:
    def test_matches_scalar_route(self):
        rng = np.random.default_rng(5)
        f = rng.uniform(-1, 1, size=(6, 3))
        k = Kernel(0.8)
        got = lower_approx_matrix(f, k)
        for i in range(6):
            for j in range(6):
                d_j = similarity_class(f, f[j], k)
                assert got[i, j] == pytest.approx(fuzzy_lower_approx(f[i], d_j, f, k), abs=1e-12)
