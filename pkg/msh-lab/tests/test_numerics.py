"""Tests for grids, fits, limit extrapolation and sampling."""

import math

import numpy as np
import pytest

from lab.errors import ArgumentError
from lab.numerics import (
    extrapolate_limit,
    fit_power_law,
    geometric_grid,
    halving_grid,
    parallel_map,
    second_divided_differences,
    smootherstep_cutoff,
    sphere_directions,
    torus_grid,
)


def test_parallel_map_keeps_order():
    items = list(range(50))
    assert parallel_map(lambda x: x * x, items, threads=4) == [x * x for x in items]


def test_geometric_grid():
    grid = geometric_grid(0.25, 3, 4)
    assert len(grid) == 13
    assert grid[-1] == pytest.approx(0.25)
    assert grid[0] == pytest.approx(0.25e-3)


def test_grid_arguments():
    with pytest.raises(ArgumentError):
        geometric_grid(-1.0, 3, 4)
    with pytest.raises(ArgumentError):
        halving_grid(1.0, 0)


def test_second_differences_of_quadratic():
    x = np.array([0.0, 0.5, 2.0, 3.0])
    assert second_divided_differences(x, 3 * x ** 2) == pytest.approx([6.0, 6.0])


def test_power_law_fit():
    x = np.geomspace(1e-3, 1e-1, 20)
    fit = fit_power_law(x, -2.5 * x ** 1.5)
    assert fit.exponent == pytest.approx(1.5)
    assert fit.coefficient == pytest.approx(-2.5)
    assert fit.points == 20


class TestExtrapolation:
    def test_known_limit(self):
        x = 0.5 ** np.arange(1, 11)
        fit = extrapolate_limit(x, 2.0 + 0.3 * x ** 1.7)
        assert fit.converged
        assert fit.limit == pytest.approx(2.0, abs=1e-8)
        assert fit.rate == pytest.approx(1.7, rel=1e-4)

    def test_flat_sequence(self):
        fit = extrapolate_limit([0.4, 0.2, 0.1], [1.0, 1.0, 1.0])
        assert fit.converged and fit.reason == "flat"
        assert fit.limit == 1.0

    def test_non_finite(self):
        assert not extrapolate_limit([0.4, 0.2, 0.1], [1.0, math.nan, 1.0]).converged

    def test_too_short(self):
        with pytest.raises(ArgumentError):
            extrapolate_limit([0.1, 0.2], [1.0, 1.0])

    def test_known_correction_rates(self):
        x = 0.25 * 0.5 ** np.arange(10)
        y = 1.5 + 4.0 * x ** 0.5 - 30.0 * x ** 2 + 12.0 * x ** 2.5
        fit = extrapolate_limit(x, y, known_rates=[2.5, 0.5, 2.0])
        assert fit.converged
        assert fit.limit == pytest.approx(1.5, abs=1e-6)
        assert fit.known_rates == [0.5, 2.0, 2.5]
        assert fit.known_amplitudes == pytest.approx([4.0, -30.0, 12.0], rel=1e-4)

    def test_free_rate_next_to_known_rate(self):
        x = 0.25 * 0.5 ** np.arange(10)
        fit = extrapolate_limit(x, 1.5 + 4.0 * x ** 0.5 + 0.7 * x ** 1.2, known_rates=[0.5])
        assert fit.converged
        assert fit.limit == pytest.approx(1.5, abs=1e-3)
        assert fit.rate == pytest.approx(1.2, rel=0.01)

    def test_known_rates_trimmed_to_points(self):
        x = 0.5 ** np.arange(1, 6)
        fit = extrapolate_limit(x, 2.0 + x ** 0.5, known_rates=[0.5, 1.0, 3.0])
        assert fit.known_rates == [0.5]
        assert fit.limit == pytest.approx(2.0, abs=1e-6)

    def test_nonpositive_known_rate(self):
        with pytest.raises(ArgumentError):
            extrapolate_limit([0.4, 0.2, 0.1], [1.0, 2.0, 3.0], known_rates=[0.0])


def test_sphere_directions_are_unit():
    dirs = sphere_directions(3, 10, seed=1)
    assert dirs.shape == (10, 3)
    assert np.allclose(np.linalg.norm(dirs, axis=1), 1.0)
    assert dirs[0] == pytest.approx([1.0, 0.0, 0.0])
    assert np.array_equal(dirs, sphere_directions(3, 10, seed=1))


def test_torus_grid():
    grid = torus_grid([2 * math.pi], 4)
    assert grid.shape == (16, 1)
    assert torus_grid([], 4).shape == (1, 0)


def test_smootherstep_cutoff():
    r = np.array([0.1, 0.25, 0.375, 0.5, 0.6])
    chi, d1, d2 = smootherstep_cutoff(r, 0.25, 0.5)
    assert chi == pytest.approx([1.0, 1.0, 0.5, 0.0, 0.0])
    assert d1[0] == 0.0 and d1[-1] == 0.0
    assert d1[2] == pytest.approx(-30.0 / 16.0 / 0.25)
    assert d2[2] == pytest.approx(0.0)
