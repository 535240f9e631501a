import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from resonlab.grids import ball_grid, box_grid, cylinder_grid, line_grid, polar_grid


@settings(max_examples=25, deadline=None)
@given(st.floats(-3, 0), st.floats(0.1, 3), st.integers(0, 10))
def test_line_grid_integrates_polynomials(a, length, deg):
    g = line_grid([a, a + length], 16, 0.5)
    x = g.nodes[:, 0]
    exact = ((a + length) ** (deg + 1) - a ** (deg + 1)) / (deg + 1)
    assert np.dot(g.weights, x ** deg) == pytest.approx(exact, rel=1e-12, abs=1e-12)


def test_line_grid_respects_breakpoints():
    g = line_grid([-1.0, -0.3, 0.2, 1.0], 8, 0.5)
    assert {-0.3, 0.2} <= set(np.round(g.breakpoints, 14))
    assert np.max(np.diff(g.breakpoints)) <= 0.5 + 1e-14


def test_cylinder_grid_volume():
    g = cylinder_grid((0.25, 0.5), (-0.25, 0.25), 6, 6, 16)
    assert g.weights.sum() == pytest.approx(math.pi * (0.5 ** 2 - 0.25 ** 2) * 0.5, rel=1e-13)


def test_ball_grid_volume_and_moment():
    g = ball_grid(0.5, 10, 10, 16)
    r2 = np.sum(g.nodes ** 2, axis=1)
    assert g.weights.sum() == pytest.approx(4 / 3 * math.pi * 0.125, rel=1e-12)
    # int r^2 over the ball of radius a is 4 pi a^5 / 5
    assert np.dot(g.weights, r2) == pytest.approx(4 * math.pi * 0.5 ** 5 / 5, rel=1e-12)


def test_polar_grid_area():
    g = polar_grid((0.1, 0.6), 8, 16)
    assert g.weights.sum() == pytest.approx(math.pi * (0.36 - 0.01), rel=1e-13)


def test_box_grid_volume():
    g = box_grid(0.5, 6, 2)
    assert g.weights.sum() == pytest.approx(1.0, rel=1e-13)


def test_axisymmetric_node_order_is_angle_major():
    g = cylinder_grid((0.25, 0.5), (-0.25, 0.25), 3, 2, 8)
    th = np.arctan2(g.nodes[:, 1], g.nodes[:, 0]).reshape(8, -1)
    assert np.allclose(np.ptp(th, axis=1), 0)
    assert np.allclose(np.mod(th[:, 0], 2 * np.pi), 2 * np.pi * np.arange(8) / 8)
