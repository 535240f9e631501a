import cmath

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from resonlab.contour import Region, find_zeros, winding_number
from resonlab.errors import ContourTooClose


def log_poly(roots, scale=1.0):
    roots = [complex(r) for r in roots]
    return lambda z: sum(cmath.log(scale * (z - r)) for r in roots)


def test_simple_and_double_zeros():
    f = lambda z: cmath.log(z * z + 1) + 2 * cmath.log(z - 0.3)
    found, used, _ = find_zeros(f, Region(-2, 2, -2, 2), tol=1e-10)
    assert len(found) == 3
    for ref, mult in [(-1j, 1), (1j, 1), (0.3, 2)]:
        z, n = min(found, key=lambda t: abs(complex(t[0]) - ref))
        assert abs(complex(z) - ref) < 1e-8 and n == mult


def test_zero_free_region():
    f = lambda z: z * z  # log of exp(z^2)
    found, _, zf = find_zeros(f, Region(-3, 3, -3, 3))
    assert found == []


def test_winding_counts_enclosed_zeros():
    f = log_poly([0.1 + 0.2j, -0.5, 2.5])
    assert winding_number(f, Region(-1, 1, -1, 1)) == 2


def test_zero_on_contour_is_reported():
    f = log_poly([1.0])
    with pytest.raises(ContourTooClose):
        winding_number(f, Region(-1, 1, -1, 1))


def test_entire_function_with_many_zeros():
    # sin has zeros at k pi
    f = lambda z: cmath.log(cmath.sin(z))
    found, _, _ = find_zeros(f, Region(-10, 10.5, -1, 1.3), tol=1e-9)
    zs = sorted(complex(z).real for z, _ in found)
    assert np.allclose(zs, np.pi * np.arange(-3, 4), atol=1e-8)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.tuples(st.floats(-1.8, 1.8), st.floats(-1.8, 1.8)), min_size=1, max_size=5,
                unique_by=lambda p: (round(p[0], 1), round(p[1], 1))))
def test_random_polynomial_roots(points):
    roots = [complex(a, b) for a, b in points]
    # keep roots apart from each other by at least 0.05 so each is reported separately
    for i, r in enumerate(roots):
        for s in roots[:i]:
            if abs(r - s) < 0.05:
                return
    f = log_poly(roots)
    found, _, _ = find_zeros(f, Region(-2.03, 2.01, -2.02, 2.04), tol=1e-9)
    assert sum(n for _, n in found) == len(roots)
    for r in roots:
        assert min(abs(complex(z) - r) for z, _ in found) < 1e-7
