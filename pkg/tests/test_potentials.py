import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from resonlab.errors import SchemaError
from resonlab.potentials import (Bump, PotentialSpec, Radial, SeparableAngular, SquareWell, Table,
                                 dump_spec, eval_potential, parse_spec, rotate_points, rotate_spec,
                                 scale_family, serialize_spec, zero_potential)

finite = st.floats(-50, 50, allow_nan=False, allow_infinity=False)
pos = st.floats(0.05, 2.0)


@st.composite
def bumps(draw):
    return Bump(complex(draw(finite), draw(finite)), draw(st.floats(-1, 1)), draw(pos),
                draw(st.floats(0.5, 4)))


@st.composite
def separable_specs(draw):
    m = draw(st.integers(-4, 4).filter(lambda k: k != 0))
    v1 = draw(bumps())
    v1 = Bump(v1.amplitude, abs(v1.center) + v1.width, v1.width, v1.steepness)
    return PotentialSpec(3, SeparableAngular(m, v1, draw(bumps())), 10.0)


def test_bump_profile_values():
    b = Bump(2.0, 0.0, 1.0, 1.0)
    assert b(0.0) == pytest.approx(2.0)
    assert b(1.0) == 0 and b(-1.5) == 0
    assert b(0.5) == pytest.approx(2.0 * math.exp(1 - 1 / 0.75))


def test_square_well_values():
    s = SquareWell(-4.0, (0.0, 1.0))
    assert s(0.5) == -4.0 and s(1.5) == 0


@settings(max_examples=40, deadline=None)
@given(separable_specs())
def test_serialize_round_trip(spec):
    again = parse_spec(dump_spec(spec))
    assert serialize_spec(again) == serialize_spec(spec)
    assert dump_spec(again) == dump_spec(spec)


def test_parse_rejects_m_zero():
    doc = {"dimension": 3, "kind": "separable_angular", "m": 0,
           "v1": {"form": "bump", "center": 0.5, "width": 0.2},
           "v2": {"form": "bump", "center": 0.0, "width": 0.2}}
    with pytest.raises(SchemaError) as exc:
        parse_spec(doc)
    assert exc.value.field == "m"


@pytest.mark.parametrize("doc,field", [
    ({"dimension": 4, "kind": "radial"}, "dimension"),
    ({"dimension": 1, "kind": "radial"}, "profile"),
    ({"dimension": 1, "kind": "radial", "profile": {"form": "bump", "width": 1.0}}, "profile.center"),
    ({"dimension": 1, "kind": "radial", "profile": {"form": "square", "interval": [0, 1]},
      "support_radius": 0.5}, "support_radius"),
    ({"dimension": 1, "kind": "radial", "profile": {"form": "square", "interval": [0, 1]},
      "colour": 1}, "colour"),
])
def test_schema_errors_name_the_field(doc, field):
    with pytest.raises(SchemaError) as exc:
        parse_spec(doc)
    assert exc.value.field == field


def test_support_radius_inferred():
    doc = {"dimension": 3, "kind": "separable_angular", "m": 2,
           "v1": {"form": "bump", "center": 0.5, "width": 0.25},
           "v2": {"form": "bump", "center": 0.0, "width": 0.5}}
    assert parse_spec(doc).support_radius == pytest.approx(math.hypot(0.75, 0.5))


def test_zero_potential_is_zero():
    z = zero_potential(3)
    assert z.is_zero and z.sup_norm == 0 and z.is_rotation_invariant


def test_table_profile_interpolates():
    t = Table((0.0, 1.0, 2.0), (0j, 2 + 0j, 0j), 1)
    assert t(0.5) == pytest.approx(1.0)
    assert t(3.0) == 0


@settings(max_examples=30, deadline=None)
@given(separable_specs(), st.floats(0, 2 * math.pi))
def test_rotation_multiplies_by_phase(spec, phi):
    rng = np.random.default_rng(1)
    x = rng.uniform(-1.5, 1.5, size=(20, 3))
    lhs = eval_potential(spec, rotate_points(x, phi))
    rhs = eval_potential(rotate_spec(spec, phi), x)
    assert np.allclose(lhs, rhs, atol=1e-9 * (1 + np.abs(lhs).max()))
    expected = np.exp(1j * spec.kind.m * phi) * eval_potential(spec, x)
    assert np.allclose(lhs, expected, atol=1e-9 * (1 + np.abs(lhs).max()))


def test_scale_family_at_zero_vanishes(separable):
    assert scale_family(separable, 0).is_zero
    neg = PotentialSpec(3, SeparableAngular(-1, separable.kind.v1, separable.kind.v2), 0.6)
    with pytest.raises(ValueError):
        scale_family(neg, 0)


def test_separable_potential_is_supported_inside_radius(separable):
    rng = np.random.default_rng(2)
    x = rng.normal(size=(500, 3))
    x *= (0.61 + rng.uniform(0, 1, (500, 1))) / np.linalg.norm(x, axis=1, keepdims=True)
    assert np.all(eval_potential(separable, x) == 0)
