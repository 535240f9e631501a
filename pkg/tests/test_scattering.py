import cmath
import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from resonlab.errors import UnwrapAmbiguous
from resonlab.oracles import radial_smatrix_det, smatrix_det_1d, transfer_smatrix
from resonlab.potentials import (Bump, PotentialSpec, Radial, SquareWell, rotate_spec,
                                 zero_potential)
from resonlab.scattering import (ScatteringData, homotopy_scan, scattering_data, scattering_phase,
                                 sdet_farfield, sdet_ratio)


def _well(depth, half_width=1.0):
    return PotentialSpec(1, Radial(SquareWell(-depth, (0.0, half_width))), half_width)


@pytest.mark.parametrize("lam", [0.7, 1.9, 4.3])
def test_one_dimensional_ratio_matches_transfer_matrix(well, lam):
    ref = smatrix_det_1d([(-1.0, 1.0, -4.0)], lam)
    assert abs(sdet_ratio(well, lam) - ref) < 1e-8


def test_transfer_matrix_is_unitary_for_real_potential():
    S = transfer_smatrix([(-1.0, 0.2, 3.0), (0.2, 1.0, -2.0)], 1.3)
    assert np.allclose(S.conj().T @ S, np.eye(2), atol=1e-12)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.5, 8.0), st.floats(0.5, 6.0))
def test_ratio_has_unit_modulus_for_real_wells(depth, lam):
    assert abs(abs(sdet_ratio(_well(depth), lam)) - 1) < 1e-9


def test_ratio_reflects(well):
    # s(lam) s(-lam) = 1
    lam = 1.2 - 0.4j
    assert abs(sdet_ratio(well, lam) * sdet_ratio(well, -lam) - 1) < 1e-9


def test_zero_potential_scatters_trivially():
    assert sdet_ratio(zero_potential(1), 2.0) == 1
    assert sdet_ratio(zero_potential(3), 2.0) == 1


def test_even_dimension_is_rejected():
    with pytest.raises(ValueError):
        sdet_ratio(zero_potential(2), 1.0)


@pytest.mark.parametrize("lam", [1.0, 2.5])
def test_radial_ratio_matches_partial_waves(radial_control, lam):
    prof = lambda r: complex(radial_control.kind.profile(r))
    ref = radial_smatrix_det(lam, prof, 0.5, l_max=8)
    assert abs(sdet_ratio(radial_control, lam) - ref) < 5e-4


def test_farfield_and_determinant_ratio_agree(radial_control):
    lam = 1.5
    assert abs(sdet_farfield(radial_control, lam, L=6) - sdet_ratio(radial_control, lam)) < 1e-6


def test_complex_radial_ratio_needs_no_correction():
    # absorbing well: far field, ratio and partial waves agree without extra factors
    spec = PotentialSpec(3, Radial(Bump(-10 + 6j, 0.0, 0.5, 1.0)), 0.5)
    prof = lambda r: complex(spec.kind.profile(r))
    for lam in (1.0, 2.0):
        ratio = sdet_ratio(spec, lam)
        assert abs(abs(ratio) - 1) > 0.1
        assert abs(sdet_farfield(spec, lam, L=6) - ratio) < 1e-6
        assert abs(radial_smatrix_det(lam, prof, 0.5, l_max=8) - ratio) < 5e-4


def test_separable_farfield_is_one_for_both_truncations(separable):
    for L in (8, 12):
        assert abs(sdet_farfield(separable, 2.0, L, check=False) - 1) < 1e-3


def test_ratio_is_rotation_invariant(radial_control, separable):
    lam = 1.7
    for spec in (separable, radial_control):
        assert abs(sdet_ratio(rotate_spec(spec, 0.9), lam) - sdet_ratio(spec, lam)) < 1e-8


def test_one_dimensional_phase_matches_transfer_matrix(well):
    lams = np.linspace(0.5, 10.0, 40)
    sd = scattering_phase(scattering_data(well, lams))
    ref = np.array([smatrix_det_1d([(-1.0, 1.0, -4.0)], l) for l in lams])
    ang = np.unwrap(np.angle(ref))
    ang += np.mod(ang[0], 2 * np.pi) - ang[0]
    assert np.max(np.abs(sd.sigma - ang)) < 1e-6


def test_separable_ratio_is_one(separable):
    sd = scattering_phase(scattering_data(separable, [0.5, 3.0, 7.0]))
    assert np.all(np.abs(sd.s_values - 1) < 1e-6)
    assert np.all(np.abs(sd.sigma) < 1e-6)


def test_homotopy_is_one_at_the_origin(separable):
    h = homotopy_scan(separable, 2.0, [0.0, 0.5j])
    assert abs(h[0] - 1) < 1e-12
    assert abs(h[1] - 1) < 1e-6


def test_homotopy_is_constant_off_the_unit_circle(separable):
    h = homotopy_scan(separable, 2.0, [0.5, -0.5j, 2.0, 2j])
    assert max(abs(v - h[0]) for v in h) < 1e-8


def test_negative_power_homotopy_tends_to_one(separable):
    flipped = dataclasses.replace(separable, kind=dataclasses.replace(separable.kind, m=-1))
    h = homotopy_scan(flipped, 2.0, [10.0, 100.0, 1000.0])
    assert all(abs(v - 1) < 1e-8 for v in h)


def test_homotopy_needs_separable_potential(radial_control):
    with pytest.raises(ValueError):
        homotopy_scan(radial_control, 2.0, [0.0])


# --- phase unwrapping on synthetic data ---------------------------------

def _synthetic(phase_fn, lams):
    lams = np.asarray(lams, float)
    return ScatteringData(lams, np.exp(1j * phase_fn(lams)))


def test_one_turn_gains_two_pi():
    sd = scattering_phase(_synthetic(lambda l: 2 * np.pi * l, np.linspace(0, 1, 50)))
    assert sd.sigma[-1] - sd.sigma[0] == pytest.approx(2 * np.pi)


def test_unwrap_follows_a_winding_phase():
    sd = scattering_phase(_synthetic(lambda l: 3 * l + 1.0, np.linspace(0, 10, 200)))
    assert np.allclose(sd.sigma, 3 * sd.lambda_grid + 1.0, atol=1e-12)


def test_anchor_lies_in_zero_to_two_pi():
    sd = scattering_phase(_synthetic(lambda l: -0.5 - l, np.linspace(0, 1, 20)))
    assert sd.sigma[0] == pytest.approx(2 * np.pi - 0.5)
    assert np.allclose(np.diff(sd.sigma), -np.diff(sd.lambda_grid))


def test_anchor_snaps_roundoff_to_zero():
    sd = ScatteringData(np.array([0.0, 1.0]), np.array([cmath.exp(-1e-16j), 1.0]))
    assert abs(scattering_phase(sd).sigma[0]) < 1e-12


def test_large_jump_is_ambiguous_without_refinement():
    with pytest.raises(UnwrapAmbiguous):
        scattering_phase(_synthetic(lambda l: 2.5 * l, [0.0, 1.0, 2.0]))


def test_large_jump_is_refined():
    f = lambda l: 2.5 * np.asarray(l)
    sd = scattering_phase(_synthetic(f, [0.0, 1.0, 2.0]), refine=lambda l: np.exp(1j * f(l)))
    assert sd.meta["inserted"] > 0
    assert np.allclose(sd.sigma, f(sd.lambda_grid), atol=1e-12)
