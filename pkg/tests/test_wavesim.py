import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import ndtr

from resonlab.errors import (BoundaryContamination, CFLViolation, FloorReached, PreconditionPoles,
                             TruncationLeak)
from resonlab.potentials import eval_potential, zero_potential
from resonlab.wavesim import (EXP, INCONCLUSIVE, SUPEREXP, decay_rates, gaussian_source_1d,
                              mode_source_3d, run_fdtd_1d, run_mode_wave_3d, spectral_rep_evaluate,
                              write_decay_csv, write_verdict_json)
from conftest import load_potential


def dalembert(t, x, y, sigma):
    # free solution with u(0) = 0, u_t(0) = unit Gaussian at y
    return 0.5 * (ndtr((x + t - y) / sigma) - ndtr((x - t - y) / sigma))


# --- decay analytics ----------------------------------------------------

def test_pure_exponential_is_exp():
    t = np.linspace(0, 10, 1001)
    rep = decay_rates(t, np.exp(-2 * t), [(1, 3), (4, 6), (7, 9)])
    assert rep.verdict == EXP
    assert np.allclose(rep.slopes, 2.0)


def test_gaussian_decay_is_superexponential():
    t = np.linspace(0, 5, 501)
    rep = decay_rates(t, np.exp(-t * t), [(1, 2), (2, 3), (3, 4)], floor=0)
    assert rep.verdict == SUPEREXP
    assert np.allclose(rep.slopes, [3.0, 5.0, 7.0])


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 5.0), st.floats(-3.0, 3.0))
def test_rate_is_scale_invariant(rate, log_amp):
    t = np.linspace(0, 6, 301)
    rep = decay_rates(t, math.exp(log_amp) * np.exp(-rate * t), [(0, 2), (2, 4), (4, 6)])
    assert rep.verdict == EXP
    assert np.allclose(rep.slopes, rate, rtol=1e-8)


def test_two_rising_windows_are_inconclusive():
    t = np.linspace(0, 5, 501)
    assert decay_rates(t, np.exp(-t * t), [(1, 2), (3, 4)], floor=0).verdict == INCONCLUSIVE


def test_floor_is_reported():
    t = np.linspace(0, 10, 101)
    with pytest.raises(FloorReached):
        decay_rates(t, np.exp(-5 * t), [(7, 9)])


def test_overlapping_windows_are_rejected():
    t = np.linspace(0, 10, 101)
    with pytest.raises(ValueError):
        decay_rates(t, np.exp(-t), [(1, 3), (2, 4)])


def test_verdict_json_round_trip(tmp_path):
    t = np.linspace(0, 10, 1001)
    rep = decay_rates(t, np.exp(-t), [(1, 3), (4, 6)])
    write_verdict_json(tmp_path / "v.json", rep, {"config": "x"})
    doc = json.loads((tmp_path / "v.json").read_text())
    assert doc["verdict"] == EXP and doc["config"] == "x" and len(doc["slopes"]) == 2


# --- sources ------------------------------------------------------------

def test_sources_have_unit_mass():
    x = np.linspace(-2, 2, 40001)
    assert np.trapezoid(gaussian_source_1d(x, 0.3, 0.1), x) == pytest.approx(1.0, rel=1e-8)
    # only mode 0 survives the angular integral
    rho = np.linspace(1e-6, 2, 801)
    z = np.linspace(-1, 1, 801)
    P, Z = np.meshgrid(rho, z, indexing="ij")
    f = mode_source_3d(P, Z, 0.5, 0.1, 0.08, 0)
    mass = 2 * np.pi * np.trapezoid(np.trapezoid(f * P, z, axis=1), rho)
    assert mass == pytest.approx(1.0, rel=1e-4)


# --- one-dimensional solvers -------------------------------------------

def test_free_fdtd_matches_dalembert():
    samples = [(1.0, 1.12), (2.0, -1.93), (0.5, 0.6), (2.5, 2.55)]
    wf = run_fdtd_1d(zero_potential(1), 3.0, y=0.1, sigma=0.05, h=0.005, samples=samples)
    exact = np.array([dalembert(t, x, 0.1, 0.05) for t, x in samples])
    assert np.max(np.abs(wf.samples - exact)) < 3e-3


def test_fdtd_converges_at_second_order():
    samples = [(1.0, 1.12), (2.0, -1.93)]
    exact = np.array([dalembert(t, x, 0.1, 0.05) for t, x in samples])
    errs = [np.max(np.abs(run_fdtd_1d(zero_potential(1), 2.0, y=0.1, sigma=0.05, h=h,
                                      samples=samples).samples - exact))
            for h in (0.01, 0.005)]
    assert 3.0 < errs[0] / errs[1] < 5.0


def test_free_spectral_representation_matches_dalembert():
    u = spectral_rep_evaluate(zero_potential(1), [1.0, 2.0], [1.1], y=0.0, sigma=0.2)
    exact = [dalembert(t, 1.1, 0.0, 0.2) for t in (1.0, 2.0)]
    assert np.allclose(u[:, 0], exact, atol=1e-9)


def test_spectral_representation_refuses_eigenvalues(well):
    with pytest.raises(PreconditionPoles):
        spectral_rep_evaluate(well, [1.0], [0.0])


def test_cfl_violation():
    with pytest.raises(CFLViolation):
        run_fdtd_1d(zero_potential(1), 1.0, cfl=0.95)


def test_boundary_contamination():
    with pytest.raises(BoundaryContamination):
        run_fdtd_1d(zero_potential(1), 4.0, half_width=2.0)


def test_energy_is_a_norm(well, tmp_path):
    wf = run_fdtd_1d(well, 2.0, sigma=0.05, h=0.01, measure_radius=1.0)
    u = wf.u
    x = wf.axes[0]
    direct = math.sqrt(wf.h * np.sum(np.abs(u[np.abs(x) <= 1.0]) ** 2))
    assert wf.local_energy[-1] == pytest.approx(direct, rel=1e-12)
    write_decay_csv(tmp_path / "d.csv", wf)
    assert (tmp_path / "d.csv").read_text().splitlines()[0] == "t,local_energy"


# --- three-dimensional mode solver -------------------------------------

@pytest.fixture(scope="module")
def separable_wave():
    return load_potential("separable_wave.potential.yaml")


def test_doubling_mode_cutoff_leaves_energy_unchanged(separable_wave):
    runs = [run_mode_wave_3d(separable_wave, 2.0, h=0.05, J=J) for J in (12, 24)]
    assert np.max(np.abs(runs[0].local_energy - runs[1].local_energy)) <= 1e-8


def test_short_mode_chain_leaks(separable_wave):
    with pytest.raises(TruncationLeak):
        run_mode_wave_3d(separable_wave, 2.0, h=0.05, J=2)


def test_free_mode_wave_keeps_mode_zero_only():
    wf = run_mode_wave_3d(zero_potential(3), 1.0, h=0.05, J=8)
    assert wf.modes == [0]
    assert wf.local_energy[-1] > 0


def test_free_mode_wave_matches_huygens():
    # for a point-like source the 3D sine propagator is a shell, so the ball
    # around the source is empty once the shell has left it
    wf = run_mode_wave_3d(zero_potential(3), 3.0, source=(0.0, 0.0), sigma=0.1, h=0.025,
                          measure_radius=1.0)
    early = wf.local_energy[np.searchsorted(wf.times, 0.5)]
    late = wf.local_energy[-1]
    assert late < 1e-3 * early


def _energy(wf, spec):
    x, h = wf.axes[0], wf.h
    v = np.asarray(eval_potential(spec, x[:, None])).real
    ux = np.diff(wf.u) / h
    return h * (np.sum(np.abs(wf.u_t) ** 2) + np.sum(np.abs(ux) ** 2) + np.sum(v * np.abs(wf.u) ** 2))


def test_energy_is_conserved_for_a_real_barrier(barrier):
    # u_t is a one-sided difference, so the drift is first order in dt
    drift = []
    for h in (0.01, 0.005):
        es = [_energy(run_fdtd_1d(barrier, T, y=0.2, sigma=0.15, h=h), barrier) for T in (1.0, 2.0, 3.0)]
        drift.append((max(es) - min(es)) / es[-1])
    assert drift[1] < 1e-3
    assert drift[1] < drift[0]


def test_finite_propagation_speed(barrier):
    wf = run_fdtd_1d(barrier, 2.0, y=0.2, sigma=0.15, h=0.01, half_width=6.0)
    x = wf.axes[0]
    # source reaches 0.2 + 8 sigma, the barrier -0.75; allow twenty cells of discrete dispersion
    far = (x > 0.2 + 8 * 0.15 + 2.0 + 0.2) | (x < -0.75 - 2.0 - 0.2)
    assert np.max(np.abs(wf.u[far])) <= 1e-12


def test_modes_are_excited_one_step_at_a_time(separable_wave):
    wf = run_mode_wave_3d(separable_wave, 0.3, h=0.05, J=12, leak_tol=1.0)
    first = {j: int(np.nonzero(wf.mode_energy[j])[0][0]) for j in wf.modes}
    # record k holds time k dt; mode j needs j interactions with V
    assert all(first[j] == max(j, 1) for j in wf.modes)
