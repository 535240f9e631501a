import os
from pathlib import Path

import pytest

from resonlab.potentials import (Bump, PotentialSpec, Radial, SeparableAngular, SquareWell,
                                 parse_spec, zero_potential)

CONFIGS = Path(__file__).resolve().parents[1] / "src" / "resonlab" / "configs"


def load_potential(name):
    return parse_spec((CONFIGS / name).read_text())


@pytest.fixture(scope="session")
def separable():
    return load_potential("separable.potential.yaml")


@pytest.fixture(scope="session")
def radial_control():
    return load_potential("radial_control.potential.yaml")


@pytest.fixture(scope="session")
def well():
    return load_potential("well_1d.potential.yaml")


@pytest.fixture(scope="session")
def barrier():
    return load_potential("barrier_1d.potential.yaml")


@pytest.fixture(autouse=True)
def _isolated_cache(tmp_path_factory, monkeypatch):
    monkeypatch.setenv("RESONLAB_CACHE_DIR", str(tmp_path_factory.getbasetemp() / "opcache"))
