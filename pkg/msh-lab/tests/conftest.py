"""Shared fixtures for the msh-lab test suite."""

import json
from pathlib import Path

import numpy as np
import pytest

from lab.fields import LocalizedField, RadialField, ThetaField
from lab.profiles import FlatModel, WeightFamily, WeightKind, admissible_delta_bound

WAVE = {"offset": 1.0, "terms": [{"frequencies": [1, 0], "amplitude": 1.0}], "normalize": True}


@pytest.fixture
def model_322():
    """n=3, k=2, m=2: logarithmic reference weight."""
    return FlatModel(3, 2, 2)


@pytest.fixture
def model_321():
    """n=3, k=2, m=1: reference weight -r^(-2), mass measured by flux."""
    return FlatModel(3, 2, 1)


@pytest.fixture
def model_siu():
    """n=2, k=1, m=2: codimension below the Hessian order."""
    return FlatModel(2, 1, 2)


@pytest.fixture
def psi_field():
    def build(model: FlatModel, gamma: float = 1.0) -> RadialField:
        return RadialField(model.reference_weight(), model.k, coefficient=gamma)

    return build


@pytest.fixture
def localized_field():
    """theta * G(h) + C * F_nu(h) with theta a normalized wave vanishing on a circle of V."""

    def build(model: FlatModel, nu: float, C: float) -> LocalizedField:
        k, m = model.k, model.m
        delta = admissible_delta_bound(k, m) + 1.0
        theta = ThetaField.from_json(WAVE, model.torus_periods)
        psi = WeightFamily(WeightKind.G_SUB, k, m, delta)
        f_nu = WeightFamily(WeightKind.F_NU, k, m, delta, nu=nu, A=1.0)
        return LocalizedField(theta, psi, f_nu, C, model)

    return build


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def write_config(tmp_path: Path):
    """Write a config mapping to a JSON file and return its path."""

    def write(data: dict, name: str = "config.json") -> Path:
        path = tmp_path / name
        path.write_text(json.dumps(data))
        return path

    return write


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    for name in (
        "MSH_LAB_THREADS", "MSH_LAB_SEED", "MSH_LAB_OUTPUT_DIR",
        "MSH_LAB_FORMAT", "MSH_LAB_VERBOSITY", "MSH_LAB_EXPERIMENT",
    ):
        monkeypatch.delenv(name, raising=False)
