"""
Общие фикстуры тестов: маленькая модель головы и синтетические системы.
"""
import pytest

from config import Config
from models.grid import GridAxis
from models.specs import MiniHeadSpec, SynthSpec
from services.generator_service import GeneratorService


def small_head_domain():
    return [
        GridAxis(0, 0.5, 2.0, 5, "linear"),
        GridAxis(1, 1e-3, 1e-1, 5, "log"),
        GridAxis(2, 1.0, 1.0)
    ]


def small_head_spec(**overrides) -> MiniHeadSpec:
    params = dict(shape=(6, 6, 6), n_regions=3, shell=1, n_electrodes=8, n_sources=6, domain=small_head_domain())
    params.update(overrides)
    return MiniHeadSpec.nested_boxes(**params)


@pytest.fixture(autouse=True)
def quiet_config(monkeypatch):
    """Без индикатора прогресса и без журнала запусков по умолчанию"""
    monkeypatch.setattr(Config, "SHOW_PROGRESS", False)
    monkeypatch.setattr(Config, "REGISTRY_PATH", "")


@pytest.fixture(scope="session")
def head_system():
    return GeneratorService.build_mini_head(small_head_spec())


@pytest.fixture(scope="session")
def synthetic_system():
    spec = SynthSpec(n_unknowns=40, n_compartments=2, n_electrodes=6, n_sources=5,
                     gamma_family=["sigma"], lambda_family=["one"], seed=3)
    return GeneratorService.build_synthetic(spec)


@pytest.fixture(scope="session")
def bem_like_system():
    """Синтетическая система со смешанными множителями γ и λ"""
    spec = SynthSpec(n_unknowns=64, n_compartments=2, n_electrodes=8, n_sources=6,
                     gamma_family=["sigma", "inverse", "constant"], lambda_family=["one", "sigma"], seed=11)
    return GeneratorService.build_synthetic(spec)


@pytest.fixture(scope="session")
def homogeneous_system():
    spec = SynthSpec(n_unknowns=30, n_compartments=1, n_electrodes=5, n_sources=4,
                     gamma_family=["sigma"], lambda_family=["one"], seed=5)
    return GeneratorService.build_synthetic(spec)
