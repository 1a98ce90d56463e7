"""Pytest configuration and shared fixtures for uddpy tests."""

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from src.uddpy.generators import StreamSpec, generate_stream
from src.uddpy.sketch import CollapsePolicy, QuantileSketch, SketchConfig

settings.register_profile(
    "uddpy",
    max_examples=50,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("uddpy")

# reference datasets: name -> (dist, params)
DATASETS = {
    "beta": ("beta", (5.0, 1.5)),
    "exponential": ("exponential", (3.5,)),
    "lognormal": ("lognormal", (1.0, 1.5)),
    "normal": ("normal", (1e6, 20000.0)),
    "uniform": ("uniform", (5.0, 1e6)),
}


def pytest_collection_modifyitems(config, items):
    """Tag tests by directory so ``-m unit`` and ``-m integration`` select them."""
    for item in items:
        path = str(item.fspath)
        if "/unit/" in path:
            item.add_marker(pytest.mark.unit)
        elif "/integration/" in path:
            item.add_marker(pytest.mark.integration)


def dataset_values(name: str, n: int, seed: int = 1) -> np.ndarray:
    dist, params = DATASETS[name]
    return generate_stream(StreamSpec(dist=dist, params=params, n=n, seed=seed))


def assert_same_sketch(a: QuantileSketch, b: QuantileSketch):
    """Bit-exact equality on (epoch, keys, counts, n), with a readable failure."""
    assert a.epoch == b.epoch, f"epochs differ: {a.epoch} vs {b.epoch}"
    assert a.n == b.n, f"counts differ: {a.n} vs {b.n}"
    assert a.buckets() == b.buckets()
    assert a.gamma.hex() == b.gamma.hex()


@pytest.fixture
def uniform_config():
    return SketchConfig(alpha0=0.01, m=32, policy=CollapsePolicy.UNIFORM)


@pytest.fixture
def dd_config():
    return SketchConfig(alpha0=0.01, m=32, policy=CollapsePolicy.COLLAPSE_FIRST)


@pytest.fixture
def lognormal_values():
    return dataset_values("lognormal", 20_000, seed=11)


@pytest.fixture
def small_sketch(uniform_config):
    sketch = QuantileSketch(uniform_config)
    sketch.update([1.0, 2.0, 3.0, 4.0, 5.0])
    return sketch
