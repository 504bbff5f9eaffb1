import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def template():
    from nirvitals.templates import default_template
    return default_template()


@pytest.fixture(scope="session")
def clean_scene():
    """Default 60 s scene (hr 70, br 15) rendered once per session."""
    from nirvitals.scene import SceneSpec
    spec = SceneSpec(seed=3)
    seq, truth = spec.render()
    return spec, seq, truth


@pytest.fixture
def rng():
    return np.random.default_rng(20240531)
