import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from layerfield.lattice import Lattice3D
from layerfield.onebody import OneParticleField, ParticleSpec
from layerfield.rng import SplitMix64

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return SplitMix64(20240611)


@pytest.fixture
def line8():
    return Lattice3D((8, 1, 1))


def random_field(rng, lat, spec):
    return OneParticleField(lat, spec, rng.complex_normal((lat.site_count, spec.internal_dim)))


A = ParticleSpec("a")
B = ParticleSpec("b")
A2 = ParticleSpec("a2", internal_dim=2)
B2 = ParticleSpec("b2", internal_dim=2)
