import numpy as np
import pytest
from hypothesis import given, strategies as st

from layerfield.lattice import Lattice3D
from layerfield.onebody import (OneParticleField, ParticleSpec, apply_onebody_kinetic, basis_field,
                                inner_product, kinetic_matrix, scale_add, zero_field)

S1 = ParticleSpec("s")
S2 = ParticleSpec("t", internal_dim=2)


def field(lat, spec, vals):
    return OneParticleField(lat, spec, np.asarray(vals, dtype=complex))


def test_basis_field_examples():
    two = Lattice3D((2, 1, 1))
    assert np.array_equal(basis_field(two, S1, 0).flat, [1, 0])
    assert np.array_equal(basis_field(two, S2, 1, 1).flat, [0, 0, 0, 1])


def test_basis_orthonormality_weighted():
    lat = Lattice3D((2, 2, 1), 0.5)
    fs = [basis_field(lat, S2, s, k) for s in range(4) for k in range(2)]
    g = np.array([[inner_product(a, b) for b in fs] for a in fs])
    assert np.allclose(g, np.eye(8) * 0.5**3)


def test_inner_product_examples():
    lat1 = Lattice3D((2, 1, 1))
    assert inner_product(zero_field(lat1, S1), zero_field(lat1, S1)) == 0
    assert inner_product(field(lat1, S1, [1, 0]), field(lat1, S1, [0, 1])) == 0
    lat2 = Lattice3D((2, 1, 1), 2.0)
    assert inner_product(field(lat2, S1, [1, 1]), field(lat2, S1, [1, 1])) == 16


def test_inner_product_conjugate_linear_in_first(rng):
    lat = Lattice3D((3, 1, 1))
    f = field(lat, S1, rng.complex_normal(3))
    g = field(lat, S1, rng.complex_normal(3))
    assert inner_product(f.with_values(2j * f.values), g) == pytest.approx(-2j * inner_product(f, g))
    assert inner_product(f, g) == pytest.approx(np.conj(inner_product(g, f)))


def test_scale_add_examples():
    lat = Lattice3D((2, 1, 1))
    f, g = field(lat, S1, [1, 0]), field(lat, S1, [0, 1])
    assert np.array_equal(scale_add(1, f, 0, g).values, f.values)
    assert np.array_equal(scale_add(1, f, -1, f).values, np.zeros((2, 1)))
    assert np.array_equal(scale_add(2, f, 3, g).flat, [2, 3])


def test_kinetic_examples():
    ring = Lattice3D((4, 1, 1))
    assert np.allclose(apply_onebody_kinetic(field(ring, S1, np.ones(4))).values, 0)
    pw = np.exp(1j * np.pi / 2 * np.arange(4))
    out = apply_onebody_kinetic(field(ring, S1, pw), mass=1.0, hbar=1.0)
    assert np.allclose(out.flat, pw, atol=1e-14)


def test_kinetic_internal_components_independent(rng):
    lat = Lattice3D((5, 1, 1))
    v = rng.complex_normal((5, 2))
    both = apply_onebody_kinetic(field(lat, S2, v)).values
    for k in range(2):
        one = apply_onebody_kinetic(field(lat, S1, v[:, k])).flat
        assert np.allclose(both[:, k], one)


def test_kinetic_mass_scaling(rng):
    lat = Lattice3D((4, 2, 1))
    f = field(lat, S1, rng.complex_normal(8))
    assert np.allclose(apply_onebody_kinetic(f, mass=2.0).values, apply_onebody_kinetic(f).values / 2)


@given(st.integers(1, 3), st.floats(0.2, 5.0))
def test_kinetic_matrix_positive_semidefinite(d, mass):
    lat = Lattice3D((3, 2, 1))
    k = kinetic_matrix(lat, ParticleSpec("x", d, mass=mass)).toarray()
    assert np.allclose(k, k.conj().T)
    assert np.linalg.eigvalsh(k).min() >= -1e-12


def test_field_validation():
    lat = Lattice3D((2, 1, 1))
    with pytest.raises(ValueError):
        OneParticleField(lat, S1, np.zeros(3))
    with pytest.raises(ValueError):
        ParticleSpec("bad", statistics="anyon")
    with pytest.raises(ValueError):
        ParticleSpec("bad", mass=0)
    f = field(lat, S1, [1, 2])
    with pytest.raises(ValueError):
        f.values[0] = 5
