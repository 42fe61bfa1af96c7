import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from layerfield.lattice import (Lattice3D, distance3d, distance_table, laplacian_apply, make_region,
                                position)


def test_position_examples():
    assert position(Lattice3D((2, 1, 1)), 0) == (0, 0, 0)
    assert position(Lattice3D((2, 1, 1)), 1) == (1, 0, 0)
    assert position(Lattice3D((2, 2, 1), 0.5), 3) == (0.5, 0.5, 0)


def test_position_matches_enumeration():
    lat = Lattice3D((3, 2, 4), 0.25)
    s = 0
    for iz in range(4):
        for iy in range(2):
            for ix in range(3):
                assert position(lat, s) == pytest.approx((ix * 0.25, iy * 0.25, iz * 0.25))
                assert lat.index(ix, iy, iz) == s
                s += 1


def test_distance_examples():
    assert distance3d(Lattice3D((4, 1, 1)), 2, 2) == 0
    assert distance3d(Lattice3D((4, 1, 1)), 0, 3) == 1
    lat = Lattice3D((3, 3, 1))
    assert distance3d(lat, lat.index(0, 0, 0), lat.index(1, 1, 0)) == pytest.approx(math.sqrt(2))


def test_distance_table_symmetric_and_zero_diagonal():
    lat = Lattice3D((4, 3, 2), 0.7)
    d = distance_table(lat)
    assert np.array_equal(d, d.T)
    assert np.all(np.diag(d) == 0)
    assert d.max() <= 0.7 * math.sqrt(2**2 + 1 + 1) + 1e-12


def test_laplacian_constant_is_zero():
    for dims in [(4, 1, 1), (2, 2, 2), (3, 5, 2), (2, 1, 1)]:
        lat = Lattice3D(dims, 0.5)
        assert np.allclose(laplacian_apply(lat, np.full(lat.site_count, 3 - 2j)), 0, atol=1e-13)


def test_laplacian_plane_wave_eigenvalue():
    lat = Lattice3D((4, 1, 1))
    f = np.exp(1j * 2 * np.pi * np.arange(4) / 4)
    assert np.allclose(laplacian_apply(lat, f), -2 * f, atol=1e-14)


def test_laplacian_two_site_wrap():
    assert np.allclose(laplacian_apply(Lattice3D((2, 1, 1)), [1, 0]), [-2, 2])


def test_laplacian_spacing_scaling():
    f = np.exp(1j * 2 * np.pi * np.arange(6) / 6)
    a = laplacian_apply(Lattice3D((6, 1, 1), 1.0), f)
    b = laplacian_apply(Lattice3D((6, 1, 1), 0.5), f)
    assert np.allclose(b, 4 * a)


@given(st.tuples(st.integers(1, 4), st.integers(1, 4), st.integers(1, 3)), st.floats(0.1, 3.0))
def test_laplacian_hermitian_negative(dims, h):
    lat = Lattice3D(dims, h)
    m = lat.laplacian_matrix.toarray()
    assert np.allclose(m, m.T)
    assert np.linalg.eigvalsh(m).max() <= 1e-10


def test_neighbors_count_and_symmetry():
    lat = Lattice3D((4, 3, 1))
    for s in range(lat.site_count):
        nb = lat.neighbors(s)
        assert len(nb) == 4
        for t in nb:
            assert s in lat.neighbors(t)


def test_invalid_lattices_and_sites():
    with pytest.raises(ValueError):
        Lattice3D((0, 1, 1))
    with pytest.raises(ValueError):
        Lattice3D((2, 2, 2), 0.0)
    lat = Lattice3D((2, 2, 1))
    with pytest.raises(IndexError):
        lat.check_site(4)
    with pytest.raises(IndexError):
        make_region(lat, [0, 9])
    assert make_region(lat, [3, 1, 1]) == frozenset({1, 3})


@pytest.mark.parametrize("dims", [(4, 4, 4), (8, 1, 1), (3, 5, 2), (2, 2, 2)])
def test_distance_is_a_metric_exhaustive(dims):
    d = distance_table(Lattice3D(dims, 0.9))
    n = len(d)
    off = ~np.eye(n, dtype=bool)
    assert np.all(d[off] > 0)
    assert np.array_equal(d, d.T)
    # triangle inequality d[i, k] <= d[i, j] + d[j, k] for every triple
    assert np.all(d[:, None, :] <= d[:, :, None] + d[None, :, :] + 1e-12)


def test_laplacian_linear_and_self_adjoint(rng):
    lat = Lattice3D((3, 2, 2), 0.4)
    f, g = rng.complex_normal(12), rng.complex_normal(12)
    a, b = 1 - 2j, 0.5j
    assert np.allclose(laplacian_apply(lat, a * f + b * g), a * laplacian_apply(lat, f) + b * laplacian_apply(lat, g))
    assert np.vdot(f, laplacian_apply(lat, g)) == pytest.approx(np.vdot(laplacian_apply(lat, f), g))
