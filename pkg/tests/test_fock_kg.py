import math

import numpy as np
import pytest

from layerfield.fock_kg import (TruncatedFock, ccr_check, create_string, field_operator_at, fock_basis_state,
                                free_field_hamiltonian, ladder, lattice_modes, number_operator,
                                plane_wave_unitary, to_fock_state, to_multilayer)
from layerfield.lattice import Lattice3D
from layerfield.multilayer import MultiLayerState, ml_inner, symmetrize, symmetry_violation

LAT = Lattice3D((8, 1, 1))


@pytest.fixture
def space():
    return TruncatedFock.for_lattice(LAT, 3, 3)


def test_modes_sorted_and_bounded():
    modes = lattice_modes(Lattice3D((4, 2, 1), 0.5), mass=0.3)
    assert [m.omega for m in modes] == sorted(m.omega for m in modes)
    assert all(m.omega >= 0.3 for m in modes)
    assert modes[0].index == (0, 0, 0)
    assert all(abs(k) <= math.pi / 0.5 + 1e-12 for m in modes for k in m.k)


def test_plane_wave_unitary():
    u = plane_wave_unitary(Lattice3D((3, 2, 1)))
    assert np.allclose(u.conj().T @ u, np.eye(6))


def test_ladder_examples(space):
    vac = fock_basis_state(space, (0, 0, 0))
    assert np.count_nonzero(ladder(0, "annihilate", space) @ vac) == 0
    for occ in space.occupations:
        e = fock_basis_state(space, occ)
        for i in range(3):
            assert np.array_equal(number_operator(i, space) @ e, occ[i] * e)
    one, two = fock_basis_state(space, (1, 0, 0)), fock_basis_state(space, (2, 0, 0))
    assert np.vdot(two, ladder(0, "create", space) @ one) == pytest.approx(math.sqrt(2), abs=1e-15)
    with pytest.raises(IndexError):
        ladder(3, "create", space)
    with pytest.raises(ValueError):
        ladder(0, "destroy", space)


def test_ccr_report(space):
    rep = ccr_check(space)
    assert rep.max_aa == 0 and rep.max_adag_adag == 0
    assert rep.max_below_cutoff == 0 and rep.exact_below_cutoff
    assert rep.boundary_anomaly == 3 and rep.boundary_matches_truncation
    assert rep.full_space_deviation > 0
    d = rep.as_dict()
    assert d["n_modes"] == 3 and d["cutoff"] == 3


@pytest.mark.parametrize("modes,cutoff", [(1, 1), (2, 4), (4, 2)])
def test_ccr_other_sizes(modes, cutoff):
    rep = ccr_check(TruncatedFock.for_lattice(LAT, modes, cutoff))
    assert rep.exact_below_cutoff and rep.boundary_matches_truncation
    assert rep.boundary_anomaly == cutoff


def test_basis_states(space):
    assert np.array_equal(fock_basis_state(space, (0, 0, 0)), create_string(space, []))
    assert np.allclose(create_string(space, [1, 1]), math.sqrt(2) * fock_basis_state(space, (0, 2, 0)))
    g = np.array([fock_basis_state(space, o) for o in space.occupations])
    assert np.array_equal(g @ g.T, np.eye(space.dim))
    with pytest.raises(ValueError):
        fock_basis_state(space, (4, 0, 0))


def test_free_field_energy_exact(space):
    h = free_field_hamiltonian(space)
    for occ in space.occupations:
        e = fock_basis_state(space, occ)
        assert np.array_equal(h @ e, sum(m.omega * n for m, n in zip(space.modes, occ)) * e)


def test_to_multilayer_vacuum_and_one_particle(space):
    fs = to_fock_state(space, fock_basis_state(space, (0, 0, 0)))
    assert fs.vacuum == 1 and fs.sectors == {}
    mode = space.modes[1]
    m = to_multilayer(space, fock_basis_state(space, (0, 1, 0)), 1)
    x = np.arange(8)
    want = np.exp(1j * mode.k[0] * x) / math.sqrt(8) / math.sqrt(LAT.cell_volume)
    assert np.allclose(m.to_vector(), want)
    assert m.norm() == pytest.approx(1)


def test_to_multilayer_two_distinct_modes(space):
    m = to_multilayer(space, fock_basis_state(space, (1, 1, 0)), 2)
    assert m.norm() == pytest.approx(1, abs=1e-12)
    assert m.sector.symmetry == "symmetric" and symmetry_violation(m) <= 1e-14
    u = plane_wave_unitary(LAT)
    q1, q2 = space.modes[0].column, space.modes[1].column
    prod = np.multiply.outer(u[:, q1], u[:, q2])
    want = (prod + prod.T) / math.sqrt(2)
    assert np.allclose(m.to_array(), want, atol=1e-14)


def test_to_multilayer_isometry(space, rng):
    for n in range(4):
        mask = np.array([sum(o) == n for o in space.occupations])
        v = np.zeros(space.dim, dtype=complex)
        v[mask] = rng.complex_normal(int(mask.sum()))
        w = np.zeros(space.dim, dtype=complex)
        w[mask] = rng.complex_normal(int(mask.sum()))
        a, b = to_multilayer(space, v, n), to_multilayer(space, w, n)
        assert ml_inner(a, b) == pytest.approx(np.vdot(v, w), rel=1e-12)


def test_to_multilayer_lands_in_symmetric_subspace(space, rng):
    v = rng.complex_normal(space.dim)
    m = to_multilayer(space, v, 3)
    assert np.allclose(symmetrize(m, 1).to_array(), m.to_array(), atol=1e-14)


def test_field_operator(space):
    phi = field_operator_at(space, 3, 0.7)
    assert (phi - phi.conj().T).count_nonzero() == 0
    vac = fock_basis_state(space, (0, 0, 0))
    assert np.vdot(vac, phi @ vac) == 0
    phi0 = field_operator_at(space, 3, 0.0)
    for i, mode in enumerate(space.modes):
        e = np.zeros(3, dtype=int)
        e[i] = 1
        k = fock_basis_state(space, e)
        want = np.exp(1j * mode.k[0] * 3) / math.sqrt(2 * mode.omega * 8)
        assert np.vdot(vac, phi0 @ k) == pytest.approx(want, abs=1e-15)


def test_space_validation():
    with pytest.raises(ValueError):
        TruncatedFock.for_lattice(LAT, 9)
    with pytest.raises(ValueError):
        TruncatedFock.for_lattice(LAT, 2, 0)
