import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, strategies as st

from conftest import A, A2, B, B2, random_field
from layerfield import epr
from layerfield.lattice import Lattice3D, distance_table
from layerfield.layers import make_layer
from layerfield.multilayer import (MultiLayerState, expand_layer, layer_count, ml_add, ml_inner, rho,
                                   rho_inv)
from layerfield.onebody import ParticleSpec, basis_field, kinetic_matrix
from layerfield.operators import (HamiltonianSpec, NotHermitian, OperatorRep, PairPotential, apply_op,
                                  build_hamiltonian, evolve, evolve_steps, expectation, hermiticity_defect,
                                  identity_op, lift_onebody, measure_project, pairwise_potential, pauli,
                                  rho_op)
from layerfield.oracle import DenseTensorState, dense_apply, dense_expm_evolve
from layerfield.rng import SplitMix64
from layerfield.sectors import SectorDescriptor
from layerfield.suites import locality_violations, two_particle_run

LAT = Lattice3D((4, 1, 1))


def rand_state(rng, sec):
    return rho(DenseTensorState(sec, rng.complex_normal(sec.slot_dims)))


def test_lift_identity_is_identity(rng):
    sec = SectorDescriptor(LAT, (A2, B))
    m = rand_state(rng, sec)
    assert np.array_equal(apply_op(lift_onebody(np.eye(8), 0, sec), m).to_array(), m.to_array())
    assert np.array_equal(apply_op(identity_op(sec), m).to_array(), m.to_array())


def test_lift_acts_on_one_factor(rng):
    p1, p2 = random_field(rng, LAT, A), random_field(rng, LAT, B)
    sec = SectorDescriptor(LAT, (A, B))
    k = kinetic_matrix(LAT, A)
    got = apply_op(lift_onebody(k, 0, sec), expand_layer(make_layer([p1, p2])))
    want = expand_layer(make_layer([p1.with_values((k @ p1.flat).reshape(-1, 1)), p2]))
    assert np.allclose(got.to_array(), want.to_array(), atol=1e-13)


def test_lifts_on_distinct_slots_commute(rng):
    sec = SectorDescriptor(LAT, (A2, B))
    ka, kb = rng.complex_normal((8, 8)), rng.complex_normal((4, 4))
    la, lb = lift_onebody(ka, 0, sec), lift_onebody(kb, 1, sec)
    m = rand_state(rng, sec)
    ab = apply_op(la, apply_op(lb, m)).to_array()
    ba = apply_op(lb, apply_op(la, m)).to_array()
    assert np.max(np.abs(ab - ba)) <= 1e-12


def test_lift_validation():
    sec = SectorDescriptor(LAT, (A, B))
    with pytest.raises(ValueError):
        lift_onebody(np.eye(3), 0, sec)
    with pytest.raises(IndexError):
        lift_onebody(np.eye(4), 2, sec)


def test_pairwise_potential_examples():
    lat = Lattice3D((2, 1, 1))
    sec = SectorDescriptor(lat, (A, B))
    zero = pairwise_potential(HamiltonianSpec(PairPotential("zero")), (0, 1), sec)
    assert np.all(zero.matrix().toarray() == 0)
    harm = pairwise_potential(HamiltonianSpec(PairPotential("harmonic", {"strength": 1.0})), (0, 1), sec)
    d01 = MultiLayerState(sec, {((0, 0), (1, 0)): 1})
    d00 = MultiLayerState(sec, {((0, 0), (0, 0)): 1})
    assert apply_op(harm, d01).terms == {((0, 0), (1, 0)): 1}
    assert apply_op(harm, d00).terms == {}
    with pytest.raises(ValueError):
        pairwise_potential(HamiltonianSpec(), (1, 1), sec)


def test_pair_potential_symmetric_in_slots(rng):
    sec = SectorDescriptor(LAT, (A, B))
    spec = HamiltonianSpec(PairPotential("softened_coulomb"))
    m = rand_state(rng, sec)
    jk = apply_op(pairwise_potential(spec, (0, 1), sec), m).to_array()
    kj = apply_op(pairwise_potential(spec, (1, 0), sec), m).to_array()
    assert np.allclose(jk, kj)


def test_softened_coulomb_default_epsilon():
    lat = Lattice3D((4, 1, 1), 0.5)
    v = PairPotential("softened_coulomb", {"charge": 2.0}).table(lat)
    assert v[0, 0] == pytest.approx(2.0 / 0.25)
    assert np.allclose(v, 2.0 / (distance_table(lat) + 0.25))


def test_free_particle_hamiltonian_is_kinetic():
    sec = SectorDescriptor(LAT, (A,))
    h = build_hamiltonian(HamiltonianSpec(), sec).matrix().toarray()
    assert np.allclose(h, kinetic_matrix(LAT, A).toarray())


def test_two_free_particles_eigenvalues_add():
    sec = SectorDescriptor(LAT, (A, B))
    h = build_hamiltonian(HamiltonianSpec(), sec).matrix().toarray()
    one = np.linalg.eigvalsh(kinetic_matrix(LAT, A).toarray())
    expected = np.sort(np.add.outer(one, one).ravel())
    assert np.allclose(np.linalg.eigvalsh(h), expected)
    k1, k2 = 2 * np.pi / 4, 2 * np.pi * 3 / 4
    pw = np.multiply.outer(np.exp(1j * k1 * np.arange(4)), np.exp(1j * k2 * np.arange(4))).ravel()
    e = (1 - np.cos(k1)) + (1 - np.cos(k2))
    assert np.allclose(h @ pw, e * pw)


def test_constant_potential_shifts_by_pair_count():
    sec = SectorDescriptor(Lattice3D((2, 1, 1)), (A, B, ParticleSpec("c")))
    free = np.linalg.eigvalsh(build_hamiltonian(HamiltonianSpec(), sec).matrix().toarray())
    for count, factor in (("unordered", 1), ("ordered", 2)):
        spec = HamiltonianSpec(PairPotential("constant", {"value": 0.7}), pair_count=count)
        shifted = np.linalg.eigvalsh(build_hamiltonian(spec, sec).matrix().toarray())
        assert np.allclose(shifted, free + 0.7 * 3 * factor)


def test_external_potential():
    sec = SectorDescriptor(LAT, (A, B))
    ext = np.array([0.0, 1.0, 2.0, 3.0])
    h = build_hamiltonian(HamiltonianSpec(external=[ext, None]), sec)
    m = MultiLayerState(sec, {((2, 0), (0, 0)): 1})
    free = build_hamiltonian(HamiltonianSpec(), sec)
    diff = apply_op(h, m).to_array() - apply_op(free, m).to_array()
    assert np.allclose(diff, 2.0 * m.to_array())


def test_hamiltonian_hermitian_real_spectrum():
    sec = SectorDescriptor(Lattice3D((2, 2, 1)), (A2, B))
    h = build_hamiltonian(HamiltonianSpec(PairPotential("softened_coulomb")), sec)
    assert hermiticity_defect(h) == 0
    w = np.linalg.eigvals(h.matrix().toarray())
    assert np.max(np.abs(w.imag)) < 1e-10


def test_apply_op_matches_oracle(rng):
    sec = SectorDescriptor(LAT, (A2, B))
    a = rng.complex_normal((32, 32))
    t = DenseTensorState(sec, rng.complex_normal(sec.slot_dims))
    got = rho_inv(apply_op(rho_op(a, sec), rho(t))).coeffs
    assert np.max(np.abs(got - dense_apply(a, t).coeffs)) <= 1e-12


def test_structured_and_general_forms_agree(rng):
    sec = SectorDescriptor(Lattice3D((3, 1, 1)), (A2, B))
    h = build_hamiltonian(HamiltonianSpec(PairPotential("harmonic")), sec)
    general = rho_op(h.matrix(), sec)
    m = rand_state(rng, sec)
    assert np.allclose(apply_op(h, m).to_array(), apply_op(general, m).to_array(), atol=1e-13)


def test_rho_op_examples(rng):
    sec = SectorDescriptor(LAT, (A, B))
    assert np.allclose(rho_op(np.eye(16), sec).matrix().toarray(), np.eye(16))
    hm = rng.hermitian(16)
    assert hermiticity_defect(rho_op(hm, sec)) == 0
    a, b = rng.complex_normal((16, 16)), rng.complex_normal((16, 16))
    lhs = rho_op(a @ b, sec).matrix().toarray()
    rhs = (rho_op(a, sec) @ rho_op(b, sec)).matrix().toarray()
    assert np.max(np.abs(lhs - rhs)) <= 1e-12
    with pytest.raises(ValueError):
        rho_op(np.eye(5), sec)


def test_locality_witness_exhaustive():
    for dims in ((8, 1, 1), (2, 2, 2), (4, 2, 1)):
        bad, seen = locality_violations(Lattice3D(dims))
        assert seen > 0 and bad == 0


def test_kinetic_on_basis_layer_keeps_other_slot(rng):
    lat = Lattice3D((8, 1, 1))
    sec = SectorDescriptor(lat, (A, B))
    m = expand_layer(make_layer([basis_field(lat, A, 3), basis_field(lat, B, 6)]))
    out = apply_op(lift_onebody(kinetic_matrix(lat, A), 0, sec), m)
    assert {idx[1] for idx in out.terms} == {(6, 0)}
    assert {idx[0][0] for idx in out.terms} == {2, 3, 4}


def test_evolve_zero_time_and_validation(rng):
    m, h = two_particle_run()
    assert evolve(m, h, 0.0, 0.01) is m
    with pytest.raises(ValueError):
        evolve(m, h, 1.0, 0.0)
    bad = OperatorRep(m.sector, general=sp.csr_matrix(np.triu(np.ones((64, 64)))))
    with pytest.raises(NotHermitian):
        evolve(m, bad, 0.1, 0.01)


def test_crank_nicolson_conserves_norm_and_energy():
    m, h = two_particle_run()
    n0, e0 = m.norm(), expectation(h, m).real
    states = list(evolve_steps(m, h, 0.01, 100))
    assert len(states) == 100
    assert max(abs(s.norm() - n0) for s in states) <= 1e-10
    assert max(abs(expectation(h, s).real - e0) for s in states) <= 1e-8
    exact = evolve(m, h, 1.0, 0.01, scheme="dense_expm")
    fid = abs(ml_inner(states[-1], exact)) ** 2 / (ml_inner(exact, exact).real * ml_inner(states[-1], states[-1]).real)
    assert fid >= 1 - 1e-6


def test_dense_expm_scheme_matches_oracle():
    m, h = two_particle_run(Lattice3D((4, 1, 1)))
    got = evolve(m, h, 0.37, 0.1, scheme="dense_expm")
    want = dense_expm_evolve(rho_inv(m), h.matrix().toarray(), 0.37)
    assert np.allclose(rho_inv(got).coeffs, want.coeffs, atol=1e-12)


def test_evolution_is_linear(rng):
    sec = SectorDescriptor(LAT, (A, B))
    h = build_hamiltonian(HamiltonianSpec(PairPotential("softened_coulomb")), sec)
    m1, m2 = rand_state(rng, sec), rand_state(rng, sec)
    a, b = 0.3 + 1j, -2.0
    lhs = evolve(ml_add(a, m1, b, m2), h, 0.2, 0.02).to_array()
    rhs = ml_add(a, evolve(m1, h, 0.2, 0.02), b, evolve(m2, h, 0.2, 0.02)).to_array()
    assert np.max(np.abs(lhs - rhs)) <= 1e-11 * np.max(np.abs(lhs))


def test_pauli_conventions():
    assert np.array_equal(pauli("z"), np.diag([1, -1]))
    for ax in "xyz":
        p = pauli(ax)
        assert np.allclose(p @ p, np.eye(2))
    assert np.allclose(pauli([0, 0, 1]), pauli("z"))
    assert np.allclose(pauli("x") @ pauli("y"), 1j * pauli("z"))
    with pytest.raises(ValueError):
        pauli([1, 1, 0])


def test_measure_eigenvector_single_outcome(rng):
    sec = SectorDescriptor(LAT, (A, B))
    m = MultiLayerState(sec, {((1, 0), (2, 0)): 1})
    op = pairwise_potential(HamiltonianSpec(PairPotential("harmonic")), (0, 1), sec)
    outs = [o for o in measure_project(m, op) if o.probability > 0]
    assert len(outs) == 1 and outs[0].probability == pytest.approx(1) and outs[0].eigenvalue == pytest.approx(1)


def test_measure_singlet_spin_z():
    m = epr.singlet()
    sec = m.sector
    lat = sec.lattice
    zz = sp.kron(sp.kron(sp.identity(lat.site_count), pauli("z")),
                 sp.kron(sp.identity(lat.site_count), pauli("z")), format="csr")
    outs = {round(o.eigenvalue): o for o in measure_project(m, rho_op(zz, sec))}
    assert outs[1].probability == pytest.approx(0, abs=1e-14)
    assert outs[-1].probability == pytest.approx(1, abs=1e-12)
    # resolving Alice's spin alone leaves single-layer post-states
    za = measure_project(m, lift_onebody(sp.kron(sp.identity(lat.site_count), pauli("z")), 0, sec))
    for o in za:
        if o.probability > 0:
            assert o.probability == pytest.approx(0.5)
            assert layer_count(o.state) == 1
            assert o.state.norm() == pytest.approx(1)


@given(st.integers(0, 2**63))
def test_measure_probabilities_sum_to_one(seed):
    rng = SplitMix64(seed)
    sec = SectorDescriptor(Lattice3D((2, 1, 1)), (A2, B))
    m = rand_state(rng, sec)
    outs = measure_project(m, rho_op(rng.hermitian(sec.dim), sec))
    assert abs(sum(o.probability for o in outs) - 1) <= 1e-12


def test_measure_rejects_bad_input(rng):
    sec = SectorDescriptor(LAT, (A, B))
    with pytest.raises(NotHermitian):
        measure_project(rand_state(rng, sec), rho_op(np.triu(np.ones((16, 16))), sec))
    with pytest.raises(ValueError):
        measure_project(MultiLayerState(sec, {}), identity_op(sec))
