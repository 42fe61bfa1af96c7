"""Seeded property suites behind ``layerfield verify`` and the acceptance tests.

Each suite returns a list of :class:`Check` records with the measured
deviation and the tolerance it was held to.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import epr
from .fock_kg import (TruncatedFock, ccr_check, fock_basis_state, free_field_hamiltonian,
                      to_multilayer)
from .lattice import Lattice3D
from .layers import (GaugeElement, Layer, gauge_act, layer_compose, layer_scale, layers_equal,
                     make_layer)
from .locality import glue, restrict
from .multilayer import (MultiLayerState, as_basis_layers, expand_layer, ml_add, ml_inner, rho,
                         rho_inv, symmetrize)
from .onebody import OneParticleField, ParticleSpec, kinetic_matrix
from .operators import (HamiltonianSpec, PairPotential, apply_op, build_hamiltonian, evolve,
                        evolve_steps, expectation, lift_onebody, pairwise_potential, rho_op)
from .oracle import DenseTensorState, dense_apply, dense_inner, dense_symmetrize
from .rng import SplitMix64
from .sectors import SectorDescriptor


@dataclass(frozen=True)
class Check:
    name: str
    deviation: float
    tol: float
    passed: bool | None = None

    @property
    def ok(self) -> bool:
        return self.deviation <= self.tol if self.passed is None else self.passed

    def line(self) -> str:
        return f"{'PASS' if self.ok else 'FAIL'}  {self.name}: deviation={self.deviation:.3e} tol={self.tol:.1e}"


def _rel(a: complex, b: complex) -> float:
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def _rand_field(rng: SplitMix64, lat: Lattice3D, spec: ParticleSpec) -> OneParticleField:
    return OneParticleField(lat, spec, rng.complex_normal((lat.site_count, spec.internal_dim)))


def _rand_dense(rng: SplitMix64, sector: SectorDescriptor) -> DenseTensorState:
    return DenseTensorState(sector, rng.complex_normal(sector.slot_dims))


def _rand_gauge(rng: SplitMix64, n: int) -> GaugeElement:
    mod = np.exp(rng.random(n - 1) * 3 - 1.5)
    ph = np.exp(2j * np.pi * rng.random(n - 1))
    return GaugeElement.from_free(mod * ph)


def _factor_dev(l1: Layer, l2: Layer) -> float:
    return max((float(np.max(np.abs(a.values - b.values))) for a, b in zip(l1.factors, l2.factors)), default=0.0)


# individual suites -------------------------------------------------------------

def suite_isomorphism(seed: int, n_states: int = 200) -> list[Check]:
    rng = SplitMix64(seed)
    sectors = [
        SectorDescriptor(Lattice3D((8, 1, 1)), (ParticleSpec("a", 2), ParticleSpec("b", 2))),
        SectorDescriptor(Lattice3D((4, 1, 1)), (ParticleSpec("a"), ParticleSpec("b"), ParticleSpec("c"))),
    ]
    round_trip = inner = linear = 0.0
    for i in range(n_states):
        sec = sectors[i % 2]
        t1, t2 = _rand_dense(rng, sec), _rand_dense(rng, sec)
        m1, m2 = rho(t1), rho(t2)
        round_trip = max(round_trip, float(np.max(np.abs(rho_inv(m1).coeffs - t1.coeffs))))
        round_trip = max(round_trip, float(np.max(np.abs(rho_inv(rho(rho_inv(m1))).coeffs - t1.coeffs))))
        inner = max(inner, _rel(ml_inner(m1, m2), dense_inner(t1, t2)))
        a, b = rng.complex_normal(2)
        combo = DenseTensorState(sec, a * t1.coeffs + b * t2.coeffs)
        lhs = rho(combo).to_array()
        rhs = ml_add(a, m1, b, m2).to_array()
        linear = max(linear, float(np.max(np.abs(lhs - rhs))))
    return [
        Check("rho_inv(rho(t)) == t", round_trip, 1e-14),
        Check("ml_inner == dense_inner (relative)", inner, 1e-12),
        Check("rho is linear", linear, 1e-13),
    ]


def suite_gauge(seed: int, n_cases: int = 500) -> list[Check]:
    rng = SplitMix64(seed)
    lat = Lattice3D((3, 2, 1))
    amp_dev = fac_dev = inv_dev = 0.0
    for _ in range(n_cases):
        n = int(rng.integers(2, 5))
        specs = [ParticleSpec(f"p{j}", int(rng.integers(1, 3))) for j in range(n)]
        fields = [_rand_field(rng, lat, s) for s in specs]
        g = _rand_gauge(rng, n)
        l0, l1 = make_layer(fields), make_layer(gauge_act(fields, g))
        amp_dev = max(amp_dev, _rel(l0.amplitude, l1.amplitude))
        fac_dev = max(fac_dev, _factor_dev(l0, l1))
        # amplitude as the product of the per-factor norms and phases
        direct = math.prod(f.norm() * f.flat[0] / abs(f.flat[0]) for f in gauge_act(fields, g))
        inv_dev = max(inv_dev, _rel(direct, l0.amplitude))
    return [
        Check("gauge-transformed amplitude (relative)", amp_dev, 1e-12),
        Check("gauge-transformed canonical factors", fac_dev, 1e-12),
        Check("amplitude equals product of norms x phases", inv_dev, 1e-12),
    ]


def _rand_layer(rng: SplitMix64, lat: Lattice3D, n: int) -> Layer:
    return make_layer([_rand_field(rng, lat, ParticleSpec(f"q{j}", int(rng.integers(1, 3)))) for j in range(n)])


def suite_equivalence(seed: int, n_triples: int = 100) -> list[Check]:
    rng = SplitMix64(seed)
    lat = Lattice3D((2, 2, 1))
    law_failures = 0
    assoc_fac = 0.0
    assoc_amp = 0.0
    for _ in range(n_triples):
        n = int(rng.integers(2, 4))
        specs = [ParticleSpec(f"p{j}", int(rng.integers(1, 3))) for j in range(n)]
        f0 = [_rand_field(rng, lat, s) for s in specs]
        f1 = gauge_act(f0, _rand_gauge(rng, n))
        f2 = gauge_act(f1, _rand_gauge(rng, n))
        other = gauge_act(f0, GaugeElement.from_free([2.0] + [1.0] * (n - 2)))
        pool = [make_layer(f) for f in (f0, f1, f2)]
        odd = layer_scale(2.0, pool[0])
        pool_all = pool + [make_layer(other), odd]
        eq = [[layers_equal(a, b) for b in pool_all] for a in pool_all]
        k = len(pool_all)
        for i in range(k):
            law_failures += not eq[i][i]
            for j in range(k):
                law_failures += eq[i][j] != eq[j][i]
                for m in range(k):
                    law_failures += eq[i][j] and eq[j][m] and not eq[i][m]
        law_failures += not all(eq[i][j] for i in range(3) for j in range(3))
        law_failures += eq[0][4]

        a, b, c = (_rand_layer(rng, lat, int(rng.integers(1, 3))) for _ in range(3))
        left = layer_compose(layer_compose(a, b), c)
        right = layer_compose(a, layer_compose(b, c))
        flat = make_layer(list(a.factors + b.factors + c.factors))
        assoc_fac = max(assoc_fac, max(float(np.max(np.abs(x.values - y.values)))
                                       for x, y in zip(left.factors, right.factors)))
        assoc_fac = max(assoc_fac, _factor_dev(left, flat))
        assoc_amp = max(assoc_amp, _rel(left.amplitude, right.amplitude))
    eps = np.finfo(float).eps
    return [
        Check("reflexive / symmetric / transitive violations", float(law_failures), 0.0),
        Check("associativity: canonical factors identical", assoc_fac, 0.0),
        Check("associativity: amplitudes (relative, 4 ulp)", assoc_amp, 4 * eps),
    ]


def suite_distributivity(seed: int, n_cases: int = 100) -> list[Check]:
    rng = SplitMix64(seed)
    lat = Lattice3D((4, 2, 1))
    dev = 0.0
    for _ in range(n_cases):
        s1, s2 = ParticleSpec("a", int(rng.integers(1, 3))), ParticleSpec("b", int(rng.integers(1, 3)))
        p1, p2, p3 = _rand_field(rng, lat, s1), _rand_field(rng, lat, s2), _rand_field(rng, lat, s2)
        p23 = p2.with_values(p2.values + p3.values)
        lhs = expand_layer(make_layer([p1, p23])).to_array()
        rhs = ml_add(1, expand_layer(make_layer([p1, p2])), 1, expand_layer(make_layer([p1, p3]))).to_array()
        dev = max(dev, float(np.max(np.abs(lhs - rhs))))
        # right distributivity
        q1 = _rand_field(rng, lat, s2)
        lhs = expand_layer(make_layer([p23, q1])).to_array()
        rhs = ml_add(1, expand_layer(make_layer([p2, q1])), 1, expand_layer(make_layer([p3, q1]))).to_array()
        dev = max(dev, float(np.max(np.abs(lhs - rhs))))
    return [Check("expand(p1 [x] (p2 + p3)) == sum of expansions", dev, 1e-13)]


def suite_intertwining(seed: int, n_each: int = 50) -> list[Check]:
    rng = SplitMix64(seed)
    sectors = [
        SectorDescriptor(Lattice3D((8, 1, 1)), (ParticleSpec("a", 2), ParticleSpec("b", 2))),  # 256
        SectorDescriptor(Lattice3D((4, 1, 1)), (ParticleSpec("a"), ParticleSpec("b"), ParticleSpec("c"))),  # 64
    ]
    herm = unit = agree = 0.0
    for i in range(2 * n_each):
        sec = sectors[i % 2]
        d = sec.dim
        a = rng.hermitian(d) if i < n_each else rng.unitary(d)
        mat = rho_op(a, sec).matrix().toarray()
        if i < n_each:
            herm = max(herm, float(np.max(np.abs(mat - mat.conj().T))))
        else:
            unit = max(unit, float(np.max(np.abs(mat.conj().T @ mat - np.eye(d)))))
        t = _rand_dense(rng, sec)
        got = rho_inv(apply_op(rho_op(a, sec), rho(t))).coeffs
        want = dense_apply(a, t).coeffs
        agree = max(agree, float(np.max(np.abs(got - want)) / max(1.0, np.max(np.abs(want)))))
    # homomorphism on small matrices
    sec = sectors[1]
    hom = 0.0
    for _ in range(5):
        a, b = rng.complex_normal((sec.dim, sec.dim)), rng.complex_normal((sec.dim, sec.dim))
        lhs = rho_op(a @ b, sec).matrix().toarray()
        rhs = (rho_op(a, sec) @ rho_op(b, sec)).matrix().toarray()
        hom = max(hom, float(np.max(np.abs(lhs - rhs)) / np.max(np.abs(lhs))))
    return [
        Check("rho_op keeps Hermitian operators Hermitian", herm, 1e-12),
        Check("rho_op keeps unitary operators unitary", unit, 1e-12),
        Check("apply_op agrees with dense oracle (relative)", agree, 1e-12),
        Check("rho_op(AB) == rho_op(A) rho_op(B) (relative)", hom, 1e-12),
    ]


def locality_violations(lat: Lattice3D) -> tuple[int, int]:
    """Count off-slot / non-neighbour kinetic couplings and off-diagonal potential entries."""
    specs = (ParticleSpec("a"), ParticleSpec("b"))
    sec = SectorDescriptor(lat, specs)
    bad, seen = 0, 0
    for j in range(2):
        mat = lift_onebody(kinetic_matrix(lat, specs[j]), j, sec).matrix().tocoo()
        for r, c in zip(mat.row, mat.col):
            seen += 1
            ri = np.unravel_index(r, sec.slot_dims)
            ci = np.unravel_index(c, sec.slot_dims)
            other = 1 - j
            if ri[other] != ci[other]:
                bad += 1
            elif ri[j] != ci[j] and ri[j] not in lat.neighbors(int(ci[j])):
                bad += 1
    pot = pairwise_potential(HamiltonianSpec(PairPotential("softened_coulomb")), (0, 1), sec).matrix().tocoo()
    for r, c in zip(pot.row, pot.col):
        seen += 1
        bad += r != c
    return bad, seen


def suite_locality(seed: int) -> list[Check]:
    out = []
    for dims in ((8, 1, 1), (2, 2, 2)):
        bad, seen = locality_violations(Lattice3D(dims))
        out.append(Check(f"locality violations on {dims} ({seen} couplings)", float(bad), 0.0))
    return out


def two_particle_run(lat: Lattice3D | None = None):
    """Standard two-packet softened-Coulomb setup used by the dynamics suite."""
    lat = lat or Lattice3D((8, 1, 1))
    length = lat.dims[0] * lat.spacing
    a, b = ParticleSpec("e1"), ParticleSpec("e2")
    fa = OneParticleField(lat, a, epr.gaussian_packet(lat, (length / 4, 0, 0), lat.spacing, (0.7, 0, 0)))
    fb = OneParticleField(lat, b, epr.gaussian_packet(lat, (3 * length / 4, 0, 0), lat.spacing, (-0.7, 0, 0)))
    m = expand_layer(make_layer([fa, fb]))
    h = build_hamiltonian(HamiltonianSpec(PairPotential("softened_coulomb", {"charge": 1.0})), m.sector)
    return m, h


def suite_dynamics(seed: int, dt: float = 0.01, steps: int = 100) -> list[Check]:
    out = []
    for dims in ((8, 1, 1), (2, 2, 2)):
        m, h = two_particle_run(Lattice3D(dims))
        n0, e0 = m.norm(), expectation(h, m).real
        norm_drift = energy_drift = 0.0
        last = m
        for last in evolve_steps(m, h, dt, steps):
            norm_drift = max(norm_drift, abs(last.norm() - n0))
            energy_drift = max(energy_drift, abs(expectation(h, last).real - e0))
        exact = evolve(m, h, dt * steps, dt, scheme="dense_expm")
        fid = abs(ml_inner(last, exact)) ** 2 / (ml_inner(last, last).real * ml_inner(exact, exact).real)
        out += [
            Check(f"{dims}: CN norm drift over {steps} steps", norm_drift, 1e-10),
            Check(f"{dims}: CN energy drift over {steps} steps", energy_drift, 1e-8),
            Check(f"{dims}: 1 - fidelity vs dense expm", 1 - fid, 1e-6),
        ]
    return out


EPR_THETAS = tuple(k * math.pi / 8 for k in range(8))


def suite_epr(seed: int) -> list[Check]:
    rows = epr.epr_table(EPR_THETAS)
    e_dev = max(abs(r.E + math.cos(r.theta)) for r in rows)
    cell_dev = 0.0
    for r in rows:
        same = (1 - math.cos(r.theta)) / 4
        diff = (1 + math.cos(r.theta)) / 4
        cell_dev = max(cell_dev, abs(r.p_pp - same), abs(r.p_mm - same), abs(r.p_pm - diff), abs(r.p_mp - diff))
    zero = rows[0]
    single = [n for n in zero.post_layers if n]
    return [
        Check("E(a, b) == -cos(theta)", e_dev, 1e-10),
        Check("joint outcome probabilities", cell_dev, 1e-10),
        Check("post-measurement states at theta=0 are single layers",
              float(max(single) - 1 if single else 1), 0.0, passed=bool(single) and set(single) == {1}),
    ]


def suite_separability(seed: int, n_partitions: int = 50) -> list[Check]:
    rng = SplitMix64(seed)
    lat = Lattice3D((4, 2, 1))
    specs = (ParticleSpec("a", 2), ParticleSpec("b"))
    mismatches = 0
    scale_dev = 0.0
    for i in range(n_partitions):
        if i % 5 == 4:
            t = DenseTensorState(SectorDescriptor(lat, specs), rng.complex_normal((16, 8)))
            layers = as_basis_layers(rho(t))
        else:
            n_layers = int(rng.integers(1, 4))
            layers = [make_layer([_rand_field(rng, lat, s) for s in specs]) for _ in range(n_layers)]
        if i == 0:
            labels = np.arange(lat.site_count)
        else:
            labels = rng.integers(0, int(rng.integers(1, 9)), lat.site_count)
        regions = [np.nonzero(labels == k)[0] for k in np.unique(labels)]
        back = glue([restrict(layers, r) for r in regions])
        for orig, new in zip(layers, back):
            same = orig.amplitude == new.amplitude and all(
                np.array_equal(x.values, y.values) for x, y in zip(orig.factors, new.factors))
            mismatches += not same
        mismatches += len(back) != len(layers)
        c = complex(*rng.normal(2))
        r = restrict([layer_scale(c, layers[0])], regions[0])
        scale_dev = max(scale_dev, abs(r.records[0].amplitude - c * layers[0].amplitude))
    return [
        Check("glue(restrict(L)) == L exactly (incl. all-singletons)", float(mismatches), 0.0),
        Check("restrict commutes with layer_scale", scale_dev, 0.0),
    ]


def suite_fock(seed: int, n_modes: int = 3, cutoff: int = 3) -> list[Check]:
    rng = SplitMix64(seed)
    lat = Lattice3D((8, 1, 1))
    space = TruncatedFock.for_lattice(lat, n_modes, cutoff, mass=1.0)
    rep = ccr_check(space)
    iso = 0.0
    occs = space.occupations
    for n in range(0, 4):
        mask = np.array([sum(o) == n for o in occs])
        for _ in range(3):
            v = np.zeros(space.dim, dtype=complex)
            v[mask] = rng.complex_normal(int(mask.sum()))
            m = to_multilayer(space, v, n)
            iso = max(iso, abs(ml_inner(m, m).real - np.vdot(v, v).real) / np.vdot(v, v).real)
    h = free_field_hamiltonian(space)
    energy_bad = 0
    for occ in occs:
        e = fock_basis_state(space, occ)
        want = sum(md.omega * k for md, k in zip(space.modes, occ)) * e
        energy_bad += not np.array_equal(h @ e, want)
    return [
        Check("[a_i, a_j] == 0 exactly", rep.max_aa, 0.0),
        Check("[a_i^dag, a_j^dag] == 0 exactly", rep.max_adag_adag, 0.0),
        Check("[a_i, a_j^dag] == delta_ij below cutoff, exactly", rep.max_below_cutoff, 0.0,
              passed=rep.exact_below_cutoff),
        Check("boundary slice equals -cutoff x projector", rep.boundary_anomaly - cutoff, 0.0,
              passed=rep.boundary_matches_truncation),
        Check("to_multilayer is an isometry (relative)", iso, 1e-12),
        Check("free-field energy exact on basis states (failures)", float(energy_bad), 0.0),
    ]


def antisymmetric_rank(d: int, n: int, sign: int = -1) -> int:
    """Rank of the (anti)symmetrizer on n copies of a d-dimensional one-particle space."""
    lat = Lattice3D((d, 1, 1))
    spec = ParticleSpec("f", 1, "fermion" if sign < 0 else "boson")
    sec = SectorDescriptor(lat, (spec,) * n)
    cols = []
    for flat in range(d**n):
        idx = tuple((int(s), 0) for s in np.unravel_index(flat, (d,) * n))
        cols.append(symmetrize(MultiLayerState(sec, {idx: 1.0}), sign).to_vector())
    return int(np.linalg.matrix_rank(np.array(cols)))


def suite_symmetrization(seed: int) -> list[Check]:
    rng = SplitMix64(seed)
    lat = Lattice3D((3, 1, 1))
    spec = ParticleSpec("f", 2, "fermion")
    idem = oracle = 0.0
    for n in (2, 3):
        sec = SectorDescriptor(lat, (spec,) * n)
        for sign in (1, -1):
            for _ in range(3):
                t = _rand_dense(rng, sec)
                once = symmetrize(rho(t), sign)
                twice = symmetrize(once, sign)
                idem = max(idem, float(np.max(np.abs(once.to_array() - twice.to_array()))))
                oracle = max(oracle, float(np.max(np.abs(once.to_array() - dense_symmetrize(t, sign).coeffs))))
    vanish = 0
    for _ in range(10):
        psi, phi = _rand_field(rng, lat, spec), _rand_field(rng, lat, spec)
        vanish += len(symmetrize(expand_layer(make_layer([psi, psi])), -1).terms)
        vanish += len(symmetrize(expand_layer(make_layer([psi, phi, psi])), -1).terms)
    rank_bad = 0
    for d in range(1, 9):
        for n in range(1, 4):
            if d**n > 512:
                continue
            rank_bad += antisymmetric_rank(d, n) != math.comb(d, n)
    return [
        Check("Sym+- idempotent", idem, 1e-14),
        Check("Sym+- agrees with dense oracle", oracle, 1e-14),
        Check("antisymmetrized repeated factors leave no terms", float(vanish), 0.0),
        Check("antisymmetric rank == C(d, N) (failures)", float(rank_bad), 0.0),
    ]


SUITES: dict[str, Callable[[int], list[Check]]] = {
    "isomorphism": suite_isomorphism,
    "gauge": suite_gauge,
    "equivalence": suite_equivalence,
    "distributivity": suite_distributivity,
    "intertwining": suite_intertwining,
    "locality": suite_locality,
    "dynamics": suite_dynamics,
    "epr": suite_epr,
    "separability": suite_separability,
    "fock": suite_fock,
    "symmetrization": suite_symmetrization,
}


def run_suite(name: str, seed: int) -> tuple[list[Check], float]:
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; known: {', '.join(sorted(SUITES))}")
    t0 = time.perf_counter()
    checks = SUITES[name](seed)
    return checks, time.perf_counter() - t0
