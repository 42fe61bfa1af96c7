"""Lattice scalar field: plane-wave modes, truncated Fock space, ladder operators.

Ladder matrices follow the dimensionless lattice convention
``[a_k, a_k'^dag] = delta_kk'``; the continuum normalization differs by the
box volume ``site_count * h^3``.  The field operator uses the equal-time
prefactor ``1 / sqrt(2 omega_k site_count)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass
from functools import cached_property
from typing import Sequence

import numpy as np
import scipy.sparse as sp
import sympy

from .lattice import Lattice3D, position
from .multilayer import FockState, MultiLayerState, change_basis
from .onebody import ParticleSpec
from .sectors import SectorDescriptor

DEFAULT_CUTOFF = 3
STATE_BUDGET = 65536


@dataclass(frozen=True)
class ModeSpec:
    index: tuple[int, int, int]  # signed integer wave numbers
    column: int  # position of this plane wave among the lattice's plane waves
    k: tuple[float, float, float]
    omega: float
    mass: float


def _signed(q: int, n: int) -> int:
    return q if q < (n + 1) // 2 else q - n


def lattice_modes(lat: Lattice3D, mass: float = 1.0) -> list[ModeSpec]:
    """All plane waves of the lattice, ordered by frequency then column."""
    if mass < 0:
        raise ValueError("mass must be non-negative")
    modes = []
    for q in range(lat.site_count):
        qc = lat.coords(q)
        idx = tuple(_signed(c, n) for c, n in zip(qc, lat.dims))
        k = tuple(2 * math.pi * m / (n * lat.spacing) for m, n in zip(idx, lat.dims))
        omega = math.sqrt(sum(x * x for x in k) + mass * mass)
        modes.append(ModeSpec(idx, q, k, omega, float(mass)))
    return sorted(modes, key=lambda md: (md.omega, md.column))


def plane_wave_unitary(lat: Lattice3D) -> np.ndarray:
    """Unitary whose column q is the plane wave e^{i k_q . x_s} / sqrt(site_count)."""
    c = lat.coord_table
    n = np.asarray(lat.dims)
    phase = 2 * np.pi * (c[:, None, :] * c[None, :, :] / n).sum(axis=-1)
    return np.exp(1j * phase) / math.sqrt(lat.site_count)


@dataclass(frozen=True, eq=False)
class TruncatedFock:
    """Occupation-number space of ``modes`` with at most ``cutoff`` quanta each.

    Basis states are occupation tuples; the first mode is the most significant
    digit of the flat index.
    """

    lattice: Lattice3D
    modes: tuple[ModeSpec, ...]
    cutoff: int = DEFAULT_CUTOFF

    def __post_init__(self):
        object.__setattr__(self, "modes", tuple(self.modes))
        if self.cutoff < 1:
            raise ValueError("cutoff must be at least 1")
        if not self.modes:
            raise ValueError("need at least one mode")

    @classmethod
    def for_lattice(cls, lat: Lattice3D, n_modes: int, cutoff: int = DEFAULT_CUTOFF, mass: float = 1.0) -> TruncatedFock:
        modes = lattice_modes(lat, mass)
        if not 1 <= n_modes <= len(modes):
            raise ValueError(f"lattice has {len(modes)} modes, asked for {n_modes}")
        return cls(lat, tuple(modes[:n_modes]), cutoff)

    @property
    def n_modes(self) -> int:
        return len(self.modes)

    @property
    def dim(self) -> int:
        return (self.cutoff + 1) ** self.n_modes

    @property
    def particle(self) -> ParticleSpec:
        return ParticleSpec("scalar", 1, "boson", mass=self.modes[0].mass or 1.0)

    def index(self, occupation: Sequence[int]) -> int:
        occ = tuple(int(n) for n in occupation)
        if len(occ) != self.n_modes:
            raise ValueError(f"need {self.n_modes} occupations, got {len(occ)}")
        if any(not 0 <= n <= self.cutoff for n in occ):
            raise ValueError(f"occupations {occ} outside [0, {self.cutoff}]")
        flat = 0
        for n in occ:
            flat = flat * (self.cutoff + 1) + n
        return flat

    @cached_property
    def occupations(self) -> list[tuple[int, ...]]:
        return list(itertools.product(range(self.cutoff + 1), repeat=self.n_modes))

    def _check_mode(self, i: int) -> int:
        if not 0 <= i < self.n_modes:
            raise IndexError(f"mode {i} out of range [0, {self.n_modes})")
        return i

    def _embed(self, i: int, local) -> sp.csr_matrix:
        left = (self.cutoff + 1) ** i
        right = (self.cutoff + 1) ** (self.n_modes - i - 1)
        return sp.kron(sp.kron(sp.identity(left), local), sp.identity(right), format="csr")


def _local_annihilator(cutoff: int) -> sp.csr_matrix:
    n = np.arange(1, cutoff + 1)
    return sp.csr_matrix((np.sqrt(n), (n - 1, n)), shape=(cutoff + 1, cutoff + 1))


def ladder(i: int, kind: str, space: TruncatedFock) -> sp.csr_matrix:
    """Annihilation (``a|n> = sqrt(n)|n-1>``) or creation operator of mode ``i``."""
    space._check_mode(i)
    a = _local_annihilator(space.cutoff)
    if kind == "annihilate":
        return space._embed(i, a)
    if kind == "create":
        return space._embed(i, a.T.tocsr())
    raise ValueError(f"kind must be 'create' or 'annihilate', got {kind!r}")


def number_operator(i: int, space: TruncatedFock) -> sp.csr_matrix:
    """a_i^dag a_i with exact integer diagonal."""
    space._check_mode(i)
    return space._embed(i, sp.diags(np.arange(space.cutoff + 1, dtype=float)))


def free_field_hamiltonian(space: TruncatedFock) -> sp.csr_matrix:
    h = sp.csr_matrix((space.dim, space.dim))
    for i, mode in enumerate(space.modes):
        h = h + mode.omega * number_operator(i, space)
    return h.tocsr()


def fock_basis_state(space: TruncatedFock, occupation: Sequence[int]) -> np.ndarray:
    v = np.zeros(space.dim, dtype=complex)
    v[space.index(occupation)] = 1.0
    return v


def create_string(space: TruncatedFock, modes: Sequence[int]) -> np.ndarray:
    """a^dag_{m_1} ... a^dag_{m_N} |0> (unnormalized)."""
    v = fock_basis_state(space, [0] * space.n_modes)
    for i in reversed(list(modes)):
        v = ladder(i, "create", space) @ v
    return v


# exact arithmetic for the commutator check -------------------------------------

def _exact_ladder(space: TruncatedFock, i: int, kind: str) -> dict:
    out = {}
    base = space.cutoff + 1
    for col, occ in enumerate(space.occupations):
        n = occ[i]
        if kind == "annihilate" and n > 0:
            out[(col - base ** (space.n_modes - i - 1), col)] = sympy.sqrt(sympy.Integer(n))
        elif kind == "create" and n < space.cutoff:
            out[(col + base ** (space.n_modes - i - 1), col)] = sympy.sqrt(sympy.Integer(n + 1))
    return out


def _exact_mul(a: dict, b: dict) -> dict:
    rows_of_a = {}
    for (r, c), v in a.items():
        rows_of_a.setdefault(c, []).append((r, v))
    out: dict = {}
    for (r, c), v in b.items():
        for r2, v2 in rows_of_a.get(r, ()):
            out[(r2, c)] = out.get((r2, c), 0) + v2 * v
    return out


def _exact_commutator(a: dict, b: dict) -> dict:
    out = dict(_exact_mul(a, b))
    for key, v in _exact_mul(b, a).items():
        out[key] = out.get(key, 0) - v
    return out


def _max_abs(entries) -> tuple[float, bool]:
    worst, exact_zero = 0.0, True
    for v in entries:
        # sums of integer square roots are put in canonical form by sympy on construction
        if v != 0:
            exact_zero = False
            worst = max(worst, abs(float(v)))
    return worst, exact_zero


@dataclass(frozen=True)
class CCRReport:
    n_modes: int
    cutoff: int
    max_aa: float  # max |[a_i, a_j]|
    max_adag_adag: float  # max |[a_i^dag, a_j^dag]|
    max_below_cutoff: float  # max |[a_i, a_j^dag] - delta_ij| on n_i < cutoff
    full_space_deviation: float  # same, on the whole truncated space
    boundary_anomaly: float  # |[a_i, a_i^dag]| on the n_i = cutoff slice
    boundary_matches_truncation: bool  # anomaly equals -cutoff * projector exactly
    exact_below_cutoff: bool

    def as_dict(self) -> dict:
        return asdict(self)


def ccr_check(space: TruncatedFock) -> CCRReport:
    """Commutation relations of the truncated ladder operators, in exact arithmetic."""
    ann = [_exact_ladder(space, i, "annihilate") for i in range(space.n_modes)]
    cre = [_exact_ladder(space, i, "create") for i in range(space.n_modes)]
    occs = space.occupations
    aa, adad, below, full, anomaly = [], [], [], [], []
    boundary_ok = True
    for i in range(space.n_modes):
        for j in range(space.n_modes):
            aa.extend(_exact_commutator(ann[i], ann[j]).values())
            adad.extend(_exact_commutator(cre[i], cre[j]).values())
            comm = _exact_commutator(ann[i], cre[j])
            if i == j:
                for col in range(space.dim):
                    comm[(col, col)] = comm.get((col, col), 0) - 1
            for (r, c), v in comm.items():
                full.append(v)
                if occs[c][i] < space.cutoff:
                    below.append(v)
                elif i == j:
                    raw = v + (1 if r == c else 0)
                    anomaly.append(raw)
                    want = -space.cutoff if r == c else 0
                    if raw - want != 0:
                        boundary_ok = False
                else:
                    below.append(v)
    max_aa, _ = _max_abs(aa)
    max_adad, _ = _max_abs(adad)
    max_below, exact = _max_abs(below)
    max_full, _ = _max_abs(full)
    max_anom, _ = _max_abs(anomaly)
    return CCRReport(space.n_modes, space.cutoff, max_aa, max_adad, max_below, max_full,
                     max_anom, boundary_ok, exact and max_aa == 0 and max_adad == 0)


# bridge to multi-layer states -------------------------------------------------

def to_multilayer(space: TruncatedFock, state: np.ndarray, n: int) -> MultiLayerState:
    """N-particle part of a Fock vector as a symmetric multi-layer state.

    Occupations are first written over ordered tuples of plane waves (the
    symmetric first-quantized form of ``|n_1, ..., n_M>``), then carried to
    the site basis by the plane-wave unitary in every slot.
    """
    lat = space.lattice
    state = np.asarray(state, dtype=complex)
    if state.shape != (space.dim,):
        raise ValueError(f"state must have {space.dim} entries")
    if n == 0:
        amp = state[space.index([0] * space.n_modes)]
        sec = SectorDescriptor(lat, ())
        return MultiLayerState(sec, {(): complex(amp)} if amp != 0 else {})
    if lat.site_count ** n > STATE_BUDGET:
        raise ValueError(f"{n}-particle sector on {lat.site_count} sites exceeds budget {STATE_BUDGET}")
    sec = SectorDescriptor(lat, (space.particle,) * n, "symmetric")
    weight = lat.cell_volume ** (-n / 2)
    terms: dict = {}
    for flat, occ in enumerate(space.occupations):
        c = state[flat]
        if sum(occ) != n or c == 0:
            continue
        cols = [space.modes[i].column for i, k in enumerate(occ) for _ in range(k)]
        coef = c * math.sqrt(math.prod(math.factorial(k) for k in occ) / math.factorial(n)) * weight
        for order in set(itertools.permutations(cols)):
            key = tuple((q, 0) for q in order)
            terms[key] = terms.get(key, 0j) + coef
    pw = MultiLayerState(sec, terms)
    return change_basis(pw, plane_wave_unitary(lat))


def to_fock_state(space: TruncatedFock, state: np.ndarray) -> FockState:
    vac = complex(np.asarray(state)[space.index([0] * space.n_modes)])
    top = space.n_modes * space.cutoff
    sectors = {}
    totals = np.array([sum(o) for o in space.occupations])
    for n in range(1, top + 1):
        if not np.any(np.asarray(state)[totals == n]):
            continue
        m = to_multilayer(space, state, n)
        if m.terms:
            sectors[n] = m
    return FockState(vac, sectors)


def field_operator_at(space: TruncatedFock, s: int, t: float = 0.0) -> sp.csr_matrix:
    """Hermitian field operator at site ``s`` and time ``t`` (finite mode sum)."""
    lat = space.lattice
    x = np.asarray(position(lat, s))
    part = sp.csr_matrix((space.dim, space.dim), dtype=complex)
    for i, mode in enumerate(space.modes):
        if mode.omega == 0:
            raise ValueError("a zero-frequency mode has no field-operator normalization; use mass > 0")
        pref = 1.0 / math.sqrt(2 * mode.omega * lat.site_count)
        phase = np.exp(-1j * mode.omega * t + 1j * float(np.dot(mode.k, x)))
        part = part + (pref * phase) * ladder(i, "annihilate", space)
    return (part + part.conj().T).tocsr()
