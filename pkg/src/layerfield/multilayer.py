"""General N-particle states as sparse combinations of basis layers.

A basis layer is the box product of site-delta fields, one per particle slot,
labelled by a multi-index ``((site_1, k_1), ..., (site_N, k_N))``.  A
:class:`MultiLayerState` stores the coefficient of every basis layer it uses;
the dense tensor-product oracle uses the identical basis, so :func:`rho` and
:func:`rho_inv` are pure transcriptions.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .layers import Layer, make_layer, vacuum_layer
from .onebody import OneParticleField, basis_field
from .oracle import DenseTensorState
from .sectors import MultiIndex, SectorDescriptor

PRUNE_RTOL = 1e-15


@dataclass(frozen=True, eq=False)
class MultiLayerState:
    sector: SectorDescriptor
    terms: Mapping[MultiIndex, complex] = field(default_factory=dict)

    @property
    def n_particles(self) -> int:
        return self.sector.n_particles

    @property
    def lattice(self):
        return self.sector.lattice

    def __len__(self):
        return len(self.terms)

    def coefficient(self, idx) -> complex:
        return self.terms.get(tuple(tuple(p) for p in idx), 0j)

    def to_array(self) -> np.ndarray:
        arr = np.zeros(self.sector.slot_dims, dtype=complex)
        sec = self.sector
        for idx, c in self.terms.items():
            arr[tuple(sec.flat_slot(j, p) for j, p in enumerate(idx))] = c
        return arr

    def to_vector(self) -> np.ndarray:
        return self.to_array().ravel()

    @classmethod
    def from_array(cls, sector: SectorDescriptor, arr, prune: bool = True) -> MultiLayerState:
        arr = np.asarray(arr, dtype=complex).reshape(sector.slot_dims)
        mod = np.abs(arr)
        cut = PRUNE_RTOL * mod.max(initial=0.0) if prune else 0.0
        terms = {}
        for pos in zip(*np.nonzero(mod > cut)):
            idx = tuple(sector.pair_of(j, p) for j, p in enumerate(pos))
            terms[idx] = complex(arr[pos])
        return cls(sector, terms)

    @classmethod
    def from_terms(cls, sector: SectorDescriptor, terms) -> MultiLayerState:
        items = terms.items() if isinstance(terms, Mapping) else terms
        out: dict = {}
        for idx, c in items:
            idx = sector.check_index(idx)
            out[idx] = out.get(idx, 0j) + complex(c)
        return cls(sector, _prune(out))

    def norm(self) -> float:
        return math.sqrt(ml_inner(self, self).real)

    def __repr__(self):
        return f"MultiLayerState(N={self.n_particles}, terms={len(self.terms)}, symmetry={self.sector.symmetry})"


def _prune(terms: dict) -> dict:
    if not terms:
        return {}
    cut = PRUNE_RTOL * max(abs(c) for c in terms.values())
    return {k: v for k, v in terms.items() if abs(v) > cut}


def sector_of(fields: Sequence[OneParticleField]) -> SectorDescriptor:
    return SectorDescriptor(fields[0].lattice, tuple(f.spec for f in fields))


def expand_layer(layer: Layer) -> MultiLayerState:
    """Expand a layer in the site-delta basis: coefficient = amplitude x product of factor entries."""
    if layer.lattice is None:
        sec = SectorDescriptor(None, ())
        return MultiLayerState(sec, {(): layer.amplitude} if layer.amplitude != 0 else {})
    sec = SectorDescriptor(layer.lattice, layer.specs)
    if layer.is_zero:
        return MultiLayerState(sec, {})
    return MultiLayerState.from_array(sec, layer.amplitude * _outer_sorted([f.flat for f in layer.factors]))


def _outer_sorted(vectors: Sequence[np.ndarray]) -> np.ndarray:
    """Outer product whose entries multiply their N factors in sorted order.

    Floating-point products are not associative; sorting the operands makes
    every entry invariant under slot permutations bit for bit, so
    antisymmetrizing a layer with repeated factors cancels exactly.
    """
    n = len(vectors)
    if n == 1:
        return np.array(vectors[0], dtype=complex)
    shape = tuple(len(v) for v in vectors)
    grids = [np.asarray(v, dtype=complex).reshape([-1 if i == j else 1 for i in range(n)]) for j, v in enumerate(vectors)]
    stacked = np.sort(np.stack(np.broadcast_arrays(*grids), axis=-1), axis=-1)
    out = stacked[..., 0].copy()
    for i in range(1, n):
        out *= stacked[..., i]
    return out.reshape(shape)


def basis_layer(sector: SectorDescriptor, idx) -> Layer:
    """The canonical layer of a single basis term with coefficient 1."""
    idx = sector.check_index(idx)
    if not idx:
        return vacuum_layer()
    return make_layer([basis_field(sector.lattice, spec, s, k) for spec, (s, k) in zip(sector.specs, idx)])


def as_basis_layers(m: MultiLayerState) -> list[Layer]:
    """One canonical layer per stored term, in sorted multi-index order."""
    out = []
    for idx in sorted(m.terms):
        b = basis_layer(m.sector, idx)
        out.append(Layer(b.lattice, b.amplitude * m.terms[idx], b.factors))
    return out


def rho(t: DenseTensorState) -> MultiLayerState:
    """Tensor-product state to multi-layer state (same basis, sparse storage)."""
    return MultiLayerState.from_array(t.sector, t.coeffs)


def rho_inv(m: MultiLayerState) -> DenseTensorState:
    return DenseTensorState(m.sector, m.to_array())


def _check_sector(m1: MultiLayerState, m2: MultiLayerState):
    if not m1.sector.same_space(m2.sector):
        raise ValueError("states belong to different sectors")


def ml_add(a: complex, m1: MultiLayerState, b: complex, m2: MultiLayerState) -> MultiLayerState:
    _check_sector(m1, m2)
    out = {k: a * v for k, v in m1.terms.items()}
    for k, v in m2.terms.items():
        out[k] = out.get(k, 0j) + b * v
    sym = m1.sector.symmetry if m1.sector.symmetry == m2.sector.symmetry else "none"
    return MultiLayerState(m1.sector.with_symmetry(sym), _prune({k: v for k, v in out.items() if v != 0}))


def ml_scale(c: complex, m: MultiLayerState) -> MultiLayerState:
    if c == 0:
        return MultiLayerState(m.sector, {})
    return MultiLayerState(m.sector, {k: c * v for k, v in m.terms.items()})


def ml_inner(m1: MultiLayerState, m2: MultiLayerState) -> complex:
    _check_sector(m1, m2)
    small, big = (m1.terms, m2.terms) if len(m1.terms) <= len(m2.terms) else (m2.terms, m1.terms)
    total = 0j
    for k in small:
        if k in big:
            total += m1.terms[k].conjugate() * m2.terms[k]
    return complex(total * m1.sector.weight)


def _parity(perm: Sequence[int]) -> int:
    perm = list(perm)
    sign = 1
    for i in range(len(perm)):
        while perm[i] != i:
            j = perm[i]
            perm[i], perm[j] = perm[j], perm[i]
            sign = -sign
    return sign


def _sign_of(sign) -> int:
    if sign in (1, "+", "symmetric", "boson"):
        return 1
    if sign in (-1, "-", "antisymmetric", "fermion"):
        return -1
    raise ValueError(f"unknown symmetrization sign {sign!r}")


def symmetrize(m: MultiLayerState, sign=1) -> MultiLayerState:
    """(Anti)symmetrizing projector over permutations of identical particle slots."""
    sgn = _sign_of(sign)
    if len(set(m.sector.specs)) > 1:
        raise ValueError("symmetrize needs all particle slots to share one ParticleSpec")
    n = m.n_particles
    tag = "symmetric" if sgn == 1 else "antisymmetric"
    perms = [(p, _parity(p) if sgn == -1 else 1) for p in itertools.permutations(range(n))]
    inv = 1.0 / math.factorial(n)
    parts: dict = {}
    for idx, c in m.terms.items():
        for p, w in perms:
            key = tuple(idx[p[i]] for i in range(n))
            parts.setdefault(key, []).append(w * c)
    # correctly rounded sums, so equal contributions of opposite sign cancel exactly
    out = {k: inv * complex(math.fsum(z.real for z in v), math.fsum(z.imag for z in v)) for k, v in parts.items()}
    out = {k: v for k, v in out.items() if v != 0}
    if sgn == -1:
        out = {k: v for k, v in out.items() if len(set(k)) == n}
    return MultiLayerState(m.sector.with_symmetry(tag), _prune(out))


def symmetry_violation(m: MultiLayerState) -> float:
    """Largest |c_{pi(idx)} - sign(pi) c_idx| over stored terms, for tagged sectors."""
    tag = m.sector.symmetry
    if tag == "none":
        return 0.0
    n = m.n_particles
    worst = 0.0
    for idx, c in m.terms.items():
        if tag == "antisymmetric" and len(set(idx)) < n:
            worst = max(worst, abs(c))
        for p in itertools.permutations(range(n)):
            w = _parity(p) if tag == "antisymmetric" else 1
            key = tuple(idx[p[i]] for i in range(n))
            worst = max(worst, abs(m.terms.get(key, 0j) - w * c))
    return worst


def change_basis(m: MultiLayerState, unitaries) -> MultiLayerState:
    """Transform coefficients by U_1 (x) ... (x) U_N.

    ``unitaries`` is either one matrix used for every slot or one per slot.
    """
    n = m.n_particles
    if isinstance(unitaries, np.ndarray) or not isinstance(unitaries, Sequence):
        mats = [np.asarray(unitaries)] * n
    else:
        mats = [np.asarray(u) for u in unitaries]
    if len(mats) != n:
        raise ValueError(f"need {n} slot matrices, got {len(mats)}")
    arr = m.to_array()
    for j, (u, d) in enumerate(zip(mats, m.sector.slot_dims)):
        if u.ndim != 2 or u.shape[0] != u.shape[1]:
            raise ValueError(f"slot {j} matrix is not square: {u.shape}")
        if u.shape[0] != d:
            raise ValueError(f"slot {j} matrix has size {u.shape[0]}, slot dimension is {d}")
        arr = np.moveaxis(np.tensordot(u, arr, axes=([1], [j])), 0, j)
    same = all(np.array_equal(mats[0], u) for u in mats[1:])
    sec = m.sector if same else m.sector.untagged()
    return MultiLayerState.from_array(sec, arr)


def schmidt_layers(m: MultiLayerState, tol: float = 1e-12) -> list[Layer]:
    """Minimal decomposition of a two-particle state into product layers (SVD)."""
    if m.n_particles != 2:
        raise ValueError("schmidt_layers is defined for two-particle sectors")
    sec = m.sector
    d1, d2 = sec.slot_dims
    u, s, vh = np.linalg.svd(m.to_array().reshape(d1, d2))
    keep = s > tol * max(s.max(initial=0.0), 1e-300)
    layers = []
    for i in np.nonzero(keep)[0]:
        f1 = OneParticleField(sec.lattice, sec.specs[0], u[:, i] * s[i])
        f2 = OneParticleField(sec.lattice, sec.specs[1], vh[i])
        layers.append(make_layer([f1, f2]))
    return layers


def layer_count(m: MultiLayerState, tol: float = 1e-12) -> int:
    """Number of product layers needed for a two-particle state (its Schmidt rank)."""
    return len(schmidt_layers(m, tol))


@dataclass(frozen=True, eq=False)
class FockState:
    """Direct sum of a vacuum amplitude and fixed-N sectors."""

    vacuum: complex = 0j
    sectors: Mapping[int, MultiLayerState] = field(default_factory=dict)

    def norm(self) -> float:
        return math.sqrt(fock_inner(self, self).real)


def fock_assemble(components: Mapping[int, MultiLayerState] | Sequence[MultiLayerState], vac_amp: complex = 0j) -> FockState:
    if not isinstance(components, Mapping):
        components = {c.n_particles: c for c in components}
    out = {}
    for n, m in components.items():
        if n != m.n_particles:
            raise ValueError(f"component keyed {n} has {m.n_particles} particles")
        if n == 0:
            raise ValueError("pass the vacuum component as vac_amp")
        stats = {s.statistics for s in m.sector.specs}
        if len(stats) != 1 or "distinguishable" in stats:
            raise ValueError("Fock components need identical bosons or fermions")
        want = "symmetric" if stats == {"boson"} else "antisymmetric"
        if n >= 2 and m.sector.symmetry != want:
            raise ValueError(f"{n}-particle component must be tagged {want}, got {m.sector.symmetry}")
        out[n] = m
    return FockState(complex(vac_amp), out)


def fock_inner(a: FockState, b: FockState) -> complex:
    total = a.vacuum.conjugate() * b.vacuum
    for n, m in a.sectors.items():
        if n in b.sectors:
            total += ml_inner(m, b.sectors[n])
    return complex(total)
