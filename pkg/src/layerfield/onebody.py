"""One-particle state spaces: complex fields over lattice sites x internal states."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .lattice import Lattice3D

STATISTICS = ("distinguishable", "boson", "fermion")


@dataclass(frozen=True)
class ParticleSpec:
    label: str
    internal_dim: int = 1
    statistics: str = "distinguishable"
    mass: float = 1.0

    def __post_init__(self):
        if int(self.internal_dim) < 1:
            raise ValueError("internal_dim must be >= 1")
        if self.statistics not in STATISTICS:
            raise ValueError(f"statistics must be one of {STATISTICS}")
        if not self.mass > 0:
            raise ValueError("mass must be positive")
        object.__setattr__(self, "internal_dim", int(self.internal_dim))
        object.__setattr__(self, "mass", float(self.mass))


@dataclass(frozen=True, eq=False)
class OneParticleField:
    """Amplitudes of one particle, shape ``(site_count, internal_dim)``.

    Flattening with ``ravel()`` gives the canonical site-major, internal-minor
    ordering used everywhere else.
    """

    lattice: Lattice3D
    spec: ParticleSpec
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=complex)
        shape = (self.lattice.site_count, self.spec.internal_dim)
        if v.size != shape[0] * shape[1]:
            raise ValueError(f"expected {shape[0] * shape[1]} amplitudes, got {v.size}")
        v = v.reshape(shape)
        if not np.all(np.isfinite(v)):
            raise ValueError("field amplitudes must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def dim(self) -> int:
        return self.values.size

    @property
    def flat(self) -> np.ndarray:
        return self.values.ravel()

    def with_values(self, values) -> OneParticleField:
        return OneParticleField(self.lattice, self.spec, values)

    def norm(self) -> float:
        return float(np.sqrt(inner_product(self, self).real))

    def __repr__(self):
        return f"OneParticleField({self.spec.label!r}, dim={self.dim})"


def zero_field(lat: Lattice3D, spec: ParticleSpec) -> OneParticleField:
    return OneParticleField(lat, spec, np.zeros((lat.site_count, spec.internal_dim)))


def basis_field(lat: Lattice3D, spec: ParticleSpec, site: int, k: int = 0) -> OneParticleField:
    """Lattice delta at ``site`` in internal state ``k``."""
    site = lat.check_site(site)
    if not 0 <= k < spec.internal_dim:
        raise IndexError(f"internal index {k} out of range [0, {spec.internal_dim})")
    v = np.zeros((lat.site_count, spec.internal_dim), dtype=complex)
    v[site, k] = 1.0
    return OneParticleField(lat, spec, v)


def _check_compatible(f: OneParticleField, g: OneParticleField):
    if f.lattice != g.lattice or f.values.shape != g.values.shape:
        raise ValueError("fields live on different lattices or internal spaces")


def inner_product(f: OneParticleField, g: OneParticleField) -> complex:
    """Volume-weighted scalar product: sum of conj(f) g times h^3."""
    _check_compatible(f, g)
    return complex(np.vdot(f.values, g.values) * f.lattice.cell_volume)


def scale_add(a: complex, f: OneParticleField, b: complex, g: OneParticleField) -> OneParticleField:
    _check_compatible(f, g)
    return f.with_values(a * f.values + b * g.values)


def apply_onebody_kinetic(f: OneParticleField, mass: float | None = None, hbar: float = 1.0) -> OneParticleField:
    """-(hbar^2 / 2m) Laplacian, applied to each internal component separately."""
    m = f.spec.mass if mass is None else mass
    lap = f.lattice.laplacian_matrix @ f.values
    return f.with_values(-(hbar**2) / (2.0 * m) * lap)


def kinetic_matrix(lat: Lattice3D, spec: ParticleSpec, hbar: float = 1.0):
    """Sparse matrix of the one-body kinetic operator on the flat one-particle space."""
    lap = sp.kron(lat.laplacian_matrix, sp.identity(spec.internal_dim), format="csr")
    return (-(hbar**2) / (2.0 * spec.mass)) * lap
