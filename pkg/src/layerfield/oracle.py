"""Brute-force dense tensor-product reference implementation.

Everything here is deliberately naive: states are full ``numpy`` arrays with
one axis per particle, operators are dense matrices on the flattened space.
It is only meant for desk-scale problems and refuses anything larger than
``DEFAULT_CAP`` amplitudes.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .sectors import SectorDescriptor
from .onebody import OneParticleField

DEFAULT_CAP = 65536


class OracleTooLarge(ValueError):
    pass


def _check_cap(dim: int, cap: int):
    if dim > cap:
        raise OracleTooLarge(f"dense dimension {dim} exceeds oracle cap {cap}")


@dataclass(frozen=True, eq=False)
class DenseTensorState:
    sector: SectorDescriptor
    coeffs: np.ndarray

    def __post_init__(self):
        _check_cap(self.sector.dim, DEFAULT_CAP)
        arr = np.array(self.coeffs, dtype=complex).reshape(self.sector.slot_dims)
        object.__setattr__(self, "coeffs", arr)

    @property
    def vector(self) -> np.ndarray:
        return self.coeffs.ravel()


def dense_zero(sector: SectorDescriptor) -> DenseTensorState:
    return DenseTensorState(sector, np.zeros(sector.slot_dims, dtype=complex))


def dense_outer(fields: Sequence[OneParticleField], cap: int = DEFAULT_CAP) -> DenseTensorState:
    sector = SectorDescriptor(fields[0].lattice, tuple(f.spec for f in fields))
    _check_cap(sector.dim, cap)
    arr = np.ones((), dtype=complex)
    for f in fields:
        arr = np.multiply.outer(arr, f.flat)
    return DenseTensorState(sector, arr)


def dense_inner(a: DenseTensorState, b: DenseTensorState) -> complex:
    if not a.sector.same_space(b.sector):
        raise ValueError("dense states in different sectors")
    return complex(np.vdot(a.coeffs, b.coeffs) * a.sector.weight)


def dense_apply(op: np.ndarray, t: DenseTensorState) -> DenseTensorState:
    op = np.asarray(op)
    if op.shape != (t.sector.dim, t.sector.dim):
        raise ValueError(f"operator shape {op.shape} does not match dimension {t.sector.dim}")
    return DenseTensorState(t.sector.untagged(), op @ t.vector)


def dense_propagator(hamiltonian: np.ndarray, time: float, hbar: float = 1.0, herm_tol: float = 1e-12) -> np.ndarray:
    """exp(-i H t / hbar) from a full Hermitian eigendecomposition."""
    h = np.asarray(hamiltonian, dtype=complex)
    scale = max(1.0, np.max(np.abs(h), initial=0.0))
    if np.max(np.abs(h - h.conj().T), initial=0.0) > herm_tol * scale:
        raise ValueError("dense_expm_evolve needs a Hermitian matrix")
    _check_cap(h.shape[0], DEFAULT_CAP)
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w * time / hbar)) @ v.conj().T


def dense_expm_evolve(t: DenseTensorState, hamiltonian: np.ndarray, time: float, hbar: float = 1.0) -> DenseTensorState:
    return DenseTensorState(t.sector, dense_propagator(hamiltonian, time, hbar) @ t.vector)


def dense_symmetrize(t: DenseTensorState, sign: int = 1) -> DenseTensorState:
    n = t.sector.n_particles
    out = np.zeros_like(t.coeffs)
    for perm in itertools.permutations(range(n)):
        w = 1
        if sign < 0:
            # parity by inversion count
            w = (-1) ** sum(1 for i in range(n) for j in range(i + 1, n) if perm[i] > perm[j])
        out += w * np.transpose(t.coeffs, perm)
    tag = "symmetric" if sign > 0 else "antisymmetric"
    return DenseTensorState(t.sector.with_symmetry(tag), out / math.factorial(n))
