"""Spin singlet of two separated particles and its measurement statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .lattice import Lattice3D
from .layers import make_layer
from .multilayer import MultiLayerState, expand_layer, layer_count, ml_add, ml_inner
from .onebody import OneParticleField, ParticleSpec
from .operators import apply_op, lift_onebody, measure_project, pauli, rho_op
from .sectors import SectorDescriptor

SPIN_A = ParticleSpec("A", internal_dim=2)
SPIN_B = ParticleSpec("B", internal_dim=2)


def gaussian_packet(lat: Lattice3D, center, width: float, momentum=(0.0, 0.0, 0.0)) -> np.ndarray:
    """Unit-norm (h^3-weighted) Gaussian on the lattice, minimal-image distances."""
    c = lat.coord_table * lat.spacing
    n = np.asarray(lat.dims) * lat.spacing
    d = c - np.asarray(center, dtype=float)
    d = d - n * np.round(d / n)
    psi = np.exp(-np.sum(d**2, axis=1) / (2 * width**2) + 1j * d @ np.asarray(momentum, dtype=float))
    return psi / math.sqrt(np.sum(np.abs(psi) ** 2) * lat.cell_volume)


def spin_field(lat: Lattice3D, spec: ParticleSpec, spatial: np.ndarray, spin: int) -> OneParticleField:
    """Spatial profile times spin-up (spin=0) or spin-down (spin=1)."""
    v = np.zeros((lat.site_count, 2), dtype=complex)
    v[:, spin] = spatial
    return OneParticleField(lat, spec, v)


def singlet(lat: Lattice3D | None = None, sep: float | None = None) -> MultiLayerState:
    """psi_A^+ [x] psi_B^- minus psi_A^- [x] psi_B^+, packets on opposite sides of the lattice."""
    lat = lat or Lattice3D((8, 1, 1))
    length = lat.dims[0] * lat.spacing
    sep = length / 2 if sep is None else sep
    width = 0.6 * lat.spacing
    pa = gaussian_packet(lat, (length / 4, 0, 0), width)
    pb = gaussian_packet(lat, (length / 4 + sep, 0, 0), width)
    up_down = expand_layer(make_layer([spin_field(lat, SPIN_A, pa, 0), spin_field(lat, SPIN_B, pb, 1)]))
    down_up = expand_layer(make_layer([spin_field(lat, SPIN_A, pa, 1), spin_field(lat, SPIN_B, pb, 0)]))
    return ml_add(1, up_down, -1, down_up)


def axis_in_xz(theta: float) -> np.ndarray:
    return np.array([math.sin(theta), 0.0, math.cos(theta)])


def _spin_projector(lat: Lattice3D, axis, sign: int) -> sp.csr_matrix:
    p = (np.eye(2) + sign * pauli(axis)) / 2
    return sp.kron(sp.identity(lat.site_count), p, format="csr")


@dataclass(frozen=True)
class CorrelationRow:
    theta: float
    E: float
    p_pp: float
    p_pm: float
    p_mp: float
    p_mm: float
    post_layers: tuple[int, int, int, int]


def correlation(m: MultiLayerState, axis_a, axis_b, theta: float = float("nan")) -> CorrelationRow:
    """Joint spin statistics from the product projectors, plus E from the joint observable."""
    sec = m.sector
    lat = sec.lattice
    norm2 = ml_inner(m, m).real
    probs, layers = {}, []
    for s in (1, -1):
        pa = lift_onebody(_spin_projector(lat, axis_a, s), 0, sec)
        after_a = apply_op(pa, m)
        for t in (1, -1):
            pb = lift_onebody(_spin_projector(lat, axis_b, t), 1, sec)
            post = apply_op(pb, after_a)
            p = ml_inner(post, post).real / norm2
            probs[(s, t)] = p
            layers.append(layer_count(post) if p > 1e-14 else 0)

    dense = sp.kron(_sigma_slot(lat, axis_a), _sigma_slot(lat, axis_b), format="csr")
    outcomes = measure_project(m, rho_op(dense, sec))
    e = sum(o.eigenvalue * o.probability for o in outcomes)
    return CorrelationRow(theta, float(e), probs[(1, 1)], probs[(1, -1)], probs[(-1, 1)], probs[(-1, -1)], tuple(layers))


def _sigma_slot(lat: Lattice3D, axis) -> sp.csr_matrix:
    return sp.kron(sp.identity(lat.site_count), pauli(axis), format="csr")


def epr_table(thetas, m: MultiLayerState | None = None) -> list[CorrelationRow]:
    """Alice measures along z, Bob along an axis at angle theta in the x-z plane."""
    m = singlet() if m is None else m
    return [correlation(m, axis_in_xz(0.0), axis_in_xz(th), th) for th in thetas]


def singlet_sector(lat: Lattice3D) -> SectorDescriptor:
    return SectorDescriptor(lat, (SPIN_A, SPIN_B))
