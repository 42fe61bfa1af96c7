"""Separable states as gauge classes of one-particle field tuples.

A tuple ``(f_1, ..., f_N)`` and ``(c_1 f_1, ..., c_N f_N)`` with
``c_1 * ... * c_N == 1`` describe the same product state.  Each class is stored
through one deterministic representative: every factor has unit norm and a
real positive first significant entry, and the leftover scalar sits in
``Layer.amplitude``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .lattice import Lattice3D
from .onebody import OneParticleField, ParticleSpec, zero_field

# Version string of the canonical-form convention; restrictions carry it.
GAUGE_TAG = "unitnorm-posfirst-sitemajor/v1"

LEADING_CUTOFF = 1e-14
_EPS = float(np.finfo(float).eps)
DEFAULT_ATOL = 1e-10
DEFAULT_RTOL = 1e-10


class NotCollinear(ValueError):
    """Two layers with different canonical factors cannot be added as layers."""


@dataclass(frozen=True)
class GaugeElement:
    scalars: tuple[complex, ...]

    def __post_init__(self):
        c = tuple(complex(x) for x in self.scalars)
        if any(x == 0 for x in c):
            raise ValueError("gauge scalars must be nonzero")
        if c and abs(math.prod(c) - 1) > 1e-12:
            raise ValueError(f"gauge scalars must multiply to 1, got {math.prod(c)}")
        object.__setattr__(self, "scalars", c)

    @classmethod
    def from_free(cls, free: Sequence[complex]) -> GaugeElement:
        """Build ``(c_1, ..., c_{N-1}, 1/prod)`` from ``N - 1`` free scalars."""
        free = [complex(x) for x in free]
        if any(x == 0 for x in free):
            raise ValueError("gauge scalars must be nonzero")
        return cls(tuple(free) + (1.0 / math.prod(free),))

    def __mul__(self, other: GaugeElement) -> GaugeElement:
        if len(self.scalars) != len(other.scalars):
            raise ValueError("gauge elements of different length")
        return GaugeElement(tuple(a * b for a, b in zip(self.scalars, other.scalars)))


@dataclass(frozen=True, eq=False)
class Layer:
    """Canonical representative of a product-state class.

    ``lattice`` is ``None`` only for the vacuum layer (no factors).
    """

    lattice: Lattice3D | None
    amplitude: complex
    factors: tuple[OneParticleField, ...]

    @property
    def n_particles(self) -> int:
        return len(self.factors)

    @property
    def specs(self) -> tuple[ParticleSpec, ...]:
        return tuple(f.spec for f in self.factors)

    @property
    def is_zero(self) -> bool:
        return self.amplitude == 0

    def __repr__(self):
        labels = ",".join(s.label for s in self.specs)
        return f"Layer(amplitude={self.amplitude:.6g}, factors=[{labels}])"


def vacuum_layer(amplitude: complex = 1.0) -> Layer:
    return Layer(None, complex(amplitude), ())


def zero_layer(lat: Lattice3D, specs: Sequence[ParticleSpec]) -> Layer:
    return Layer(lat, 0j, tuple(zero_field(lat, s) for s in specs))


def _canonical_factor(f: OneParticleField):
    """Return ``(unit factor, weight)`` with ``f == weight * factor``, or None for f == 0."""
    flat = f.flat
    mod = np.abs(flat)
    top = mod.max(initial=0.0)
    if top == 0:
        return None
    first = int(np.argmax(mod > LEADING_CUTOFF * top))
    phase = flat[first] / mod[first]
    norm = f.norm()
    if flat[first].imag == 0 and flat[first].real > 0 and abs(norm - 1) <= 8 * _EPS:
        return f, 1 + 0j  # already canonical: leave it bit for bit
    unit = flat * (np.conj(phase) / norm)
    unit[first] = mod[first] / norm
    return f.with_values(unit), norm * phase


def make_layer(fields: Sequence[OneParticleField]) -> Layer:
    fields = list(fields)
    if not fields:
        raise ValueError("make_layer needs at least one field; use vacuum_layer() for N = 0")
    lat = fields[0].lattice
    if any(f.lattice != lat for f in fields):
        raise ValueError("all factors must live on the same lattice")
    factors, amp = [], 1 + 0j
    for f in fields:
        canon = _canonical_factor(f)
        if canon is None:
            return zero_layer(lat, [g.spec for g in fields])
        unit, weight = canon
        factors.append(unit)
        amp *= weight
    return Layer(lat, complex(amp), tuple(factors))


def gauge_act(fields: Sequence[OneParticleField], g: GaugeElement) -> list[OneParticleField]:
    fields = list(fields)
    if len(fields) != len(g.scalars):
        raise ValueError(f"{len(fields)} fields but gauge element of length {len(g.scalars)}")
    return [f.with_values(c * f.values) for f, c in zip(fields, g.scalars)]


def _check_same_shape(l1: Layer, l2: Layer):
    if l1.n_particles != l2.n_particles or l1.lattice != l2.lattice:
        raise ValueError("layers belong to different sectors")
    for a, b in zip(l1.factors, l2.factors):
        if a.values.shape != b.values.shape:
            raise ValueError("layers belong to different sectors")


def _factors_close(l1: Layer, l2: Layer, atol: float) -> bool:
    return all(
        np.max(np.abs(a.values - b.values), initial=0.0) <= atol
        for a, b in zip(l1.factors, l2.factors)
    )


def _amps_close(a: complex, b: complex, rtol: float) -> bool:
    return abs(a - b) <= rtol * max(abs(a), abs(b))


def layers_equal(l1: Layer, l2: Layer, tol: float = DEFAULT_ATOL, rtol: float = DEFAULT_RTOL) -> bool:
    _check_same_shape(l1, l2)
    if l1.is_zero or l2.is_zero:
        return l1.is_zero and l2.is_zero
    return _amps_close(l1.amplitude, l2.amplitude, rtol) and _factors_close(l1, l2, tol)


def layer_scale(c: complex, layer: Layer) -> Layer:
    if c == 0:
        if layer.lattice is None:
            return vacuum_layer(0)
        return zero_layer(layer.lattice, layer.specs)
    return Layer(layer.lattice, complex(c) * layer.amplitude, layer.factors)


def collinear_add(l1: Layer, l2: Layer, tol: float = DEFAULT_ATOL) -> Layer:
    _check_same_shape(l1, l2)
    if l1.is_zero:
        return l2
    if l2.is_zero:
        return l1
    if not _factors_close(l1, l2, tol):
        raise NotCollinear("layers have different canonical factors; add them as multi-layer states")
    total = l1.amplitude + l2.amplitude
    if total == 0:
        return layer_scale(0, l1)
    return Layer(l1.lattice, total, l1.factors)


def layer_compose(left: Layer, right: Layer) -> Layer:
    """Box product of two layers: concatenated factors, multiplied amplitudes."""
    if left.lattice is None:
        return layer_scale(left.amplitude, right) if left.amplitude != 1 else right
    if right.lattice is None:
        return layer_scale(right.amplitude, left) if right.amplitude != 1 else left
    if left.lattice != right.lattice:
        raise ValueError("cannot compose layers on different lattices")
    specs = left.specs + right.specs
    amp = left.amplitude * right.amplitude
    if amp == 0:
        return zero_layer(left.lattice, specs)
    # both operands are canonical, so the concatenation is already canonical
    return Layer(left.lattice, amp, left.factors + right.factors)


def layer_values_at(layer: Layer, s: int) -> tuple[complex, list[np.ndarray]]:
    """Amplitude and every factor's internal-state vector at site ``s``."""
    if layer.lattice is None:
        return layer.amplitude, []
    s = layer.lattice.check_site(s)
    return layer.amplitude, [f.values[s].copy() for f in layer.factors]
