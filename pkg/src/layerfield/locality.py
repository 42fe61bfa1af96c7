"""Restriction of layered fields to regions of the lattice and exact regluing.

Restricting bare gauge classes would lose information, since the pieces could
each be rescaled independently.  Here every restriction stores the values
of the *canonical* factors together with the layer amplitude and a tag
naming the canonical-form convention, so the pieces agree on a gauge and
can be put back together site by site.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .lattice import Lattice3D
from .layers import GAUGE_TAG, Layer, layers_equal, make_layer, zero_layer
from .onebody import OneParticleField, ParticleSpec


class GaugeMismatch(ValueError):
    pass


class PartitionError(ValueError):
    pass


class AmplitudeConflict(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class LayerRecord:
    layer_id: int
    amplitude: complex
    values: tuple[np.ndarray, ...]  # per factor, shape (len(region), internal_dim)


@dataclass(frozen=True, eq=False)
class Restriction:
    lattice: Lattice3D
    specs: tuple[ParticleSpec, ...]
    region: tuple[int, ...]  # sorted site list
    records: tuple[LayerRecord, ...]
    gauge_tag: str = GAUGE_TAG


def restrict(layers: Sequence[Layer], region, layer_ids: Sequence[int] | None = None) -> Restriction:
    layers = list(layers)
    if not layers:
        raise ValueError("nothing to restrict")
    lat = layers[0].lattice
    specs = layers[0].specs
    if lat is None:
        raise ValueError("the vacuum layer has no spatial extent to restrict")
    for layer in layers:
        if layer.lattice != lat or layer.specs != specs:
            raise ValueError("all layers must share one lattice and sector")
    sites = tuple(sorted({lat.check_site(s) for s in region}))
    ids = list(range(len(layers))) if layer_ids is None else [int(i) for i in layer_ids]
    if len(set(ids)) != len(ids) or len(ids) != len(layers):
        raise ValueError("layer identifiers must be unique, one per layer")
    idx = np.asarray(sites, dtype=int)
    records = tuple(
        LayerRecord(i, layer.amplitude, tuple(f.values[idx].copy() for f in layer.factors))
        for i, layer in zip(ids, layers)
    )
    return Restriction(lat, specs, sites, records)


def glue(parts: Sequence[Restriction], amp_tol: float = 1e-12) -> list[Layer]:
    """Rebuild full layers from restrictions over a partition of the lattice."""
    parts = list(parts)
    if not parts:
        raise PartitionError("no parts to glue")
    first = parts[0]
    lat, specs = first.lattice, first.specs
    for p in parts:
        if p.gauge_tag != first.gauge_tag:
            raise GaugeMismatch(f"gauge tags differ: {first.gauge_tag!r} vs {p.gauge_tag!r}")
        if p.lattice != lat or p.specs != specs:
            raise PartitionError("parts describe different lattices or sectors")

    owner = np.full(lat.site_count, -1)
    for n, p in enumerate(parts):
        for s in p.region:
            if owner[s] != -1:
                raise PartitionError(f"site {s} appears in more than one part")
            owner[s] = n
    if np.any(owner == -1):
        raise PartitionError(f"sites not covered: {np.nonzero(owner == -1)[0].tolist()}")

    by_id = [{r.layer_id: r for r in p.records} for p in parts]
    ids = sorted(by_id[0])
    for table in by_id[1:]:
        if sorted(table) != ids:
            raise PartitionError("parts carry different layer identifiers")

    out = []
    for i in ids:
        amp = by_id[0][i].amplitude
        for table in by_id[1:]:
            other = table[i].amplitude
            if abs(other - amp) > amp_tol * max(1.0, abs(amp)):
                raise AmplitudeConflict(f"layer {i}: amplitudes {amp} and {other} disagree")
        vals = [np.zeros((lat.site_count, s.internal_dim), dtype=complex) for s in specs]
        for p, table in zip(parts, by_id):
            idx = np.asarray(p.region, dtype=int)
            for j, v in enumerate(table[i].values):
                vals[j][idx] = v
        factors = tuple(OneParticleField(lat, s, v) for s, v in zip(specs, vals))
        if amp == 0:
            layer = zero_layer(lat, specs)
        else:
            layer = Layer(lat, complex(amp), factors)
            check = make_layer(factors)
            if not (abs(check.amplitude - 1) <= 1e-10 and layers_equal(Layer(lat, 1, factors), check)):
                raise GaugeMismatch(f"layer {i}: glued factors are not in canonical form")
        out.append(layer)
    return out
