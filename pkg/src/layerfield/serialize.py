"""JSON records for fields, layers, states and restrictions.

Complex numbers are stored as ``[re, im]`` pairs, field values as flat lists
in site-major, internal-minor order.  Keys are sorted and floats use the
shortest round-trip repr, so equal objects serialize to identical bytes.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .lattice import Lattice3D
from .layers import GAUGE_TAG, Layer, vacuum_layer, zero_layer
from .locality import LayerRecord, Restriction
from .multilayer import MultiLayerState
from .onebody import OneParticleField, ParticleSpec
from .sectors import SectorDescriptor


def _c(z) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def _z(pair) -> complex:
    re, im = pair
    return complex(float(re), float(im))


def _pairs(values: np.ndarray) -> list[list[float]]:
    flat = np.asarray(values, dtype=complex).ravel()
    return [[float(v.real), float(v.imag)] for v in flat]


def _from_pairs(pairs, shape) -> np.ndarray:
    arr = np.array([_z(p) for p in pairs], dtype=complex)
    if arr.size != int(np.prod(shape)):
        raise ValueError(f"expected {int(np.prod(shape))} (re, im) pairs, got {arr.size}")
    return arr.reshape(shape)


def lattice_record(lat: Lattice3D) -> dict:
    return {"dims": list(lat.dims), "spacing": lat.spacing}


def lattice_from(rec: dict) -> Lattice3D:
    return Lattice3D(tuple(int(n) for n in rec["dims"]), float(rec.get("spacing", 1.0)))


def spec_record(spec: ParticleSpec) -> dict:
    return {"label": spec.label, "internal_dim": spec.internal_dim,
            "statistics": spec.statistics, "mass": spec.mass}


def spec_from(rec: dict) -> ParticleSpec:
    return ParticleSpec(str(rec["label"]), int(rec.get("internal_dim", 1)),
                        str(rec.get("statistics", "distinguishable")), float(rec.get("mass", 1.0)))


def field_record(f: OneParticleField) -> dict:
    return {"spec": spec_record(f.spec), "values": _pairs(f.values)}


def field_from(rec: dict, lat: Lattice3D) -> OneParticleField:
    spec = spec_from(rec["spec"])
    return OneParticleField(lat, spec, _from_pairs(rec["values"], (lat.site_count, spec.internal_dim)))


def layer_record(layer: Layer) -> dict:
    rec = {"amplitude": _c(layer.amplitude), "factors": [field_record(f) for f in layer.factors]}
    if layer.lattice is not None:
        rec["lattice"] = lattice_record(layer.lattice)
    return rec


def layer_from(rec: dict) -> Layer:
    if "lattice" not in rec:
        return vacuum_layer(_z(rec["amplitude"]))
    lat = lattice_from(rec["lattice"])
    amp = _z(rec["amplitude"])
    if amp == 0:
        return zero_layer(lat, tuple(spec_from(f["spec"]) for f in rec["factors"]))
    return Layer(lat, amp, tuple(field_from(f, lat) for f in rec["factors"]))


def sector_record(sec: SectorDescriptor) -> dict:
    return {"lattice": lattice_record(sec.lattice), "particles": [spec_record(s) for s in sec.specs],
            "symmetry": sec.symmetry}


def sector_from(rec: dict) -> SectorDescriptor:
    return SectorDescriptor(lattice_from(rec["lattice"]), tuple(spec_from(s) for s in rec["particles"]),
                            rec.get("symmetry", "none"))


def state_record(m: MultiLayerState) -> dict:
    terms = [[[list(p) for p in idx], c.real, c.imag] for idx, c in sorted(m.terms.items())]
    return {"sector": sector_record(m.sector), "terms": terms}


def state_from(rec: dict) -> MultiLayerState:
    sec = sector_from(rec["sector"])
    terms = {}
    for idx, re, im in rec["terms"]:
        key = sec.check_index(tuple((int(s), int(k)) for s, k in idx))
        if key in terms:
            raise ValueError(f"duplicate term {key}")
        terms[key] = complex(float(re), float(im))
    return MultiLayerState(sec, terms)


def restriction_record(r: Restriction) -> dict:
    records = [{"layer_id": rec.layer_id, "amplitude": _c(rec.amplitude),
                "values": [_pairs(v) for v in rec.values]}
               for rec in sorted(r.records, key=lambda x: x.layer_id)]
    return {"gauge_tag": r.gauge_tag, "lattice": lattice_record(r.lattice),
            "particles": [spec_record(s) for s in r.specs], "region": list(r.region), "layers": records}


def restriction_from(rec: dict) -> Restriction:
    lat = lattice_from(rec["lattice"])
    specs = tuple(spec_from(s) for s in rec["particles"])
    region = tuple(int(s) for s in rec["region"])
    if list(region) != sorted(set(region)):
        raise ValueError("region must be a sorted list of distinct sites")
    records = tuple(
        LayerRecord(int(r["layer_id"]), _z(r["amplitude"]),
                    tuple(_from_pairs(v, (len(region), s.internal_dim)) for v, s in zip(r["values"], specs)))
        for r in rec["layers"]
    )
    return Restriction(lat, specs, region, records, rec.get("gauge_tag", GAUGE_TAG))


def dumps(rec) -> str:
    return json.dumps(rec, sort_keys=True, separators=(",", ":"), allow_nan=False) + "\n"


def save(path, rec) -> None:
    Path(path).write_text(dumps(rec))


def load(path):
    return json.loads(Path(path).read_text())
