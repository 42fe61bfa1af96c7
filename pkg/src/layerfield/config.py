"""Experiment configuration: YAML file <-> frozen dataclasses.

Validation errors name the offending key path and its line in the file.
``to_dict`` gives the normalized form; parsing it again is the identity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .epr import gaussian_packet
from .lattice import Lattice3D
from .layers import make_layer
from .multilayer import MultiLayerState, expand_layer, ml_add
from .onebody import STATISTICS, OneParticleField, ParticleSpec
from .operators import HamiltonianSpec, PairPotential
from .oracle import DEFAULT_CAP
from .sectors import SectorDescriptor

SCHEMES = ("crank_nicolson", "dense_expm")
FORMATS = ("csv", "jsonl")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class LatticeConfig:
    dims: tuple[int, int, int] = (8, 1, 1)
    spacing: float = 1.0

    def build(self) -> Lattice3D:
        return Lattice3D(self.dims, self.spacing)


@dataclass(frozen=True)
class FactorConfig:
    """One factor of an initial layer: a Gaussian packet times an internal vector, or explicit values."""
    kind: str = "gaussian"
    center: tuple[float, float, float] = (0.0, 0.0, 0.0)
    width: float = 1.0
    momentum: tuple[float, float, float] = (0.0, 0.0, 0.0)
    internal: tuple[complex, ...] = ()
    values: tuple[complex, ...] = ()

    def build(self, lat: Lattice3D, spec: ParticleSpec) -> OneParticleField:
        d = spec.internal_dim
        if self.kind == "values":
            return OneParticleField(lat, spec, np.array(self.values, dtype=complex).reshape(lat.site_count, d))
        internal = np.array(self.internal or (1,) + (0,) * (d - 1), dtype=complex)
        packet = gaussian_packet(lat, self.center, self.width, self.momentum)
        return OneParticleField(lat, spec, np.outer(packet, internal))


@dataclass(frozen=True)
class LayerConfig:
    amplitude: complex = 1 + 0j
    factors: tuple[FactorConfig, ...] = ()


@dataclass(frozen=True)
class TermConfig:
    index: tuple[tuple[int, int], ...]
    value: complex = 1 + 0j


@dataclass(frozen=True)
class InitialStateConfig:
    layers: tuple[LayerConfig, ...] = ()
    terms: tuple[TermConfig, ...] = ()


@dataclass(frozen=True)
class HamiltonianConfig:
    form: str = "zero"
    params: dict = field(default_factory=dict)
    external: tuple[tuple[float, ...] | None, ...] | None = None
    pair_count: str = "unordered"
    hbar: float = 1.0
    kinetic: bool = True

    def build(self) -> HamiltonianSpec:
        params = {k: (np.array(v) if isinstance(v, list) else v) for k, v in self.params.items()}
        ext = None if self.external is None else [None if e is None else np.array(e) for e in self.external]
        return HamiltonianSpec(PairPotential(self.form, params), ext, self.pair_count, self.hbar, self.kinetic)


@dataclass(frozen=True)
class EvolutionConfig:
    dt: float = 0.01
    steps: int = 100
    scheme: str = "crank_nicolson"


@dataclass(frozen=True)
class OutputConfig:
    path: str = "evolution.csv"
    format: str = "csv"


@dataclass(frozen=True)
class ExperimentConfig:
    lattice: LatticeConfig = field(default_factory=LatticeConfig)
    particles: tuple[ParticleSpec, ...] = ()
    initial_state: InitialStateConfig = field(default_factory=InitialStateConfig)
    hamiltonian: HamiltonianConfig = field(default_factory=HamiltonianConfig)
    evolution: EvolutionConfig = field(default_factory=EvolutionConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    seed: int = 0

    def sector(self) -> SectorDescriptor:
        return SectorDescriptor(self.lattice.build(), self.particles)

    def initial(self) -> MultiLayerState:
        sec = self.sector()
        lat = sec.lattice
        m = MultiLayerState(sec, {})
        for lc in self.initial_state.layers:
            fields = [fc.build(lat, spec) for fc, spec in zip(lc.factors, self.particles)]
            m = ml_add(1, m, lc.amplitude, expand_layer(make_layer(fields)))
        if self.initial_state.terms:
            extra = {}
            for t in self.initial_state.terms:
                extra[t.index] = extra.get(t.index, 0j) + t.value
            m = ml_add(1, m, 1, MultiLayerState(sec, extra))
        return m

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "lattice": {"dims": list(self.lattice.dims), "spacing": self.lattice.spacing},
            "particles": [{"label": p.label, "internal_dim": p.internal_dim, "statistics": p.statistics,
                           "mass": p.mass} for p in self.particles],
            "initial_state": {
                "layers": [{"amplitude": _pair(lc.amplitude), "factors": [_factor_dict(f) for f in lc.factors]}
                           for lc in self.initial_state.layers],
                "terms": [{"index": [list(p) for p in t.index], "value": _pair(t.value)}
                          for t in self.initial_state.terms],
            },
            "hamiltonian": {
                "potential": {"form": self.hamiltonian.form, "params": dict(self.hamiltonian.params)},
                "external": None if self.hamiltonian.external is None
                else [None if e is None else list(e) for e in self.hamiltonian.external],
                "pair_count": self.hamiltonian.pair_count,
                "hbar": self.hamiltonian.hbar,
                "kinetic": self.hamiltonian.kinetic,
            },
            "evolution": {"dt": self.evolution.dt, "steps": self.evolution.steps, "scheme": self.evolution.scheme},
            "output": {"path": self.output.path, "format": self.output.format},
        }

    def dumps(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=True, default_flow_style=None)


def _pair(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def _factor_dict(f: FactorConfig) -> dict:
    if f.kind == "values":
        return {"values": [_pair(v) for v in f.values]}
    g = {"center": list(f.center), "width": f.width, "momentum": list(f.momentum)}
    if f.internal:
        g["internal"] = [_pair(v) for v in f.internal]
    return {"gaussian": g}


# parsing ------------------------------------------------------------------------

def _line_table(node, path=(), out=None) -> dict:
    out = {} if out is None else out
    out[path] = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            out[path + (k.value,)] = k.start_mark.line + 1
            _line_table(v, path + (k.value,), out)
    elif isinstance(node, yaml.SequenceNode):
        for i, v in enumerate(node.value):
            _line_table(v, path + (i,), out)
    return out


class _Reader:
    def __init__(self, lines: dict | None = None):
        self.lines = lines or {}

    def fail(self, path, msg):
        key = ".".join(str(p) for p in path) or "<root>"
        p = tuple(path)
        while p and p not in self.lines:
            p = p[:-1]
        where = f"line {self.lines[p]}: " if p in self.lines else ""
        raise ConfigError(f"{where}{key}: {msg}")

    def mapping(self, obj, path, allowed) -> dict:
        if obj is None:
            return {}
        if not isinstance(obj, dict):
            self.fail(path, "expected a mapping")
        for k in obj:
            if k not in allowed:
                self.fail(path + (k,), f"unknown key; expected one of {sorted(allowed)}")
        return obj

    def seq(self, obj, path) -> list:
        if obj is None:
            return []
        if not isinstance(obj, list):
            self.fail(path, "expected a list")
        return obj

    def num(self, obj, path, kind=float, positive=False, nonneg=False):
        if isinstance(obj, bool) or not isinstance(obj, (int, float)):
            self.fail(path, f"expected a number, got {obj!r}")
        if kind is int and (not float(obj).is_integer()):
            self.fail(path, f"expected an integer, got {obj!r}")
        v = kind(obj)
        if not math.isfinite(v):
            self.fail(path, "must be finite")
        if positive and not v > 0:
            self.fail(path, "must be positive")
        if nonneg and v < 0:
            self.fail(path, "must be non-negative")
        return v

    def vec3(self, obj, path):
        items = self.seq(obj, path)
        if len(items) != 3:
            self.fail(path, "expected three numbers")
        return tuple(self.num(x, path + (i,)) for i, x in enumerate(items))

    def cplx(self, obj, path) -> complex:
        if isinstance(obj, (int, float)) and not isinstance(obj, bool):
            return complex(self.num(obj, path))
        items = self.seq(obj, path)
        if len(items) != 2:
            self.fail(path, "expected a complex number as [re, im]")
        return complex(self.num(items[0], path + (0,)), self.num(items[1], path + (1,)))

    def flag(self, obj, path) -> bool:
        if not isinstance(obj, bool):
            self.fail(path, f"expected true or false, got {obj!r}")
        return obj

    def choice(self, obj, path, options):
        if obj not in options:
            self.fail(path, f"expected one of {list(options)}, got {obj!r}")
        return obj


def parse_config(data: Any, lines: dict | None = None) -> ExperimentConfig:
    r = _Reader(lines)
    top = r.mapping(data, (), {"seed", "lattice", "particles", "initial_state", "hamiltonian", "evolution", "output"})

    lat_d = r.mapping(top.get("lattice"), ("lattice",), {"dims", "spacing"})
    dims_raw = r.seq(lat_d.get("dims", [8, 1, 1]), ("lattice", "dims"))
    if len(dims_raw) != 3:
        r.fail(("lattice", "dims"), "expected three extents [nx, ny, nz]")
    dims = tuple(r.num(n, ("lattice", "dims", i), int, positive=True) for i, n in enumerate(dims_raw))
    lattice = LatticeConfig(dims, r.num(lat_d.get("spacing", 1.0), ("lattice", "spacing"), positive=True))
    lat = lattice.build()

    specs = []
    labels = set()
    for i, p in enumerate(r.seq(top.get("particles"), ("particles",))):
        path = ("particles", i)
        p = r.mapping(p, path, {"label", "internal_dim", "statistics", "mass"})
        if "label" not in p:
            r.fail(path, "missing 'label'")
        label = str(p["label"])
        if label in labels:
            r.fail(path + ("label",), f"duplicate label {label!r}")
        labels.add(label)
        specs.append(ParticleSpec(
            label,
            r.num(p.get("internal_dim", 1), path + ("internal_dim",), int, positive=True),
            r.choice(p.get("statistics", "distinguishable"), path + ("statistics",), STATISTICS),
            r.num(p.get("mass", 1.0), path + ("mass",), positive=True),
        ))
    if not specs:
        r.fail(("particles",), "at least one particle is required")
    n = len(specs)

    init = r.mapping(top.get("initial_state"), ("initial_state",), {"layers", "terms"})
    layers = []
    for i, lc in enumerate(r.seq(init.get("layers"), ("initial_state", "layers"))):
        path = ("initial_state", "layers", i)
        lc = r.mapping(lc, path, {"amplitude", "factors"})
        facs = r.seq(lc.get("factors"), path + ("factors",))
        if len(facs) != n:
            r.fail(path + ("factors",), f"expected {n} factors, one per particle, got {len(facs)}")
        factors = tuple(_parse_factor(r, f, path + ("factors", j), lat, specs[j]) for j, f in enumerate(facs))
        layers.append(LayerConfig(r.cplx(lc.get("amplitude", 1.0), path + ("amplitude",)), factors))
    terms = []
    for i, t in enumerate(r.seq(init.get("terms"), ("initial_state", "terms"))):
        path = ("initial_state", "terms", i)
        t = r.mapping(t, path, {"index", "value"})
        idx = r.seq(t.get("index"), path + ("index",))
        if len(idx) != n:
            r.fail(path + ("index",), f"expected {n} (site, internal) pairs")
        pairs = []
        for j, pr in enumerate(idx):
            pp = r.seq(pr, path + ("index", j))
            if len(pp) != 2:
                r.fail(path + ("index", j), "expected [site, internal]")
            s = r.num(pp[0], path + ("index", j, 0), int, nonneg=True)
            k = r.num(pp[1], path + ("index", j, 1), int, nonneg=True)
            if s >= lat.site_count or k >= specs[j].internal_dim:
                r.fail(path + ("index", j), f"({s}, {k}) is outside the lattice or internal space")
            pairs.append((s, k))
        terms.append(TermConfig(tuple(pairs), r.cplx(t.get("value", 1.0), path + ("value",))))
    if not layers and not terms:
        r.fail(("initial_state",), "needs at least one layer or term")

    ham = r.mapping(top.get("hamiltonian"), ("hamiltonian",), {"potential", "external", "pair_count", "hbar", "kinetic"})
    pot = r.mapping(ham.get("potential"), ("hamiltonian", "potential"), {"form", "params"})
    form = r.choice(pot.get("form", "zero"), ("hamiltonian", "potential", "form"), PairPotential.FORMS)
    params = r.mapping(pot.get("params"), ("hamiltonian", "potential", "params"),
                       {"value", "strength", "charge", "epsilon", "values"})
    try:
        PairPotential(form, {k: (np.array(v) if isinstance(v, list) else v) for k, v in params.items()}).table(lat)
    except (ValueError, TypeError, KeyError) as e:
        r.fail(("hamiltonian", "potential"), str(e))
    external = None
    if ham.get("external") is not None:
        ext = r.seq(ham["external"], ("hamiltonian", "external"))
        if len(ext) != n:
            r.fail(("hamiltonian", "external"), f"expected {n} entries (one per slot, null for none)")
        external = []
        for j, e in enumerate(ext):
            if e is None:
                external.append(None)
                continue
            vals = r.seq(e, ("hamiltonian", "external", j))
            if len(vals) != lat.site_count:
                r.fail(("hamiltonian", "external", j), f"expected {lat.site_count} real values")
            external.append(tuple(r.num(v, ("hamiltonian", "external", j, s)) for s, v in enumerate(vals)))
        external = tuple(external)
    hamiltonian = HamiltonianConfig(
        form, dict(params), external,
        r.choice(ham.get("pair_count", "unordered"), ("hamiltonian", "pair_count"), ("unordered", "ordered")),
        r.num(ham.get("hbar", 1.0), ("hamiltonian", "hbar"), positive=True),
        r.flag(ham.get("kinetic", True), ("hamiltonian", "kinetic")),
    )

    ev = r.mapping(top.get("evolution"), ("evolution",), {"dt", "steps", "scheme"})
    evolution = EvolutionConfig(
        r.num(ev.get("dt", 0.01), ("evolution", "dt"), positive=True),
        r.num(ev.get("steps", 100), ("evolution", "steps"), int, nonneg=True),
        r.choice(ev.get("scheme", "crank_nicolson"), ("evolution", "scheme"), SCHEMES),
    )
    dim = SectorDescriptor(lat, tuple(specs)).dim
    if evolution.scheme == "dense_expm" and dim > DEFAULT_CAP:
        r.fail(("evolution", "scheme"), f"dense_expm needs sector dimension <= {DEFAULT_CAP}, got {dim}")

    out = r.mapping(top.get("output"), ("output",), {"path", "format"})
    output = OutputConfig(str(out.get("path", "evolution.csv")),
                          r.choice(out.get("format", "csv"), ("output", "format"), FORMATS))
    seed = r.num(top.get("seed", 0), ("seed",), int, nonneg=True)
    return ExperimentConfig(lattice, tuple(specs), InitialStateConfig(tuple(layers), tuple(terms)),
                            hamiltonian, evolution, output, seed)


def _parse_factor(r: _Reader, f, path, lat: Lattice3D, spec: ParticleSpec) -> FactorConfig:
    f = r.mapping(f, path, {"gaussian", "values"})
    if len(f) != 1:
        r.fail(path, "a factor is either {gaussian: ...} or {values: ...}")
    d = spec.internal_dim
    if "values" in f:
        vals = r.seq(f["values"], path + ("values",))
        if len(vals) != lat.site_count * d:
            r.fail(path + ("values",), f"expected {lat.site_count * d} (re, im) pairs")
        return FactorConfig("values", values=tuple(r.cplx(v, path + ("values", i)) for i, v in enumerate(vals)))
    g = r.mapping(f["gaussian"], path + ("gaussian",), {"center", "width", "momentum", "internal"})
    gp = path + ("gaussian",)
    internal = ()
    if "internal" in g:
        items = r.seq(g["internal"], gp + ("internal",))
        if len(items) != d:
            r.fail(gp + ("internal",), f"expected {d} internal amplitudes")
        internal = tuple(r.cplx(v, gp + ("internal", i)) for i, v in enumerate(items))
    return FactorConfig(
        "gaussian",
        r.vec3(g.get("center", [0, 0, 0]), gp + ("center",)),
        r.num(g.get("width", 1.0), gp + ("width",), positive=True),
        r.vec3(g.get("momentum", [0, 0, 0]), gp + ("momentum",)),
        internal,
    )


def loads_config(text: str) -> ExperimentConfig:
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigError(f"not valid YAML: {e}") from None
    return parse_config(data, _line_table(node) if node is not None else {})


def load_config(path) -> ExperimentConfig:
    return loads_config(Path(path).read_text())
