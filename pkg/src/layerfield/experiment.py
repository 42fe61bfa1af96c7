"""Evolution runs driven by an :class:`ExperimentConfig`, with CSV / JSON-lines output."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .config import ExperimentConfig
from .multilayer import MultiLayerState
from .operators import build_hamiltonian, check_hermitian, evolve, evolve_steps, expectation


@dataclass(frozen=True, eq=False)
class StepRecord:
    step: int
    time: float
    norm: float
    energy: float
    density: tuple[np.ndarray, ...]  # per slot, shape (site_count,)


def slot_densities(m: MultiLayerState) -> tuple[np.ndarray, ...]:
    """Per-site probability density of each particle slot (marginal over all other slots)."""
    sec = m.sector
    prob = np.abs(m.to_array()) ** 2 * sec.weight
    out = []
    for j, spec in enumerate(sec.specs):
        others = tuple(i for i in range(sec.n_particles) if i != j)
        marg = prob.sum(axis=others) if others else prob
        out.append(marg.reshape(sec.lattice.site_count, spec.internal_dim).sum(axis=1) / sec.lattice.cell_volume)
    return tuple(out)


def _record(step: int, t: float, m: MultiLayerState, h) -> StepRecord:
    return StepRecord(step, t, m.norm(), float(expectation(h, m).real), slot_densities(m))


def run_evolution(cfg: ExperimentConfig) -> Iterator[StepRecord]:
    m = cfg.initial()
    h = build_hamiltonian(cfg.hamiltonian.build(), m.sector)
    check_hermitian(h)
    ev = cfg.evolution
    yield _record(0, 0.0, m, h)
    if ev.scheme == "crank_nicolson":
        for n, state in enumerate(evolve_steps(m, h, ev.dt, ev.steps), start=1):
            yield _record(n, n * ev.dt, state, h)
    else:
        for n in range(1, ev.steps + 1):
            state = evolve(m, h, n * ev.dt, ev.dt, scheme="dense_expm")
            yield _record(n, n * ev.dt, state, h)


def _columns(cfg: ExperimentConfig) -> list[str]:
    cols = ["step", "time", "norm", "energy"]
    sites = cfg.lattice.build().site_count
    for spec in cfg.particles:
        cols += [f"density_{spec.label}_{s}" for s in range(sites)]
    return cols


def format_records(cfg: ExperimentConfig, records) -> str:
    """Render records as CSV or JSON lines; floats use the shortest round-trip repr."""
    if cfg.output.format == "jsonl":
        lines = []
        for r in records:
            rec = {"step": r.step, "time": r.time, "norm": r.norm, "energy": r.energy,
                   "density": {spec.label: [float(x) for x in d] for spec, d in zip(cfg.particles, r.density)}}
            lines.append(json.dumps(rec, sort_keys=True))
        return "\n".join(lines) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(_columns(cfg))
    for r in records:
        row = [str(r.step), repr(r.time), repr(r.norm), repr(r.energy)]
        row += [repr(float(x)) for d in r.density for x in d]
        w.writerow(row)
    return buf.getvalue()
