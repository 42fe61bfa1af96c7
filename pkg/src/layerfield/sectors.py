"""Sector bookkeeping shared by the multi-layer states and the dense oracle."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .lattice import Lattice3D
from .onebody import ParticleSpec

SYMMETRY_TAGS = ("none", "symmetric", "antisymmetric")

MultiIndex = tuple  # ((site, internal), ...) one pair per particle slot


@dataclass(frozen=True)
class SectorDescriptor:
    lattice: Lattice3D | None
    specs: tuple[ParticleSpec, ...] = ()
    symmetry: str = "none"

    def __post_init__(self):
        object.__setattr__(self, "specs", tuple(self.specs))
        if self.symmetry not in SYMMETRY_TAGS:
            raise ValueError(f"symmetry must be one of {SYMMETRY_TAGS}")
        if self.symmetry != "none" and len(set(self.specs)) > 1:
            raise ValueError("a symmetry tag needs all particle specs identical")
        if self.specs and self.lattice is None:
            raise ValueError("a sector with particles needs a lattice")

    @property
    def n_particles(self) -> int:
        return len(self.specs)

    @property
    def slot_dims(self) -> tuple[int, ...]:
        return tuple(self.lattice.site_count * s.internal_dim for s in self.specs)

    @property
    def dim(self) -> int:
        return math.prod(self.slot_dims)

    @property
    def weight(self) -> float:
        """Volume factor h^(3N) of the scalar product."""
        if not self.specs:
            return 1.0
        return self.lattice.cell_volume ** self.n_particles

    def untagged(self) -> SectorDescriptor:
        return SectorDescriptor(self.lattice, self.specs, "none")

    def with_symmetry(self, symmetry: str) -> SectorDescriptor:
        return SectorDescriptor(self.lattice, self.specs, symmetry)

    def same_space(self, other: SectorDescriptor) -> bool:
        return self.lattice == other.lattice and self.specs == other.specs

    def check_index(self, idx) -> MultiIndex:
        idx = tuple((int(s), int(k)) for s, k in idx)
        if len(idx) != self.n_particles:
            raise ValueError(f"multi-index {idx} has wrong length for {self.n_particles} particles")
        for (s, k), spec in zip(idx, self.specs):
            self.lattice.check_site(s)
            if not 0 <= k < spec.internal_dim:
                raise IndexError(f"internal index {k} out of range for {spec.label}")
        return idx

    def flat_slot(self, j: int, pair) -> int:
        s, k = pair
        return s * self.specs[j].internal_dim + k

    def pair_of(self, j: int, flat: int) -> tuple[int, int]:
        d = self.specs[j].internal_dim
        return divmod(int(flat), d)
