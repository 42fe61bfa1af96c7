"""Periodic cubic lattice standing in for physical 3D space."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp


@dataclass(frozen=True)
class Lattice3D:
    """Finite periodic lattice with ``dims = (nx, ny, nz)`` and uniform spacing.

    Sites are flattened x-fastest: ``s = ix + nx * (iy + ny * iz)``.
    """

    dims: tuple[int, int, int]
    spacing: float = 1.0

    def __post_init__(self):
        dims = tuple(int(n) for n in self.dims)
        if len(dims) != 3 or any(n < 1 for n in dims):
            raise ValueError(f"dims must be three positive integers, got {self.dims!r}")
        if not self.spacing > 0:
            raise ValueError(f"spacing must be positive, got {self.spacing!r}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "spacing", float(self.spacing))

    @property
    def site_count(self) -> int:
        nx, ny, nz = self.dims
        return nx * ny * nz

    @property
    def cell_volume(self) -> float:
        return self.spacing**3

    @property
    def active_dims(self) -> int:
        return sum(1 for n in self.dims if n > 1)

    def check_site(self, s: int) -> int:
        s = int(s)
        if not 0 <= s < self.site_count:
            raise IndexError(f"site {s} out of range [0, {self.site_count})")
        return s

    def coords(self, s: int) -> tuple[int, int, int]:
        s = self.check_site(s)
        nx, ny, _ = self.dims
        return s % nx, (s // nx) % ny, s // (nx * ny)

    def index(self, ix: int, iy: int, iz: int) -> int:
        nx, ny, nz = self.dims
        return (ix % nx) + nx * ((iy % ny) + ny * (iz % nz))

    @cached_property
    def coord_table(self) -> np.ndarray:
        """Integer coordinates of every site, shape ``(site_count, 3)``."""
        s = np.arange(self.site_count)
        nx, ny, _ = self.dims
        return np.stack([s % nx, (s // nx) % ny, s // (nx * ny)], axis=1)

    def neighbors(self, s: int) -> list[int]:
        """Stencil neighbours of ``s`` (one per direction of each active axis).

        On an axis of extent 2 both directions land on the same site, so that
        site appears twice.
        """
        ix, iy, iz = self.coords(s)
        out = []
        for axis, n in enumerate(self.dims):
            if n == 1:
                continue
            for step in (-1, 1):
                c = [ix, iy, iz]
                c[axis] += step
                out.append(self.index(*c))
        return out

    @cached_property
    def laplacian_matrix(self) -> sp.csr_matrix:
        """Sparse real symmetric matrix of the periodic finite-difference Laplacian."""
        n = self.site_count
        rows, cols, vals = [], [], []
        for s in range(n):
            rows.append(s)
            cols.append(s)
            vals.append(-2.0 * self.active_dims)
            for t in self.neighbors(s):
                rows.append(s)
                cols.append(t)
                vals.append(1.0)
        mat = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
        mat.sum_duplicates()
        return (mat / self.spacing**2).tocsr()


def position(lat: Lattice3D, s: int) -> tuple[float, float, float]:
    ix, iy, iz = lat.coords(s)
    h = lat.spacing
    return (h * ix, h * iy, h * iz)


def _wrapped_offsets(lat: Lattice3D, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    d = np.abs(a - b)
    n = np.asarray(lat.dims)
    return np.minimum(d, n - d) * lat.spacing


def distance3d(lat: Lattice3D, s1: int, s2: int) -> float:
    """Minimal-image Euclidean distance between two sites."""
    a = np.asarray(lat.coords(s1))
    b = np.asarray(lat.coords(s2))
    return float(np.sqrt(np.sum(_wrapped_offsets(lat, a, b) ** 2)))


def distance_table(lat: Lattice3D) -> np.ndarray:
    """All pairwise minimal-image distances, shape ``(site_count, site_count)``."""
    c = lat.coord_table
    off = _wrapped_offsets(lat, c[:, None, :], c[None, :, :])
    return np.sqrt(np.sum(off**2, axis=-1))


def laplacian_apply(lat: Lattice3D, values) -> np.ndarray:
    """Apply the periodic Laplacian to one complex value per site."""
    values = np.asarray(values, dtype=complex)
    if values.shape != (lat.site_count,):
        raise ValueError(
            f"expected {lat.site_count} site values, got shape {values.shape}"
        )
    return lat.laplacian_matrix @ values


def make_region(lat: Lattice3D, sites) -> frozenset[int]:
    """Validate a collection of sites and return it as a region."""
    return frozenset(lat.check_site(s) for s in sites)
