"""Operators on multi-layer states: lifting, Hamiltonians, evolution, measurement.

An :class:`OperatorRep` is a sum of structured pieces that act slot by slot
(one-particle matrices lifted into one slot, diagonal pair potentials), plus
an optional general sparse matrix over the flattened multi-index space.  The
structured pieces never leave their own slots; that is what makes the
kinetic and potential terms local on the lattice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .lattice import distance_table
from .multilayer import MultiLayerState
from .onebody import kinetic_matrix
from .oracle import dense_propagator
from .sectors import SectorDescriptor

HERMITIAN_TOL = 1e-12


class NotHermitian(ValueError):
    pass


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class OneBodyTerm:
    slot: int
    matrix: sp.csr_matrix


@dataclass(frozen=True)
class PairTerm:
    slots: tuple[int, int]
    table: np.ndarray  # real, (site_count, site_count), indexed [site_j, site_k]


@dataclass(frozen=True, eq=False)
class OperatorRep:
    sector: SectorDescriptor
    onebody: tuple[OneBodyTerm, ...] = ()
    pairs: tuple[PairTerm, ...] = ()
    general: sp.csr_matrix | None = None
    hbar: float = 1.0

    def __add__(self, other: OperatorRep) -> OperatorRep:
        if not self.sector.same_space(other.sector):
            raise ValueError("operators act on different sectors")
        if self.general is None:
            gen = other.general
        elif other.general is None:
            gen = self.general
        else:
            gen = (self.general + other.general).tocsr()
        return OperatorRep(self.sector, self.onebody + other.onebody, self.pairs + other.pairs, gen, self.hbar)

    def __matmul__(self, other: OperatorRep) -> OperatorRep:
        """Operator product, returned in general (matrix) form."""
        if not self.sector.same_space(other.sector):
            raise ValueError("operators act on different sectors")
        return OperatorRep(self.sector, general=(self.matrix() @ other.matrix()).tocsr(), hbar=self.hbar)

    def scaled(self, c: complex) -> OperatorRep:
        return OperatorRep(
            self.sector,
            tuple(OneBodyTerm(t.slot, c * t.matrix) for t in self.onebody),
            tuple(PairTerm(t.slots, c * t.table) for t in self.pairs),
            None if self.general is None else c * self.general,
            self.hbar,
        )

    def pair_diagonal(self) -> np.ndarray:
        """Summed pair potentials as an array over the full product index."""
        dims = self.sector.slot_dims
        out = np.zeros(dims, dtype=complex)
        n = len(dims)
        for term in self.pairs:
            j, k = term.slots
            dj, dk = self.sector.specs[j].internal_dim, self.sector.specs[k].internal_dim
            full = np.repeat(np.repeat(term.table, dj, axis=0), dk, axis=1)
            shape = [1] * n
            shape[j], shape[k] = dims[j], dims[k]
            out = out + (full if j < k else full.T).reshape(shape)
        return out

    def matrix(self) -> sp.csr_matrix:
        """The full sparse matrix over the flattened multi-index basis."""
        dims = self.sector.slot_dims
        total = math.prod(dims)
        mat = sp.csr_matrix((total, total), dtype=complex)
        for term in self.onebody:
            left = math.prod(dims[: term.slot])
            right = math.prod(dims[term.slot + 1:])
            mat = mat + sp.kron(sp.kron(sp.identity(left), term.matrix), sp.identity(right))
        if self.pairs:
            mat = mat + sp.diags(self.pair_diagonal().ravel())
        if self.general is not None:
            mat = mat + self.general
        return sp.csr_matrix(mat)


def identity_op(sector: SectorDescriptor) -> OperatorRep:
    return OperatorRep(sector, general=sp.identity(sector.dim, dtype=complex, format="csr"))


def lift_onebody(op, slot: int, sector: SectorDescriptor) -> OperatorRep:
    """Act with a one-particle matrix on one slot, identity on the rest."""
    if not 0 <= slot < sector.n_particles:
        raise IndexError(f"slot {slot} out of range for {sector.n_particles} particles")
    mat = sp.csr_matrix(op, dtype=complex)
    d = sector.slot_dims[slot]
    if mat.shape != (d, d):
        raise ValueError(f"one-particle operator has shape {mat.shape}, slot dimension is {d}")
    return OperatorRep(sector, onebody=(OneBodyTerm(slot, mat),))


@dataclass(frozen=True)
class PairPotential:
    """Pair potential as a function of minimal-image distance.

    Forms: ``zero``; ``constant`` (value); ``harmonic`` (strength * r^2);
    ``softened_coulomb`` (charge / (r + eps), eps defaults to spacing / 2);
    ``table`` (explicit values[site_j][site_k]).
    """

    form: str = "zero"
    params: dict = field(default_factory=dict)

    FORMS = ("zero", "constant", "harmonic", "softened_coulomb", "table")

    def __post_init__(self):
        if self.form not in self.FORMS:
            raise ValueError(f"unknown potential form {self.form!r}; expected one of {self.FORMS}")

    def table(self, lat) -> np.ndarray:
        r = distance_table(lat)
        p = self.params
        if self.form == "zero":
            v = np.zeros_like(r)
        elif self.form == "constant":
            v = np.full_like(r, float(p.get("value", 0.0)))
        elif self.form == "harmonic":
            v = float(p.get("strength", 1.0)) * r**2
        elif self.form == "softened_coulomb":
            eps = float(p.get("epsilon", lat.spacing / 2))
            v = float(p.get("charge", 1.0)) / (r + eps)
        else:
            v = np.asarray(p["values"], dtype=float)
            if v.shape != r.shape:
                raise ValueError(f"potential table must have shape {r.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("pair potential is not finite on this lattice")
        return v


@dataclass(frozen=True)
class HamiltonianSpec:
    potential: PairPotential | Callable[[np.ndarray], np.ndarray] = field(default_factory=PairPotential)
    external: Sequence[np.ndarray | None] | None = None
    pair_count: str = "unordered"
    hbar: float = 1.0
    kinetic: bool = True

    def __post_init__(self):
        if self.pair_count not in ("unordered", "ordered"):
            raise ValueError("pair_count must be 'unordered' or 'ordered'")

    def pair_table(self, lat) -> np.ndarray:
        if isinstance(self.potential, PairPotential):
            return self.potential.table(lat)
        v = np.asarray(self.potential(distance_table(lat)), dtype=float)
        if not np.all(np.isfinite(v)):
            raise ValueError("pair potential is not finite on this lattice")
        return v


def pairwise_potential(spec: HamiltonianSpec, slots: tuple[int, int], sector: SectorDescriptor) -> OperatorRep:
    j, k = slots
    if j == k:
        raise ValueError("pair potential needs two distinct slots")
    for s in (j, k):
        if not 0 <= s < sector.n_particles:
            raise IndexError(f"slot {s} out of range")
    table = spec.pair_table(sector.lattice)
    if not np.allclose(table, table.T):
        raise ValueError("pair potential must be symmetric in its two sites")
    if j > k:
        j, k, table = k, j, table.T
    return OperatorRep(sector, pairs=(PairTerm((j, k), table),), hbar=spec.hbar)


def build_hamiltonian(spec: HamiltonianSpec, sector: SectorDescriptor) -> OperatorRep:
    """Kinetic term for every slot plus one pair potential per pair of slots."""
    lat = sector.lattice
    n = sector.n_particles
    terms = []
    if spec.kinetic:
        terms = [OneBodyTerm(j, kinetic_matrix(lat, sector.specs[j], spec.hbar).astype(complex).tocsr()) for j in range(n)]
    if spec.external is not None:
        for j, ext in enumerate(spec.external):
            if ext is None:
                continue
            ext = np.asarray(ext, dtype=float)
            if ext.shape != (lat.site_count,):
                raise ValueError(f"external potential for slot {j} needs {lat.site_count} values")
            d = sector.specs[j].internal_dim
            terms.append(OneBodyTerm(j, sp.diags(np.repeat(ext, d)).astype(complex).tocsr()))
    pairs = []
    if n > 1:
        table = spec.pair_table(lat)
        if spec.pair_count == "ordered":
            table = 2 * table
        for j in range(n):
            for k in range(j + 1, n):
                pairs.append(PairTerm((j, k), table))
    return OperatorRep(sector, tuple(terms), tuple(pairs), None, spec.hbar)


def apply_op(op: OperatorRep, m: MultiLayerState) -> MultiLayerState:
    if not op.sector.same_space(m.sector):
        raise ValueError("operator and state belong to different sectors")
    arr = m.to_array()
    out = np.zeros_like(arr)
    for term in op.onebody:
        moved = np.moveaxis(arr, term.slot, 0)
        res = (term.matrix @ moved.reshape(moved.shape[0], -1)).reshape(moved.shape)
        out += np.moveaxis(res, 0, term.slot)
    if op.pairs:
        out += op.pair_diagonal() * arr
    if op.general is not None:
        out += (op.general @ arr.ravel()).reshape(arr.shape)
    return MultiLayerState.from_array(m.sector.untagged(), out)


def rho_op(a, sector: SectorDescriptor) -> OperatorRep:
    """Carry a dense tensor-product operator over to multi-layer states."""
    mat = sp.csr_matrix(a, dtype=complex)
    if mat.shape != (sector.dim, sector.dim):
        raise ValueError(f"operator shape {mat.shape} does not match sector dimension {sector.dim}")
    return OperatorRep(sector, general=mat)


def hermiticity_defect(op: OperatorRep) -> float:
    mat = op.matrix()
    diff = mat - mat.getH()
    return float(np.max(np.abs(diff.data), initial=0.0))


def check_hermitian(op: OperatorRep, tol: float = HERMITIAN_TOL):
    mat = op.matrix()
    scale = max(1.0, float(np.max(np.abs(mat.data), initial=0.0)))
    if hermiticity_defect(op) > tol * scale:
        raise NotHermitian("operator is not Hermitian")


def pauli(axis) -> np.ndarray:
    """Pauli matrix along 'x', 'y', 'z' or a unit 3-vector; sigma_z = diag(1, -1)."""
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sy = np.array([[0, -1j], [1j, 0]], dtype=complex)
    sz = np.array([[1, 0], [0, -1]], dtype=complex)
    if isinstance(axis, str):
        return {"x": sx, "y": sy, "z": sz}[axis]
    n = np.asarray(axis, dtype=float)
    if n.shape != (3,) or not math.isclose(float(n @ n), 1.0, rel_tol=1e-12):
        raise ValueError(f"spin axis must be a unit 3-vector, got {axis!r}")
    return n[0] * sx + n[1] * sy + n[2] * sz


def spin_matrix(lat, axis) -> sp.csr_matrix:
    """Spin component on a spin-1/2 one-particle space (identity in position)."""
    return sp.kron(sp.identity(lat.site_count), pauli(axis), format="csr")


def _cn_steps(vec: np.ndarray, hmat: sp.csr_matrix, dt: float, steps: int, hbar: float, tol: float) -> Iterator[np.ndarray]:
    n = hmat.shape[0]
    eye = sp.identity(n, dtype=complex, format="csr")
    lhs = (eye + (0.5j * dt / hbar) * hmat).tocsr()
    rhs = (eye - (0.5j * dt / hbar) * hmat).tocsr()
    for _ in range(steps):
        b = rhs @ vec
        bnorm = np.linalg.norm(b)
        if bnorm == 0:
            yield vec
            continue
        x, info = spla.gmres(lhs, b, x0=vec, rtol=tol, atol=0.0, restart=min(n, 200), maxiter=1000)
        resid = np.linalg.norm(lhs @ x - b) / bnorm
        if info != 0 or resid > max(tol, 1e-12):
            raise SolverError(f"Crank-Nicolson solve did not converge (info={info}, residual={resid:.3g})")
        vec = x
        yield vec


def evolve_steps(m: MultiLayerState, h: OperatorRep, dt: float, steps: int,
                 scheme: str = "crank_nicolson", tol: float = 1e-14) -> Iterator[MultiLayerState]:
    """Yield the state after each of ``steps`` time steps of size ``dt``."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    check_hermitian(h)
    hmat = h.matrix()
    sec = m.sector.untagged()
    vec = m.to_vector()
    if scheme == "crank_nicolson":
        for v in _cn_steps(vec, hmat, dt, steps, h.hbar, tol):
            yield MultiLayerState.from_array(sec, v)
    elif scheme == "dense_expm":
        u = dense_propagator(hmat.toarray(), dt, h.hbar)
        for _ in range(steps):
            vec = u @ vec
            yield MultiLayerState.from_array(sec, vec)
    else:
        raise ValueError(f"unknown scheme {scheme!r}")


def evolve(m: MultiLayerState, h: OperatorRep, total_t: float, dt: float,
           scheme: str = "crank_nicolson", tol: float = 1e-14) -> MultiLayerState:
    """Approximate exp(-i H t / hbar) m; the step size is shrunk to divide total_t evenly."""
    if total_t < 0:
        raise ValueError("total_t must be non-negative")
    if dt <= 0:
        raise ValueError("dt must be positive")
    steps = math.ceil(total_t / dt - 1e-9)
    if steps == 0:
        return m
    if scheme == "dense_expm":
        check_hermitian(h)
        u = dense_propagator(h.matrix().toarray(), total_t, h.hbar)
        return MultiLayerState.from_array(m.sector.untagged(), u @ m.to_vector())
    state = m
    for state in evolve_steps(m, h, total_t / steps, steps, scheme, tol):
        pass
    return state


def expectation(op: OperatorRep, m: MultiLayerState) -> complex:
    v = m.to_vector()
    return complex(np.vdot(v, op.matrix() @ v) / np.vdot(v, v))


@dataclass(frozen=True, eq=False)
class Outcome:
    eigenvalue: float
    probability: float
    state: MultiLayerState | None


def measure_project(m: MultiLayerState, op: OperatorRep, tol: float = 1e-9) -> list[Outcome]:
    """Spectral decomposition of a Hermitian observable applied to a state.

    Every distinct eigenvalue is reported, in increasing order, with its
    probability and the normalized projected state (``None`` if the
    probability is zero).
    """
    if not op.sector.same_space(m.sector):
        raise ValueError("operator and state belong to different sectors")
    check_hermitian(op)
    if m.sector.dim > 4096:
        raise ValueError("measure_project diagonalizes densely; sector too large")
    v = m.to_vector()
    total = np.vdot(v, v).real
    if total == 0:
        raise ValueError("cannot measure the zero state")
    w, vecs = np.linalg.eigh(op.matrix().toarray())
    groups, start = [], 0
    for i in range(1, len(w) + 1):
        if i == len(w) or w[i] - w[i - 1] > tol * max(1.0, abs(w[i])):
            groups.append((start, i))
            start = i
    out = []
    sec = m.sector.untagged()
    for a, b in groups:
        basis = vecs[:, a:b]
        proj = basis @ (basis.conj().T @ v)
        p = float(np.vdot(proj, proj).real / total)
        post = None
        if p > 0:
            post = MultiLayerState.from_array(sec, proj / math.sqrt(np.vdot(proj, proj).real * sec.weight))
        out.append(Outcome(float(np.mean(w[a:b])), p, post))
    return out
