"""Global trace numbering, assembly of the condensed skeleton system and
reconstruction of the cell fields.

A trace vector is a plain float array over the interior-face Lagrange
degrees of freedom: interior face ``k`` (in face order) owns rows
``k*(p+1) ... k*(p+1)+p``, ordered along the stored face direction.  Boundary
faces carry no unknowns; the trace vanishes there.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .local_solver import LevelOperators, build_level_operators, load_vectors
from .mesh import MeshLevel

__all__ = [
    "DofMap",
    "SkeletonSystem",
    "build_dofmap",
    "assemble",
    "apply",
    "reconstruct",
    "write_matrix",
]


@dataclass(frozen=True, eq=False)
class DofMap:
    p: int
    n_dofs: int
    face_dofs: np.ndarray  # (nf, p+1), -1 on boundary faces
    cell_dofs: np.ndarray  # (nc, 3(p+1)) in cell-local trace order, -1 on boundary

    def cell_values(self, lam: np.ndarray) -> np.ndarray:
        """Scatter a trace vector into per-cell local trace arrays (zeros on the boundary)."""
        padded = np.append(np.asarray(lam, dtype=float), 0.0)
        return padded[self.cell_dofs]

    def gather(self, local: np.ndarray) -> np.ndarray:
        """Sum per-cell local trace arrays into a global trace vector."""
        mask = self.cell_dofs >= 0
        return np.bincount(self.cell_dofs[mask], weights=local[mask], minlength=self.n_dofs)


def build_dofmap(mesh: MeshLevel, p: int) -> DofMap:
    nd = p + 1
    interior = ~mesh.boundary
    face_index = np.full(mesh.n_faces, -1)
    face_index[interior] = np.arange(interior.sum())
    face_dofs = np.where(interior[:, None], face_index[:, None] * nd + np.arange(nd), -1)

    flipped = mesh.cell_face_orientation()  # (nc, 3)
    k = np.arange(nd)
    local_k = np.where(flipped[..., None], p - k, k)  # (nc, 3, nd)
    cell_dofs = face_dofs[mesh.cell_faces[..., None], local_k].reshape(mesh.n_cells, 3 * nd)
    return DofMap(p, int(interior.sum()) * nd, face_dofs, cell_dofs)


@dataclass(frozen=True, eq=False)
class SkeletonSystem:
    mesh: MeshLevel
    p: int
    tau: float
    matrix: sp.csr_matrix
    rhs: np.ndarray
    dofmap: DofMap
    operators: LevelOperators
    loads: np.ndarray  # (nc, nV) cell load vectors (f, phi_i)_T

    @property
    def n_dofs(self) -> int:
        return self.dofmap.n_dofs


def assemble(mesh: MeshLevel, p: int, tau: float, f=None, *, reuse: bool = True) -> SkeletonSystem:
    """Assemble A and b on the interior skeleton; ``f=None`` means f = 0."""
    ops = build_level_operators(mesh, p, tau, reuse=reuse)
    dm = build_dofmap(mesh, p)
    nV = ops.trace_u.shape[1]
    if f is None:
        loads = np.zeros((mesh.n_cells, nV))
    else:
        loads = load_vectors(mesh.cell_coords(), p, f)

    S = ops.condensed[ops.group]  # (nc, nF, nF)
    rows = np.broadcast_to(dm.cell_dofs[:, :, None], S.shape)
    cols = np.broadcast_to(dm.cell_dofs[:, None, :], S.shape)
    keep = (rows >= 0) & (cols >= 0)
    A = sp.coo_matrix((S[keep], (rows[keep], cols[keep])), shape=(dm.n_dofs, dm.n_dofs)).tocsr()
    A.sum_duplicates()
    A.sort_indices()

    r = np.einsum("nim,ni->nm", ops.trace_u[ops.group], loads)
    b = dm.gather(r)
    return SkeletonSystem(mesh, p, float(tau), A, b, dm, ops, loads)


def apply(system: SkeletonSystem, lam: np.ndarray) -> np.ndarray:
    lam = np.asarray(lam, dtype=float)
    if lam.shape != (system.n_dofs,):
        raise ValueError(f"trace vector of length {system.n_dofs} expected, got {lam.shape}")
    return system.matrix @ lam


def reconstruct(system: SkeletonSystem, lam: np.ndarray):
    """Cell fields u = U lam + U f and q = Q lam + Q f.

    Returns ``u`` of shape (nc, nV) and ``q`` of shape (nc, 2, nV) holding
    Lagrange coefficients on each cell.
    """
    ops = system.operators
    g = ops.group
    lam_c = system.dofmap.cell_values(lam)
    u = np.einsum("nim,nm->ni", ops.trace_u[g], lam_c) + np.einsum("nij,nj->ni", ops.source_u[g], system.loads)
    q = np.einsum("nkim,nm->nki", ops.trace_q[g], lam_c) + np.einsum("nkij,nj->nki", ops.source_q[g], system.loads)
    return u, q


def write_matrix(matrix: sp.spmatrix, path) -> None:
    """Coordinate text format, one ``row col value`` triple per line (0-based)."""
    coo = sp.coo_matrix(matrix)
    order = np.lexsort((coo.col, coo.row))
    lines = [f"{i} {j} {v:.17g}" for i, j, v in zip(coo.row[order], coo.col[order], coo.data[order])]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))
