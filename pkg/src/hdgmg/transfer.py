"""Coarse-to-fine injection of skeleton traces and its transpose.

The injection is the composition of three maps: a coarse trace is extended
to a continuous P_p field on the coarse mesh (vertex values by averaging the
incident face traces, face-interior values copied from the trace, and
cell-interior values from the local solver), the continuous field is viewed
on the fine mesh (the spaces are nested), and finally its trace is taken on
the fine interior faces.

Continuous nodes of a level are numbered vertices first, then the p-1
interior nodes of every face (in face order, along the stored direction),
then the interior nodes of every cell.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .basis import triangle_basis
from .local_solver import LevelOperators, build_level_operators, cell_geometry
from .mesh import MeshHierarchy, MeshLevel
from .skeleton import DofMap, build_dofmap

__all__ = [
    "ContinuousSpace",
    "TransferPair",
    "continuous_space",
    "continuous_extension",
    "extension_matrix",
    "evaluate_continuous",
    "build_transfer",
    "build_transfer_by_columns",
    "restrict",
    "inject",
]

_PRUNE = 1e-13


def _on_boundary(x: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    return (np.abs(x[..., 0]) < tol) | (np.abs(x[..., 0] - 1) < tol) | (np.abs(x[..., 1]) < tol) | (np.abs(x[..., 1] - 1) < tol)


@dataclass(frozen=True, eq=False)
class ContinuousSpace:
    mesh: MeshLevel
    p: int
    n_nodes: int
    cell_nodes: np.ndarray  # (nc, nV) global node of each local Lagrange node
    boundary_nodes: np.ndarray  # bool, (n_nodes,)


def continuous_space(mesh: MeshLevel, p: int) -> ContinuousSpace:
    tb = triangle_basis(p)
    nv, nf, nc = mesh.n_vertices, mesh.n_faces, mesh.n_cells
    ne = p - 1
    ni = len(tb.interior_nodes)
    n_nodes = nv + nf * ne + nc * ni

    cell_nodes = np.empty((nc, tb.dim), dtype=np.int64)
    cell_nodes[:, :3] = mesh.cells
    flipped = mesh.cell_face_orientation()
    k = np.arange(ne)
    for j in range(3):
        local = np.where(flipped[:, j, None], ne - 1 - k, k)
        cell_nodes[:, tb.edge_nodes[j]] = nv + mesh.cell_faces[:, j, None] * ne + local
    cell_nodes[:, tb.interior_nodes] = nv + nf * ne + np.arange(nc)[:, None] * ni + np.arange(ni)

    boundary = np.zeros(n_nodes, dtype=bool)
    boundary[:nv] = _on_boundary(mesh.vertices)
    bfaces = np.flatnonzero(mesh.boundary)
    boundary[(nv + bfaces[:, None] * ne + k).ravel()] = True
    return ContinuousSpace(mesh, p, n_nodes, cell_nodes, boundary)


def extension_matrix(mesh: MeshLevel, p: int, ops: LevelOperators, dofmap: DofMap | None = None, space=None):
    """Sparse matrix of the continuous extension, continuous nodes x trace dofs."""
    dm = dofmap if dofmap is not None else build_dofmap(mesh, p)
    cs = space if space is not None else continuous_space(mesh, p)
    tb = triangle_basis(p)
    nv, ne = mesh.n_vertices, p - 1
    rows, cols, vals = [], [], []

    # vertices: mean of the traces of all faces meeting there
    degree = np.bincount(mesh.faces.ravel(), minlength=nv)
    interior = np.flatnonzero(~mesh.boundary)
    for end, k in ((0, 0), (1, p)):
        v = mesh.faces[interior, end]
        keep = ~cs.boundary_nodes[v]
        rows.append(v[keep])
        cols.append(dm.face_dofs[interior[keep], k])
        vals.append(1.0 / degree[v[keep]])

    # face-interior nodes copy the trace
    if ne > 0:
        kk = np.arange(1, p)
        rows.append((nv + interior[:, None] * ne + kk - 1).ravel())
        cols.append(dm.face_dofs[interior][:, 1:p].ravel())
        vals.append(np.ones(len(interior) * ne))

    # cell-interior nodes take the local solver value
    if len(tb.interior_nodes):
        Ui = ops.trace_u[ops.group][:, tb.interior_nodes, :]  # (nc, ni, nF)
        r = np.broadcast_to(cs.cell_nodes[:, tb.interior_nodes, None], Ui.shape)
        c = np.broadcast_to(dm.cell_dofs[:, None, :], Ui.shape)
        keep = c >= 0
        rows.append(r[keep])
        cols.append(c[keep])
        vals.append(Ui[keep])

    C = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(cs.n_nodes, dm.n_dofs)
    ).tocsr()
    C.sum_duplicates()
    return C


def continuous_extension(mesh: MeshLevel, p: int, lam: np.ndarray, ops: LevelOperators) -> np.ndarray:
    """Nodal values of the continuous extension of the trace ``lam``.

    Straightforward loop implementation, kept independent of
    :func:`extension_matrix`.
    """
    dm = build_dofmap(mesh, p)
    cs = continuous_space(mesh, p)
    tb = triangle_basis(p)
    lam = np.asarray(lam, dtype=float)
    out = np.zeros(cs.n_nodes)
    nv = mesh.n_vertices

    sums = np.zeros(nv)
    counts = np.zeros(nv)
    for f, (a, b) in enumerate(mesh.faces):
        fd = dm.face_dofs[f]
        la = lam[fd[0]] if fd[0] >= 0 else 0.0
        lb = lam[fd[p]] if fd[p] >= 0 else 0.0
        sums[a] += la
        sums[b] += lb
        counts[a] += 1
        counts[b] += 1
        if fd[0] >= 0:
            for k in range(1, p):
                out[nv + f * (p - 1) + k - 1] = lam[fd[k]]
    out[:nv] = sums / counts

    if len(tb.interior_nodes):
        lam_c = dm.cell_values(lam)
        for c in range(mesh.n_cells):
            u = ops.trace_u[ops.group[c]] @ lam_c[c]
            out[cs.cell_nodes[c, tb.interior_nodes]] = u[tb.interior_nodes]
    out[cs.boundary_nodes] = 0.0
    return out


def evaluate_continuous(mesh: MeshLevel, p: int, nodal: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Point values of a continuous nodal field, locating points by search."""
    cs = continuous_space(mesh, p)
    tb = triangle_basis(p)
    J, _, Jinv, _, _ = cell_geometry(mesh.cell_coords())
    origin = mesh.cell_coords()[:, 0]
    pts = np.atleast_2d(points)
    out = np.empty(len(pts))
    for n, x in enumerate(pts):
        xi = np.einsum("cab,cb->ca", Jinv, x - origin)
        bary = np.column_stack([1 - xi.sum(axis=1), xi])
        c = int(np.argmax(bary.min(axis=1)))
        out[n] = tb.values(xi[c][None])[0] @ nodal[cs.cell_nodes[c]]
    return out


def _face_points(mesh: MeshLevel, faces: np.ndarray, p: int) -> np.ndarray:
    a = mesh.vertices[mesh.faces[faces, 0]]
    b = mesh.vertices[mesh.faces[faces, 1]]
    s = np.linspace(0.0, 1.0, p + 1)
    return a[:, None, :] + s[None, :, None] * (b - a)[:, None, :]  # (n, p+1, 2)


@dataclass(frozen=True, eq=False)
class TransferPair:
    level: int  # fine level
    injection: sp.csr_matrix  # fine dofs x coarse dofs
    restriction: sp.csr_matrix  # transpose

    def inject(self, lam: np.ndarray) -> np.ndarray:
        return self.injection @ lam

    def restrict(self, r: np.ndarray) -> np.ndarray:
        return self.restriction @ r


def build_transfer(
    hierarchy: MeshHierarchy, level: int, p: int, tau_coarse: float, coarse_operators: LevelOperators | None = None
) -> TransferPair:
    """Injection from ``level - 1`` to ``level`` as a sparse matrix."""
    if level < 1:
        raise ValueError("the fine level of a transfer pair must be >= 1")
    coarse, fine = hierarchy[level - 1], hierarchy[level]
    ops = coarse_operators if coarse_operators is not None else build_level_operators(coarse, p, tau_coarse)
    cs = continuous_space(coarse, p)
    C = extension_matrix(coarse, p, ops, space=cs)
    fdm = build_dofmap(fine, p)
    tb = triangle_basis(p)

    faces = np.flatnonzero(~fine.boundary)
    pts = _face_points(fine, faces, p)
    owner = fine.parent[fine.face_cells[faces, 0]]
    _, _, Jinv, _, _ = cell_geometry(coarse.cell_coords()[owner])
    xi = np.einsum("nab,nkb->nka", Jinv, pts - coarse.vertices[coarse.cells[owner, 0]][:, None, :])
    phi = tb.values(xi.reshape(-1, 2)).reshape(len(faces), p + 1, tb.dim)
    phi[np.abs(phi) < _PRUNE] = 0.0
    phi[_on_boundary(pts)] = 0.0

    rows = np.broadcast_to(fdm.face_dofs[faces][:, :, None], phi.shape)
    cols = np.broadcast_to(cs.cell_nodes[owner][:, None, :], phi.shape)
    nz = phi != 0.0
    E = sp.coo_matrix((phi[nz], (rows[nz], cols[nz])), shape=(fdm.n_dofs, cs.n_nodes)).tocsr()
    I = (E @ C).tocsr()
    I.data[np.abs(I.data) < _PRUNE] = 0.0
    I.eliminate_zeros()
    I.sort_indices()
    return TransferPair(level, I, I.T.tocsr())


def build_transfer_by_columns(hierarchy: MeshHierarchy, level: int, p: int, tau_coarse: float) -> sp.csr_matrix:
    """Dense-column construction of the same injection, one coarse unit trace at a time.

    Quadratic cost; meant for cross-checking :func:`build_transfer` on small levels.
    """
    coarse, fine = hierarchy[level - 1], hierarchy[level]
    ops = build_level_operators(coarse, p, tau_coarse, reuse=False)
    cdm, fdm = build_dofmap(coarse, p), build_dofmap(fine, p)
    faces = np.flatnonzero(~fine.boundary)
    pts = _face_points(fine, faces, p)
    rows = fdm.face_dofs[faces].ravel()
    flat = pts.reshape(-1, 2)
    on_bdry = _on_boundary(flat)
    out = np.zeros((fdm.n_dofs, cdm.n_dofs))
    for j in range(cdm.n_dofs):
        e = np.zeros(cdm.n_dofs)
        e[j] = 1.0
        nodal = continuous_extension(coarse, p, e, ops)
        vals = evaluate_continuous(coarse, p, nodal, flat)
        vals[on_bdry] = 0.0
        out[rows, j] = vals
    return sp.csr_matrix(out)


def inject(pair: TransferPair, lam: np.ndarray) -> np.ndarray:
    lam = np.asarray(lam, dtype=float)
    if lam.shape != (pair.injection.shape[1],):
        raise ValueError("coarse trace vector has the wrong length")
    return pair.injection @ lam


def restrict(pair: TransferPair, r: np.ndarray) -> np.ndarray:
    """Euclidean transpose of the injection applied to a fine residual."""
    r = np.asarray(r, dtype=float)
    if r.shape != (pair.injection.shape[0],):
        raise ValueError("fine trace vector has the wrong length")
    return pair.restriction @ r
