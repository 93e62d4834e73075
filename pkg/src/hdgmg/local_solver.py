"""Cellwise HDG (LDG-H) local solvers and their static condensation.

For a cell T with trace data lam on its three faces the local solver finds
(u, q) in P_p x P_p^2 with

    (q, r)_T - (u, div r)_T              = -<lam, r.n>_dT
    (div q, v)_T + tau <u, v>_dT         =  tau <lam, v>_dT  (+ (f, v)_T)

for all (v, r).  The second line is the integrated-by-parts form of
-(q, grad v)_T + <q.n + tau u, v>_dT.  Unknowns are stacked as (q1, q2, u).

Trace data on a cell is a vector of length 3 (p+1): local face j first,
nodes ordered from vertex j to vertex j+1.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .basis import REF_VERTICES, quadrature, segment_basis, triangle_basis

__all__ = [
    "GeometryError",
    "CellLocalOperator",
    "LevelOperators",
    "build_cell_operator",
    "build_level_operators",
    "cell_geometry",
    "load_vectors",
    "local_solve_trace",
    "local_solve_source",
    "condensed_rhs",
]

AREA_TOL = 1e-14


class GeometryError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class _Reference:
    p: int
    mass: np.ndarray  # (nV, nV)
    grad: np.ndarray  # (2, nV, nV): grad[r, i, j] = int phi_i d_r phi_j
    face_mass: np.ndarray  # (3, nV, nV) per unit face length
    face_mixed: np.ndarray  # (3, nV, p+1) per unit face length
    trace_mass: np.ndarray  # (p+1, p+1) per unit face length


@lru_cache(maxsize=None)
def _reference(p: int) -> _Reference:
    tb = triangle_basis(p)
    sb = segment_basis(p)
    qt = quadrature("triangle", 2 * p + 2)
    qs = quadrature("segment", 2 * p + 2)
    phi = tb.values(qt.points)
    dphi = tb.gradients(qt.points)
    mass = np.einsum("q,qi,qj->ij", qt.weights, phi, phi)
    grad = np.einsum("q,qi,qjr->rij", qt.weights, phi, dphi)
    psi = sb.values(qs.points)
    face_mass, face_mixed = [], []
    for j in range(3):
        a, b = REF_VERTICES[j], REF_VERTICES[(j + 1) % 3]
        pts = a + qs.points[:, None] * (b - a)
        phif = tb.values(pts)
        face_mass.append(np.einsum("q,qi,qj->ij", qs.weights, phif, phif))
        face_mixed.append(np.einsum("q,qi,qm->im", qs.weights, phif, psi))
    trace_mass = np.einsum("q,qm,qn->mn", qs.weights, psi, psi)
    return _Reference(p, mass, grad, np.array(face_mass), np.array(face_mixed), trace_mass)


def cell_geometry(coords: np.ndarray):
    """Affine-map data for a batch of triangles ``coords`` of shape (n, 3, 2).

    Returns ``(J, det, Jinv, lengths, normals)`` where ``normals[:, j]`` is the
    outward unit normal of local face j.
    """
    coords = np.asarray(coords, dtype=float)
    J = np.stack([coords[:, 1] - coords[:, 0], coords[:, 2] - coords[:, 0]], axis=2)
    det = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
    if np.any(0.5 * det <= AREA_TOL):
        raise GeometryError("degenerate or clockwise cell")
    Jinv = np.linalg.inv(J)
    edges = coords[:, [1, 2, 0]] - coords
    lengths = np.linalg.norm(edges, axis=2)
    normals = np.stack([edges[..., 1], -edges[..., 0]], axis=2) / lengths[..., None]
    return J, det, Jinv, lengths, normals


@dataclass(frozen=True, eq=False)
class CellLocalOperator:
    """Factorized local solver of one cell (or of a class of translated cells)."""

    p: int
    tau: float
    area: float
    system: np.ndarray  # uncondensed block matrix, (3 nV, 3 nV)
    trace_rhs: np.ndarray  # right-hand side per unit trace datum, (3 nV, nF)
    trace_q: np.ndarray  # (2, nV, nF)
    trace_u: np.ndarray  # (nV, nF)
    source_q: np.ndarray  # (2, nV, nV), acting on load vectors (f, phi_i)_T
    source_u: np.ndarray  # (nV, nV)
    condensed: np.ndarray  # S_T, (nF, nF)


def _build_batch(coords: np.ndarray, p: int, tau: float):
    ref = _reference(p)
    _, det, Jinv, lengths, normals = cell_geometry(coords)
    n = len(det)
    nV = ref.mass.shape[0]
    nF = 3 * (p + 1)

    M = det[:, None, None] * ref.mass
    # G_k[i, j] = int_T phi_i d_k phi_j
    G = det[:, None, None, None] * np.einsum("nrk,rij->nkij", Jinv, ref.grad)
    E = np.einsum("nj,jab->nab", lengths, ref.face_mass)
    H = np.concatenate([lengths[:, j, None, None] * ref.face_mixed[j] for j in range(3)], axis=2)
    C = [
        np.concatenate([(lengths * normals[..., k])[:, j, None, None] * ref.face_mixed[j] for j in range(3)], axis=2)
        for k in range(2)
    ]
    Fm = np.zeros((n, nF, nF))
    for j in range(3):
        sl = slice(j * (p + 1), (j + 1) * (p + 1))
        Fm[:, sl, sl] = lengths[:, j, None, None] * ref.trace_mass

    K = np.zeros((n, 3 * nV, 3 * nV))
    Z = np.zeros((n, nV, nV))
    K[:] = np.block(
        [
            [M, Z, -np.swapaxes(G[:, 0], 1, 2)],
            [Z, M, -np.swapaxes(G[:, 1], 1, 2)],
            [G[:, 0], G[:, 1], tau * E],
        ]
    )
    rhs_trace = np.concatenate([-C[0], -C[1], tau * H], axis=1)
    rhs_source = np.concatenate([np.zeros((n, 2 * nV, nV)), np.broadcast_to(np.eye(nV), (n, nV, nV))], axis=1)
    try:
        X = np.linalg.solve(K, np.concatenate([rhs_trace, rhs_source], axis=2))
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError("singular local HDG system") from exc
    Xt, Xs = X[..., :nF], X[..., nF:]
    tq = np.stack([Xt[:, :nV], Xt[:, nV : 2 * nV]], axis=1)
    tu = Xt[:, 2 * nV :]
    sq = np.stack([Xs[:, :nV], Xs[:, nV : 2 * nV]], axis=1)
    su = Xs[:, 2 * nV :]

    # S = int Q lam . Q mu + tau <U lam - lam, U mu - mu>
    S = np.einsum("nkia,nij,nkjb->nab", tq, M, tq)
    EU = E @ tu
    HtU = np.swapaxes(H, 1, 2) @ tu
    S += tau * (np.swapaxes(tu, 1, 2) @ EU - HtU - np.swapaxes(HtU, 1, 2) + Fm)
    S = 0.5 * (S + np.swapaxes(S, 1, 2))
    return K, rhs_trace, tq, tu, sq, su, S, 0.5 * det


def build_cell_operator(coords, p: int, tau: float) -> CellLocalOperator:
    """Local operator of the triangle with vertex coordinates ``coords`` (3, 2)."""
    if not tau > 0:
        raise ValueError("penalty tau must be positive")
    K, rt, tq, tu, sq, su, S, area = _build_batch(np.asarray(coords, dtype=float)[None], p, tau)
    return CellLocalOperator(p, float(tau), float(area[0]), K[0], rt[0], tq[0], tu[0], sq[0], su[0], S[0])


def load_vectors(coords: np.ndarray, p: int, f, degree: int | None = None) -> np.ndarray:
    """``(f, phi_i)_T`` for a batch of cells; ``f`` is vectorized in (x, y)."""
    coords = np.asarray(coords, dtype=float)
    if coords.ndim == 2:
        coords = coords[None]
    qt = quadrature("triangle", degree if degree is not None else 2 * p + 4)
    phi = triangle_basis(p).values(qt.points)
    J, det, *_ = cell_geometry(coords)
    x = coords[:, 0, None, :] + np.einsum("nab,qb->nqa", J, qt.points)
    fx = np.broadcast_to(np.asarray(f(x[..., 0], x[..., 1]), dtype=float), x.shape[:2])
    return det[:, None] * np.einsum("q,nq,qi->ni", qt.weights, fx, phi)


def _check_trace(op: CellLocalOperator, lam):
    lam = np.asarray(lam, dtype=float)
    if lam.shape != (op.trace_u.shape[1],):
        raise ValueError(f"expected {op.trace_u.shape[1]} trace coefficients, got shape {lam.shape}")
    return lam


def local_solve_trace(op: CellLocalOperator, lam):
    """Return ``(u, q)`` with ``u`` of shape (nV,) and ``q`` of shape (2, nV)."""
    lam = _check_trace(op, lam)
    return op.trace_u @ lam, op.trace_q @ lam


def _load(op: CellLocalOperator, f, coords):
    if callable(f):
        if coords is None:
            raise ValueError("cell coordinates are required to integrate a callable source")
        return load_vectors(coords, op.p, f)[0]
    F = np.asarray(f, dtype=float)
    if F.shape != (op.source_u.shape[1],):
        raise ValueError(f"expected a load vector of length {op.source_u.shape[1]}")
    return F


def local_solve_source(op: CellLocalOperator, f, coords=None):
    """Source-driven local solve; ``f`` is a load vector or a callable."""
    F = _load(op, f, coords)
    return op.source_u @ F, op.source_q @ F


def condensed_rhs(op: CellLocalOperator, f, coords=None) -> np.ndarray:
    """r_T(mu) = (U mu, f)_T for every local trace basis function mu."""
    F = _load(op, f, coords)
    return op.trace_u.T @ F


@dataclass(frozen=True, eq=False)
class LevelOperators:
    """Local operators for all cells of a mesh, shared between translated cells."""

    p: int
    tau: float
    group: np.ndarray  # (nc,) index into the stacked arrays
    system: np.ndarray
    trace_rhs: np.ndarray
    trace_q: np.ndarray
    trace_u: np.ndarray
    source_q: np.ndarray
    source_u: np.ndarray
    condensed: np.ndarray
    area: np.ndarray

    def cell(self, c: int) -> CellLocalOperator:
        g = self.group[c]
        return CellLocalOperator(
            self.p, self.tau, float(self.area[g]), self.system[g], self.trace_rhs[g], self.trace_q[g],
            self.trace_u[g], self.source_q[g], self.source_u[g], self.condensed[g],
        )


def build_level_operators(mesh, p: int, tau: float, reuse: bool = True) -> LevelOperators:
    """Build every cell's local solver; ``reuse`` shares them across translates."""
    if not tau > 0:
        raise ValueError("penalty tau must be positive")
    coords = mesh.cell_coords()
    if reuse:
        edges = (coords[:, 1:] - coords[:, :1]).reshape(len(coords), -1)
        _, first, group = np.unique(edges, axis=0, return_index=True, return_inverse=True)
        group = group.ravel()
        reps = coords[first]
    else:
        group = np.arange(len(coords))
        reps = coords
    K, rt, tq, tu, sq, su, S, area = _build_batch(reps, p, tau)
    return LevelOperators(p, float(tau), group, K, rt, tq, tu, sq, su, S, area)
