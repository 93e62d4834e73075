"""Lagrange bases and quadrature on the reference segment and triangle.

The reference segment is [0, 1]; the reference triangle has vertices
(0, 0), (1, 0), (0, 1).  Nodal bases are obtained by inverting a Vandermonde
matrix built from an orthogonal family (Legendre on the segment, the
Dubiner/Koornwinder family on the triangle).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre
from scipy.special import eval_jacobi, roots_jacobi, roots_legendre

__all__ = [
    "MAX_DEGREE",
    "QuadratureRule",
    "SegmentBasis",
    "TriangleBasis",
    "quadrature",
    "segment_basis",
    "triangle_basis",
    "dubiner",
]

MAX_DEGREE = 10

# vertices of the reference triangle, local face j runs from vertex j to j+1
REF_VERTICES = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


def _check_degree(p):
    if not (isinstance(p, (int, np.integer)) and 1 <= p <= MAX_DEGREE):
        raise ValueError(f"polynomial degree must be an integer in [1, {MAX_DEGREE}], got {p!r}")


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    domain: str
    points: np.ndarray  # (n,) on the segment, (n, 2) on the triangle
    weights: np.ndarray
    degree: int


@lru_cache(maxsize=None)
def quadrature(domain: str, exactness: int) -> QuadratureRule:
    """Gauss rule on the segment, collapsed Gauss-Jacobi rule on the triangle."""
    if exactness < 0 or exactness > 60:
        raise ValueError(f"unsupported quadrature exactness {exactness}")
    n = exactness // 2 + 1
    x, w = roots_legendre(n)
    s, ws = 0.5 * (x + 1.0), 0.5 * w
    if domain == "segment":
        return QuadratureRule("segment", s, ws, exactness)
    if domain == "triangle":
        # the (1 - eta) Jacobian of the collapse map is absorbed by the Jacobi weight
        t, wt = roots_jacobi(n, 1.0, 0.0)
        eta, weta = 0.5 * (t + 1.0), 0.25 * wt
        S, E = np.meshgrid(s, eta, indexing="ij")
        W = np.outer(ws, weta)
        pts = np.stack([(S * (1.0 - E)).ravel(), E.ravel()], axis=1)
        return QuadratureRule("triangle", pts, W.ravel(), exactness)
    raise ValueError(f"unknown quadrature domain {domain!r}")


def dubiner(p: int, points: np.ndarray):
    """Orthogonal polynomials of total degree <= p and their gradients.

    Uses the scaled Legendre recurrence so the collapsed-coordinate
    singularity at (0, 1) never appears.  Returns ``(vals, grads)`` with
    shapes ``(npts, dim)`` and ``(npts, dim, 2)``.
    """
    pts = np.atleast_2d(points)
    xi, eta = pts[:, 0], pts[:, 1]
    w = 2.0 * xi + eta - 1.0  # a * (1 - s) / 2 in collapsed coordinates
    t = 1.0 - eta  # (1 - s) / 2
    s = 2.0 * eta - 1.0
    npts = len(pts)
    # Q_i(xi, eta) = P_i(a) t^i
    Q = np.zeros((p + 1, npts))
    dQx = np.zeros((p + 1, npts))
    dQy = np.zeros((p + 1, npts))
    Q[0] = 1.0
    if p >= 1:
        Q[1], dQx[1], dQy[1] = w, 2.0, 1.0
    for n in range(1, p):
        a, b = (2 * n + 1) / (n + 1), n / (n + 1)
        Q[n + 1] = a * w * Q[n] - b * t**2 * Q[n - 1]
        dQx[n + 1] = a * (2.0 * Q[n] + w * dQx[n]) - b * t**2 * dQx[n - 1]
        dQy[n + 1] = a * (Q[n] + w * dQy[n]) - b * (t**2 * dQy[n - 1] - 2.0 * t * Q[n - 1])
    vals, grads = [], []
    for i in range(p + 1):
        for j in range(p + 1 - i):
            alpha = 2 * i + 1
            J = eval_jacobi(j, alpha, 0, s)
            dJ = 0.5 * (j + alpha + 1) * eval_jacobi(j - 1, alpha + 1, 1, s) if j > 0 else 0.0 * s
            vals.append(Q[i] * J)
            grads.append(np.stack([dQx[i] * J, dQy[i] * J + Q[i] * 2.0 * dJ], axis=1))
    return np.stack(vals, axis=1), np.stack(grads, axis=1)


@dataclass(frozen=True, eq=False)
class SegmentBasis:
    degree: int
    nodes: np.ndarray
    _coeffs: np.ndarray

    @property
    def dim(self) -> int:
        return self.degree + 1

    def _legendre(self, s):
        return legendre.legvander(2.0 * np.asarray(s, dtype=float) - 1.0, self.degree)

    def values(self, s) -> np.ndarray:
        """Basis values, shape ``(npts, p+1)``."""
        return np.atleast_2d(self._legendre(np.atleast_1d(s))) @ self._coeffs

    def derivatives(self, s) -> np.ndarray:
        s = np.atleast_1d(np.asarray(s, dtype=float))
        V = np.zeros((len(s), self.dim))
        for k in range(self.dim):
            c = np.zeros(self.dim)
            c[k] = 1.0
            V[:, k] = 2.0 * legendre.legval(2.0 * s - 1.0, legendre.legder(c))
        return V @ self._coeffs


@lru_cache(maxsize=None)
def segment_basis(p: int) -> SegmentBasis:
    _check_degree(p)
    nodes = np.linspace(0.0, 1.0, p + 1)
    V = legendre.legvander(2.0 * nodes - 1.0, p)
    return SegmentBasis(p, nodes, np.linalg.inv(V))


@dataclass(frozen=True, eq=False)
class TriangleBasis:
    """Nodal P_p basis on equispaced lattice nodes.

    Node order: the three vertices, then the edge-interior nodes of local
    faces 0, 1, 2 (each listed in the face direction), then cell-interior
    nodes.
    """

    degree: int
    nodes: np.ndarray  # (dim, 2)
    vertex_nodes: np.ndarray
    edge_nodes: tuple  # per local face, interior nodes in face direction
    interior_nodes: np.ndarray
    _coeffs: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.nodes)

    def face_nodes(self, j: int) -> np.ndarray:
        """All p+1 nodes on local face j, from vertex j to vertex j+1."""
        return np.concatenate([[j], self.edge_nodes[j], [(j + 1) % 3]]).astype(int)

    def values(self, points) -> np.ndarray:
        v, _ = dubiner(self.degree, np.asarray(points, dtype=float))
        return v @ self._coeffs

    def gradients(self, points) -> np.ndarray:
        """Shape ``(npts, dim, 2)``."""
        _, g = dubiner(self.degree, np.asarray(points, dtype=float))
        return np.einsum("nkd,ki->nid", g, self._coeffs)


@lru_cache(maxsize=None)
def triangle_basis(p: int) -> TriangleBasis:
    _check_degree(p)
    nodes = [REF_VERTICES[0], REF_VERTICES[1], REF_VERTICES[2]]
    edge_nodes = []
    for j in range(3):
        a, b = REF_VERTICES[j], REF_VERTICES[(j + 1) % 3]
        start = len(nodes)
        nodes += [a + (k / p) * (b - a) for k in range(1, p)]
        edge_nodes.append(np.arange(start, len(nodes)))
    start = len(nodes)
    nodes += [np.array([i / p, j / p]) for j in range(1, p) for i in range(1, p - j)]
    interior = np.arange(start, len(nodes))
    nodes = np.array(nodes)
    V, _ = dubiner(p, nodes)
    return TriangleBasis(
        degree=p,
        nodes=nodes,
        vertex_nodes=np.arange(3),
        edge_nodes=tuple(edge_nodes),
        interior_nodes=interior,
        _coeffs=np.linalg.inv(V),
    )
