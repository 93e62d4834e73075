"""Triangulations of the unit square and their uniformly refined hierarchy.

Local conventions used throughout the package: a cell is a counterclockwise
vertex triple ``(v0, v1, v2)``; its local face ``j`` runs from vertex ``j``
to vertex ``(j + 1) % 3``.  A global face stores its vertices in the order in
which the lower-indexed incident cell traverses it, so the right-hand normal
of the stored direction points out of that cell.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "MeshLevel",
    "MeshHierarchy",
    "build_coarse_mesh",
    "refine",
    "build_hierarchy",
    "write_mesh",
    "MAX_LEVEL",
]

# 8 * 4**9 cells is roughly 2M triangles; anything beyond does not fit the
# memory budget of the trace systems built on top of the mesh.
MAX_LEVEL = 9


@dataclass(frozen=True, eq=False)
class MeshLevel:
    level: int
    vertices: np.ndarray  # (nv, 2)
    cells: np.ndarray  # (nc, 3), counterclockwise
    faces: np.ndarray  # (nf, 2)
    face_cells: np.ndarray  # (nf, 2), second entry -1 on the boundary
    face_local: np.ndarray  # (nf, 2), local face index in each incident cell
    cell_faces: np.ndarray  # (nc, 3)
    boundary: np.ndarray  # (nf,) bool
    h: float
    parent: np.ndarray | None = None  # (nc,) coarse cell of each cell

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def interior_faces(self) -> np.ndarray:
        return np.flatnonzero(~self.boundary)

    def cell_coords(self) -> np.ndarray:
        """Vertex coordinates of every cell, shape ``(nc, 3, 2)``."""
        return self.vertices[self.cells]

    def signed_areas(self) -> np.ndarray:
        x = self.cell_coords()
        e1 = x[:, 1] - x[:, 0]
        e2 = x[:, 2] - x[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    def diameters(self) -> np.ndarray:
        x = self.cell_coords()
        lengths = np.linalg.norm(x[:, [1, 2, 0]] - x, axis=2)
        return lengths.max(axis=1)

    def inradii(self) -> np.ndarray:
        x = self.cell_coords()
        lengths = np.linalg.norm(x[:, [1, 2, 0]] - x, axis=2)
        return 2.0 * self.signed_areas() / lengths.sum(axis=1)

    def cell_face_orientation(self) -> np.ndarray:
        """True where local face ``j`` of a cell runs against the stored face."""
        return self.faces[self.cell_faces, 0] != self.cells


@dataclass(frozen=True, eq=False)
class MeshHierarchy:
    levels: list[MeshLevel]
    child_map: list[np.ndarray] = field(default_factory=list)  # child_map[l-1]: (nc_{l-1}, 4)

    @property
    def h_per_level(self) -> list[float]:
        return [m.h for m in self.levels]

    def __len__(self) -> int:
        return len(self.levels)

    def __getitem__(self, level: int) -> MeshLevel:
        return self.levels[level]


def _topology(vertices: np.ndarray, cells: np.ndarray, level: int, parent=None) -> MeshLevel:
    nc = len(cells)
    local = np.stack([cells, np.roll(cells, -1, axis=1)], axis=2)  # (nc, 3, 2)
    edges = local.reshape(-1, 2)
    keys = np.sort(edges, axis=1)
    _, first, inverse = np.unique(keys, axis=0, return_index=True, return_inverse=True)
    inverse = inverse.ravel()
    # renumber faces by first appearance in cell-major order
    order = np.argsort(first, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))
    face_of_edge = rank[inverse]
    nf = len(order)

    faces = edges[first[order]]
    cell_faces = face_of_edge.reshape(nc, 3)

    counts = np.bincount(face_of_edge, minlength=nf)
    if counts.max() > 2:
        raise ValueError("a face is shared by more than two cells")
    by_face = np.argsort(face_of_edge, kind="stable")
    start = np.concatenate([[0], np.cumsum(counts)[:-1]])
    boundary = counts == 1
    slots = np.stack([by_face[start], by_face[np.minimum(start + 1, len(edges) - 1)]], axis=1)
    face_cells = slots // 3
    face_local = slots % 3
    face_cells[boundary, 1] = -1
    face_local[boundary, 1] = -1

    x = vertices[cells]
    lengths = np.linalg.norm(x[:, [1, 2, 0]] - x, axis=2)
    h = float(lengths.max())
    return MeshLevel(
        level=level,
        vertices=vertices,
        cells=cells,
        faces=faces,
        face_cells=face_cells,
        face_local=face_local,
        cell_faces=cell_faces,
        boundary=boundary,
        h=h,
        parent=parent,
    )


def build_coarse_mesh() -> MeshLevel:
    """Eight triangles: a 2x2 grid of squares, each cut along its anti-diagonal."""
    g = np.array([0.0, 0.5, 1.0])
    vertices = np.array([(x, y) for y in g for x in g])

    def vid(i, j):
        return 3 * j + i

    cells = []
    for j in range(2):
        for i in range(2):
            sw, se = vid(i, j), vid(i + 1, j)
            nw, ne = vid(i, j + 1), vid(i + 1, j + 1)
            cells.append((sw, se, nw))
            cells.append((se, ne, nw))
    return _topology(vertices, np.array(cells, dtype=np.int64), level=0)


def refine(coarse: MeshLevel) -> MeshLevel:
    """Red refinement: every triangle splits into four congruent children."""
    nv = coarse.n_vertices
    mids = 0.5 * (coarse.vertices[coarse.faces[:, 0]] + coarse.vertices[coarse.faces[:, 1]])
    vertices = np.vstack([coarse.vertices, mids])

    v = coarse.cells
    m = nv + coarse.cell_faces  # m[:, j] is the midpoint of local face j
    m01, m12, m20 = m[:, 0], m[:, 1], m[:, 2]
    children = np.stack(
        [
            np.stack([v[:, 0], m01, m20], axis=1),
            np.stack([m01, v[:, 1], m12], axis=1),
            np.stack([m20, m12, v[:, 2]], axis=1),
            np.stack([m12, m20, m01], axis=1),
        ],
        axis=1,
    )  # (nc, 4, 3)
    cells = children.reshape(-1, 3)
    parent = np.repeat(np.arange(coarse.n_cells), 4)
    return _topology(vertices, cells, level=coarse.level + 1, parent=parent)


def build_hierarchy(L: int) -> MeshHierarchy:
    if L < 0:
        raise ValueError("number of refinements must be nonnegative")
    if L > MAX_LEVEL:
        raise MemoryError(f"level {L} exceeds the supported maximum {MAX_LEVEL}")
    levels = [build_coarse_mesh()]
    child_map = []
    for _ in range(L):
        fine = refine(levels[-1])
        child_map.append(np.arange(fine.n_cells).reshape(-1, 4))
        levels.append(fine)
    return MeshHierarchy(levels=levels, child_map=child_map)


def write_mesh(mesh: MeshLevel, path) -> None:
    """Plain-text dump: vertices ``x y``, cells ``v0 v1 v2``, faces ``v0 v1 flag``.

    Sections are preceded by a header line with their name and length.
    """
    lines = [f"vertices {mesh.n_vertices}"]
    lines += [f"{x:.17g} {y:.17g}" for x, y in mesh.vertices]
    lines.append(f"cells {mesh.n_cells}")
    lines += [f"{a} {b} {c}" for a, b, c in mesh.cells]
    lines.append(f"faces {mesh.n_faces}")
    lines += [f"{a} {b} {int(flag)}" for (a, b), flag in zip(mesh.faces, mesh.boundary)]
    Path(path).write_text("\n".join(lines) + "\n")
