import numpy as np
import pytest

from hdgmg.mesh import MAX_LEVEL, build_coarse_mesh, build_hierarchy, refine, write_mesh


def test_coarse_mesh_counts():
    m = build_coarse_mesh()
    assert m.n_cells == 8
    assert m.n_faces == 16
    assert m.boundary.sum() == 8
    assert (~m.boundary).sum() == 8
    assert m.signed_areas().sum() == pytest.approx(1.0, abs=1e-12)


def test_coarse_mesh_diagonals_run_top_left_to_bottom_right():
    m = build_coarse_mesh()
    diag = []
    for a, b in m.faces:
        d = m.vertices[b] - m.vertices[a]
        if abs(d[0]) > 0 and abs(d[1]) > 0:
            diag.append(np.sign(d[0]) * np.sign(d[1]))
    assert len(diag) == 4
    assert all(s < 0 for s in diag)


def test_refine_counts():
    fine = refine(build_coarse_mesh())
    assert fine.n_cells == 32
    assert fine.n_faces == 56
    assert fine.boundary.sum() == 16
    assert (~fine.boundary).sum() == 40
    assert fine.h == build_coarse_mesh().h / 2


@pytest.mark.parametrize("L,cells", [(0, 8), (2, 128), (6, 32768)])
def test_hierarchy_cell_counts(L, cells):
    H = build_hierarchy(L)
    assert len(H) == L + 1
    assert H[L].n_cells == cells


def test_hierarchy_rejects_bad_levels():
    with pytest.raises(ValueError):
        build_hierarchy(-1)
    with pytest.raises(MemoryError):
        build_hierarchy(MAX_LEVEL + 1)


@pytest.fixture(scope="module")
def H():
    return build_hierarchy(4)


def test_level_invariants(H):
    for m in H.levels:
        assert 3 * m.n_cells == m.boundary.sum() + 2 * (~m.boundary).sum()
        assert np.all(m.signed_areas() > 0)
        assert m.signed_areas().sum() == pytest.approx(1.0, abs=1e-12)
        interior = ~m.boundary
        assert np.all(m.face_cells[interior] >= 0)
        assert np.all(m.face_cells[m.boundary, 1] == -1)
        # boundary faces lie on the boundary of the square
        x = m.vertices[m.faces[m.boundary]]
        on = (np.abs(x) < 1e-14) | (np.abs(x - 1) < 1e-14)
        assert np.all((on[:, 0, 0] & on[:, 1, 0]) | (on[:, 0, 1] & on[:, 1, 1]))
        # cell_faces and face_cells/face_local agree
        for f in range(m.n_faces):
            for k in range(2):
                c, j = m.face_cells[f, k], m.face_local[f, k]
                if c >= 0:
                    assert m.cell_faces[c, j] == f


def test_face_orientation_points_to_higher_cell(H):
    m = H[2]
    for f in np.flatnonzero(~m.boundary):
        c0, c1 = m.face_cells[f]
        assert c0 < c1
        a, b = m.vertices[m.faces[f]]
        n = np.array([b[1] - a[1], a[0] - b[0]])
        mid = 0.5 * (a + b)
        assert n @ (m.vertices[m.cells[c1]].mean(0) - mid) > 0


def test_nestedness_and_h(H):
    for l in range(1, len(H)):
        coarse, fine = H[l - 1], H[l]
        child_area = fine.signed_areas()[H.child_map[l - 1]].sum(axis=1)
        np.testing.assert_allclose(child_area, coarse.signed_areas(), rtol=0, atol=1e-14)
        assert fine.h == coarse.h / 2
        assert np.all(fine.parent[H.child_map[l - 1]] == np.arange(coarse.n_cells)[:, None])


def test_fine_faces_partition_coarse_faces(H):
    coarse, fine = H[1], H[2]
    fmid = 0.5 * (fine.vertices[fine.faces[:, 0]] + fine.vertices[fine.faces[:, 1]])
    flen = np.linalg.norm(fine.vertices[fine.faces[:, 1]] - fine.vertices[fine.faces[:, 0]], axis=1)
    for a, b in coarse.vertices[coarse.faces]:
        d = b - a
        t = (fmid - a) @ d / (d @ d)
        off = np.abs((fmid - a)[:, 0] * d[1] - (fmid - a)[:, 1] * d[0]) / np.linalg.norm(d)
        # collinear fine faces inside the coarse segment
        inside = (off < 1e-12) & (t > 0) & (t < 1)
        fa = fine.vertices[fine.faces[inside]]
        cross = (fa[:, :, 0] - a[0]) * d[1] - (fa[:, :, 1] - a[1]) * d[0]
        assert inside.sum() == 2
        assert np.all(np.abs(cross) < 1e-12)
        assert flen[inside].sum() == pytest.approx(np.linalg.norm(d), abs=1e-12)


def test_quasi_uniformity_constant_across_levels(H):
    ratios = [m.diameters().max() / m.inradii().min() for m in H.levels]
    np.testing.assert_allclose(ratios, ratios[0], rtol=1e-12)


def test_write_mesh(tmp_path):
    m = build_coarse_mesh()
    path = tmp_path / "mesh.txt"
    write_mesh(m, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "vertices 9"
    assert lines[10] == "cells 8"
    assert lines[19] == "faces 16"
    flags = [int(line.split()[2]) for line in lines[20:]]
    assert sum(flags) == 8
    assert len(lines) == 36
