"""Independent reference computations used by the tests.

Everything here integrates in physical coordinates with generous quadrature
and the non-integrated-by-parts form of the local equations, so it shares
no assembly code with the package beyond basis evaluation.
"""
import numpy as np

from hdgmg.basis import quadrature, segment_basis, triangle_basis


def physical_quadrature(coords, degree=14):
    coords = np.asarray(coords, float)
    qt = quadrature("triangle", degree)
    J = np.column_stack([coords[1] - coords[0], coords[2] - coords[0]])
    det = np.linalg.det(J)
    x = coords[0] + qt.points @ J.T
    return x, qt.weights * det, qt.points, np.linalg.inv(J)


def cell_fields(coords, p, u_coef, q_coef, points_ref, Jinv):
    tb = triangle_basis(p)
    phi = tb.values(points_ref)
    dphi = tb.gradients(points_ref) @ Jinv  # physical gradients
    u = phi @ u_coef
    q = np.stack([phi @ q_coef[0], phi @ q_coef[1]], axis=1)
    divq = dphi[:, :, 0] @ q_coef[0] + dphi[:, :, 1] @ q_coef[1]
    return u, q, divq, phi, dphi


def face_data(coords, p, degree=14):
    """Per local face: physical points, weights, reference points, normal, trace basis."""
    coords = np.asarray(coords, float)
    ref = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    qs = quadrature("segment", degree)
    psi = segment_basis(p).values(qs.points)
    out = []
    for j in range(3):
        a, b = coords[j], coords[(j + 1) % 3]
        L = np.linalg.norm(b - a)
        n = np.array([b[1] - a[1], -(b[0] - a[0])]) / L
        x = a + qs.points[:, None] * (b - a)
        xr = ref[j] + qs.points[:, None] * (ref[(j + 1) % 3] - ref[j])
        out.append((x, qs.weights * L, xr, n, psi))
    return out


def local_residual(coords, p, tau, lam, u_coef, q_coef, f=None):
    """Residual of the uncondensed local equations against every test function.

    (q, r) - (u, div r) + <lam, r.n> and
    -(q, grad v) + <q.n + tau u, v> - tau <lam, v> - (f, v).
    """
    x, w, xr, Jinv = physical_quadrature(coords)
    u, q, _, phi, dphi = cell_fields(coords, p, u_coef, q_coef, xr, Jinv)
    nV = phi.shape[1]
    nd = p + 1
    r1 = np.zeros((2, nV))
    r2 = np.zeros(nV)
    for k in range(2):
        r1[k] += (w * q[:, k]) @ phi - (w * u) @ dphi[:, :, k]
    r2 -= np.einsum("q,qk,qik->i", w, q, dphi)
    if f is not None:
        r2 -= (w * f(x[:, 0], x[:, 1])) @ phi
    tb = triangle_basis(p)
    for j, (xf, wf, xrf, n, psi) in enumerate(face_data(coords, p)):
        phif = tb.values(xrf)
        lf = psi @ lam[j * nd : (j + 1) * nd]
        uf = phif @ u_coef
        qn = (phif @ q_coef[0]) * n[0] + (phif @ q_coef[1]) * n[1]
        for k in range(2):
            r1[k] += (wf * lf * n[k]) @ phif
        r2 += (wf * (qn + tau * uf - tau * lf)) @ phif
    return np.concatenate([r1.ravel(), r2])


def condensed_form(coords, p, tau, u1, q1, lam1, u2, q2, lam2):
    """(Q lam1, Q lam2)_T + tau <U lam1 - lam1, U lam2 - lam2>_dT by quadrature."""
    x, w, xr, Jinv = physical_quadrature(coords)
    tb = triangle_basis(p)
    phi = tb.values(xr)
    val = sum((w * (phi @ q1[k])) @ (phi @ q2[k]) for k in range(2))
    nd = p + 1
    for j, (xf, wf, xrf, n, psi) in enumerate(face_data(coords, p)):
        phif = tb.values(xrf)
        d1 = phif @ u1 - psi @ lam1[j * nd : (j + 1) * nd]
        d2 = phif @ u2 - psi @ lam2[j * nd : (j + 1) * nd]
        val += tau * (wf * d1) @ d2
    return val


def trace_of(func, coords, p):
    """Local trace coefficients of ``func`` on the three faces of a cell."""
    coords = np.asarray(coords, float)
    s = np.linspace(0.0, 1.0, p + 1)
    vals = []
    for j in range(3):
        a, b = coords[j], coords[(j + 1) % 3]
        pts = a + s[:, None] * (b - a)
        vals.append(func(pts[:, 0], pts[:, 1]))
    return np.concatenate(vals)


def nodal_values(func, coords, p):
    coords = np.asarray(coords, float)
    tb = triangle_basis(p)
    J = np.column_stack([coords[1] - coords[0], coords[2] - coords[0]])
    x = coords[0] + tb.nodes @ J.T
    return func(x[:, 0], x[:, 1])


def global_trace(mesh, dofmap, func, p):
    """Interior-face trace vector of ``func`` sampled at the face Lagrange nodes."""
    s = np.linspace(0.0, 1.0, p + 1)
    lam = np.zeros(dofmap.n_dofs)
    for f in np.flatnonzero(~mesh.boundary):
        a, b = mesh.vertices[mesh.faces[f]]
        pts = a + s[:, None] * (b - a)
        lam[dofmap.face_dofs[f]] = func(pts[:, 0], pts[:, 1])
    return lam


def hat_function(mesh, vertex):
    """Continuous piecewise-linear hat of ``vertex`` evaluated by point location."""
    cells = mesh.cells
    coords = mesh.vertices[cells]

    def w(x, y):
        pts = np.column_stack([np.ravel(x), np.ravel(y)])
        out = np.zeros(len(pts))
        for n, pt in enumerate(pts):
            best, val = -np.inf, 0.0
            for c in range(len(cells)):
                J = np.column_stack([coords[c, 1] - coords[c, 0], coords[c, 2] - coords[c, 0]])
                xi = np.linalg.solve(J, pt - coords[c, 0])
                bary = np.array([1 - xi.sum(), xi[0], xi[1]])
                if bary.min() > best:
                    best = bary.min()
                    k = np.flatnonzero(cells[c] == vertex)
                    val = bary[k[0]] if len(k) else 0.0
            out[n] = val
        return out.reshape(np.shape(x))

    return w
