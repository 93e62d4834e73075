"""Error norms, convergence orders, flux-balance residuals and spectra."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .basis import quadrature, segment_basis, triangle_basis
from .local_solver import cell_geometry
from .skeleton import SkeletonSystem, reconstruct

__all__ = [
    "ErrorRecord",
    "l2_error",
    "eoc",
    "coupling_residual",
    "coupling_residual_vector",
    "spectrum_probe",
    "MAX_DENSE_DOFS",
]

MAX_DENSE_DOFS = 6000


@dataclass
class ErrorRecord:
    level: int
    e_u: float
    e_q: float
    eoc_u: float | None = None
    eoc_q: float | None = None


def l2_error(mesh, field: np.ndarray, exact, degree: int | None = None) -> float:
    """L2 distance between a cellwise P_p field and a callable.

    ``field`` has shape (nc, nV) for scalars or (nc, d, nV) for vectors;
    ``exact(x, y)`` returns an array of matching leading shape (``d`` first
    for vectors).
    """
    field = np.asarray(field, dtype=float)
    nV = field.shape[-1]
    p = int(round((-3 + math.sqrt(1 + 8 * nV)) / 2))
    tb = triangle_basis(p)
    qt = quadrature("triangle", degree if degree is not None else 2 * p + 6)
    phi = tb.values(qt.points)
    coords = mesh.cell_coords()
    J, det, *_ = cell_geometry(coords)
    x = coords[:, 0, None, :] + np.einsum("nab,qb->nqa", J, qt.points)
    ex = np.asarray(exact(x[..., 0], x[..., 1]), dtype=float)
    if field.ndim == 2:
        diff = field @ phi.T - ex
        sq = diff**2
    else:
        vals = np.einsum("nki,qi->knq", field, phi)
        ex = np.broadcast_to(ex, vals.shape)
        sq = ((vals - ex) ** 2).sum(axis=0)
    return float(math.sqrt(max(np.sum(det[:, None] * qt.weights * sq), 0.0)))


def eoc(e_coarse: float, e_fine: float) -> float | None:
    """log2 of the error ratio; ``None`` unless both errors are positive."""
    if not (e_coarse > 0 and e_fine > 0):
        return None
    return math.log(e_coarse / e_fine) / math.log(2.0)


def coupling_residual_vector(system: SkeletonSystem, lam: np.ndarray) -> np.ndarray:
    """Flux balance sum_T <q.n + tau (u - lam), mu>_F per interior trace dof.

    Evaluated by face quadrature from the reconstructed fields, independent
    of the condensed matrix.
    """
    p, tau, mesh = system.p, system.tau, system.mesh
    u, q = reconstruct(system, lam)
    lam_c = system.dofmap.cell_values(lam)
    tb, sb = triangle_basis(p), segment_basis(p)
    qs = quadrature("segment", 2 * p + 2)
    psi = sb.values(qs.points)
    _, _, _, lengths, normals = cell_geometry(mesh.cell_coords())
    nd = p + 1
    local = np.zeros_like(lam_c)
    ref = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    for j in range(3):
        a, b = ref[j], ref[(j + 1) % 3]
        phif = tb.values(a + qs.points[:, None] * (b - a))
        uf = u @ phif.T  # (nc, nq)
        qn = np.einsum("nki,qi,nk->nq", q, phif, normals[:, j])
        lf = lam_c[:, j * nd : (j + 1) * nd] @ psi.T
        flux = qn + tau * (uf - lf)
        local[:, j * nd : (j + 1) * nd] = lengths[:, j, None] * np.einsum("q,nq,qm->nm", qs.weights, flux, psi)
    return system.dofmap.gather(local)


def coupling_residual(system: SkeletonSystem, lam: np.ndarray) -> float:
    return float(np.max(np.abs(coupling_residual_vector(system, lam)), initial=0.0))


def spectrum_probe(matrix, max_dofs: int = MAX_DENSE_DOFS):
    """Extreme eigenvalues and 2-norm condition number of a symmetric matrix."""
    n = matrix.shape[0]
    if n > max_dofs:
        raise ValueError(f"{n} unknowns exceed the dense eigensolver cap of {max_dofs}")
    dense = matrix.toarray() if hasattr(matrix, "toarray") else np.asarray(matrix)
    ev = sla.eigvalsh(dense)
    return float(ev[0]), float(ev[-1]), float(ev[-1] / ev[0])
