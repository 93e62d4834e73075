"""Point smoothers, the symmetric V-cycle and the outer iterations.

The V-cycle on level l with smoother R and m smoothing steps:

    x^0 = 0
    x^i = x^{i-1} + R^i (mu - A x^{i-1}),            i = 1..m
    y^0 = x^m + I q,   q = B_{l-1} I^T (mu - A x^m)
    y^i = y^{i-1} + R^{i+m} (mu - A y^{i-1}),        i = 1..m
    B_l mu = y^m

with R^i the forward sweep for odd i and its transpose (backward sweep) for
even i.  B_0 is the exact coarse solve.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .skeleton import SkeletonSystem
from .transfer import TransferPair

__all__ = [
    "SmootherConfig",
    "MultigridContext",
    "SolveResult",
    "smooth",
    "v_cycle",
    "precondition_solve",
    "make_context",
]


@numba.njit(cache=True)
def _gs_sweep(indptr, indices, data, x, b, forward):
    n = len(x)
    for step in range(n):
        i = step if forward else n - 1 - step
        diag = 0.0
        acc = b[i]
        for jj in range(indptr[i], indptr[i + 1]):
            j = indices[jj]
            if j == i:
                diag = data[jj]
            else:
                acc -= data[jj] * x[j]
        x[i] = acc / diag


@dataclass(frozen=True)
class SmootherConfig:
    kind: str = "gauss_seidel"
    sweeps: int = 1
    omega: float = 2.0 / 3.0

    def __post_init__(self):
        if self.kind not in ("gauss_seidel", "jacobi"):
            raise ValueError(f"unknown smoother {self.kind!r}")
        if self.sweeps < 1:
            raise ValueError("at least one smoothing step is required")
        if not 0.0 < self.omega <= 1.0:
            raise ValueError("Jacobi damping must lie in (0, 1]")


def _as_csr(sys) -> sp.csr_matrix:
    A = sys.matrix if isinstance(sys, SkeletonSystem) else sys
    return sp.csr_matrix(A)


def smooth(sys, x, b, direction: str = "forward", config: SmootherConfig = SmootherConfig()) -> np.ndarray:
    """One smoothing step ``x + R (b - A x)``; returns a new array."""
    A = _as_csr(sys)
    x = np.array(x, dtype=float, copy=True)
    b = np.asarray(b, dtype=float)
    if x.shape != (A.shape[0],) or b.shape != x.shape:
        raise ValueError("dimension mismatch in smoother")
    diag = A.diagonal()
    if np.any(diag == 0.0):
        raise ZeroDivisionError("zero diagonal entry in the skeleton matrix")
    if config.kind == "jacobi":
        return x + config.omega * (b - A @ x) / diag
    if direction not in ("forward", "backward"):
        raise ValueError(f"unknown sweep direction {direction!r}")
    _gs_sweep(A.indptr, A.indices, A.data, x, b, direction == "forward")
    return x


@dataclass(eq=False)
class MultigridContext:
    systems: list  # SkeletonSystem per level, index 0..L
    transfers: list  # transfers[l] maps level l-1 to l; transfers[0] is None
    smoother: SmootherConfig = field(default_factory=SmootherConfig)

    def __post_init__(self):
        if not self.systems:
            raise ValueError("need at least one level")
        self._matrices = [_as_csr(s) for s in self.systems]
        self._diag = [A.diagonal() for A in self._matrices]
        # dense Cholesky raises if A_0 is not SPD
        self._coarse = sla.cho_factor(self._matrices[0].toarray())

    @property
    def n_levels(self) -> int:
        return len(self.systems)

    def matrix(self, level: int) -> sp.csr_matrix:
        return self._matrices[level]

    def coarse_solve(self, b):
        return sla.cho_solve(self._coarse, b)

    def _smooth_step(self, level, x, b, i):
        A = self._matrices[level]
        if self.smoother.kind == "jacobi":
            x += self.smoother.omega * (b - A @ x) / self._diag[level]
        else:
            _gs_sweep(A.indptr, A.indices, A.data, x, b, i % 2 == 1)


def make_context(systems, transfers, smoother: SmootherConfig | None = None) -> MultigridContext:
    return MultigridContext(list(systems), list(transfers), smoother or SmootherConfig())


def v_cycle(ctx: MultigridContext, level: int, mu: np.ndarray) -> np.ndarray:
    """Apply B_level to ``mu``."""
    if not 0 <= level < ctx.n_levels:
        raise ValueError(f"level {level} outside the hierarchy")
    mu = np.asarray(mu, dtype=float)
    if level == 0:
        return ctx.coarse_solve(mu)
    A = ctx.matrix(level)
    m = ctx.smoother.sweeps
    # a GS sweep on A x = mu starting from x equals x + R (mu - A x)
    x = np.zeros_like(mu)
    for i in range(1, m + 1):
        ctx._smooth_step(level, x, mu, i)
    pair = ctx.transfers[level]
    q = v_cycle(ctx, level - 1, pair.restriction @ (mu - A @ x))
    y = x + pair.injection @ q
    for i in range(1, m + 1):
        ctx._smooth_step(level, y, mu, i + m)
    return y


@dataclass
class SolveResult:
    x: np.ndarray
    iterations: int
    residual: float  # relative, recomputed from scratch
    converged: bool
    history: list = field(default_factory=list)


def precondition_solve(
    ctx: MultigridContext,
    b: np.ndarray,
    tol: float = 1e-6,
    max_iter: int = 500,
    mode: str = "stationary",
    x0: np.ndarray | None = None,
) -> SolveResult:
    """Solve A_L x = b with the V-cycle on the finest level.

    Stops once ||b - A x||_2 / ||b||_2 < tol.  ``mode`` is ``stationary``
    (x <- x + B (b - A x)) or ``pcg``.
    """
    if not tol > 0:
        raise ValueError("tolerance must be positive")
    if mode not in ("stationary", "pcg"):
        raise ValueError(f"unknown mode {mode!r}")
    L = ctx.n_levels - 1
    A = ctx.matrix(L)
    b = np.asarray(b, dtype=float)
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float, copy=True)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return SolveResult(np.zeros_like(b), 0, 0.0, True)

    r = b - A @ x
    hist = [np.linalg.norm(r) / bnorm]
    k = 0
    if mode == "stationary":
        while hist[-1] >= tol and k < max_iter:
            x += v_cycle(ctx, L, r)
            r = b - A @ x
            k += 1
            hist.append(np.linalg.norm(r) / bnorm)
    else:
        z = v_cycle(ctx, L, r)
        d = z.copy()
        rz = r @ z
        while hist[-1] >= tol and k < max_iter:
            Ad = A @ d
            alpha = rz / (d @ Ad)
            x += alpha * d
            r -= alpha * Ad
            k += 1
            hist.append(np.linalg.norm(r) / bnorm)
            if hist[-1] < tol:
                break
            z = v_cycle(ctx, L, r)
            rz_new = r @ z
            d = z + (rz_new / rz) * d
            rz = rz_new
    res = float(np.linalg.norm(b - A @ x) / bnorm)
    return SolveResult(x, k, res, res < tol, hist)
