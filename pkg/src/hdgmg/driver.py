"""Nested-iteration experiments over a mesh hierarchy."""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .analysis import eoc, l2_error
from .mesh import build_hierarchy
from .multigrid import SmootherConfig, make_context, precondition_solve
from .skeleton import assemble, reconstruct
from .transfer import build_transfer

__all__ = [
    "RunConfig",
    "LevelRecord",
    "RunReport",
    "NonConvergenceError",
    "run",
    "manufactured_rhs",
    "exact_u",
    "exact_q",
    "tau_value",
]

log = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi


def exact_u(x, y):
    return np.sin(TWO_PI * x) * np.sin(TWO_PI * y)


def exact_q(x, y):
    """-grad u, stacked with the component axis first."""
    return np.stack(
        [
            -TWO_PI * np.cos(TWO_PI * x) * np.sin(TWO_PI * y),
            -TWO_PI * np.sin(TWO_PI * x) * np.cos(TWO_PI * y),
        ]
    )


def manufactured_rhs(x, y):
    """-Laplace of sin(2 pi x) sin(2 pi y)."""
    return 2.0 * TWO_PI**2 * np.sin(TWO_PI * x) * np.sin(TWO_PI * y)


def _one(x, y):
    return np.ones_like(x)


@dataclass(frozen=True)
class RunConfig:
    p: int = 1
    tau: str | float = "one_over_h"  # or a positive constant
    levels: int = 6
    smooth: int = 1
    tol: float = 1e-6
    rhs: str = "one"
    mode: str = "stationary"
    smoother: str = "gauss_seidel"
    nested: bool = True
    max_iter: int = 1000

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("polynomial degree must be >= 1")
        if self.levels < 0:
            raise ValueError("number of levels must be >= 0")
        if self.smooth < 1:
            raise ValueError("at least one smoothing step is required")
        if not self.tol > 0:
            raise ValueError("tolerance must be positive")
        if self.rhs not in ("one", "manufactured"):
            raise ValueError(f"unknown right-hand side {self.rhs!r}")
        if self.mode not in ("stationary", "pcg"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if isinstance(self.tau, str):
            if self.tau != "one_over_h":
                raise ValueError(f"unknown tau rule {self.tau!r}")
        elif not self.tau > 0:
            raise ValueError("tau must be positive")

    @property
    def tau_label(self) -> str:
        return "1/h" if self.tau == "one_over_h" else f"{float(self.tau):g}"


def tau_value(rule, h: float) -> float:
    return 1.0 / h if rule == "one_over_h" else float(rule)


@dataclass
class LevelRecord:
    level: int
    dofs: int
    iterations: int
    residual: float
    wall_time: float
    converged: bool = True
    e_u: float | None = None
    e_q: float | None = None
    eoc_u: float | None = None
    eoc_q: float | None = None


@dataclass
class RunReport:
    config: RunConfig
    levels: list[LevelRecord] = field(default_factory=list)

    @property
    def iterations(self) -> list[int]:
        return [r.iterations for r in self.levels]

    @property
    def converged(self) -> bool:
        return all(r.converged for r in self.levels)


class NonConvergenceError(RuntimeError):
    def __init__(self, report: RunReport):
        last = report.levels[-1]
        super().__init__(
            f"level {last.level}: no convergence after {last.iterations} iterations "
            f"(relative residual {last.residual:.3e})"
        )
        self.report = report


def run(cfg: RunConfig) -> RunReport:
    """Assemble and solve level by level, starting each level from the injected
    solution of the previous one."""
    f = _one if cfg.rhs == "one" else manufactured_rhs
    hierarchy = build_hierarchy(cfg.levels)
    smoother = SmootherConfig(kind=cfg.smoother, sweeps=cfg.smooth)
    report = RunReport(cfg)
    systems, transfers = [], [None]
    x = None
    for level in range(cfg.levels + 1):
        t0 = time.monotonic()
        mesh = hierarchy[level]
        sys_ = assemble(mesh, cfg.p, tau_value(cfg.tau, mesh.h), f)
        systems.append(sys_)
        if level > 0:
            coarse = systems[level - 1]
            transfers.append(build_transfer(hierarchy, level, cfg.p, coarse.tau, coarse.operators))
        ctx = make_context(systems, transfers, smoother)
        x0 = transfers[level].injection @ x if (level > 0 and cfg.nested) else None
        res = precondition_solve(ctx, sys_.rhs, cfg.tol, cfg.max_iter, cfg.mode, x0=x0)
        x = res.x
        rec = LevelRecord(level, sys_.n_dofs, res.iterations, res.residual, time.monotonic() - t0, res.converged)
        if cfg.rhs == "manufactured":
            u, q = reconstruct(sys_, x)
            rec.e_u = l2_error(mesh, u, exact_u)
            rec.e_q = l2_error(mesh, q, exact_q)
            if report.levels:
                prev = report.levels[-1]
                rec.eoc_u = eoc(prev.e_u, rec.e_u)
                rec.eoc_q = eoc(prev.e_q, rec.e_q)
        report.levels.append(rec)
        log.info("p=%d tau=%s m=%d level %d: %d dofs, %d iterations, residual %.2e",
                 cfg.p, cfg.tau_label, cfg.smooth, level, rec.dofs, rec.iterations, rec.residual)
        if not res.converged:
            raise NonConvergenceError(report)
    return report
