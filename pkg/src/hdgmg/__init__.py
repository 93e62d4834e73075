"""Hybridizable discontinuous Galerkin solver for the Poisson problem with a
homogeneous geometric multigrid preconditioner."""

from .driver import RunConfig, RunReport, run
from .mesh import MeshHierarchy, MeshLevel, build_coarse_mesh, build_hierarchy, refine
from .multigrid import MultigridContext, SmootherConfig, make_context, precondition_solve, v_cycle
from .skeleton import SkeletonSystem, assemble, reconstruct
from .transfer import TransferPair, build_transfer

__version__ = "0.1.0"

__all__ = [
    "MeshHierarchy",
    "MeshLevel",
    "MultigridContext",
    "RunConfig",
    "RunReport",
    "SkeletonSystem",
    "SmootherConfig",
    "TransferPair",
    "assemble",
    "build_coarse_mesh",
    "build_hierarchy",
    "build_transfer",
    "make_context",
    "precondition_solve",
    "reconstruct",
    "refine",
    "run",
    "v_cycle",
]
