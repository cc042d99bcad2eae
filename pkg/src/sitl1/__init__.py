"""Sparse error detection via randomised sparsity invariant transforms and l1."""
from . import l1solve, linalg, oracle, sit
from ._kernels import BACKEND
from .errors import *
from .l1solve import SolverConfig, SolveReport, Status, solve_bp, solve_bpdn, solve_lad
from .oracle import certify, l0_oracle
from .problem import Problem
from .sit import Detection, build_frame, build_phi, detect, recover_underdetermined

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "Detection",
    "Problem",
    "SolveReport",
    "SolverConfig",
    "Status",
    "build_frame",
    "build_phi",
    "certify",
    "detect",
    "l0_oracle",
    "l1solve",
    "linalg",
    "oracle",
    "recover_underdetermined",
    "sit",
    "solve_bp",
    "solve_bpdn",
    "solve_lad",
]
