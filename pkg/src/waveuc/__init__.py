"""Stabilized space-time finite element solver for wave-equation unique
continuation in one space dimension."""

from .config import DiscretizationConfig, ExperimentPreset, PRESETS
from .krylov import GmresConfig, SolveReport, gmres
from .postproc import ErrorReport, LiftedSolution, eoc, error_norms, lift
from .precond import build_preconditioner
from .spacetime_system import NormReport, SpaceTimeSystem

__all__ = [
    "DiscretizationConfig",
    "ExperimentPreset",
    "PRESETS",
    "GmresConfig",
    "SolveReport",
    "gmres",
    "ErrorReport",
    "LiftedSolution",
    "eoc",
    "error_norms",
    "lift",
    "build_preconditioner",
    "NormReport",
    "SpaceTimeSystem",
]
