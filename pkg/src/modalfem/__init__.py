"""Finite elements for Poisson problems with small circular or
cylindrical inclusions, coupled through a reduced Fourier-modal
Lagrange multiplier on the inclusion boundaries."""

from .mesh import BoxDomain, StructuredMesh, build_box_mesh
from .fem import FeSpace, assemble_stiffness, assemble_mass, assemble_load
from .modal import Disk2D, CylinderZ3D, ModalBasis, build_boundary_quadrature
from .coupling import SaddleSystem, build_saddle_system
from .solve import BulkSolver, SolveReport, solve_saddle, estimate_infsup
from .problems import Problem, make_problem, PROBLEM_IDS
from .experiments import SweepSpec, run_case, sweep, fit_loglog
from .output import CSV_HEADER, emit_csv, emit_vtk

__all__ = [
    "BoxDomain",
    "StructuredMesh",
    "build_box_mesh",
    "FeSpace",
    "assemble_stiffness",
    "assemble_mass",
    "assemble_load",
    "Disk2D",
    "CylinderZ3D",
    "ModalBasis",
    "build_boundary_quadrature",
    "SaddleSystem",
    "build_saddle_system",
    "BulkSolver",
    "SolveReport",
    "solve_saddle",
    "estimate_infsup",
    "Problem",
    "make_problem",
    "PROBLEM_IDS",
    "SweepSpec",
    "run_case",
    "sweep",
    "fit_loglog",
    "CSV_HEADER",
    "emit_csv",
    "emit_vtk",
]
