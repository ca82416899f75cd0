"""Staggered and embedded staggered DG solvers for steady convection-diffusion."""
from .analysis import ConvergenceTable, discrete_norms, l2_error_flux, l2_error_potential, sample_field
from .forms import ConvectionField, assemble_B, assemble_B_adjoint, assemble_load, assemble_mass, assemble_R
from .mesh import EdgeKind, StaggeredMesh, build_structured, from_triangulation, jump
from .problems import ManufacturedProblem, make_problem
from .spaces import DofSpace, SpaceKind, build_embedding, build_space
from .system import (
    Discretization,
    SingularSystemError,
    SolveResult,
    apply_dirichlet,
    condense,
    embed_system,
    solve,
    solve_problem,
)

__version__ = "0.1.0"

__all__ = [
    "ConvectionField", "ConvergenceTable", "Discretization", "DofSpace", "EdgeKind",
    "ManufacturedProblem", "SingularSystemError", "SolveResult", "SpaceKind", "StaggeredMesh",
    "apply_dirichlet", "assemble_B", "assemble_B_adjoint", "assemble_R", "assemble_load",
    "assemble_mass", "build_embedding", "build_space", "build_structured", "condense",
    "discrete_norms", "embed_system", "from_triangulation", "jump", "l2_error_flux",
    "l2_error_potential", "make_problem", "sample_field", "solve", "solve_problem",
]
