"""Half-line cubic NLS laboratory: Dirichlet-to-Neumann traces and estimate checks."""

from dtnlab.grid import ComplexField, GridSpec, make_grid, sponge_profile
from dtnlab.boundary import DecayFamily, ManufacturedSolution, TraceSeries
from dtnlab.solver import RunResult, SolverConfig, neumann_trace, run, step

__all__ = [
    "ComplexField",
    "DecayFamily",
    "GridSpec",
    "ManufacturedSolution",
    "RunResult",
    "SolverConfig",
    "TraceSeries",
    "make_grid",
    "neumann_trace",
    "run",
    "sponge_profile",
    "step",
]

__version__ = "0.1.0"
