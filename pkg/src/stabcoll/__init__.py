"""Stabilized isogeometric spline collocation for transport, Stokes and Navier-Stokes.

Submodules
----------
spline        B-spline spaces, basis evaluation, Greville interpolation
grid          collocation sets and mesh metrics
linsys        sparse systems and direct solves
transport     SUPG advection-diffusion
stokes        PSPG Stokes (velocity-pressure and rotational form)
navier_stokes SUPG/PSPG/grad-div Navier-Stokes with Newton
benchmarks    closed-form test problems
verify        error norms, rates, reference comparison
config, output, cli
              run configuration, result files and the command line
"""

__version__ = "0.1.0"

from .exceptions import (AssemblyError, ConfigError, DegenerateGridError, DegenerateTauError,
                         DomainError, InterpolationError, NonConvergenceError,
                         SingularSystemError, StabcollError, UnsupportedDegreeError,
                         UnsupportedOrderError)
from .flow import FlowOptions, FlowSolution
from .spline import (KnotVector, SplineField, SplineSpace1D, TensorSplineSpace2D,
                     open_uniform_knots, stretched_knots)

__all__ = [
    "__version__",
    "KnotVector", "SplineSpace1D", "TensorSplineSpace2D", "SplineField",
    "open_uniform_knots", "stretched_knots", "FlowOptions", "FlowSolution",
    "StabcollError", "DomainError", "UnsupportedOrderError", "UnsupportedDegreeError",
    "InterpolationError", "DegenerateGridError", "DegenerateTauError", "AssemblyError",
    "SingularSystemError", "NonConvergenceError", "ConfigError",
]
