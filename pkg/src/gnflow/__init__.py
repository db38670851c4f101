"""gnflow: dispersive shallow-water (Green-Naghdi) dynamics on a periodic
1D domain over nonflat bathymetry.

Two equivalent formulations of the same flow:

* an Eulerian one, where each time step inverts an elliptic operator in the
  velocity equation, and
* a Lagrangian one, where the flow map of the velocity field satisfies a
  second-order ODE on the torus and no per-step inversion of the map is
  needed.

Plus a verification harness (twin runs, continuous-dependence study,
solitary-wave benchmark, convergence tables) and a CLI.
"""

__version__ = "0.1.0"

from . import errors
from ._kernels import backend_name
from .grid import Field, Grid, compose, deriv, integrate, invert_map, sobolev_norm

__all__ = [
    "Grid", "Field", "deriv", "integrate", "sobolev_norm", "compose",
    "invert_map", "errors", "backend_name", "__version__",
]
