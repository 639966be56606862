"""Multi-well phase-transition toolkit.

Computational side of the vector order-parameter model Delta u = W_u(u):
finite reflection groups and equivariant fields, a catalog of multi-well
potentials, 1D heteroclinic connections, junction field solves, interface
diagnostics, and the sharp-interface partition calculus (weighted Steiner
points, surface-tension metrics, cone densities).
"""

__version__ = "0.1.0"

from . import kernels
from . import groups
from . import potentials
from . import connect
from . import fields
from . import diagnostics
from . import partitions

__all__ = [
    "kernels",
    "groups",
    "potentials",
    "connect",
    "fields",
    "diagnostics",
    "partitions",
    "__version__",
]
