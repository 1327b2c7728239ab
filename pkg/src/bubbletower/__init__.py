"""bubbletower: a desk-scale numerical laboratory for bubble-tower dynamics
of the energy-critical semilinear heat equation u_t = Lap(u) + u^p in radial
R^n, n >= 7.

Submodules mirror the pipeline: closed-form profiles -> interaction
constants -> elliptic corrector -> scale-parameter dynamics -> glued ansatz
and flow residual -> weighted norms -> heat-kernel (Duhamel) barrier checks
-> forward simulation. The `acceptance` module runs the quantitative checks
end to end and `cli` exposes everything as subcommands.
"""
from .constants import AnalyticParams, ConstantTable, build_constant_table, compute_cstar
from .profiles import Dimension

__version__ = "0.1.0"

__all__ = [
    "AnalyticParams",
    "ConstantTable",
    "Dimension",
    "build_constant_table",
    "compute_cstar",
    "__version__",
]
