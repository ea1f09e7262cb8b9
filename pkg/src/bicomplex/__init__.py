"""Difference variational bicomplex: exact symbolic forms on Z^p x P(R^q), their
homotopy operators, Euler-Lagrange and Noether machinery, multisymplectic structures,
and numerical schemes that preserve them.
"""

__version__ = "0.1.0"

from .dsl import ParseError, parse
from .expr import ZERO, ONE, Expr, FiberCoord, compile_expr
from .forms import Form, co_vol, delta, dv, scalar, vol
from .homotopy import (
    edge_homotopy,
    h_horizontal,
    h_vertical,
    inverse_variational,
    reconstruct_closed,
)
from .multisymplectic import (
    DegenerateLagrangian,
    el_system,
    multimomentum,
    structural_identity,
    structure,
)
from .operators import VectorField, contract, d_h, d_total, d_v, lie_derivative, lie_difference, shift_form
from .signature import Signature
from .variational import (
    boundary_term,
    delta_v,
    divergence_invert,
    euler_lagrange,
    interior_euler,
    lagrangian,
    noether,
    source_form,
)

__all__ = [
    "__version__", "ParseError", "parse", "ZERO", "ONE", "Expr", "FiberCoord", "compile_expr",
    "Form", "co_vol", "delta", "dv", "scalar", "vol",
    "edge_homotopy", "h_horizontal", "h_vertical", "inverse_variational", "reconstruct_closed",
    "DegenerateLagrangian", "el_system", "multimomentum", "structural_identity", "structure",
    "VectorField", "contract", "d_h", "d_total", "d_v", "lie_derivative", "lie_difference", "shift_form",
    "Signature", "boundary_term", "delta_v", "divergence_invert", "euler_lagrange", "interior_euler",
    "lagrangian", "noether", "source_form",
]
