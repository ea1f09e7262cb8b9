"""Structure-preserving schemes: Euler-B for mechanics, the staggered wave scheme and the
Euler box scheme for the Zakharov system, plus their multisymplectic diagnostics."""

from .engine import ConfigError, InstabilityError, LatticeScheme, SchemeError
from .euler_b import EulerB
from .mesh import Mesh, MeshError
from .schemes import build_scheme, wave_scheme, zakharov_scheme

__all__ = [
    "ConfigError", "InstabilityError", "LatticeScheme", "SchemeError", "EulerB", "Mesh", "MeshError",
    "build_scheme", "wave_scheme", "zakharov_scheme",
]
