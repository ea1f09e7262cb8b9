"""The two staggered PDE schemes, as degenerate Lagrangians weighted by the local cell area.

Multiplying a scheme Lagrangian by xi*tau (xi_i = x_{i+1} - x_i, tau_j = t_{j+1} - t_j)
turns every difference quotient into a plain difference, so the Lagrangian falls into
the class sum L^i D_i u - H with xi and tau carried as parameter variables.  The
Euler-Lagrange system of the weighted Lagrangian is the scheme with h_x -> xi_i and
h_t -> tau_j, times xi*tau.
"""

from __future__ import annotations

from typing import Mapping

import numpy as np

from ..dsl import parse
from ..multisymplectic import DegenerateLagrangian
from ..signature import Signature
from .engine import ConfigError, FieldSpec, LatticeScheme

DEFAULT_POTENTIAL = "1 - cos(u)"

WAVE_FIELDS = (
    FieldSpec("u", 0.0, 0.0),
    FieldSpec("v", 0.0, 0.5),
    FieldSpec("w", 0.5, 0.0),
    FieldSpec("p", 0.5, 0.5),
)
ZAKHAROV_FIELDS = tuple(FieldSpec(n) for n in ("u", "v", "p", "q", "w", "psi", "phi"))
PARAMS = {"xi": "x", "tau": "t"}


def _wave_defaults(eps: int) -> dict:
    def w0(scheme, mesh, layer, consts):
        # the E_W relation with p constant in time
        u = layer["u"]
        return (np.roll(u, -1) - u) / (eps * mesh.eps_x)

    def zero(scheme, mesh, layer, consts):
        return np.zeros(mesh.nx)

    return {"w": w0, "p": zero, "v": zero}


def wave_lagrangian(potential: str = DEFAULT_POTENTIAL, eps: int = -1) -> DegenerateLagrangian:
    """xi*tau times the Stormer-Verlet Lagrangian; variables u, v, w, p, xi, tau."""
    if eps not in (1, -1):
        raise ConfigError(f"eps must be +1 or -1, got {eps}")
    sig = Signature(2, 6, ("u", "v", "w", "p", "xi", "tau"))
    V = parse(potential, sig)
    if any(c.alpha != 0 or any(c.offset) for c in V.fiber_support()):
        raise ConfigError("the potential must depend on the unshifted u only")
    L = [
        # direction x: tau*w D_x u - tau*p D_x v
        ["tau*w", "-tau*p", 0, 0, 0, 0],
        # direction t: xi*v D_t u + eps*xi*p D_t w
        ["xi*v", 0, f"{eps}*xi*p", 0, 0, 0],
    ]
    xi_tau = parse("xi*tau", sig)
    H = xi_tau * (V + parse(f"v^2/2 + {eps}*w^2/2", sig))
    return DegenerateLagrangian(sig, L, H)


def wave_scheme(potential: str = DEFAULT_POTENTIAL, eps: int = -1, control: bool = False,
                constants: Mapping[str, float] | None = None) -> LatticeScheme:
    """Stormer-Verlet scheme for u_tt + eps u_xx + V'(u) = 0.

    ``control=True`` replaces the v-equation by a forward-Euler variant that uses the
    previous v in the -xi*tau*v term; the result is consistent but not variational.
    """
    lag = wave_lagrangian(potential, eps)
    overrides = {}
    if control:
        sig = lag.sig
        overrides["v"] = parse("xi*(u[0,1] - u) + tau*(p - p[-1,0]) - xi*tau*v[0,-1]", sig)
    name = "wave-control" if control else "wave"
    return LatticeScheme(name, lag, WAVE_FIELDS, PARAMS, dict(constants or {}),
                         overrides=overrides, defaults=_wave_defaults(eps))


def zakharov_lagrangian() -> DegenerateLagrangian:
    """xi*tau times the Euler box Lagrangian; variables u, v, p, q, w, psi, phi, xi, tau."""
    sig = Signature(2, 9, ("u", "v", "p", "q", "w", "psi", "phi", "xi", "tau"))
    L = [
        [0, 0, "tau*u", "tau*v", "-tau*phi", 0, 0, 0, 0],
        [0, "-xi*u", 0, 0, "xi*psi", 0, 0, 0, 0],
    ]
    H = parse("xi*tau*(psi^2/2 - psi*(u^2 + v^2) - (p^2 + q^2)/2 - phi^2/2)", sig)
    return DegenerateLagrangian(sig, L, H)


def zakharov_scheme(constants: Mapping[str, float] | None = None) -> LatticeScheme:
    return LatticeScheme("zakharov", zakharov_lagrangian(), ZAKHAROV_FIELDS, PARAMS, dict(constants or {}))


def build_scheme(name: str, params: Mapping | None = None) -> LatticeScheme:
    params = dict(params or {})
    consts = {k: float(v) for k, v in params.pop("constants", {}).items()}
    if name in ("wave", "wave-control"):
        pot = params.pop("potential", DEFAULT_POTENTIAL)
        eps = int(params.pop("eps", -1))
        if params:
            raise ConfigError(f"unknown wave parameters: {sorted(params)}")
        return wave_scheme(pot, eps, control=(name == "wave-control"), constants=consts)
    if name == "zakharov":
        if params:
            raise ConfigError(f"unknown zakharov parameters: {sorted(params)}")
        return zakharov_scheme(consts)
    raise ConfigError(f"unknown scheme {name!r} (choose wave, wave-control, zakharov, euler-b)")


def discrete_frequency(k: float, hx: float, ht: float) -> float:
    """Hand-derived dispersion relation of the scheme for V = u^2/2, eps = -1.

    A plane wave u = exp(i(k x - w t)) solves it iff
    (2/ht)^2 sin^2(w ht/2) = (2/hx)^2 sin^2(k hx/2) + 1.
    """
    rhs = (2 / hx) ** 2 * np.sin(k * hx / 2) ** 2 + 1.0
    s = np.sqrt(rhs) * ht / 2
    if s > 1:
        raise ValueError("no real frequency: the step violates the stability bound")
    return 2 / ht * np.arcsin(s)
