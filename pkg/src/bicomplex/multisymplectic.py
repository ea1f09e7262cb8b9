"""Degenerate first-order Lagrangians, their multisymplectic forms and multimomentum maps.

The class of Lagrangians handled here is

    L vol = ( sum_{i,beta} L^i_beta(n,u) D_i u^beta - H(n,u) ) vol,   D_i = S_i - id,

with all L^i_beta and H depending on unshifted fiber variables only.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .dsl import parse
from .expr import ZERO, Expr, FiberCoord, _coerce
from .forms import Form, co_vol, delta, dv, scalar
from .homotopy import h_vertical
from .multiindex import neg, unit, zero
from .operators import VectorField, contract, d_h, d_v, lie_difference, shift_form
from .signature import Signature
from .variational import covol_components, euler_lagrange, lagrangian, source_components, source_form


class NotStandardClassError(ValueError):
    pass


class NotVerticallyClosedError(ValueError):
    def __init__(self, message: str, witness: Form):
        super().__init__(message)
        self.witness = witness


def _expr(x, sig):
    return parse(x, sig) if isinstance(x, str) else _coerce(x)


class DegenerateLagrangian:
    """Coefficients ``L[i][beta]`` (i < p, beta < q) and Hamiltonian ``H``."""

    def __init__(self, sig: Signature, L: Sequence[Sequence], H=0):
        if len(L) != sig.p or any(len(row) != sig.q for row in L):
            raise NotStandardClassError(f"L must be a {sig.p} x {sig.q} table of coefficients")
        self.sig = sig
        self.L = tuple(tuple(_expr(x, sig) for x in row) for row in L)
        self.H = _expr(H, sig)
        z = zero(sig.p)
        for e in [x for row in self.L for x in row] + [self.H]:
            for c in e.fiber_support():
                if c.offset != z:
                    raise NotStandardClassError(
                        f"coefficient {e.to_str(sig.names)} depends on a shifted fiber variable"
                    )

    def u(self, alpha: int, offset=None) -> Expr:
        return Expr.fiber(alpha, offset or zero(self.sig.p))

    def density(self) -> Expr:
        """The expanded scalar L(n,[u])."""
        p, q = self.sig.p, self.sig.q
        out = -self.H
        for i in range(p):
            for b in range(q):
                if not self.L[i][b].is_zero():
                    out = out + self.L[i][b] * (self.u(b, unit(p, i)) - self.u(b))
        return out

    def form(self) -> Form:
        return lagrangian(self.sig, self.density())

    def to_json(self) -> dict:
        names = self.sig.names
        return {
            "signature": self.sig.to_json(),
            "L": [[x.to_str(names) for x in row] for row in self.L],
            "H": self.H.to_str(names),
        }


def el_system(lag: DegenerateLagrangian, cross_check: bool = True) -> list:
    """E_alpha = sum_i dL^i_beta/du^alpha D_i u^beta + sum_i (S_i^-1 - id) L^i_alpha - dH/du^alpha."""
    sig = lag.sig
    p, q = sig.p, sig.q
    out = []
    for a in range(q):
        ua = FiberCoord(a, zero(p))
        e = -lag.H.diff(ua)
        for i in range(p):
            Ui = unit(p, i)
            for b in range(q):
                dL = lag.L[i][b].diff(ua)
                if not dL.is_zero():
                    e = e + dL * (lag.u(b, Ui) - lag.u(b))
            e = e + lag.L[i][a].shift(neg(Ui)) - lag.L[i][a]
        out.append(e)
    if cross_check:
        generic = source_components(euler_lagrange(lag.form()))
        if generic != out:
            raise AssertionError("closed-form EL system disagrees with the generic Euler-Lagrange operator")
    return out


def eta_form(lag: DegenerateLagrangian) -> Form:
    """eta = sum_i (S_i^-1 L^i_alpha) d_v u^alpha ^ co_vol(i)."""
    sig = lag.sig
    p = sig.p
    out = Form._make(sig, {})
    for i in range(p):
        cv = co_vol(sig, i)
        for a in range(sig.q):
            c = lag.L[i][a].shift(neg(unit(p, i)))
            if not c.is_zero():
                out = out + dv(sig, FiberCoord(a, zero(p))).wedge(cv).scale(c)
    return out


def kappa_from_omega(omega: Form) -> list:
    """kappa^j with Delta^j ^ omega = kappa^j ^ vol."""
    sig = omega.sig
    full = tuple(range(sig.p))
    out = []
    for j in range(sig.p):
        w = delta(sig, j).wedge(omega)
        terms = {}
        for (h, v), c in w.terms():
            assert h == full
            # vol ^ (2-form) = (2-form) ^ vol
            terms[((), v)] = c
        out.append(Form(sig, terms))
    return out


@dataclass
class MultisymplecticStructure:
    sig: Signature
    eta: Form
    omega: Form
    kappa: list
    K: list  # K[i][alpha][beta] = dL^i_beta/du^alpha (unshifted)

    def standard_kappa(self, i: int) -> Form:
        """S_i^-1(K^i_ab) d_v(S_i^-1 u^a) ^ d_v u^b."""
        sig = self.sig
        p = sig.p
        Ui = neg(unit(p, i))
        out = Form._make(sig, {})
        for a in range(sig.q):
            for b in range(sig.q):
                k = self.K[i][a][b].shift(Ui)
                if not k.is_zero():
                    out = out + dv(sig, FiberCoord(a, Ui)).wedge(dv(sig, FiberCoord(b, zero(p)))).scale(k)
        return out

    def checks(self) -> dict:
        sig = self.sig
        recon = Form._make(sig, {})
        for i, k in enumerate(self.kappa):
            recon = recon + k.wedge(co_vol(sig, i))
        return {
            "kappa_vertically_closed": all(d_v(k).is_zero() for k in self.kappa),
            "omega_is_dv_eta": (d_v(self.eta) - self.omega).is_zero(),
            "omega_from_kappa": (recon - self.omega).is_zero(),
            "kappa_standard_shape": all(
                (self.standard_kappa(i) - k).is_zero() for i, k in enumerate(self.kappa)
            ),
        }

    def to_json(self) -> dict:
        return {
            "eta": self.eta.to_str(),
            "omega": self.omega.to_str(),
            "kappa": [k.to_str() for k in self.kappa],
            "checks": self.checks(),
        }


def structure(lag: DegenerateLagrangian) -> MultisymplecticStructure:
    sig = lag.sig
    eta = eta_form(lag)
    omega = d_v(eta)
    kappa = kappa_from_omega(omega)
    z = zero(sig.p)
    K = [
        [[lag.L[i][b].diff(FiberCoord(a, z)) for b in range(sig.q)] for a in range(sig.q)]
        for i in range(sig.p)
    ]
    return MultisymplecticStructure(sig, eta, omega, kappa, K)


@dataclass
class StructuralIdentity:
    residual: Form  # d_h omega + d_v E(L); identically zero
    divergence_kappa: Form  # sum_i D_i kappa^i, a (0,2)-form

    @property
    def holds(self) -> bool:
        return self.residual.is_zero()


def structural_identity(lag: DegenerateLagrangian, st: MultisymplecticStructure | None = None) -> StructuralIdentity:
    st = st or structure(lag)
    E = euler_lagrange(lag.form())
    res = d_h(st.omega) + d_v(E)
    div = Form._make(lag.sig, {})
    for i, k in enumerate(st.kappa):
        div = div + lie_difference(k, i)
    return StructuralIdentity(res, div)


@dataclass
class MultimomentumCandidate:
    sig: Signature
    Q: tuple
    lam: Form
    con_vertical: Form  # d_v lam - v contracted into omega
    con_horizontal: Form  # d_h lam - v contracted into E(L)

    @property
    def components(self) -> list:
        return covol_components(self.lam)

    @property
    def is_momentum_map(self) -> bool:
        return self.con_vertical.is_zero()

    @property
    def is_conservation_law(self) -> bool:
        return self.is_momentum_map and self.con_horizontal.is_zero()

    def cll_residual(self, el: Sequence[Expr]) -> Expr:
        """sum_i D_i lambda^i - Q^alpha E_alpha."""
        p = self.sig.p
        comps = self.components
        div = sum((c.shift(unit(p, i)) - c for i, c in enumerate(comps)), ZERO)
        return div - sum((q * e for q, e in zip(self.Q, el)), ZERO)

    def to_json(self) -> dict:
        names = self.sig.names
        return {
            "characteristic": [q.to_str(names) for q in self.Q],
            "lambda": self.lam.to_str(),
            "components": [c.to_str(names) for c in self.components],
            "flags": {
                "is_momentum_map": self.is_momentum_map,
                "is_conservation_law": self.is_conservation_law,
            },
        }


def _candidate(lag: DegenerateLagrangian, v: VectorField, lam: Form, st: MultisymplecticStructure) -> MultimomentumCandidate:
    E = euler_lagrange(lag.form())
    return MultimomentumCandidate(
        lag.sig,
        v.Q,
        lam,
        d_v(lam) - contract(v, st.omega),
        d_h(lam) - contract(v, E),
    )


def multimomentum(lag: DegenerateLagrangian, Q: Sequence) -> MultimomentumCandidate:
    """lambda = h_v(v contracted into omega), after checking that this 1-form is d_v-closed."""
    sig = lag.sig
    v = Q if isinstance(Q, VectorField) else VectorField(sig, Q)
    st = structure(lag)
    vo = contract(v, st.omega)
    w = d_v(vo)
    if not w.is_zero():
        raise NotVerticallyClosedError(
            "v contracted into omega is not vertically closed, so no multimomentum map exists for this generator",
            w,
        )
    lam = h_vertical(vo) if not vo.is_zero() else Form._make(sig, {})
    return _candidate(lag, v, lam, st)


def verify_theorem(candidate: MultimomentumCandidate, lag: DegenerateLagrangian) -> bool:
    """Both conditions: d_v lam = v contracted into omega and d_h lam = v contracted into E(L)."""
    v = VectorField(lag.sig, candidate.Q)
    fresh = _candidate(lag, v, candidate.lam, structure(lag))
    if not fresh.is_conservation_law:
        return False
    return fresh.cll_residual(el_system(lag, cross_check=False)).is_zero()


def perturbed(candidate: MultimomentumCandidate, extra: Form) -> MultimomentumCandidate:
    return MultimomentumCandidate(candidate.sig, candidate.Q, candidate.lam + extra,
                                  candidate.con_vertical, candidate.con_horizontal)


def ms_report(lag: DegenerateLagrangian, Q: Sequence | None = None) -> dict:
    """JSON-ready analysis: EL system, kappa, omega, structural residual, optional multimomentum."""
    sig = lag.sig
    names = sig.names
    el = el_system(lag)
    st = structure(lag)
    si = structural_identity(lag, st)
    rep = {
        "lagrangian": lag.to_json(),
        "el": [e.to_str(names) for e in el],
        "eta": st.eta.to_str(),
        "kappa": [k.to_str() for k in st.kappa],
        "omega": st.omega.to_str(),
        "structure_checks": st.checks(),
        "structural_residual": si.residual.to_str(),
        "divergence_kappa": si.divergence_kappa.to_str(),
    }
    if Q is not None:
        cand = multimomentum(lag, Q)
        rep["multimomentum"] = cand.to_json()
        rep["multimomentum"]["theorem_verified"] = verify_theorem(cand, lag)
    return rep
