"""Interior Euler projection, Euler-Lagrange operator, boundary terms and Noether laws."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .dsl import parse
from .expr import ZERO, BaseCoord, Expr, FiberCoord, _coerce, fiber_radius
from .forms import BaseDual, FiberDual, Form, co_vol, dv, interior, scalar, vol
from .homotopy import BidegreeError, VerificationError, h_horizontal
from .multiindex import box, neg, unit, zero
from .operators import VectorField, _put, contract, d_h, d_v, shift_form
from .signature import Signature


class NotFixedPointError(ValueError):
    def __init__(self, message: str, residual: Form):
        super().__init__(message)
        self.residual = residual


class NotSymmetryError(ValueError):
    def __init__(self, message: str, witness: Form):
        super().__init__(message)
        self.witness = witness


class NotNullLagrangianError(ValueError):
    def __init__(self, message: str, witness: Form):
        super().__init__(message)
        self.witness = witness


class AnsatzInsufficientError(ValueError):
    pass


# ---- Lagrangians and source forms ---------------------------------------
def lagrangian(sig: Signature, L) -> Form:
    """The (p,0)-form L vol; ``L`` may be a DSL string."""
    L = parse(L, sig) if isinstance(L, str) else _coerce(L)
    return scalar(sig, L).wedge(vol(sig))


def lagrangian_density(lag: Form) -> Expr:
    """L from L vol."""
    sig = lag.sig
    if lag.is_zero():
        return ZERO
    if lag.bidegree() != (sig.p, 0):
        raise BidegreeError(f"a Lagrangian form has bidegree ({sig.p},0), got {lag.bidegree()}")
    return lag.coefficient(tuple(range(sig.p)))


def source_form(sig: Signature, components: Sequence) -> Form:
    """sum_alpha E_alpha d_v u^alpha ^ vol."""
    if len(components) != sig.q:
        raise ValueError(f"{len(components)} components for q={sig.q}")
    out = Form._make(sig, {})
    V = vol(sig)
    for a, E in enumerate(components):
        E = parse(E, sig) if isinstance(E, str) else _coerce(E)
        out = out + dv(sig, FiberCoord(a, zero(sig.p))).wedge(V).scale(E)
    return out


def source_components(omega: Form) -> list:
    """E_alpha such that omega = E_alpha d_v u^alpha ^ vol (omega must be a source form)."""
    sig = omega.sig
    sgn = -1 if sig.p % 2 else 1
    comps = []
    for a in range(sig.q):
        c = omega.coefficient(tuple(range(sig.p)), (FiberCoord(a, zero(sig.p)),))
        comps.append(c if sgn == 1 else -c)
    return comps


# ---- interior Euler and Euler-Lagrange ------------------------------------
def interior_euler(sigma: Form) -> Form:
    """(1/l) sum_alpha d_v u^alpha ^ sum_J S_{-J}(d/du^alpha_J contracted into sigma)."""
    sig = sigma.sig
    if sigma.is_zero():
        return sigma
    k, l = sigma.bidegree()
    if k != sig.p or l < 1:
        raise BidegreeError(f"interior Euler needs bidegree (p,l) with p={sig.p}, l>=1; got ({k},{l})")
    out: dict = {}
    z = zero(sig.p)
    inv_l = Fraction(1, l)
    for x in sorted({x for (_, v), _ in sigma.terms() for x in v}, key=lambda c: (c.alpha, c.offset)):
        piece = shift_form(interior(FiberDual(x), sigma), neg(x.offset))
        w = dv(sig, FiberCoord(x.alpha, z)).wedge(piece)
        for m, c in w.terms():
            _put(out, m, c.scale(inv_l))
    return Form._make(sig, out)


def euler_lagrange(lag: Form) -> Form:
    """E = I o d_v on a Lagrangian (p,0)-form."""
    if lag.is_zero():
        return lag
    if lag.bidegree() != (lag.sig.p, 0):
        raise BidegreeError(f"Euler-Lagrange operator needs a (p,0)-form, got {lag.bidegree()}")
    return interior_euler(d_v(lag))


def el_expressions(sig: Signature, L) -> list:
    """E_alpha = sum_J S_{-J}(dL/du^alpha_J), computed directly from the density."""
    L = parse(L, sig) if isinstance(L, str) else _coerce(L)
    out = [ZERO] * sig.q
    for x in sorted(L.fiber_support(), key=lambda c: (c.alpha, c.offset)):
        out[x.alpha] = out[x.alpha] + L.diff(x).shift(neg(x.offset))
    return out


def delta_v(sigma: Form) -> Form:
    """I o d_v on fixed points of the interior Euler projection."""
    if sigma.is_zero():
        return sigma
    res = interior_euler(sigma) - sigma
    if not res.is_zero():
        raise NotFixedPointError("delta_v needs a fixed point of the interior Euler projection", res)
    return interior_euler(d_v(sigma))


def boundary_term(sigma: Form) -> Form:
    """tau of bidegree (p-1,l) with d_h tau = I(sigma) - sigma, verified before returning."""
    sig = sigma.sig
    if sigma.is_zero():
        return sigma
    k, l = sigma.bidegree()
    if k != sig.p or l < 1:
        raise BidegreeError(f"boundary term needs bidegree (p,l), l>=1; got ({k},{l})")
    tau = -h_horizontal(sigma)
    res = d_h(tau) - (interior_euler(sigma) - sigma)
    if not res.is_zero():
        raise VerificationError("d_h(tau) != I(sigma) - sigma", res)
    return tau


# ---- divergences --------------------------------------------------------
def _solve_exact(rows: dict, ncols: int, rhs: dict):
    """Particular solution of a sparse rational system, free variables set to zero."""
    from sympy import QQ
    from sympy.polys.matrices import DomainMatrix

    nrows = len(rows)
    data = {}
    for r, (cols) in rows.items():
        d = {j: QQ(v.numerator, v.denominator) for j, v in cols.items() if v}
        if r in rhs and rhs[r]:
            d[ncols] = QQ(rhs[r].numerator, rhs[r].denominator)
        if d:
            data[r] = d
    M = DomainMatrix(data, (nrows, ncols + 1), QQ)
    R, pivots = M.rref()
    if ncols in pivots:
        return None
    sol = [Fraction(0)] * ncols
    Rs = R.to_sdm()
    for r, c in enumerate(pivots):
        v = Rs.get(r, {}).get(ncols, QQ(0))
        sol[c] = Fraction(int(v.numerator), int(v.denominator))
    return sol


def divergence_invert(sig: Signature, f, radius_cap: int | None = None) -> list:
    """F^1..F^p with sum_i (S_i - id) F^i = f, by an exact undetermined-coefficients solve.

    The ansatz spans f's monomials shifted by every K in [-R, R]^p, plus base-coordinate
    multiples of n-only monomials.  R starts at the stencil radius of f and grows up to
    ``radius_cap`` (default radius + 2).
    """
    f = parse(f, sig) if isinstance(f, str) else _coerce(f)
    p = sig.p
    if f.is_zero():
        return [ZERO] * p
    E = euler_lagrange(lagrangian(sig, f))
    if not E.is_zero():
        raise NotNullLagrangianError("expression is not a difference divergence (its Euler-Lagrange form is nonzero)", E)
    r0 = max(fiber_radius([f]), 1)
    cap = r0 + 2 if radius_cap is None else radius_cap
    monos = sorted(Expr._make({m: Fraction(1)}) for m, _ in f.terms())
    seeds = list(monos)
    for mexpr in monos:
        if not mexpr.fiber_support():
            (mono, _), = mexpr.terms()
            deg = sum(e for a, e in mono if type(a) is BaseCoord)
            for i in range(p):
                ni = Expr.base(i)
                for j in range(1, deg + 2):
                    seeds.append(mexpr * ni ** j)
    last = None
    for R in range(r0, cap + 1):
        basis = []
        seen = set()
        for s in seeds:
            for K in box((-R,) * p, (R,) * p):
                b = s.shift(K)
                if b not in seen:
                    seen.add(b)
                    basis.append(b)
        basis.sort()
        unknowns = [(i, b) for i in range(p) for b in basis]
        row_index: dict = {}
        rows: dict = {}
        for col, (i, b) in enumerate(unknowns):
            img = b.shift(unit(p, i)) - b
            for mono, c in img.terms():
                r = row_index.setdefault(mono, len(row_index))
                rows.setdefault(r, {})[col] = c
        rhs = {}
        for mono, c in f.terms():
            r = row_index.setdefault(mono, len(row_index))
            rows.setdefault(r, {})
            rhs[r] = c
        sol = _solve_exact(rows, len(unknowns), rhs)
        if sol is not None:
            F = [ZERO] * p
            for (i, b), c in zip(unknowns, sol):
                if c:
                    F[i] = F[i] + b.scale(c)
            check = sum((F[i].shift(unit(p, i)) - F[i] for i in range(p)), ZERO) - f
            if not check.is_zero():
                raise VerificationError("divergence inversion failed re-substitution", scalar(sig, check))
            return F
        last = R
    raise AnsatzInsufficientError(
        f"no F with sum_i D_i F^i = {f.to_str(sig.names)} in the stencil ansatz up to radius {last}; "
        f"{len(seeds)} seed monomials tried"
    )


def divergence_form(sig: Signature, F: Sequence[Expr]) -> Form:
    """sum_i F^i co_vol(i), a (p-1,0)-form whose d_h is (sum_i D_i F^i) vol."""
    out = Form._make(sig, {})
    for i, Fi in enumerate(F):
        out = out + co_vol(sig, i).scale(Fi)
    return out


def covol_components(lam: Form) -> list:
    """lambda^i with lam = sum_i lambda^i co_vol(i)."""
    sig = lam.sig
    out = []
    for i in range(sig.p):
        h = tuple(j for j in range(sig.p) if j != i)
        c = lam.coefficient(h)
        out.append(c if i % 2 == 0 else -c)
    return out


# ---- symmetries and Noether -----------------------------------------------
@dataclass
class SymmetryCheck:
    is_symmetry: bool
    v_of_L: Expr
    el_of_vL: Form
    certificate: list | None = None  # F^i with v(L) = sum D_i F^i

    def __bool__(self):
        return self.is_symmetry


def is_variational_symmetry(lag: Form, v: VectorField, invert: bool = True) -> SymmetryCheck:
    """v is a variational symmetry iff v(L) is a null Lagrangian."""
    sig = lag.sig
    L = lagrangian_density(lag)
    vL = v.apply(L)
    E = euler_lagrange(lagrangian(sig, vL))
    if not E.is_zero():
        return SymmetryCheck(False, vL, E)
    cert = divergence_invert(sig, vL) if invert else None
    return SymmetryCheck(True, vL, E, cert)


@dataclass
class ConservationLaw:
    """lambda = lambda^i co_vol(i) with d_h lambda = v contracted into E(L)."""

    sig: Signature
    lam: Form
    components: list
    divergence: Expr
    characteristic_form: Expr  # Q^alpha E_alpha
    residual: Form
    euler_lagrange: list = field(default_factory=list)

    @property
    def verified(self) -> bool:
        return self.residual.is_zero()

    @property
    def residual_expr(self) -> Expr:
        return self.divergence - self.characteristic_form

    def to_json(self) -> dict:
        names = self.sig.names
        return {
            "euler_lagrange": [e.to_str(names) for e in self.euler_lagrange],
            "lambda": {
                "components": [c.to_str(names) for c in self.components],
                "form": self.lam.to_str(),
            },
            "divergence": self.divergence.to_str(names),
            "characteristic_times_el": self.characteristic_form.to_str(names),
            "verified": self.verified,
            "residual": self.residual_expr.to_str(names),
            "gauge": "lambda is determined up to adding a d_h-closed (p-1,0)-form",
        }


def noether(lag: Form, v: VectorField) -> ConservationLaw:
    """Conservation law of a variational symmetry: lambda = sigma_F - v contracted into tau."""
    sig = lag.sig
    chk = is_variational_symmetry(lag, v)
    if not chk:
        raise NotSymmetryError("characteristic does not generate a variational symmetry", chk.el_of_vL)
    sigma_F = divergence_form(sig, chk.certificate)
    tau = boundary_term(d_v(lag))
    lam = sigma_F - contract(v, tau)
    E = euler_lagrange(lag)
    residual = d_h(lam) - contract(v, E)
    comps = covol_components(lam)
    p = sig.p
    div = sum((c.shift(unit(p, i)) - c for i, c in enumerate(comps)), ZERO)
    Es = source_components(E)
    QE = sum((q * e for q, e in zip(v.Q, Es)), ZERO)
    law = ConservationLaw(sig, lam, comps, div, QE, residual, Es)
    if not law.verified:
        raise VerificationError("d_h(lambda) != v contracted into E(L)", residual)
    return law
