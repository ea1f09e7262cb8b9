"""Homotopy operators of the bicomplex and the antiderivatives built from them.

* :func:`h_vertical` integrates along the scaling flow u -> lam*u, monomial by monomial.
* :func:`f_operator` and :func:`h_horizontal` implement the horizontal homotopy with the
  normalization constant (i^m + 1)/(p - k + |I| + 1) as written, for stencils with
  non-negative offsets.  Stencils reaching negative offsets are conjugated by a shift
  (the *anchor*) first.
"""

from __future__ import annotations

from fractions import Fraction
from math import comb
from functools import lru_cache

from .expr import BaseCoord, Constant, Expr, FiberCoord, Function, NonPolynomialError, Reciprocal
from .forms import BaseDual, FiberDual, Form, interior, vol
from .multiindex import MultiIndex, add, binomial, box, neg, order, unit, zero
from .operators import _put, d_h, d_v, shift_form
from .signature import Signature


class NegativeOffsetError(ValueError):
    pass


class NotClosedError(ValueError):
    def __init__(self, message: str, witness: Form | None = None):
        super().__init__(message)
        self.witness = witness


class VerificationError(ValueError):
    """A constructed antiderivative failed re-substitution; carries the residual."""

    def __init__(self, message: str, residual: Form):
        super().__init__(f"{message}; residual: {residual}")
        self.residual = residual


class HelmholtzError(ValueError):
    def __init__(self, message: str, witness: Form):
        super().__init__(message)
        self.witness = witness


class BidegreeError(ValueError):
    pass


# ---- vertical homotopy --------------------------------------------------
def _lambda_degree(mono) -> int:
    m = 0
    for a, e in mono:
        t = type(a)
        if t is FiberCoord:
            m += e
        elif (t is Function or t is Reciprocal) and a.arg.fiber_support():
            raise NonPolynomialError(a)
    return m


def h_vertical(sigma: Form) -> Form:
    """Vertical homotopy: lowers l by one and satisfies sigma = d_v h_v sigma + h_v d_v sigma.

    Each term c * u-monomial * (vertical factors) has lambda-degree m = (fiber degree) + l,
    and contributes (1/m) times its contraction with the scaling field.
    """
    sig = sigma.sig
    out: dict = {}
    for (h, v), c in sigma.terms():
        l = len(v)
        if l == 0:
            raise BidegreeError("vertical homotopy needs l >= 1")
        for mono, coef in c.terms():
            m = _lambda_degree(mono) + l
            if m <= 0:
                raise NonPolynomialError(
                    None, f"lambda-degree {m} <= 0 for coefficient monomial {Expr._make({mono: coef})}"
                )
            piece = Expr._make({mono: coef / m})
            for j, x in enumerate(v):
                t = piece * Expr.atom(x)
                _put(out, (h, v[:j] + v[j + 1:]), t if (len(h) + j) % 2 == 0 else -t)
    return Form._make(sig, out)


# ---- horizontal homotopy ------------------------------------------------
def vertical_offsets(sigma: Form, alpha: int | None = None) -> set:
    return {x.offset for (_, v), _ in sigma.terms() for x in v if alpha is None or x.alpha == alpha}


def default_anchor(sigma: Form) -> MultiIndex:
    """Componentwise minimum of all offsets (vertical factors and coefficients), clipped at 0."""
    p = sigma.sig.p
    a = [0] * p
    for x in sigma.fiber_support():
        for i in range(p):
            a[i] = min(a[i], x.offset[i])
    return tuple(a)


def _require_nonnegative(sigma: Form):
    for off in vertical_offsets(sigma):
        if any(j < 0 for j in off):
            raise NegativeOffsetError(
                f"vertical factor offset {off} is negative; translate the stencil first (anchor)"
            )


def f_operator(sigma: Form, alpha: int, J: MultiIndex) -> Form:
    """F_alpha^J(sigma) = sum over I containing J of C(I,J) S_{-I}(d/du^alpha_I contracted into sigma)."""
    _require_nonnegative(sigma)
    J = tuple(J)
    if any(j < 0 for j in J):
        raise NegativeOffsetError(f"F_alpha^J needs J >= 0, got {J}")
    out = Form._make(sigma.sig, {})
    for I in sorted(vertical_offsets(sigma, alpha)):
        if all(x >= y for x, y in zip(I, J)):
            piece = shift_form(interior(FiberDual(FiberCoord(alpha, I)), sigma), neg(I))
            out = out + piece.scale(binomial(I, J))
    return out


def _weight(I: MultiIndex, m: int, p: int, k: int) -> Fraction:
    return Fraction(I[m] + 1, p - k + order(I) + 1)


def h_horizontal_raw(sigma: Form) -> Form:
    """The horizontal homotopy on a (k,l)-form with non-negative vertical offsets.

    (1/l) sum_{alpha,m,I} w(I,m) (S-id)_I (d_v u^alpha ^ F_alpha^{I+1_m}(d/dn^m contracted into sigma)),
    where w = (i^m+1)/(p-k+|I|+1) and (S-id)_I = prod_m (S_m - id)^{i^m}.
    """
    sig = sigma.sig
    p = sig.p
    if sigma.is_zero():
        return sigma
    k, l = sigma.bidegree()
    if l < 1 or k < 1:
        if k == 0 and l >= 1:
            return Form._make(sig, {})
        raise BidegreeError(f"horizontal homotopy needs 1 <= k <= p and l >= 1, got ({k},{l})")
    _require_nonnegative(sigma)
    total: dict = {}
    for m in range(p):
        rho = interior(BaseDual(m), sigma)
        if rho.is_zero():
            continue
        for alpha in range(sig.q):
            for Ip in sorted(vertical_offsets(rho, alpha)):
                if Ip[m] < 1:
                    continue
                # X = d_v u^alpha ^ S_{-I'}(d/du^alpha_{I'} contracted into rho)
                inner = shift_form(interior(FiberDual(FiberCoord(alpha, Ip)), rho), neg(Ip))
                X = _dv_left(inner, FiberCoord(alpha, zero(p)))
                if X.is_zero():
                    continue
                for K, c in _shift_coefficients(Ip, m, k):
                    for mono, e in shift_form(X, K).terms():
                        _put(total, mono, e.scale(c / l))
    return Form._make(sig, total)


@lru_cache(maxsize=None)
def _shift_coefficients(Ip: MultiIndex, m: int, k: int) -> tuple:
    """Expand sum over 1_m <= J = I + 1_m <= I' of w(I,m) C(I',J) (S-id)_I into shifts S_K.

    Everything but the 1/(p-k+|I|+1) factor splits over directions, so the sum is
    collected per direction as a polynomial in |I| and the factors are convolved.
    """
    p = len(Ip)
    tops = tuple(Ip[j] - (j == m) for j in range(p))
    tables = []
    for j in range(p):
        e = int(j == m)
        tab = []
        for kj in range(tops[j] + 1):
            row = [0] * (tops[j] + 1)
            for ij in range(kj, tops[j] + 1):
                v = comb(Ip[j], ij + e) * comb(ij, kj) * (-1 if (ij - kj) & 1 else 1)
                row[ij] = v * (ij + 1) if e else v
            tab.append(row)
        tables.append(tab)
    out = []
    for K in box(zero(p), tops):
        poly = [1]
        for j in range(p):
            row = tables[j][K[j]]
            nxt = [0] * (len(poly) + len(row) - 1)
            for s1, a in enumerate(poly):
                if a:
                    for s2, c in enumerate(row):
                        if c:
                            nxt[s1 + s2] += a * c
            poly = nxt
        c = sum((Fraction(a, p - k + s + 1) for s, a in enumerate(poly) if a), Fraction(0))
        if c:
            out.append((K, c))
    return tuple(out)


def _dv_left(rho: Form, c: FiberCoord) -> Form:
    """d_v u_c wedged on the left of rho."""
    from .forms import dv

    return dv(rho.sig, c).wedge(rho)


def h_horizontal(sigma: Form, anchor: MultiIndex | None = None) -> Form:
    """Horizontal homotopy conjugated by the shift S_anchor: S_A h(S_{-A} sigma).

    When testing identities such as h(d_h s) + d_h(h s) = s, the same anchor must be used
    for s and d_h s; :func:`default_anchor` of s works for both.
    """
    if anchor is None:
        anchor = default_anchor(sigma)
    anchor = tuple(anchor)
    if not any(anchor):
        return h_horizontal_raw(sigma)
    out = shift_form(h_horizontal_raw(shift_form(sigma, neg(anchor))), anchor)
    if not sigma.is_zero() and sigma.bidegree()[0] == sigma.sig.p:
        # conjugation turns sigma = I(sigma) + d_h h sigma into
        # sigma = S_A I(sigma) + d_h h_A sigma; restore the unshifted projection
        from .variational import interior_euler

        out = out + _telescope(interior_euler(sigma), anchor)
    return out


def _telescope(beta: Form, A: MultiIndex) -> Form:
    """C with d_h C = (S_A - id) beta for a (p,l)-form beta.

    S_A - id = sum_i S_{(a_1..a_{i-1},0..)} (S_i^{a_i} - id) and S_i^a - id = (S_i - id) T_a,
    while (S_i - id) gamma = d_h(d/dn^i contracted into gamma) in top horizontal degree.
    """
    sig = beta.sig
    p = sig.p
    out = Form._make(sig, {})
    prefix = [0] * p
    for i in range(p):
        a = A[i]
        if a:
            steps = range(0, a) if a > 0 else range(a, 0)
            sgn = 1 if a > 0 else -1
            G = Form._make(sig, {})
            for t in steps:
                K = list(prefix)
                K[i] += t
                G = G + shift_form(beta, tuple(K))
            out = out + interior(BaseDual(i), G).scale(sgn)
        prefix[i] = a
    return out


# ---- antiderivatives ----------------------------------------------------
def reconstruct_closed(sigma: Form, which: str = "vertical") -> Form:
    """An antiderivative of a closed form, always verified by re-substitution."""
    from .variational import interior_euler

    if which == "vertical":
        if sigma.is_zero():
            return sigma
        k, l = sigma.bidegree()
        if l < 1:
            raise BidegreeError("vertical reconstruction needs l >= 1")
        w = d_v(sigma)
        if not w.is_zero():
            raise NotClosedError("form is not vertically closed", w)
        tau = h_vertical(sigma)
        res = d_v(tau) - sigma
        if not res.is_zero():
            raise VerificationError("d_v(tau) != sigma", res)
        return tau
    if which == "horizontal":
        if sigma.is_zero():
            return sigma
        k, l = sigma.bidegree()
        if l < 1:
            raise BidegreeError("horizontal reconstruction needs l >= 1")
        if k == sigma.sig.p:
            w = interior_euler(sigma)
            if not w.is_zero():
                raise NotClosedError("interior Euler projection is nonzero; form is not d_h-exact", w)
        else:
            w = d_h(sigma)
            if not w.is_zero():
                raise NotClosedError("form is not horizontally closed", w)
        if k == 0:
            raise NotClosedError("a nonzero (0,l)-form is never d_h-exact", sigma)
        tau = h_horizontal(sigma)
        res = d_h(tau) - sigma
        if not res.is_zero():
            raise VerificationError("d_h(tau) != sigma", res)
        return tau
    raise ValueError(f"which must be 'vertical' or 'horizontal', not {which!r}")


def inverse_variational(omega: Form) -> Form:
    """A Lagrangian (p,0)-form whose Euler-Lagrange form is the given source form."""
    from .variational import delta_v, euler_lagrange, interior_euler

    sig = omega.sig
    if omega.is_zero():
        return omega
    if omega.bidegree() != (sig.p, 1) or interior_euler(omega) != omega:
        raise BidegreeError("inverse problem needs a source form (a (p,1)-form fixed by interior Euler)")
    w = delta_v(omega)
    if not w.is_zero():
        raise HelmholtzError("Helmholtz condition fails: source form is not variational", w)
    lag = h_vertical(omega)
    res = euler_lagrange(lag) - omega
    if not res.is_zero():
        raise VerificationError("E(L) != source form", res)
    return lag


def edge_homotopy(omega: Form) -> Form:
    """H^l = I o h_v on functional forms."""
    from .variational import interior_euler

    tau = h_vertical(omega)
    if tau.is_zero() or tau.bidegree()[1] == 0:
        return tau
    return interior_euler(tau)
