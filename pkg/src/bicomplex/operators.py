"""Structure maps of the bicomplex: shifts, d_v, d_h, d = d_h + d_v, prolonged vector fields."""

from __future__ import annotations

from typing import Sequence

from .dsl import parse
from .expr import Expr, FiberCoord, _coerce
from .forms import Form, _coord_key
from .multiindex import MultiIndex, unit
from .signature import Signature, SignatureError


def _put(out: dict, m, c: Expr):
    if m in out:
        n = out[m] + c
        if n.is_zero():
            del out[m]
        else:
            out[m] = n
    elif not c.is_zero():
        out[m] = c


def _insert_sorted(seq: tuple, x, key=None):
    """Insert ``x`` at the front and sort: ``(new_tuple, sign)`` or ``(None, 0)``."""
    kx = key(x) if key else x
    pos = 0
    for y in seq:
        ky = key(y) if key else y
        if ky == kx:
            return None, 0
        if ky < kx:
            pos += 1
        else:
            break
    return seq[:pos] + (x,) + seq[pos:], (-1 if pos & 1 else 1)


def shift_form(sigma: Form, K: MultiIndex) -> Form:
    """S_K: shift coefficients and vertical factor offsets; Delta^i is invariant."""
    K = tuple(K)
    if len(K) != sigma.sig.p:
        raise SignatureError(f"shift {K} has wrong length for p={sigma.sig.p}")
    if not any(K):
        return sigma
    out = {}
    for (h, v), c in sigma.terms():
        nv = tuple(x.shifted(K) for x in v)
        out[(h, nv)] = c.shift(K)
    return Form._make(sigma.sig, out)


def d_v(sigma: Form) -> Form:
    """Vertical derivative; each new d_v u^alpha_J is wedged on the left."""
    out: dict = {}
    for (h, v), c in sigma.terms():
        lead = -1 if len(h) & 1 else 1
        for x in sorted(c.fiber_support(), key=_coord_key):
            nv, s = _insert_sorted(v, x, _coord_key)
            if not s:
                continue
            dc = c.diff(x)
            if dc.is_zero():
                continue
            _put(out, (h, nv), dc if s * lead == 1 else -dc)
    return Form._make(sigma.sig, out)


def lie_difference(sigma: Form, i: int) -> Form:
    """D_{n^i} = S_i - id (0-based direction)."""
    return shift_form(sigma, unit(sigma.sig.p, i)) - sigma


def d_h(sigma: Form) -> Form:
    """Exterior difference sum_i Delta^i ^ (S_i - id), Delta^i wedged on the left."""
    p = sigma.sig.p
    out: dict = {}
    for i in range(p):
        Ui = unit(p, i)
        for (h, v), c in sigma.terms():
            nh, s = _insert_sorted(h, i)
            if not s:
                continue
            nv = tuple(x.shifted(Ui) for x in v)
            cs = c.shift(Ui)
            _put(out, (nh, nv), cs if s == 1 else -cs)
            _put(out, (nh, v), -c if s == 1 else c)
    return Form._make(sigma.sig, out)


def d_total(sigma: Form) -> Form:
    return d_h(sigma) + d_v(sigma)


class VectorField:
    """Vertical generalized vector field, given by its characteristic (Q^1..Q^q).

    The prolongation sum_J S_J Q^alpha d/du^alpha_J is never materialized; each
    contraction looks up S_J Q^alpha for the offsets it meets.
    """

    def __init__(self, sig: Signature, Q: Sequence):
        if len(Q) != sig.q:
            raise SignatureError(f"characteristic has {len(Q)} components, expected q={sig.q}")
        self.sig = sig
        self.Q = tuple(parse(x, sig) if isinstance(x, str) else _coerce(x) for x in Q)
        self._cache: dict = {}

    @classmethod
    def zero(cls, sig: Signature) -> "VectorField":
        return cls(sig, [Expr.const(0)] * sig.q)

    def component(self, c: FiberCoord) -> Expr:
        """S_J Q^alpha for c = u^alpha_J."""
        r = self._cache.get(c)
        if r is None:
            r = self._cache[c] = self.Q[c.alpha].shift(c.offset)
        return r

    def apply(self, f: Expr) -> Expr:
        """v(f) = sum S_J Q^alpha df/du^alpha_J."""
        out = Expr.const(0)
        for x in sorted(f.fiber_support(), key=_coord_key):
            out = out + self.component(x) * f.diff(x)
        return out

    def is_zero(self) -> bool:
        return all(q.is_zero() for q in self.Q)

    def to_json(self) -> list:
        return [q.to_str(self.sig.names) for q in self.Q]

    def __repr__(self):
        return f"VectorField({self.to_json()})"


def contract(v: VectorField, sigma: Form) -> Form:
    """Interior product with the prolonged field; Delta factors are untouched."""
    if v.sig != sigma.sig:
        raise SignatureError("vector field and form have different signatures")
    out: dict = {}
    for (h, vs), c in sigma.terms():
        base = len(h)
        for j, x in enumerate(vs):
            q = v.component(x)
            if q.is_zero():
                continue
            t = c * q
            _put(out, (h, vs[:j] + vs[j + 1:]), t if (base + j) % 2 == 0 else -t)
    return Form._make(sigma.sig, out)


def lie_derivative(v: VectorField, sigma: Form) -> Form:
    """Cartan formula: v contracted into d_v sigma, plus d_v of the contraction."""
    return contract(v, d_v(sigma)) + d_v(contract(v, sigma))
