"""Difference forms: the graded algebra of (k,l)-forms on Z^p x P(R^q).

A wedge monomial is a pair ``(horizontal, vertical)``: a strictly increasing tuple of
0-based directions i (the factors Delta^i) followed by a strictly increasing tuple of
:class:`FiberCoord` (the factors d_v u^alpha_J).  Delta factors always precede vertical
factors.  A :class:`Form` maps monomials to nonzero :class:`Expr` coefficients.
"""

from __future__ import annotations

from typing import Iterable, NamedTuple, Union

from .expr import ONE, ZERO, Expr, FiberCoord, _coerce, atom_key, render_coord
from .signature import Signature, SignatureError

Mono = tuple  # (tuple[int, ...], tuple[FiberCoord, ...])


class BaseDual(NamedTuple):
    """The frame vector d/dn^i (0-based direction)."""

    i: int


class FiberDual(NamedTuple):
    """The frame vector d/du^alpha_J."""

    coord: FiberCoord


FrameVector = Union[BaseDual, FiberDual]


def _sort_sign(seq: tuple, key=None):
    """Sorted tuple and the permutation sign, or ``(None, 0)`` on a repeated factor."""
    n = len(seq)
    if n < 2:
        return seq, 1
    keys = [key(x) for x in seq] if key else list(seq)
    inv = 0
    for a in range(n):
        ka = keys[a]
        for b in range(a + 1, n):
            kb = keys[b]
            if ka == kb:
                return None, 0
            if ka > kb:
                inv += 1
    out = tuple(x for _, x in sorted(zip(keys, seq), key=lambda t: t[0]))
    return out, (-1 if inv & 1 else 1)


def _coord_key(c: FiberCoord):
    return (c.alpha, c.offset)


def mono_mul(m1: Mono, m2: Mono):
    """Canonical product of two wedge monomials: ``(mono, sign)`` with sign 0 for zero."""
    h1, v1 = m1
    h2, v2 = m2
    sign = -1 if (len(v1) * len(h2)) & 1 else 1
    if h2:
        if not h1:
            h = h2
        else:
            h, s = _sort_sign(h1 + h2)
            if h is None:
                return None, 0
            sign *= s
    else:
        h = h1
    if v2:
        if not v1:
            v = v2
        else:
            v, s = _sort_sign(v1 + v2, _coord_key)
            if v is None:
                return None, 0
            sign *= s
    else:
        v = v1
    return (h, v), sign


def mono_sort_key(m: Mono):
    h, v = m
    return (len(h), len(v), h, tuple(_coord_key(c) for c in v))


class Form:
    """Immutable finite sum of coefficient x canonical wedge monomial."""

    __slots__ = ("sig", "_terms")

    def __init__(self, sig: Signature, terms: dict | None = None):
        self.sig = sig
        self._terms = {m: c for m, c in (terms or {}).items() if not c.is_zero()}

    @classmethod
    def _make(cls, sig: Signature, terms: dict) -> "Form":
        obj = cls.__new__(cls)
        obj.sig = sig
        obj._terms = terms
        return obj

    @classmethod
    def from_factors(cls, sig: Signature, coeff, horizontal: Iterable[int] = (), vertical: Iterable[FiberCoord] = ()):
        """``coeff * Delta^{h_1} ^ ... ^ d_v u_{c_1} ^ ...`` in the given factor order."""
        coeff = _coerce(coeff)
        h, s1 = _sort_sign(tuple(horizontal))
        v, s2 = _sort_sign(tuple(vertical), _coord_key)
        if h is None or v is None or coeff.is_zero():
            return cls._make(sig, {})
        for i in h:
            if not 0 <= i < sig.p:
                raise SignatureError(f"direction {i + 1} out of range for p={sig.p}")
        for c in v:
            if not 0 <= c.alpha < sig.q or len(c.offset) != sig.p:
                raise SignatureError(f"fiber coordinate {c} does not belong to {sig}")
        return cls._make(sig, {(h, v): coeff if s1 * s2 == 1 else -coeff})

    # ---- inspection ---------------------------------------------------
    def terms(self):
        return self._terms.items()

    def items_sorted(self):
        return sorted(self._terms.items(), key=lambda t: mono_sort_key(t[0]))

    def __len__(self):
        return len(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def bidegrees(self) -> set:
        return {(len(h), len(v)) for h, v in self._terms}

    def bidegree(self) -> tuple:
        """The bidegree of a homogeneous nonzero form; (0, 0) for zero."""
        b = self.bidegrees()
        if not b:
            return (0, 0)
        if len(b) > 1:
            raise ValueError(f"form is not homogeneous: bidegrees {sorted(b)}")
        return next(iter(b))

    def is_homogeneous(self) -> bool:
        return len(self.bidegrees()) <= 1

    def homogeneous_components(self) -> dict:
        out: dict = {}
        for m, c in self._terms.items():
            out.setdefault((len(m[0]), len(m[1])), {})[m] = c
        return {b: Form._make(self.sig, t) for b, t in sorted(out.items())}

    def component(self, k: int, l: int) -> "Form":
        return Form._make(self.sig, {m: c for m, c in self._terms.items() if len(m[0]) == k and len(m[1]) == l})

    def coefficient(self, horizontal=(), vertical=()) -> Expr:
        """Coefficient of the canonical monomial built from the given factors (with sign)."""
        h, s1 = _sort_sign(tuple(horizontal))
        v, s2 = _sort_sign(tuple(vertical), _coord_key)
        if h is None or v is None:
            return ZERO
        c = self._terms.get((h, v), ZERO)
        return c if s1 * s2 == 1 else -c

    def fiber_support(self) -> frozenset:
        s = set()
        for (h, v), c in self._terms.items():
            s.update(v)
            s |= c.fiber_support()
        return frozenset(s)

    def is_decidable(self) -> bool:
        return all(c.is_decidable() for c in self._terms.values())

    # ---- arithmetic ---------------------------------------------------
    def _check(self, other: "Form"):
        if other.sig != self.sig:
            raise SignatureError(f"cannot combine forms over {self.sig} and {other.sig}")

    def __add__(self, other):
        if isinstance(other, int) and other == 0:
            return self
        if not isinstance(other, Form):
            return NotImplemented
        self._check(other)
        if not other._terms:
            return self
        if not self._terms:
            return other
        out = dict(self._terms)
        for m, c in other._terms.items():
            n = out[m] + c if m in out else c
            if n.is_zero():
                out.pop(m, None)
            else:
                out[m] = n
        return Form._make(self.sig, out)

    def __radd__(self, other):
        if isinstance(other, int) and other == 0:
            return self
        return NotImplemented

    def __neg__(self):
        return Form._make(self.sig, {m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        if not isinstance(other, Form):
            return NotImplemented
        return self + (-other)

    def scale(self, f) -> "Form":
        """Multiply every coefficient by a scalar expression or number."""
        f = _coerce(f)
        if f.is_zero():
            return Form._make(self.sig, {})
        if f == ONE:
            return self
        return Form(self.sig, {m: c * f for m, c in self._terms.items()})

    def __mul__(self, f):
        if isinstance(f, Form):
            return NotImplemented
        return self.scale(f)

    __rmul__ = __mul__

    def wedge(self, other: "Form") -> "Form":
        self._check(other)
        out: dict = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                m, s = mono_mul(m1, m2)
                if not s:
                    continue
                c = c1 * c2
                if s < 0:
                    c = -c
                n = out[m] + c if m in out else c
                if n.is_zero():
                    out.pop(m, None)
                else:
                    out[m] = n
        return Form._make(self.sig, out)

    def __xor__(self, other):
        return self.wedge(other)

    def __eq__(self, other):
        if isinstance(other, int) and other == 0:
            return not self._terms
        if not isinstance(other, Form):
            return NotImplemented
        return self.sig == other.sig and self._terms == other._terms

    def __hash__(self):
        return hash((self.sig, frozenset(self._terms.items())))

    def map_coefficients(self, fn) -> "Form":
        return Form(self.sig, {m: fn(c) for m, c in self._terms.items()})

    # ---- rendering ----------------------------------------------------
    def to_str(self) -> str:
        if not self._terms:
            return "0"
        names = self.sig.names
        parts = []
        for (h, v), c in self.items_sorted():
            factors = [f"^{i + 1}" for i in h] + [f"dv {render_coord(x, names)}" for x in v]
            cs = c.to_str(names)
            neg = False
            if len(c) == 1 and cs.startswith("-"):
                neg, cs = True, cs[1:]
            if len(c) > 1:
                cs = f"({cs})"
            if not factors:
                body = cs
            elif cs == "1":
                body = " & ".join(factors)
            else:
                body = cs + " * " + " & ".join(factors)
            parts.append(("-", body) if neg else ("+", body))
        s = parts[0][1] if parts[0][0] == "+" else "-" + parts[0][1]
        for sign, body in parts[1:]:
            s += f" {sign} {body}"
        return s

    def __str__(self):
        return self.to_str()

    def __repr__(self):
        return f"Form({self.to_str()!r})"

    def to_json(self) -> dict:
        names = self.sig.names
        return {
            "bidegrees": [list(b) for b in sorted(self.bidegrees())],
            "terms": [
                {
                    "horizontal": [i + 1 for i in h],
                    "vertical": [render_coord(x, names) for x in v],
                    "coefficient": c.to_str(names),
                }
                for (h, v), c in self.items_sorted()
            ],
            "text": self.to_str(),
        }


# ---- constructors -------------------------------------------------------
def zero_form(sig: Signature) -> Form:
    return Form._make(sig, {})


def scalar(sig: Signature, f) -> Form:
    """The (0,0)-form with coefficient f."""
    f = _coerce(f)
    return Form._make(sig, {((), ()): f} if not f.is_zero() else {})


def delta(sig: Signature, i: int) -> Form:
    """The horizontal one-form Delta^i (0-based i)."""
    return Form.from_factors(sig, ONE, horizontal=(i,))


def dv(sig: Signature, c: FiberCoord) -> Form:
    """The vertical one-form d_v u^alpha_J."""
    return Form.from_factors(sig, ONE, vertical=(c,))


def vol(sig: Signature) -> Form:
    return Form.from_factors(sig, ONE, horizontal=tuple(range(sig.p)))


def co_vol(sig: Signature, i: int) -> Form:
    """d/dn^i contracted into vol (0-based i)."""
    return interior(BaseDual(i), vol(sig))


def wedge(*forms: Form) -> Form:
    out = forms[0]
    for f in forms[1:]:
        out = out.wedge(f)
    return out


def interior(x: FrameVector, sigma: Form) -> Form:
    """Interior product with a frame vector; an antiderivation of degree -1."""
    out: dict = {}
    if type(x) is BaseDual:
        i = x.i
        for (h, v), c in sigma.terms():
            if i in h:
                pos = h.index(i)
                m = (h[:pos] + h[pos + 1:], v)
                out[m] = c if pos % 2 == 0 else -c
    else:
        target = x.coord
        for (h, v), c in sigma.terms():
            if target in v:
                pos = v.index(target)
                m = (h, v[:pos] + v[pos + 1:])
                out[m] = c if (len(h) + pos) % 2 == 0 else -c
    # distinct monomials stay distinct after removing the same factor
    return Form._make(sigma.sig, out)


def degree(sigma: Form) -> int:
    """Total degree k + l of a homogeneous form."""
    k, l = sigma.bidegree()
    return k + l


def coord_sort_key(c: FiberCoord):
    return atom_key(c)
