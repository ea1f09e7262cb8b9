"""Exact scalar expressions over base coordinates n^i and fiber coordinates u^alpha_J.

An :class:`Expr` is kept permanently in normal form: a sparse map from monomials to
rational coefficients.  A monomial is a sorted tuple of ``(atom, exponent)`` pairs with
nonzero integer exponents (negative exponents give Laurent monomials).  Atoms are base
coordinates, fiber coordinates, named constants, and two opaque kinds keyed by a
normalized argument: unary functions (sin, cos, exp, ln) and reciprocals ``1/g`` of
multi-term expressions.

Structural equality of normal forms decides semantic equality on the Laurent
polynomial fragment.  Outside of it (function or reciprocal atoms) equality is
best-effort; see :meth:`Expr.is_decidable`.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterable, Mapping, NamedTuple, Sequence, Union

from .multiindex import MultiIndex, add

Number = Union[int, Fraction]

FUNCTIONS = ("sin", "cos", "exp", "ln")
DEFAULT_NAMES = ("u", "v", "w", "x", "y", "z")


class FiberCoord(NamedTuple):
    """The shifted dependent variable u^alpha_J (alpha is 0-based).

    Ordering is lexicographic on ``(alpha, offset)``.
    """

    alpha: int
    offset: MultiIndex

    def shifted(self, K: MultiIndex) -> "FiberCoord":
        return FiberCoord(self.alpha, add(self.offset, K))


class BaseCoord(NamedTuple):
    index: int


class Constant(NamedTuple):
    name: str


class Function(NamedTuple):
    name: str
    arg: "Expr"


class Reciprocal(NamedTuple):
    arg: "Expr"


Atom = Union[FiberCoord, BaseCoord, Constant, Function, Reciprocal]
Monomial = tuple  # tuple[tuple[Atom, int], ...], sorted by atom_key


class MissingAssignmentError(KeyError):
    """An evaluation did not provide a value for some coordinate or constant."""

    def __init__(self, what):
        super().__init__(what)
        self.what = what

    def __str__(self):
        return f"no value assigned to {self.what!r}"


class DomainError(ValueError):
    """A function was evaluated outside its real domain."""


class NonPolynomialError(ValueError):
    """An operation needed polynomial fiber dependence and met an opaque atom."""

    def __init__(self, atom, message=None):
        self.atom = atom
        super().__init__(message or f"non-polynomial fiber dependence through {render_atom(atom)}")


@lru_cache(maxsize=None)
def atom_key(a: Atom) -> tuple:
    t = type(a)
    if t is FiberCoord:
        return (2, a.alpha, a.offset)
    if t is BaseCoord:
        return (0, a.index)
    if t is Constant:
        return (1, a.name)
    if t is Function:
        return (3, a.name, a.arg.key)
    return (4, a.arg.key)


def _item_key(item):
    return atom_key(item[0])


def mono_order(m: Monomial) -> tuple:
    """Display and evaluation order: by total degree, then lexicographically."""
    return (sum(abs(e) for _, e in m), tuple((atom_key(a), e) for a, e in m))


def _term_order(t) -> tuple:
    return mono_order(t[0])


def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    d = dict(a)
    for atom, e in b:
        n = d.get(atom, 0) + e
        if n:
            d[atom] = n
        else:
            del d[atom]
    return tuple(sorted(d.items(), key=_item_key))


def _coerce(x) -> "Expr":
    if isinstance(x, Expr):
        return x
    if isinstance(x, (int, Fraction)):
        return Expr.const(x)
    if isinstance(x, float):
        raise TypeError("floats are not exact; use Fraction or a rational literal")
    return NotImplemented


class Expr:
    """Immutable expression in expanded, collected normal form."""

    __slots__ = ("_terms", "_hash", "_key", "_support")

    def __init__(self, terms: Mapping[Monomial, Number] | None = None):
        self._terms = {m: Fraction(c) for m, c in (terms or {}).items() if c != 0}
        self._hash = None
        self._key = None
        self._support = None

    @classmethod
    def _make(cls, terms: dict) -> "Expr":
        # trusted constructor: terms are normalized and contain no zeros
        obj = cls.__new__(cls)
        obj._terms = terms
        obj._hash = None
        obj._key = None
        obj._support = None
        return obj

    # ---- constructors -------------------------------------------------
    @classmethod
    def const(cls, c: Number) -> "Expr":
        return cls._make({(): Fraction(c)} if c != 0 else {})

    @classmethod
    def atom(cls, a: Atom, exponent: int = 1) -> "Expr":
        return cls._make({((a, exponent),): Fraction(1)})

    @classmethod
    def fiber(cls, alpha: int, offset: Sequence[int]) -> "Expr":
        return cls.atom(FiberCoord(alpha, tuple(offset)))

    @classmethod
    def base(cls, i: int) -> "Expr":
        return cls.atom(BaseCoord(i))

    @classmethod
    def named(cls, name: str) -> "Expr":
        return cls.atom(Constant(name))

    # ---- inspection ---------------------------------------------------
    def terms(self):
        return self._terms.items()

    def __len__(self):
        return len(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return not self._terms or (len(self._terms) == 1 and () in self._terms)

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise ValueError(f"{self} is not a rational constant")
        return self._terms.get((), Fraction(0))

    @property
    def key(self) -> tuple:
        if self._key is None:
            self._key = tuple(
                sorted((tuple((atom_key(a), e) for a, e in m), c) for m, c in self._terms.items())
            )
        return self._key

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Expr.const(other)
        if not isinstance(other, Expr):
            return NotImplemented
        return self._terms == other._terms

    def __lt__(self, other: "Expr"):
        return self.key < other.key

    def atoms(self) -> set:
        """Top-level atoms (not descending into function arguments)."""
        return {a for m in self._terms for a, _ in m}

    def fiber_support(self) -> frozenset:
        """All fiber coordinates the expression depends on, including inside atoms."""
        if self._support is None:
            s = set()
            for m in self._terms:
                for a, _ in m:
                    t = type(a)
                    if t is FiberCoord:
                        s.add(a)
                    elif t is Function or t is Reciprocal:
                        s |= a.arg.fiber_support()
            self._support = frozenset(s)
        return self._support

    def is_polynomial(self) -> bool:
        """No opaque atoms and no negative exponents."""
        return all(
            type(a) in (FiberCoord, BaseCoord, Constant) and e > 0
            for m in self._terms
            for a, e in m
        )

    def is_decidable(self) -> bool:
        """True when structural equality is semantic equality (Laurent fragment)."""
        return all(type(a) in (FiberCoord, BaseCoord, Constant) for m in self._terms for a, _ in m)

    def opaque_atoms(self) -> list:
        return sorted(
            {a for m in self._terms for a, _ in m if type(a) in (Function, Reciprocal)},
            key=atom_key,
        )

    # ---- arithmetic ---------------------------------------------------
    def __add__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        if not other._terms:
            return self
        if not self._terms:
            return other
        out = dict(self._terms)
        for m, c in other._terms.items():
            n = out.get(m, 0) + c
            if n:
                out[m] = n
            else:
                out.pop(m, None)
        return Expr._make(out)

    __radd__ = __add__

    def __neg__(self):
        return Expr._make({m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return other + (-self)

    def __mul__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        if not self._terms or not other._terms:
            return ZERO
        out: dict = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                m = _mono_mul(m1, m2)
                n = out.get(m, 0) + c1 * c2
                if n:
                    out[m] = n
                else:
                    out.pop(m, None)
        return Expr._make(out)

    __rmul__ = __mul__

    def scale(self, c: Number) -> "Expr":
        if c == 0:
            return ZERO
        c = Fraction(c)
        return Expr._make({m: v * c for m, v in self._terms.items()})

    def reciprocal(self) -> "Expr":
        if not self._terms:
            raise ZeroDivisionError("reciprocal of zero expression")
        if len(self._terms) == 1:
            (m, c), = self._terms.items()
            out = Expr.const(1 / c)
            plain = []
            for a, e in m:
                if type(a) is Reciprocal:
                    out = out * a.arg ** e
                else:
                    plain.append((a, -e))
            return out * Expr._make({tuple(plain): Fraction(1)}) if plain else out
        lead = self._terms[min(self._terms, key=lambda mono: tuple((atom_key(a), e) for a, e in mono))]
        primitive = self.scale(1 / lead)
        return Expr.atom(Reciprocal(primitive)).scale(1 / lead)

    def __truediv__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return other * self.reciprocal()

    def __pow__(self, n: int):
        if not isinstance(n, int):
            raise TypeError("only integer powers are supported")
        if n < 0:
            return self.reciprocal() ** (-n)
        if n == 0:
            return ONE
        if len(self._terms) == 1:
            (m, c), = self._terms.items()
            return Expr._make({tuple((a, e * n) for a, e in m): c ** n})
        result, base = ONE, self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    # ---- calculus -----------------------------------------------------
    def diff(self, c: FiberCoord) -> "Expr":
        """Formal partial derivative, each u^alpha_J an independent symbol."""
        if c not in self.fiber_support():
            return ZERO
        out = ZERO
        plain: dict = {}
        for m, coef in self._terms.items():
            for idx, (a, e) in enumerate(m):
                t = type(a)
                if a == c:
                    rest = m[:idx] + (((a, e - 1),) if e != 1 else ()) + m[idx + 1:]
                    n = plain.get(rest, 0) + coef * e
                    if n:
                        plain[rest] = n
                    else:
                        plain.pop(rest, None)
                elif (t is Function or t is Reciprocal) and c in a.arg.fiber_support():
                    rest = m[:idx] + (((a, e - 1),) if e != 1 else ()) + m[idx + 1:]
                    outer = Expr._make({rest: coef * e})
                    out = out + outer * _atom_derivative(a, c)
        return out + Expr._make(plain)

    def shift(self, K: MultiIndex) -> "Expr":
        """S_K: n^i -> n^i + K^i and u^alpha_J -> u^alpha_{J+K}; a ring homomorphism."""
        if not any(K) or not self._terms:
            return self
        out: dict = {}
        slow = ZERO
        for m, c in self._terms.items():
            if all(type(a) is FiberCoord or type(a) is Constant for a, _ in m):
                # adding the same K preserves the fiber-coordinate order
                nm = tuple((FiberCoord(a.alpha, add(a.offset, K)), e) if type(a) is FiberCoord else (a, e)
                           for a, e in m)
                out[nm] = out.get(nm, 0) + c
            else:
                term = Expr.const(c)
                for a, e in m:
                    term = term * _shift_atom(a, K) ** e
                slow = slow + term
        fast = Expr._make({m: c for m, c in out.items() if c})
        return fast + slow if slow._terms else fast

    def drop(self, c: Atom) -> "Expr":
        """The expression with every monomial containing the atom ``c`` removed (c -> 0 for polynomials)."""
        return Expr._make({m: v for m, v in self._terms.items() if not any(a == c for a, _ in m)})

    # ---- evaluation ---------------------------------------------------
    def evaluate(
        self,
        base: Sequence[int] | None = None,
        fiber: Mapping[FiberCoord, float] | Callable[[FiberCoord], float] | None = None,
        constants: Mapping[str, float] | None = None,
    ) -> float:
        """IEEE double value at the given base point and fiber assignment."""
        total = 0.0
        for m, c in sorted(self._terms.items(), key=_term_order):
            v = float(c)
            for a, e in m:
                v *= _eval_atom(a, base, fiber, constants) ** e
            total += v
        return total

    def to_source(self, namer: Callable[[Atom], str], module: str = "math") -> str:
        """Python source for numeric evaluation; ``namer`` maps plain atoms to names."""
        if not self._terms:
            return "0.0"
        parts = []
        for m, c in sorted(self._terms.items(), key=_term_order):
            factors = [repr(float(c))] if (c != 1 or not m) else []
            for a, e in m:
                t = type(a)
                if t is Function:
                    fn = "log" if a.name == "ln" else a.name
                    s = f"{module}.{fn}({a.arg.to_source(namer, module)})"
                elif t is Reciprocal:
                    s = f"(1.0/({a.arg.to_source(namer, module)}))"
                else:
                    s = namer(a)
                factors.append(s if e == 1 else f"{s}**({e})")
            parts.append("*".join(factors))
        return "(" + " + ".join(parts) + ")"

    # ---- rendering ----------------------------------------------------
    def to_str(self, names: Sequence[str] | None = None) -> str:
        if not self._terms:
            return "0"
        out = []
        items = sorted(self._terms.items(), key=_term_order)
        for i, (m, c) in enumerate(items):
            sign = "-" if c < 0 else "+"
            mag = -c if c < 0 else c
            factors = [render_atom(a, names) + (f"^{e}" if e > 0 and e != 1 else f"^({e})" if e < 0 else "")
                       for a, e in m]
            if not factors:
                body = _render_number(mag)
            elif mag == 1:
                body = "*".join(factors)
            else:
                body = _render_number(mag) + "*" + "*".join(factors)
            if i == 0:
                out.append(body if sign == "+" else "-" + body)
            else:
                out.append(f" {sign} {body}")
        return "".join(out)

    def __str__(self):
        return self.to_str()

    def __repr__(self):
        return f"Expr({self.to_str()!r})"


def _render_number(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def render_coord(c: FiberCoord, names: Sequence[str] | None = None) -> str:
    names = names or DEFAULT_NAMES
    name = names[c.alpha] if c.alpha < len(names) else f"u{c.alpha + 1}"
    return f"{name}[{','.join(str(j) for j in c.offset)}]"


def render_atom(a: Atom, names: Sequence[str] | None = None) -> str:
    t = type(a)
    if t is FiberCoord:
        return render_coord(a, names)
    if t is BaseCoord:
        return f"n{a.index + 1}"
    if t is Constant:
        return a.name
    if t is Function:
        return f"{a.name}({a.arg.to_str(names)})"
    return f"(1/({a.arg.to_str(names)}))"


ZERO = Expr._make({})
ONE = Expr._make({(): Fraction(1)})


def _shift_atom(a: Atom, K: MultiIndex) -> Expr:
    t = type(a)
    if t is FiberCoord:
        return Expr.atom(a.shifted(K))
    if t is BaseCoord:
        return Expr.base(a.index) + K[a.index] if K[a.index] else Expr.atom(a)
    if t is Constant:
        return Expr.atom(a)
    if t is Function:
        return apply_function(a.name, a.arg.shift(K))
    return a.arg.shift(K).reciprocal()


def _atom_derivative(a: Atom, c: FiberCoord) -> Expr:
    inner = a.arg.diff(c)
    if type(a) is Reciprocal:
        return -(Expr.atom(a, 2)) * inner
    g = a.arg
    if a.name == "sin":
        outer = apply_function("cos", g)
    elif a.name == "cos":
        outer = -apply_function("sin", g)
    elif a.name == "exp":
        outer = Expr.atom(a)
    else:  # ln
        outer = g.reciprocal()
    return outer * inner


def _eval_atom(a: Atom, base, fiber, constants) -> float:
    t = type(a)
    if t is FiberCoord:
        if fiber is None:
            raise MissingAssignmentError(render_coord(a))
        if callable(fiber):
            return float(fiber(a))
        try:
            return float(fiber[a])
        except KeyError:
            raise MissingAssignmentError(render_coord(a)) from None
    if t is BaseCoord:
        if base is None or a.index >= len(base):
            raise MissingAssignmentError(f"n{a.index + 1}")
        return float(base[a.index])
    if t is Constant:
        if constants is None or a.name not in constants:
            raise MissingAssignmentError(a.name)
        return float(constants[a.name])
    x = a.arg.evaluate(base, fiber, constants)
    if t is Reciprocal:
        if x == 0.0:
            raise DomainError(f"division by zero in 1/({a.arg})")
        return 1.0 / x
    if a.name == "ln":
        if x <= 0.0:
            raise DomainError(f"ln of non-positive argument {x!r} in ln({a.arg})")
        return math.log(x)
    return getattr(math, a.name)(x)


def apply_function(name: str, arg) -> Expr:
    """sin/cos/exp/ln of an expression; folds the trivial constant cases."""
    arg = _coerce(arg)
    if name not in FUNCTIONS:
        raise ValueError(f"unknown function {name!r}; supported: {', '.join(FUNCTIONS)}")
    if arg.is_zero():
        if name == "sin":
            return ZERO
        if name in ("cos", "exp"):
            return ONE
        raise DomainError("ln(0)")
    if name == "ln" and arg == ONE:
        return ZERO
    return Expr.atom(Function(name, arg))


def sin(e) -> Expr:
    return apply_function("sin", e)


def cos(e) -> Expr:
    return apply_function("cos", e)


def exp(e) -> Expr:
    return apply_function("exp", e)


def ln(e) -> Expr:
    return apply_function("ln", e)


def partial(expr: Expr, c: FiberCoord) -> Expr:
    return expr.diff(c)


def shift(expr: Expr, K: MultiIndex) -> Expr:
    return expr.shift(K)


def evaluate(expr: Expr, base=None, fiber=None, constants=None) -> float:
    return expr.evaluate(base, fiber, constants)


def fiber_radius(exprs: Iterable[Expr]) -> int:
    """Largest |offset entry| over the fiber support."""
    r = 0
    for e in exprs:
        for c in e.fiber_support():
            if c.offset:
                r = max(r, max(abs(j) for j in c.offset))
    return r


def compile_expr(expr: Expr, args: Sequence[Atom], module: str = "math", constants: Mapping[str, float] | None = None):
    """Compile to a Python callable of positional ``args`` (atoms), e.g. for numpy arrays."""
    import numpy as np

    names = {a: f"_a{i}" for i, a in enumerate(args)}
    consts = dict(constants or {})

    def namer(a):
        if a in names:
            return names[a]
        if type(a) is Constant and a.name in consts:
            return repr(float(consts[a.name]))
        raise MissingAssignmentError(render_atom(a))

    src = f"lambda {', '.join(names.values())}: {expr.to_source(namer, module)}"
    namespace = {"math": math, "np": np}
    return eval(src, namespace)  # noqa: S307 - source is generated from a normalized Expr
