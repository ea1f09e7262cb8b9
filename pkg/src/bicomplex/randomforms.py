"""Seeded random polynomial expressions, forms, characteristics and Lagrangians."""

from __future__ import annotations

import random
from fractions import Fraction
from itertools import combinations

from .expr import ZERO, Expr, FiberCoord
from .forms import Form
from .signature import Signature

MAX_DEGREE = 3
MAX_RADIUS = 2


def _coef(rng: random.Random) -> Fraction:
    num = rng.choice([-3, -2, -1, 1, 2, 3])
    return Fraction(num, rng.choice([1, 1, 2, 3]))


def random_coord(rng: random.Random, sig: Signature, radius: int = MAX_RADIUS) -> FiberCoord:
    return FiberCoord(rng.randrange(sig.q), tuple(rng.randint(-radius, radius) for _ in range(sig.p)))


def random_expr(rng: random.Random, sig: Signature, terms: int = 3, degree: int = MAX_DEGREE,
                radius: int = MAX_RADIUS, base: bool = False) -> Expr:
    """Sum of ``terms`` monomials of fiber degree <= ``degree``; ``base`` adds n-dependence."""
    out = ZERO
    for _ in range(terms):
        t = Expr.const(_coef(rng))
        for _ in range(rng.randint(0, degree)):
            t = t * Expr.atom(random_coord(rng, sig, radius))
        if base and rng.random() < 0.3:
            t = t * Expr.base(rng.randrange(sig.p))
        out = out + t
    return out


def random_unshifted_poly(rng: random.Random, sig: Signature, terms: int = 3, degree: int = 2) -> Expr:
    return random_expr(rng, sig, terms, degree, radius=0)


def random_form(rng: random.Random, sig: Signature, k: int, l: int, terms: int = 2,
                degree: int = MAX_DEGREE, radius: int = MAX_RADIUS, base: bool = False) -> Form:
    """A (k, l)-form with ``terms`` wedge monomials (some may cancel or coincide)."""
    if not 0 <= k <= sig.p or l < 0:
        raise ValueError(f"bad bidegree ({k},{l}) for p={sig.p}")
    hsets = list(combinations(range(sig.p), k))
    out = Form._make(sig, {})
    for _ in range(terms):
        h = rng.choice(hsets)
        vs: list = []
        guard = 0
        while len(vs) < l and guard < 100:
            c = random_coord(rng, sig, radius)
            if c not in vs:
                vs.append(c)
            guard += 1
        coeff = random_expr(rng, sig, rng.randint(1, 3), degree, radius, base)
        out = out + Form.from_factors(sig, coeff, h, vs)
    return out


def random_characteristic(rng: random.Random, sig: Signature, degree: int = 2, radius: int = 1) -> list:
    return [random_expr(rng, sig, rng.randint(1, 2), degree, radius) for _ in range(sig.q)]


def random_lagrangian(rng: random.Random, sig: Signature, terms: int = 3, degree: int = MAX_DEGREE,
                      radius: int = 1) -> Expr:
    return random_expr(rng, sig, terms, degree, radius)


def random_degenerate(rng: random.Random, sig: Signature):
    """A random DegenerateLagrangian with polynomial L^i_beta and H in unshifted variables."""
    from .multisymplectic import DegenerateLagrangian

    L = [[random_unshifted_poly(rng, sig, rng.randint(0, 2), 2) for _ in range(sig.q)] for _ in range(sig.p)]
    H = random_unshifted_poly(rng, sig, 3, 3)
    return DegenerateLagrangian(sig, L, H)


def make_rng(seed: int) -> random.Random:
    return random.Random(seed)


__all__ = [
    "make_rng", "random_coord", "random_expr", "random_form", "random_characteristic",
    "random_lagrangian", "random_degenerate", "random_unshifted_poly",
]
