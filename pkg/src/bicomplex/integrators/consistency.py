"""Mesh exterior difference versus the uniform one.

On a tensor-product mesh the mesh one-forms are Delta_n^i = eps_n^i Delta^i and the
mesh operator is sum_i Delta_n^i ^ (D_{n^i} / eps_n^i).  Substituting the one-forms
cancels every eps, so the operator coincides with the uniform d_h for any steps.
"""

from __future__ import annotations

import random
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from ..expr import BaseCoord, Constant, Expr, FiberCoord, Function, Reciprocal
from ..forms import Form
from ..operators import _insert_sorted, _put, d_h
from ..multiindex import unit


def eps_atom(i: int) -> Expr:
    return Expr.named(f"eps{i + 1}")


def mesh_d_h(sigma: Form) -> Form:
    """sum_i Delta_n^i ^ (D_i / eps^i) with Delta_n^i written as eps^i Delta^i.

    eps^i is kept as a symbol; in normal form eps^i * (eps^i)^-1 collapses to 1.
    """
    sig = sigma.sig
    out: dict = {}
    for i in range(sig.p):
        e = eps_atom(i)
        Ui = unit(sig.p, i)
        for (h, v), c in sigma.terms():
            nh, s = _insert_sorted(h, i)
            if not s:
                continue
            nv = tuple(x.shifted(Ui) for x in v)
            shifted = e * (c.shift(Ui) / e)
            unshifted = -(e * (c / e))
            _put(out, (nh, nv), shifted if s == 1 else -shifted)
            _put(out, (nh, v), unshifted if s == 1 else -unshifted)
    return Form._make(sig, out)


def _exact_value(e: Expr, point: Callable) -> Fraction:
    total = Fraction(0)
    for m, c in e.terms():
        v = Fraction(c)
        for a, k in m:
            t = type(a)
            if t is Function or t is Reciprocal:
                raise ValueError("exact sampling needs polynomial coefficients")
            x = point(a)
            v *= x ** k
        total += v
    return total


def sampled_mesh_check(sigma: Form, steps: Sequence[Sequence[Fraction]], samples: int, seed: int) -> dict:
    """Evaluate both operators' coefficients with exact rationals at random base points.

    ``steps[i]`` is the step array of direction i (used cyclically); fiber values are
    random rationals.  Returns the number of compared coefficients and mismatches.
    """
    sig = sigma.sig
    rng = random.Random(seed)
    lhs, rhs = dict(mesh_d_h(sigma).terms()), dict(d_h(sigma).terms())
    compared = mismatches = 0
    for _ in range(samples):
        n = tuple(rng.randint(0, 50) for _ in range(sig.p))
        fiber: dict = {}

        def point(a):
            t = type(a)
            if t is FiberCoord:
                if a not in fiber:
                    fiber[a] = Fraction(rng.randint(-20, 20), rng.randint(1, 7))
                return fiber[a]
            if t is BaseCoord:
                return Fraction(n[a.index])
            if t is Constant and a.name.startswith("eps"):
                i = int(a.name[3:]) - 1
                arr = steps[i]
                return Fraction(arr[n[i] % len(arr)])
            raise ValueError(f"cannot sample atom {a}")

        for mono in sorted(set(lhs) | set(rhs), key=str):
            a = _exact_value(lhs[mono], point) if mono in lhs else Fraction(0)
            b = _exact_value(rhs[mono], point) if mono in rhs else Fraction(0)
            compared += 1
            mismatches += a != b
    return {"compared": compared, "mismatches": mismatches}


def nonuniform_d_h_consistency(sigma: Form, steps: Sequence[Sequence[Fraction]] | None = None,
                               samples: int = 5, seed: int = 0) -> dict:
    residual = mesh_d_h(sigma) - d_h(sigma)
    report = {"symbolic_equal": residual.is_zero(), "residual": residual.to_str()}
    if steps is not None:
        report["sampled"] = sampled_mesh_check(sigma, steps, samples, seed)
        report["sampled_equal"] = report["sampled"]["mismatches"] == 0
    return report


def forward_difference_error(f: Callable, df: Callable, nodes: np.ndarray) -> float:
    """max |(f(x_{n+1}) - f(x_n))/eps_n - f'(x_n)| over the mesh."""
    x = np.asarray(nodes, dtype=float)
    eps = np.diff(x)
    return float(np.max(np.abs((f(x[1:]) - f(x[:-1])) / eps - df(x[:-1]))))


def refine(nodes: np.ndarray) -> np.ndarray:
    """Halve every step by inserting midpoints."""
    x = np.asarray(nodes, dtype=float)
    mid = (x[1:] + x[:-1]) / 2
    out = np.empty(2 * len(x) - 1)
    out[0::2] = x
    out[1::2] = mid
    return out


def convergence_ratios(f: Callable, df: Callable, nodes: np.ndarray, levels: int = 4) -> tuple:
    """(ratios, errors) of the forward difference under repeated step halving."""
    errs = []
    x = np.asarray(nodes, dtype=float)
    for _ in range(levels + 1):
        errs.append(forward_difference_error(f, df, x))
        x = refine(x)
    return [errs[i] / errs[i + 1] for i in range(levels)], errs
