"""The identity battery behind ``bicomplex check``.

Every identity is tested with exact rational arithmetic on seeded random polynomial
forms.  The operators are looked up through an :class:`Ops` bundle so a deliberately
broken d_v can be injected to prove that the harness detects failures.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable

from . import __version__
from .forms import BaseDual, Form, interior
from .homotopy import default_anchor, h_horizontal, h_vertical
from .multisymplectic import structural_identity
from .operators import VectorField, contract, d_h, d_v, lie_derivative, lie_difference
from .randomforms import make_rng, random_characteristic, random_degenerate, random_form, random_lagrangian
from .signature import Signature
from .variational import delta_v, interior_euler, lagrangian, source_form

PS = (1, 2, 3)
QS = (1, 2)
LS = (0, 1, 2)


@dataclass
class Ops:
    d_v: Callable = d_v
    d_h: Callable = d_h

    def d(self, s: Form) -> Form:
        return self.d_h(s) + self.d_v(s)


def sign_bug_d_v(sigma: Form) -> Form:
    """d_v with the (-1)^k sign of odd horizontal degree dropped; used to test the harness."""
    out = Form._make(sigma.sig, {})
    for (k, _), part in sorted(sigma.homogeneous_components().items()):
        r = d_v(part)
        out = out + (r if k % 2 == 0 else -r)
    return out


@dataclass
class Outcome:
    name: str
    criterion: int
    cases: int = 0
    failures: int = 0
    counterexample: dict | None = None

    @property
    def passed(self) -> bool:
        return self.failures == 0

    def record(self, sig: Signature, subject: str, residual: Form | bool):
        self.cases += 1
        bad = (not residual) if isinstance(residual, bool) else not residual.is_zero()
        if bad:
            self.failures += 1
            if self.counterexample is None:
                self.counterexample = {
                    "signature": sig.to_json(),
                    "input": subject,
                    "residual": "identity returned False" if isinstance(residual, bool) else residual.to_str(),
                }

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "criterion": self.criterion,
            "cases": self.cases,
            "failures": self.failures,
            "passed": self.passed,
            "counterexample": self.counterexample,
        }


# ---- form identities ------------------------------------------------------
def _form_identities(ops: Ops):
    """(name, criterion, applies(p, k, l), residual(sig, sigma, rng))."""

    def cartan_a(sig, s, rng):
        v = VectorField(sig, random_characteristic(rng, sig))
        return contract(v, ops.d_h(s)) + ops.d_h(contract(v, s))

    def cartan_lie(sig, s, rng):
        v = VectorField(sig, random_characteristic(rng, sig))
        return lie_derivative(v, s) - (contract(v, ops.d(s)) + ops.d(contract(v, s)))

    def cartan_b(sig, s, rng):
        i = rng.randrange(sig.p)
        return interior(BaseDual(i), ops.d_v(s)) + ops.d_v(interior(BaseDual(i), s))

    def cartan_c(sig, s, rng):
        i = rng.randrange(sig.p)
        return lie_difference(s, i) - (interior(BaseDual(i), ops.d_h(s)) + ops.d_h(interior(BaseDual(i), s)))

    def cartan_d(sig, s, rng):
        i = rng.randrange(sig.p)
        return lie_difference(s, i) - (interior(BaseDual(i), ops.d(s)) + ops.d(interior(BaseDual(i), s)))

    def h_mid(sig, s, rng):
        a = default_anchor(s)
        return h_horizontal(ops.d_h(s), a) + ops.d_h(h_horizontal(s, a)) - s

    def h_top(sig, s, rng):
        return interior_euler(s) + ops.d_h(h_horizontal(s)) - s

    def h_vert(sig, s, rng):
        return ops.d_v(h_vertical(s)) + h_vertical(ops.d_v(s)) - s

    return [
        ("d_v^2 = 0", 1, lambda p, k, l: True, lambda sig, s, rng: ops.d_v(ops.d_v(s))),
        ("d_h^2 = 0", 1, lambda p, k, l: True, lambda sig, s, rng: ops.d_h(ops.d_h(s))),
        ("d_h d_v + d_v d_h = 0", 1, lambda p, k, l: True,
         lambda sig, s, rng: ops.d_h(ops.d_v(s)) + ops.d_v(ops.d_h(s))),
        ("(d_h + d_v)^2 = 0", 1, lambda p, k, l: True, lambda sig, s, rng: ops.d(ops.d(s))),
        ("I^2 = I", 2, lambda p, k, l: k == p and l >= 1,
         lambda sig, s, rng: interior_euler(interior_euler(s)) - interior_euler(s)),
        ("I d_h = 0", 2, lambda p, k, l: k == p - 1 and l >= 1,
         lambda sig, s, rng: interior_euler(ops.d_h(s))),
        ("E(d_h sigma) = 0", 3, lambda p, k, l: k == p - 1 and l == 0,
         lambda sig, s, rng: _el(ops, ops.d_h(s))),
        ("sigma = d_v h_v sigma + h_v d_v sigma", 4, lambda p, k, l: l >= 1, h_vert),
        ("h d_h sigma + d_h h sigma = sigma (1 <= k <= p-1)", 5, lambda p, k, l: 1 <= k <= p - 1 and l >= 1, h_mid),
        ("sigma = I sigma + d_h h sigma (k = p)", 5, lambda p, k, l: k == p and l >= 1, h_top),
        ("v -| d_h sigma + d_h(v -| sigma) = 0", 6, lambda p, k, l: True, cartan_a),
        ("L_v sigma = v -| d sigma + d(v -| sigma)", 6, lambda p, k, l: True, cartan_lie),
        ("d/dn^i -| d_v sigma + d_v(d/dn^i -| sigma) = 0", 6, lambda p, k, l: True, cartan_b),
        ("D_i sigma = d/dn^i -| d_h sigma + d_h(d/dn^i -| sigma)", 6, lambda p, k, l: True, cartan_c),
        ("D_i sigma = d/dn^i -| d sigma + d(d/dn^i -| sigma)", 6, lambda p, k, l: True, cartan_d),
    ]


def _el(ops: Ops, lag: Form) -> Form:
    if lag.is_zero():
        return lag
    return interior_euler(ops.d_v(lag))


def _unqualified_top(ops: Ops, s: Form) -> bool:
    """Does h d_h + d_h h = id hold verbatim at k = p (where d_h sigma = 0)?"""
    return (ops.d_h(h_horizontal(s)) - s).is_zero()


# ---- battery ----------------------------------------------------------------
def run_battery(seed: int = 0, sizes: int = 100, ops: Ops | None = None, ps=PS, qs=QS, ls=LS,
                lagrangians: int | None = None) -> dict:
    ops = ops or Ops()
    rng = make_rng(seed)
    idents = _form_identities(ops)
    outcomes = {name: Outcome(name, crit) for name, crit, _, _ in idents}
    top_holds = top_fails = 0
    for p in ps:
        for q in qs:
            sig = Signature(p, q)
            for k in range(p + 1):
                for l in ls:
                    active = [x for x in idents if x[2](p, k, l)]
                    for _ in range(sizes):
                        s = random_form(rng, sig, k, l, terms=2, base=rng.random() < 0.2)
                        text = s.to_str()
                        for name, _, _, fn in active:
                            outcomes[name].record(sig, text, fn(sig, s, rng))
                        if k == p and l >= 1 and not s.is_zero():
                            if _unqualified_top(ops, s):
                                top_holds += 1
                            else:
                                top_fails += 1
    nl = sizes if lagrangians is None else lagrangians
    outcomes.update(_lagrangian_checks(ops, rng, max(nl, 1)))
    items = [o.to_json() for o in outcomes.values()]
    return {
        "tool": "bicomplex",
        "version": __version__,
        "seed": seed,
        "sizes": sizes,
        "signatures": {"p": list(ps), "q": list(qs), "l": list(ls)},
        "identities": items,
        "horizontal_homotopy_top_degree": {
            "identity_used": "sigma = I(sigma) + d_h h(sigma)",
            "unqualified_identity_holds": top_holds,
            "unqualified_identity_fails": top_fails,
        },
        "all_passed": all(i["passed"] for i in items),
    }


def _lagrangian_checks(ops: Ops, rng, count: int) -> dict:
    struct = Outcome("d_h omega + d_v E(L) = 0 (degenerate Lagrangians)", 8)
    helm = Outcome("Helmholtz: delta_v E(L) = 0", 9)
    inv = Outcome("E(h_v(E(L))) = E(L)", 9)
    curated = Outcome("Helmholtz rejects a non-variational source form", 9)
    for i in range(count):
        p = (1, 2)[i % 2]
        q = (1, 2)[(i // 2) % 2]
        sig = Signature(p, q)
        lag = random_degenerate(rng, sig)
        si = structural_identity(lag)
        struct.record(sig, json.dumps(lag.to_json()["L"]) + " H=" + lag.to_json()["H"], si.residual)
        L = lagrangian(sig, random_lagrangian(rng, sig))
        E = _el(ops, L)
        helm.record(sig, L.to_str(), delta_v(E) if not E.is_zero() else E)
        if not E.is_zero():
            inv.record(sig, L.to_str(), _el(ops, h_vertical(E)) - E)
    sig = Signature(1, 1)
    bad = source_form(sig, ["u[1]"])
    curated.record(sig, bad.to_str(), not delta_v(bad).is_zero())
    return {o.name: o for o in (struct, helm, inv, curated)}


def report_text(report: dict) -> str:
    """Byte-stable JSON."""
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


__all__ = ["Ops", "run_battery", "report_text", "sign_bug_d_v"]