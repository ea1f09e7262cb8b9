"""Hypothesis property tests for the algebraic invariants.

Forms are drawn from a strategy built here from atoms, independent of the package's own
random-form generator used by ``bicomplex check``.
"""

import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from bicomplex.dsl import parse
from bicomplex.expr import ONE, ZERO, Expr, FiberCoord
from bicomplex.forms import BaseDual, Form, interior
from bicomplex.homotopy import default_anchor, h_horizontal, h_vertical
from bicomplex.integrators.consistency import mesh_d_h
from bicomplex.integrators.euler_b import EulerB
from bicomplex.multisymplectic import DegenerateLagrangian, structural_identity
from bicomplex.operators import VectorField, contract, d_h, d_total, d_v, lie_derivative, lie_difference
from bicomplex.signature import Signature
from bicomplex.variational import delta_v, euler_lagrange, interior_euler, lagrangian

SETTINGS = settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])


@st.composite
def signatures(draw, ps=(1, 2, 3), qs=(1, 2)):
    return Signature(draw(st.sampled_from(ps)), draw(st.sampled_from(qs)))


def coords(sig, radius=2):
    return st.builds(
        FiberCoord,
        st.integers(0, sig.q - 1),
        st.tuples(*[st.integers(-radius, radius)] * sig.p),
    )


def exprs(sig, max_terms=3, max_degree=3, base=True, radius=2):
    atom = coords(sig, radius).map(lambda c: Expr.fiber(c.alpha, c.offset))
    if base:
        atom = atom | st.integers(0, sig.p - 1).map(Expr.base)
    mono = st.tuples(st.integers(-3, 3).filter(bool), st.lists(atom, max_size=max_degree))

    def build(monos):
        out = ZERO
        for c, atoms in monos:
            m = Expr.const(c)
            for a in atoms:
                m = m * a
            out = out + m
        return out

    return st.lists(mono, min_size=1, max_size=max_terms).map(build)


@st.composite
def forms(draw, sig, k, l, max_terms=2):
    out = Form._make(sig, {})
    for _ in range(draw(st.integers(1, max_terms))):
        hor = sorted(draw(st.lists(st.integers(0, sig.p - 1), min_size=k, max_size=k, unique=True)))
        vert = draw(st.lists(coords(sig), min_size=l, max_size=l, unique=True))
        out = out + Form.from_factors(sig, draw(exprs(sig)), hor, vert)
    return out


@st.composite
def sig_and_form(draw, kmin=0, kmax=None, lmin=0, lmax=2, top=False):
    sig = draw(signatures())
    if top:
        k = sig.p
    else:
        k = draw(st.integers(kmin, sig.p if kmax is None else min(kmax(sig.p), sig.p)))
    l = draw(st.integers(lmin, lmax))
    return sig, draw(forms(sig, k, l))


@st.composite
def characteristics(draw, sig):
    return VectorField(sig, [draw(exprs(sig, max_terms=2, max_degree=2)) for _ in range(sig.q)])


# ---- expression algebra ----------------------------------------------------------------
S2 = Signature(2, 2, ("u", "v"))


@SETTINGS
@given(exprs(S2), exprs(S2), exprs(S2))
def test_ring_laws(a, b, c):
    assert a + b == b + a and a * b == b * a
    assert a * (b + c) == a * b + a * c
    assert (a + b) - b == a
    assert a * ONE == a and (a * ZERO).is_zero()


@SETTINGS
@given(exprs(S2), exprs(S2), st.tuples(st.integers(-3, 3), st.integers(-3, 3)), st.tuples(st.integers(-3, 3), st.integers(-3, 3)))
def test_shift_is_a_ring_homomorphism_and_a_group_action(a, b, K, M):
    assert (a * b).shift(K) == a.shift(K) * b.shift(K)
    assert a.shift(K).shift(M) == a.shift((K[0] + M[0], K[1] + M[1]))
    assert a.shift(K).shift((-K[0], -K[1])) == a


@SETTINGS
@given(exprs(S2), exprs(S2), coords(S2))
def test_leibniz_and_render_round_trip(a, b, c):
    assert (a * b).diff(c) == a.diff(c) * b + a * b.diff(c)
    assert parse(a.to_str(S2.names), S2) == a


# ---- exterior algebra ----------------------------------------------------------------
@SETTINGS
@given(st.data())
def test_graded_commutativity(data):
    sig = data.draw(signatures())
    a = data.draw(forms(sig, data.draw(st.integers(0, sig.p)), data.draw(st.integers(0, 2))))
    b = data.draw(forms(sig, data.draw(st.integers(0, sig.p)), data.draw(st.integers(0, 2))))
    da, db = sum(a.bidegree()), sum(b.bidegree())
    sign = -1 if da * db % 2 else 1
    assert a.wedge(b) == b.wedge(a).scale(Expr.const(sign))


# ---- cochain identities ----------------------------------------------------------------
@SETTINGS
@given(sig_and_form())
def test_cochain(sf):
    _, s = sf
    assert d_v(d_v(s)).is_zero()
    assert d_h(d_h(s)).is_zero()
    assert (d_h(d_v(s)) + d_v(d_h(s))).is_zero()
    assert d_total(d_total(s)).is_zero()


@SETTINGS
@given(sig_and_form(top=True, lmin=1))
def test_interior_euler_projection_and_top_homotopy(sf):
    _, s = sf
    Is = interior_euler(s)
    assert interior_euler(Is) == Is
    assert Is + d_h(h_horizontal(s)) == s


@SETTINGS
@given(st.data())
def test_interior_euler_kills_divergences(data):
    sig = data.draw(signatures())
    s = data.draw(forms(sig, sig.p - 1, data.draw(st.integers(1, 2))))
    assert interior_euler(d_h(s)).is_zero()


@SETTINGS
@given(sig_and_form(lmin=1))
def test_vertical_homotopy(sf):
    _, s = sf
    assert d_v(h_vertical(s)) + h_vertical(d_v(s)) == s


@SETTINGS
@given(st.data())
def test_horizontal_homotopy_middle_degrees(data):
    sig = data.draw(signatures(ps=(2, 3)))
    k = data.draw(st.integers(1, sig.p - 1))
    s = data.draw(forms(sig, k, data.draw(st.integers(1, 2))))
    a = default_anchor(s)
    assert h_horizontal(d_h(s), a) + d_h(h_horizontal(s, a)) == s


@SETTINGS
@given(st.data())
def test_cartan_identities(data):
    sig, s = data.draw(sig_and_form())
    v = data.draw(characteristics(sig))
    i = data.draw(st.integers(0, sig.p - 1))
    n = BaseDual(i)
    assert (contract(v, d_h(s)) + d_h(contract(v, s))).is_zero()
    assert lie_derivative(v, s) == contract(v, d_total(s)) + d_total(contract(v, s))
    assert (interior(n, d_v(s)) + d_v(interior(n, s))).is_zero()
    assert lie_difference(s, i) == interior(n, d_h(s)) + d_h(interior(n, s))


# ---- variational -----------------------------------------------------------------------
@SETTINGS
@given(st.data())
def test_el_of_divergence_vanishes_and_helmholtz(data):
    sig = data.draw(signatures(ps=(1, 2)))
    F = data.draw(forms(sig, sig.p - 1, 0))
    assert euler_lagrange(d_h(F)).is_zero()
    L = lagrangian(sig, data.draw(exprs(sig)))
    E = euler_lagrange(L)
    assert delta_v(E).is_zero()
    if not E.is_zero():
        assert euler_lagrange(h_vertical(E)) == E


@SETTINGS
@given(st.data())
def test_structural_identity_for_random_degenerate_lagrangians(data):
    sig = data.draw(signatures(ps=(1, 2)))

    def unshifted():
        return data.draw(exprs(sig, max_terms=2, max_degree=2, radius=0))

    L = [[unshifted() for _ in range(sig.q)] for _ in range(sig.p)]
    lag = DegenerateLagrangian(sig, L, unshifted())
    assert structural_identity(lag).holds


@SETTINGS
@given(sig_and_form(kmax=lambda p: p - 1))
def test_mesh_operator_matches_uniform(sf):
    _, s = sf
    assert mesh_d_h(s) == d_h(s)


# ---- numerics --------------------------------------------------------------------------
@settings(max_examples=25, deadline=None)
@given(st.lists(st.integers(-2, 2), min_size=4, max_size=4), st.floats(-0.5, 0.5), st.floats(-0.5, 0.5))
def test_euler_b_is_symplectic(coeffs, q0, p0):
    a, b, c, d = coeffs
    H = f"h*((q^2 + p^2)/2 + {a}*q^3/10 + {b}*q*p/10 + {c}*p^4/20 + {d}*q^2*p^2/20)"
    integ = EulerB(H, {"h": 0.05})
    run = integ.run(q0, p0, 100)
    assert np.max(np.abs(run.det - 1)) < 1e-10
    assert np.max(run.omega_drift) < 1e-8
