import pytest

from bicomplex.dsl import parse
from bicomplex.expr import FiberCoord
from bicomplex.forms import BaseDual, FiberDual, co_vol, delta, dv, interior, scalar, vol, wedge
from bicomplex.operators import (
    VectorField,
    contract,
    d_h,
    d_total,
    d_v,
    lie_derivative,
    lie_difference,
    shift_form,
)
from bicomplex.signature import Signature

S = Signature(2, 2, ("u", "v"))
U0, U10, V0 = FiberCoord(0, (0, 0)), FiberCoord(0, (1, 0)), FiberCoord(1, (0, 0))


def P(t):
    return parse(t, S)


def test_wedge_antisymmetry():
    a, b = dv(S, U0), dv(S, V0)
    assert a.wedge(b) == -(b.wedge(a))
    assert a.wedge(a).is_zero()
    assert delta(S, 0).wedge(delta(S, 0)).is_zero()
    # horizontal and vertical one-forms anticommute as well
    assert delta(S, 1).wedge(a) == -(a.wedge(delta(S, 1)))


def test_volume_and_co_volume():
    assert vol(S) == delta(S, 0).wedge(delta(S, 1))
    assert co_vol(S, 0) == delta(S, 1)
    assert co_vol(S, 1) == -delta(S, 0)
    for i in range(2):
        assert delta(S, i).wedge(co_vol(S, i)) == vol(S)


def test_bidegree_bookkeeping():
    f = wedge(delta(S, 0), dv(S, U0), dv(S, V0)).scale(P("u*v"))
    assert f.bidegree() == (1, 2)
    g = f + scalar(S, P("u"))
    assert not g.is_homogeneous()
    assert g.component(0, 0) == scalar(S, P("u"))


def test_interior_products():
    w = delta(S, 0).wedge(dv(S, U0))
    assert interior(BaseDual(0), w) == dv(S, U0)
    assert interior(FiberDual(U0), w) == -delta(S, 0)
    assert interior(BaseDual(1), w).is_zero()


def test_d_h_on_functions_is_forward_difference():
    f = P("n1*u")
    expected = delta(S, 0).scale(P("(n1 + 1)*u[1,0] - n1*u")) + delta(S, 1).scale(P("n1*u[0,1] - n1*u"))
    assert d_h(scalar(S, f)) == expected


def test_d_v_on_functions_is_gradient_in_fiber():
    f = P("u^2*v[1,0] + n2")
    expected = dv(S, U0).scale(P("2*u*v[1,0]")) + dv(S, FiberCoord(1, (1, 0))).scale(P("u^2"))
    assert d_v(scalar(S, f)) == expected


def test_shift_moves_vertical_factors_and_keeps_delta():
    w = delta(S, 1).wedge(dv(S, U0)).scale(P("u[1,0]"))
    sh = shift_form(w, (0, 1))
    assert sh == delta(S, 1).wedge(dv(S, FiberCoord(0, (0, 1)))).scale(P("u[1,1]"))


def test_lie_difference_is_shift_minus_identity():
    w = dv(S, U10).scale(P("v"))
    assert lie_difference(w, 0) == shift_form(w, (1, 0)) - w


def test_d_total_splits():
    w = delta(S, 0).scale(P("u*v[0,1]"))
    assert d_total(w) == d_h(w) + d_v(w)


def test_contract_prolongs_characteristic():
    v = VectorField(S, [P("v"), P("n1")])
    assert contract(v, dv(S, U10)) == scalar(S, P("v[1,0]"))
    assert contract(v, dv(S, FiberCoord(1, (0, 3)))) == scalar(S, P("n1"))
    assert v.apply(P("u[1,0]*u")) == P("v[1,0]*u + u[1,0]*v")


def test_lie_derivative_on_functions():
    v = VectorField(S, [P("u"), P("0")])
    f = P("u[0,1]^2")
    assert lie_derivative(v, scalar(S, f)) == scalar(S, P("2*u[0,1]^2"))


def test_signature_mismatch_rejected():
    other = Signature(1, 1)
    with pytest.raises(ValueError):
        _ = vol(S) + vol(other)


def test_form_json_uses_one_based_directions():
    w = delta(S, 0).wedge(dv(S, U0)).scale(P("C*u"))
    assert w.to_json()["terms"] == [{"horizontal": [1], "vertical": ["u[0,0]"], "coefficient": "C*u[0,0]"}]
    assert w.to_json()["bidegrees"] == [[1, 1]]
