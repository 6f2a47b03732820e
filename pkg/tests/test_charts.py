import pytest

from charts import (
    Diffeomorphism,
    berezinian,
    compose,
    determinant,
    identity,
    jacobian,
    matrix_inverse,
    pullback,
    pushforward,
    relabel,
)
from errors import ChartMismatchError, DiffeomorphismError, NonInvertibleError, ParityError
from symexpr import Chart, Expr, parse


@pytest.fixture
def tri(plane, target_plane):
    return Diffeomorphism.from_text(
        plane, target_plane,
        {"u": "x/(x+1)", "v": "2*y+x^2"},
        {"x": "u/(1-u)", "y": "(v-(u/(1-u))^2)/2"},
        name="tri",
    )


def test_diffeomorphism_verifies_inverse(plane, target_plane):
    with pytest.raises(DiffeomorphismError):
        Diffeomorphism.from_text(plane, target_plane, {"u": "x+1", "v": "y"}, {"x": "u", "y": "v"})


def test_diffeomorphism_needs_every_coordinate(plane, target_plane):
    with pytest.raises(DiffeomorphismError):
        Diffeomorphism.from_text(plane, target_plane, {"u": "x"}, {"x": "u", "y": "v"})


def test_diffeomorphism_keeps_parity(super11):
    target = Chart("T11", ["y"], ["eta"])
    with pytest.raises(ParityError):
        Diffeomorphism(
            super11, target,
            {"y": parse("th", super11), "eta": parse("x", super11)},
            {"x": parse("eta", target), "th": parse("y", target)},
            verify=False,
        )


def test_pullback_and_pushforward_are_inverse(tri, plane):
    f = parse("x^2 + x*y", plane)
    assert pullback(pushforward(f, tri), tri) == f


def test_pushforward_checks_chart(tri, target_plane):
    with pytest.raises(ChartMismatchError):
        pushforward(parse("u", target_plane), tri)


def test_compose_with_inverse_is_identity(tri, plane):
    round_trip = compose(tri.inverted(), tri)
    for name in ("x", "y"):
        assert round_trip.forward[name] == Expr.var(plane, name)


def test_identity_and_relabel(plane):
    copy = relabel(plane, "E2'")
    phi = identity(plane, copy)
    assert phi.forward["x"] == Expr.var(plane, "x")
    assert jacobian(phi).J == 1


def test_jacobian_of_triangular_map(tri, plane):
    assert jacobian(tri).J == parse("2/(x+1)^2", plane)


def test_determinant_and_inverse(plane):
    m = [[parse("1+x^2", plane), parse("y", plane)], [parse("y", plane), parse("2", plane)]]
    assert determinant(m) == parse("2 + 2*x^2 - y^2", plane)
    inverse = matrix_inverse(m)
    product = m[0][0] * inverse[0][1] + m[0][1] * inverse[1][1]
    assert product.is_zero_form()
    assert (m[0][0] * inverse[0][0] + m[0][1] * inverse[1][0]) == 1


def test_singular_matrix(plane):
    x = parse("x", plane)
    with pytest.raises(NonInvertibleError):
        matrix_inverse([[x, x], [x, x]])


def test_berezinian_of_odd_rescaling(super11):
    target = Chart("T11", ["y"], ["eta"])
    phi = Diffeomorphism.from_text(super11, target, {"y": "2*x", "eta": "x*th"}, {"x": "y/2", "th": "2*eta/y"})
    assert jacobian(phi).J == parse("2/x", super11)


def test_berezinian_of_odd_shift(super22):
    target = Chart("T22", ["y1", "y2"], ["eta1", "eta2"])
    phi = Diffeomorphism.from_text(
        super22, target,
        {"y1": "x1 + th1*th2", "y2": "x2", "eta1": "th1", "eta2": "th2"},
        {"x1": "y1 - eta1*eta2", "x2": "y2", "th1": "eta1", "th2": "eta2"},
    )
    data = jacobian(phi)
    assert data.matrix[0][2] == parse("-th2", super22)
    assert data.J == 1


def test_berezinian_block_formula(super11):
    a, d = parse("1+x^2", super11), parse("x", super11)
    b = parse("th", super11)
    zero = Expr.zero(super11)
    assert berezinian([[a, b], [zero, d]], 1) == a * d.inverse()


def test_berezinian_needs_invertible_odd_block(super11):
    zero, one = Expr.zero(super11), Expr.one(super11)
    with pytest.raises(NonInvertibleError):
        berezinian([[one, zero], [zero, zero]], 1)
