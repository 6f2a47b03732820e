import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from errors import (
    DensopsError,
    ExprSyntaxError,
    NilpotencyError,
    NonInvertibleError,
    ParityError,
    UndeclaredIdentifierError,
)
from samples import random_polynomial
from symexpr import Chart, Expr, Parity, ZeroStatus, parse, variables_of

SUPER = Chart("S22", ["x1", "x2"], ["th1", "th2"])


# -- charts -----------------------------------------------------------------------

def test_chart_layout(super22):
    assert super22.dimension == (2, 2)
    assert super22.is_super
    assert [v.name for v in super22.variables] == ["x1", "x2", "th1", "th2"]
    assert super22.has("th2") and not super22.has("y")


@pytest.mark.parametrize("even, odd, params", [
    ([], [], []),
    (["x", "x"], [], []),
    (["x"], [], ["lam"]),
    (["x", "dx"], [], []),
])
def test_chart_rejects_bad_declarations(even, odd, params):
    with pytest.raises(DensopsError):
        Chart("bad", even, odd, params)


# -- algebra ------------------------------------------------------------------------

def test_odd_variables_anticommute(super22):
    th1, th2 = Expr.var(super22, "th1"), Expr.var(super22, "th2")
    assert th1 * th2 == -(th2 * th1)
    assert (th1 * th1).is_zero_form()


def test_parity(super11):
    assert parse("x^2", super11).parity is Parity.EVEN
    assert parse("x*th", super11).parity is Parity.ODD
    assert parse("x + th", super11).parity is None


def test_body_and_soul(super22):
    e = parse("3 + x1 + x2*th1*th2", super22)
    assert parse("3 + x1", super22).body == e.body
    assert e.soul == parse("x2*th1*th2", super22)


def test_rational_functions_cancel(line):
    assert parse("(x^2 - 1)/(x - 1)", line) == parse("x + 1", line)


def test_inverse_of_nilpotent_shift(super22):
    e = parse("1 + th1*th2", super22)
    assert e.inverse() == parse("1 - th1*th2", super22)
    assert e.exp() == parse("exp(1)*(1 + th1*th2)", super22)


def test_inverse_needs_a_body(super22):
    with pytest.raises(NonInvertibleError):
        parse("th1*th2", super22).inverse()


def test_inverse_of_odd_expression_is_refused(super11):
    with pytest.raises(ParityError):
        parse("th", super11).inverse()


def test_fractional_power(line):
    assert parse("x^2", line).power(Fraction(1, 2)).equals(parse("sqrt(x^2)", line))


# -- derivatives --------------------------------------------------------------------

def test_left_and_right_odd_derivatives(super22):
    e = parse("th1*th2", super22)
    assert e.diff("th1") == parse("th2", super22)
    assert e.diff("th2") == parse("-th1", super22)
    assert e.right_diff("th2") == parse("th1", super22)
    assert e.right_diff("th1") == parse("-th2", super22)


def test_even_derivative(plane):
    assert parse("x^2*y + y/x", plane).diff("x") == parse("2*x*y - y/x^2", plane)


# -- substitution -------------------------------------------------------------------

def test_substitute_between_charts(plane, target_plane):
    e = parse("x*y", plane)
    image = e.substitute({"x": parse("u + 1", target_plane), "y": parse("v", target_plane)}, target_plane)
    assert image == parse("u*v + v", target_plane)


def test_substitute_nilpotent_shift(super22):
    # x1 -> x1 + th1*th2 expands by Taylor and stops at first order
    e = parse("x1^3", super22)
    shifted = e.substitute({"x1": parse("x1 + th1*th2", super22)})
    assert shifted == parse("x1^3 + 3*x1^2*th1*th2", super22)


# -- zero test ----------------------------------------------------------------------

def test_zero_status_of_rational_identity(plane):
    assert parse("x/y - x*y/y^2", plane).zero_status() is ZeroStatus.ZERO
    assert parse("x - y", plane).zero_status() is ZeroStatus.NONZERO


def test_zero_status_with_atoms(plane):
    assert parse("log(x*y) - log(x) - log(y)", plane).zero_status()
    assert parse("exp(x)*exp(y) - exp(x + y)", plane).zero_status()
    assert parse("exp(x) - x", plane).zero_status() is ZeroStatus.NONZERO


def test_zero_status_combines():
    assert ZeroStatus.combine([ZeroStatus.ZERO, ZeroStatus.PROBABLY_ZERO]) is ZeroStatus.PROBABLY_ZERO
    assert ZeroStatus.combine([ZeroStatus.PROBABLY_ZERO, ZeroStatus.NONZERO]) is ZeroStatus.NONZERO
    assert not ZeroStatus.NONZERO
    assert ZeroStatus.PROBABLY_ZERO


# -- parser -------------------------------------------------------------------------

def test_syntax_error_position(line):
    with pytest.raises(ExprSyntaxError) as info:
        parse("x + * 2", line)
    assert info.value.position == 4


def test_undeclared_identifier(line):
    with pytest.raises(UndeclaredIdentifierError) as info:
        parse("x + y", line)
    assert info.value.name == "y"


def test_odd_square_is_a_nilpotency_error(super11):
    with pytest.raises(NilpotencyError):
        parse("th^2", super11)


def test_non_integer_exponent_is_rejected(line):
    with pytest.raises(ExprSyntaxError):
        parse("x^(1/2)", line)


def test_text_reparses(super22):
    e = parse("(x1^2 + 1)/x2 + x1*th1*th2 - 2/3*th2*th1", super22)
    assert parse(e.to_text(), super22) == e


def test_params_are_constants():
    chart = Chart("P", ["x"], params=["C"])
    e = parse("C*x^2", chart)
    assert e.diff("x") == parse("2*C*x", chart)


def test_coordinates_and_params_are_positive():
    chart = Chart("P", ["x", "y"], params=["C"])
    assert chart.symbol("x").is_positive and chart.symbol("C").is_positive
    assert parse("sqrt(x^2) - x", chart).zero_status() is ZeroStatus.ZERO
    assert parse("log(x*y) - log(x) - log(y)", chart).zero_status() is ZeroStatus.ZERO


# -- algebraic laws on random elements -----------------------------------------------

def _element(seed: int, parity: Parity) -> Expr:
    e = random_polynomial(random.Random(seed), SUPER, parity, degree=2, terms=3)
    return e if not e.is_zero_form() else Expr.one(SUPER)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(0, 10 ** 6), st.integers(0, 10 ** 6))
def test_multiplication_is_associative(a, b, c):
    f, g, h = _element(a, Parity.ODD), _element(b, Parity.EVEN), _element(c, Parity.ODD)
    assert (f * g) * h == f * (g * h)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(0, 10 ** 6), st.sampled_from(list(Parity)), st.sampled_from(list(Parity)))
def test_graded_commutativity(a, b, p, q):
    f, g = _element(a, p), _element(b, q)
    assert f * g == g * f * ((-1) ** (p * q))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(0, 10 ** 6), st.sampled_from(list(Parity)),
       st.sampled_from(["x1", "th1", "th2"]))
def test_graded_leibniz_rule(a, b, p, name):
    f, g = _element(a, p), _element(b, Parity.EVEN)
    sign = -1 if (p is Parity.ODD and SUPER.variable(name).is_odd) else 1
    assert (f * g).diff(name) == f.diff(name) * g + f * g.diff(name) * sign


@settings(max_examples=50, deadline=None)
@given(st.fractions(max_denominator=20), st.fractions(max_denominator=20))
def test_constants_distribute(a, b):
    x = variables_of(SUPER)[0]
    assert (x + a) * (x + b) == x * x + x * (a + b) + Expr.constant(SUPER, a * b)
