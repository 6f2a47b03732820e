import random
from fractions import Fraction

import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from charts import Diffeomorphism
from densities import TensorDensity
from diffops import adjoint, lie_derivative, parse_operator, transform_operator
from errors import (
    DensopsError,
    ExceptionalWeightError,
    NotNormalizedError,
    OrderError,
    ParityError,
    SingularWeightError,
    WeightConditionError,
)
from pencils import (
    FixedWeightOperator,
    PencilSpec,
    build_pencil,
    check_regular_weight,
    connection_spec,
    singular_split,
    delta_sing,
    extract_spec,
    function_operator_connection,
    nondegenerate_split,
    pencil_through,
    phi_iso,
    phi_iso_via_pencil,
    restrict,
    singular_weight,
    symmetrized_lie_pencil,
    transform_spec,
)
from samples import random_operator, random_spec, triangular_diffeo
from symexpr import Chart, Expr, Parity, parse

PLANE = Chart("E2", ["x", "y"])
SUPER = Chart("S11", ["x"], ["th"])
LINE = Chart("L", ["x"])


@pytest.fixture
def spec(plane):
    S = TensorDensity.from_rows(plane, 2, [["x^2 + 1", "y"], ["y", "1"]])
    return PencilSpec(S, (parse("1", plane), parse("x", plane)), parse("y^2", plane))


# -- build and extract ----------------------------------------------------------------

def test_pencil_is_self_adjoint_and_normalized(spec):
    op = build_pencil(spec)
    assert adjoint(op).equals(op)
    assert op.apply_to_one().is_zero_form()
    assert op.weight == 2


def test_extract_inverts_build(spec):
    assert extract_spec(build_pencil(spec)).equals(spec)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10 ** 6), st.sampled_from([0, 1, 2, Fraction(1, 2)]), st.sampled_from([PLANE, SUPER]))
def test_roundtrip_on_random_specs(seed, weight, chart):
    spec = random_spec(random.Random(seed), chart, weight)
    assert extract_spec(build_pencil(spec)).equals(spec)


def test_spec_rejects_wrong_connection_length(plane):
    S = TensorDensity.from_rows(plane, 0, [["1", "0"], ["0", "1"]])
    with pytest.raises(DensopsError):
        PencilSpec(S, (parse("x", plane),), parse("0", plane))


def test_restrict_replaces_euler_operator(line):
    op = restrict(parse_operator("lam^2*x + lam*dx", line), "1/3")
    assert op.scalar() == parse("x/9", line)
    assert op.first_order() == (parse("1/3", line),)
    assert op.lam == sp.Rational(1, 3)


# -- transformation laws ----------------------------------------------------------------

def test_laws_match_transformed_operator(spec, target_plane):
    phi = Diffeomorphism.from_text(
        spec.chart, target_plane,
        {"u": "x/(x+1)", "v": "2*y+x^2"},
        {"x": "u/(1-u)", "y": "(v-(u/(1-u))^2)/2"},
    )
    via_operator = extract_spec(transform_operator(build_pencil(spec), phi))
    assert transform_spec(spec, phi).equals(via_operator)


@settings(max_examples=5, deadline=None)
@given(st.integers(0, 10 ** 6), st.sampled_from([0, 2, Fraction(1, 3)]))
def test_laws_on_random_triangular_maps(seed, weight):
    rng = random.Random(seed)
    target = Chart("E2n", ["xn", "yn"])
    spec = random_spec(rng, PLANE, weight)
    phi = triangular_diffeo(rng, PLANE, target)
    via_operator = extract_spec(transform_operator(build_pencil(spec), phi))
    assert transform_spec(spec, phi).equals(via_operator)


# -- pencil through an operator -------------------------------------------------------

def test_pencil_through_restriction(spec):
    op = restrict(build_pencil(spec), "1/3")
    assert pencil_through(op).equals(spec)


@pytest.mark.parametrize("lam, weight, condition", [
    (0, 0, "lambda=0"),
    (1, 0, "mu=1"),
    (Fraction(1, 2), 0, "lambda+mu=1"),
    (Fraction(-1, 2), 2, "lambda+mu=1"),
    (-1, 2, "mu=1"),
])
def test_singular_weights(lam, weight, condition):
    with pytest.raises(SingularWeightError) as info:
        check_regular_weight(sp.Rational(lam), sp.Integer(weight))
    assert info.value.condition == condition


def test_singular_operator_has_no_pencil(line):
    op = restrict(parse_operator("dx^2 + x*dx", line), 1)
    with pytest.raises(SingularWeightError) as info:
        pencil_through(op)
    assert info.value.condition == "mu=1"


def test_third_order_operator_has_no_pencil(line):
    with pytest.raises(OrderError):
        pencil_through(restrict(parse_operator("dx^3", line), "1/3"))


# -- the equivariant isomorphism ----------------------------------------------------------

def test_phi_matches_pencil_route(plane):
    op = restrict(parse_operator("dx^2 + x*dx*dy + y*dy + x", plane), "1/3")
    assert (phi_iso(op, "2/5") - phi_iso_via_pencil(op, "2/5")).zero_status()


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10 ** 6), st.sampled_from([
    (Fraction(1, 3), Fraction(2, 5)),
    (Fraction(1, 4), Fraction(-1, 3)),
    (Fraction(5, 2), Fraction(3, 7)),
    (Fraction(-3, 2), Fraction(7, 5)),
    (Fraction(3, 4), Fraction(2, 3)),
]))
def test_phi_on_random_line_operators(seed, weights):
    lam, mu = weights
    op = restrict(random_operator(random.Random(seed), LINE, Parity.EVEN, terms=5), lam)
    assert (phi_iso(op, mu) - phi_iso_via_pencil(op, mu)).zero_status()


def test_phi_composes(plane):
    op = restrict(parse_operator("x*dx^2 + dy + y", plane), "1/3")
    twice = phi_iso(phi_iso(op, "2/5"), "-1/3")
    assert (twice - phi_iso(op, "-1/3")).zero_status()


def test_phi_identity_at_same_weight(plane):
    op = restrict(parse_operator("x*dx^2 + y*dx*dy + dy + y", plane), "1/3")
    assert (phi_iso(op, "1/3") - op).zero_status()


@pytest.mark.parametrize("mu", [0, "1/2", 1])
def test_phi_rejects_exceptional_weights(plane, mu):
    op = restrict(parse_operator("dx^2", plane), "1/3")
    with pytest.raises(ExceptionalWeightError):
        phi_iso(op, mu)


def test_phi_needs_even_chart(super11):
    with pytest.raises(ParityError):
        phi_iso(restrict(parse_operator("dx*dth", super11), "1/3"), "2/5")


def test_phi_needs_weight_zero(plane):
    with pytest.raises(WeightConditionError):
        phi_iso(restrict(parse_operator("dx^2", plane, 2), "1/3"), "2/5")


# -- singular weight and connections --------------------------------------------------------

def test_singular_weight_values():
    assert singular_weight(0) == sp.Rational(1, 2)
    assert singular_weight(2) == sp.Rational(-1, 2)


def test_delta_sing_has_no_connection_term(plane):
    S = TensorDensity.from_rows(plane, 0, [["1", "0"], ["0", "1"]])
    zero = (Expr.zero(plane), Expr.zero(plane))
    gamma = (parse("x*y", plane), parse("y^2", plane))
    assert delta_sing(S, gamma).first_order() == delta_sing(S, zero).first_order()


def test_singular_split_recovers_parts(plane):
    S = TensorDensity.from_rows(plane, 0, [["1", "x"], ["x", "2"]])
    gamma = (parse("y", plane), parse("x", plane))
    X = (parse("x^2", plane), parse("y", plane))
    F = parse("x*y + 1", plane)
    lam = singular_weight(0)
    op = (
        delta_sing(S, gamma)
        + restrict(lie_derivative(plane, X, 0), lam)
        + FixedWeightOperator(plane, lam, 0, {(0, 0): F})
    )
    X_back, F_back = singular_split(op, gamma)
    assert X_back == X
    assert F_back.equals(F)


def test_singular_split_needs_singular_weight(plane):
    op = restrict(parse_operator("dx^2", plane), "1/3")
    with pytest.raises(WeightConditionError):
        singular_split(op, (Expr.zero(plane), Expr.zero(plane)))


def test_nondegenerate_split_of_connection_pencil(plane):
    S = TensorDensity.from_rows(plane, 0, [["1 + x^2", "0"], ["0", "2"]])
    gamma = (parse("y", plane), parse("x*y", plane))
    gamma_back, F = nondegenerate_split(build_pencil(connection_spec(S, gamma)))
    assert all(a.equals(b) for a, b in zip(gamma_back, gamma))
    assert F.zero_status()


def test_function_operator_connection(line):
    op = restrict(parse_operator("dx^2 + 2*x*dx", line), 0)
    assert function_operator_connection(op) == (parse("-4*x", line),)


def test_function_operator_connection_needs_normalized_operator(line):
    with pytest.raises(NotNormalizedError):
        function_operator_connection(restrict(parse_operator("dx^2 + 1", line), 0))


def test_symmetrized_lie_pencil(plane):
    op, spec = symmetrized_lie_pencil(plane, (parse("x", plane), parse("y", plane)), (parse("1", plane), parse("x*y", plane)))
    assert extract_spec(op).equals(spec)
