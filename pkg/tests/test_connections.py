import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from charts import Diffeomorphism, compose
from connections import (
    GroupoidArrow,
    UpperConnection,
    VolConnection,
    cocycle_check,
    connection_from_volume_form,
    curvature,
    div_gamma,
    groupoid_residual,
    line_family_covector,
    transform_connection,
    transform_tensor,
    upper_from_lower,
    volume_form_transform_check,
)
from densities import Density, TensorDensity
from errors import ParityError, WeightConditionError
from samples import random_covector, random_tensor
from symexpr import Chart, Expr, Parity, ZeroStatus, parse

PLANE = Chart("E2", ["x", "y"])
SUPER = Chart("S22", ["x1", "x2"], ["th1", "th2"])


@pytest.fixture
def maps(plane, target_plane):
    third = Chart("R", ["r", "s"])
    f = Diffeomorphism.from_text(plane, target_plane, {"u": "x + 1", "v": "x*y"}, {"x": "u - 1", "y": "v/(u - 1)"})
    g = Diffeomorphism.from_text(target_plane, third, {"r": "2*u", "s": "v + u^2"}, {"u": "r/2", "v": "s - r^2/4"})
    return f, g


def test_flat_connection_of_volume_form(plane):
    gamma = connection_from_volume_form(parse("1 + x^2 + y^2", plane))
    assert gamma.components[0] == parse("-2*x/(1 + x^2 + y^2)", plane)
    assert all(entry.zero_status() for row in curvature(gamma) for entry in row)


def test_volume_form_must_have_weight_one(plane):
    with pytest.raises(WeightConditionError):
        connection_from_volume_form(Density.single(parse("x", plane), 2))


def test_connection_components_keep_parity(super11):
    with pytest.raises(ParityError):
        VolConnection(super11, [parse("th", super11), Expr.zero(super11)])


def test_shift_and_difference(plane):
    gamma = VolConnection(plane, [parse("x", plane), parse("y", plane)])
    X = (parse("1", plane), parse("x*y", plane))
    assert gamma.difference(gamma.shifted(X)) == X
    assert gamma.shifted(X).equals(VolConnection(plane, [parse("x + 1", plane), parse("y + x*y", plane)]))


def test_connection_law_follows_the_volume_form(maps):
    f, _ = maps
    rho = Density.single(parse("1 + x^2 + y^2", f.source), 1)
    assert all(c.zero_status() for c in volume_form_transform_check(rho, f))


def test_connection_law_composes(maps, plane):
    f, g = maps
    gamma = VolConnection(plane, [parse("x*y", plane), parse("1", plane)])
    stepwise = transform_connection(transform_connection(gamma, f), g)
    assert stepwise.equals(transform_connection(gamma, compose(g, f)))


def test_tensor_law_for_linear_map(plane):
    target = Chart("Q", ["u", "v"])
    phi = Diffeomorphism.from_text(plane, target, {"u": "2*x", "v": "y"}, {"x": "u/2", "y": "v"})
    S = TensorDensity.from_rows(plane, 0, [["1", "0"], ["0", "1"]])
    assert transform_tensor(S, phi)[0, 0] == 4
    S2 = TensorDensity.from_rows(plane, 2, [["1", "0"], ["0", "1"]])
    image = transform_tensor(S2, phi)
    assert image[0, 0] == 1
    assert image[1, 1] == parse("1/4", target)


def test_upper_from_lower(plane):
    S = TensorDensity.from_rows(plane, 2, [["1", "x"], ["x", "1"]])
    upper = upper_from_lower(S, VolConnection(plane, [parse("1", plane), parse("y", plane)]))
    assert isinstance(upper, UpperConnection)
    assert upper.components == (parse("1 + x*y", plane), parse("x + y", plane))
    assert upper.weight == 2


def test_div_gamma_of_flat_connection(line):
    # (1/ρ)∂(ρX) with ρ = x², X = x
    gamma = connection_from_volume_form(parse("x^2", line))
    assert div_gamma((parse("x", line),), gamma, 0) == 3


# -- the groupoid ----------------------------------------------------------------------------

def test_trivial_arrow(plane):
    S = TensorDensity.from_rows(plane, 0, [["1", "0"], ["0", "1"]])
    zero = VolConnection.zero(plane)
    assert groupoid_residual(S, zero, zero.components).is_zero_form()


def test_groupoid_is_trivial_at_weight_one(plane):
    S = TensorDensity.from_rows(plane, 1, [["1", "0"], ["0", "1"]])
    zero = VolConnection.zero(plane)
    with pytest.raises(WeightConditionError):
        groupoid_residual(S, zero, zero.components)


def test_line_family_arrows():
    chart = Chart("P", ["x"], params=["C"])
    S = TensorDensity(chart, 2, [[Expr.one(chart)]])
    source = VolConnection.zero(chart)
    arrow = GroupoidArrow(S, source, source.shifted(line_family_covector(chart, "C")))
    assert arrow.is_arrow()
    assert arrow.inverse().is_arrow()
    assert arrow.then(arrow.inverse()).is_arrow()


def test_non_arrow_is_detected(line):
    S = TensorDensity(line, 2, [[Expr.one(line)]])
    residual = groupoid_residual(S, VolConnection.zero(line), (parse("x", line),))
    assert residual.zero_status() is ZeroStatus.NONZERO


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10 ** 6), st.sampled_from([0, 2, "1/2"]), st.sampled_from([PLANE, SUPER]))
def test_cocycle_identity(seed, weight, chart):
    rng = random.Random(seed)
    S = random_tensor(rng, chart, weight)
    gamma = VolConnection(chart, random_covector(rng, chart))
    X, Y = random_covector(rng, chart), random_covector(rng, chart)
    assert cocycle_check(S, gamma, X, Y).zero_status()


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_cocycle_identity_for_odd_tensors(seed):
    rng = random.Random(seed)
    S = random_tensor(rng, SUPER, 0, Parity.ODD)
    gamma = VolConnection(SUPER, random_covector(rng, SUPER))
    X, Y = random_covector(rng, SUPER), random_covector(rng, SUPER)
    assert cocycle_check(S, gamma, X, Y).zero_status()
