import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from connections import VolConnection, groupoid_residual, line_family_covector
from errors import DensopsError, NonInvertibleError, ParityError
from pencils import build_pencil, restrict
from riemann_line import (
    Metric,
    christoffel,
    laplace_beltrami,
    laplace_beltrami_on_densities,
    levi_civita_via_christoffel,
    levi_civita_volume_connection,
    line_cocycle,
    line_cocycle_defect,
    line_cocycle_schwarzian_check,
    line_tensor,
    mobius,
    mobius_chart,
    reread,
    riemannian_spec,
    schwarzian,
    schwarzian_chain_rule,
    sturm_liouville_U,
    sturm_operator,
)
from samples import LINE_MAPS, line_charts, line_map, random_metric, random_volume
from symexpr import Chart, Expr, parse

PLANE = Chart("E2", ["x", "y"])
KINDS = [entry[0] for entry in LINE_MAPS]


@pytest.fixture
def charts():
    return line_charts(3)


# -- metrics ---------------------------------------------------------------------------------

def test_christoffel_symbols_of_polar_metric(plane):
    g = Metric.from_rows(plane, [["1", "0"], ["0", "x^2"]])
    gamma = christoffel(g)
    assert gamma[1][0][1] == parse("1/x", plane)
    assert gamma[1][1][0] == parse("1/x", plane)
    assert gamma[0][1][1] == parse("-x", plane)
    assert gamma[0][0][0].is_zero_form()


@pytest.mark.parametrize("rows", [
    [["1", "0"], ["0", "x^12"]],
    [["1+x^2", "y"], ["y", "2"]],
])
def test_levi_civita_routes_agree(plane, rows):
    g = Metric.from_rows(plane, rows)
    difference = levi_civita_via_christoffel(g).difference(levi_civita_volume_connection(g))
    assert all(c.zero_status() for c in difference)


def test_metric_validation(plane, super11):
    with pytest.raises(DensopsError):
        Metric.from_rows(plane, [["1", "x"], ["y", "1"]])
    with pytest.raises(NonInvertibleError):
        Metric.from_rows(plane, [["x", "x"], ["x", "x"]])
    with pytest.raises(ParityError):
        Metric(super11, [[Expr.one(super11)] * 2] * 2)


def test_flat_laplacian(plane):
    g = Metric.from_rows(plane, [["1", "0"], ["0", "1"]])
    delta = laplace_beltrami(g, Expr.one(plane))
    assert delta.apply(parse("x^2 + y^2", plane)) == 2
    assert delta.apply(Expr.one(plane)).is_zero_form()


def test_laplacian_lies_on_riemannian_pencil(plane):
    g = Metric.from_rows(plane, [["1+x^2", "y"], ["y", "2"]])
    rho = g.volume()
    spec = riemannian_spec(g, rho)
    assert (laplace_beltrami(g, rho) - restrict(build_pencil(spec), 0)).zero_status()
    assert (laplace_beltrami_on_densities(g, rho, "1/3") - restrict(build_pencil(spec), "1/3")).zero_status()


@settings(max_examples=5, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_random_metrics(seed):
    rng = random.Random(seed)
    g = random_metric(rng, PLANE)
    rho = random_volume(rng, PLANE)
    spec = riemannian_spec(g, rho)
    assert (laplace_beltrami(g, rho) - restrict(build_pencil(spec), 0)).zero_status()
    assert (laplace_beltrami_on_densities(g, rho, "2/3") - restrict(build_pencil(spec), "2/3")).zero_status()
    assert all(c.zero_status() for c in levi_civita_via_christoffel(g).difference(levi_civita_volume_connection(g)))


# -- Schwarzian ---------------------------------------------------------------------------------

def test_schwarzian_of_mobius_vanishes():
    chart = mobius_chart()
    assert schwarzian(mobius(chart)).is_zero_form()


def test_schwarzian_of_cube():
    chart = Chart("Y", ["y"])
    assert schwarzian(parse("y^3", chart)) == parse("-4/y^2", chart)


def test_schwarzian_of_constant_is_refused():
    chart = Chart("Y", ["y"])
    with pytest.raises(NonInvertibleError):
        schwarzian(parse("3", chart))


@pytest.mark.parametrize("f_kind, g_kind", [
    ("cube", "mobius"),
    ("exp", "square"),
    ("reciprocal", "cube"),
    ("shifted-reciprocal", "affine"),
    ("square", "exp"),
])
def test_schwarzian_chain_rule(charts, f_kind, g_kind):
    f = line_map(charts[1], charts[2], f_kind)
    g = line_map(charts[0], charts[1], g_kind)
    assert schwarzian_chain_rule(f, g).zero_status()


# -- the line cocycle ---------------------------------------------------------------------------

def test_mobius_maps_have_trivial_cocycle(charts):
    f = line_map(charts[0], charts[1], "mobius")
    assert line_cocycle(Expr.zero(charts[0]), f).zero_status()


@pytest.mark.parametrize("kind", KINDS)
def test_cocycle_at_flat_connection_is_quarter_schwarzian(charts, kind):
    f = line_map(charts[0], charts[1], kind)
    assert line_cocycle_schwarzian_check(f).zero_status()


@pytest.mark.parametrize("f_kind, g_kind", [("cube", "mobius"), ("exp", "affine"), ("mobius", "square")])
def test_cocycle_law(charts, f_kind, g_kind):
    f = line_map(charts[1], charts[2], f_kind)
    g = line_map(charts[0], charts[1], g_kind)
    gamma = parse("x0 + 1", charts[0])
    assert line_cocycle_defect(gamma, f, g).zero_status()


def test_reread_changes_letter(charts):
    assert reread(parse("x0^2", charts[0]), charts[1]) == parse("x1^2", charts[1])


# -- Sturm-Liouville -------------------------------------------------------------------------------

def test_sturm_operator_of_flat_connection(line):
    op = sturm_operator(Expr.zero(line))
    assert op.coefficient((2,)) == parse("1/2", line)
    assert op.scalar().is_zero_form()
    assert op.first_order() == (Expr.zero(line),)


def test_potential_formula(line):
    assert sturm_liouville_U(parse("x", line)) == parse("-1/4 - x^2/8", line)


def test_family_arrows_share_the_sturm_operator():
    chart = Chart("P", ["x"], params=["C"])
    X = line_family_covector(chart, "C")
    assert groupoid_residual(line_tensor(chart), VolConnection.zero(chart), X).zero_status()
    assert sturm_liouville_U(X[0]).zero_status()
    assert (sturm_operator(X[0]) - sturm_operator(Expr.zero(chart))).zero_status()
