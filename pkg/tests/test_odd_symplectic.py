import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from charts import Diffeomorphism, jacobian
from densities import TensorDensity
from diffops import adjoint, compose
from errors import DarbouxError, DensopsError, NotSymplecticError, ParityError
from odd_symplectic import (
    bv_identity_check,
    bv_laplacian,
    canonical_half_density_operator,
    canonical_poisson,
    check_darboux,
    check_nondegenerate,
    check_symplectic,
    coordinate_bv,
    darboux_flat_check,
    darboux_tensor,
    derived_bracket,
    hamiltonian_field,
    identity_simple_check,
    jacobi_obstruction,
    jacobi_residual,
    lagrangian_shift,
    master_hamiltonian,
    momentum_chart,
    point_transformation,
    volume_arrow_check,
)
from samples import (
    darboux_chart,
    random_composed_symplectomorphism,
    random_even_function,
    random_mixing_symplectomorphism,
    random_odd_function,
    random_volume,
)
from symexpr import Chart, Expr, Parity, ZeroStatus, parse

D22 = darboux_chart("D", 2)


@pytest.fixture
def S11(super11):
    return darboux_tensor(super11)


@pytest.fixture
def S22(super22):
    return darboux_tensor(super22)


# -- brackets ------------------------------------------------------------------------------

def test_darboux_tensor(S22):
    assert S22.parity is Parity.ODD
    assert S22.weight == 0
    check_darboux(S22)
    check_nondegenerate(S22)


def test_darboux_needs_balanced_dimension():
    with pytest.raises(DarbouxError):
        darboux_tensor(Chart("S21", ["x", "y"], ["th"]))


def test_momentum_chart(super11):
    cotangent = momentum_chart(super11)
    assert cotangent.dimension == (2, 2)
    assert cotangent.has("p_x") and cotangent.has("p_th")


def test_master_hamiltonian_is_odd(S22):
    assert master_hamiltonian(S22).parity is Parity.ODD


def test_coordinate_brackets(super11, S11):
    x, th = parse("x", super11), parse("th", super11)
    assert derived_bracket(S11, x, th) == 1
    assert derived_bracket(S11, th, x) == -1
    assert derived_bracket(S11, x, x).is_zero_form()
    assert derived_bracket(S11, th, th).is_zero_form()


def test_bracket_is_a_derivation(super22, S22):
    f = parse("x1^2", super22)
    g = parse("th1*th2", super22)
    # {x1², θ1θ2} = 2x1{x1, θ1}θ2 = 2x1θ2
    assert derived_bracket(S22, f, g) == parse("2*x1*th2", super22)


def test_canonical_poisson_of_momenta(super11):
    cotangent = momentum_chart(super11)
    assert canonical_poisson(parse("x", cotangent), parse("p_x", cotangent), super11) == 1
    assert canonical_poisson(parse("th", cotangent), parse("p_th", cotangent), super11) == 1


def test_jacobi_identity_for_darboux_tensor(S22):
    assert jacobi_obstruction(S22).is_zero_form()


def test_jacobi_fails_for_perturbed_tensor(super22):
    S = TensorDensity.from_rows(
        super22, 0, [["0", "0", "1", "0"], ["0", "0", "0", "1+x1"], ["1", "0", "0", "0"], ["0", "1+x1", "0", "0"]]
    )
    assert jacobi_obstruction(S).zero_status() is ZeroStatus.NONZERO


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10 ** 6), st.sampled_from(list(Parity)), st.sampled_from(list(Parity)), st.sampled_from(list(Parity)))
def test_jacobi_residual_vanishes(seed, p, q, r):
    rng = random.Random(seed)
    S = darboux_tensor(D22)
    make = {Parity.EVEN: random_even_function, Parity.ODD: random_odd_function}
    f, g, h = make[p](rng, D22), make[q](rng, D22), make[r](rng, D22)
    assert jacobi_residual(S, f, g, h).zero_status()


def test_jacobi_residual_needs_definite_parity(super11, S11):
    mixed = parse("x + th", super11)
    with pytest.raises(ParityError):
        jacobi_residual(S11, mixed, mixed, mixed)


def test_hamiltonian_field_of_coordinate(super11, S11):
    assert hamiltonian_field(S11, parse("x", super11)) == (Expr.zero(super11), Expr.one(super11))


# -- BV Laplacian ------------------------------------------------------------------------------

def test_bv_laplacian_of_x_theta(super11, S11):
    assert bv_laplacian(Expr.one(super11), S11, parse("x*th", super11)) == 1


@pytest.mark.parametrize("f", [
    "x1*x2*th1*th2 + x2^2*th2*th1 + x1",
    "x1^2*th1 + x2*th2",
    "th1*th2",
])
def test_bv_laplacian_in_darboux_coordinates(super22, S22, f):
    e = parse(f, super22)
    assert bv_laplacian(Expr.one(super22), S22, e) == coordinate_bv(e)


def test_canonical_operator_squares_to_zero(S22):
    delta = canonical_half_density_operator(S22)
    assert compose(delta, delta).is_zero_form()
    assert adjoint(delta).equals(delta)


def test_degenerate_tensor_is_refused(super11):
    zero = Expr.zero(super11)
    S = TensorDensity(super11, 0, [[zero, zero], [zero, zero]], Parity.ODD)
    with pytest.raises(DensopsError):
        bv_laplacian(Expr.one(super11), S, parse("x", super11))


# -- identities with volume forms ------------------------------------------------------------

def test_simple_identity(super22, S22):
    F = parse("x1*th1*x2*th2 + x1^2", super22)
    assert identity_simple_check(parse("1 + x2^2", super22), F, S22).zero_status()


def test_simple_identity_needs_even_function(super11, S11):
    with pytest.raises(ParityError):
        identity_simple_check(Expr.one(super11), parse("x*th", super11), S11)


@pytest.mark.slow
@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10 ** 6), st.booleans())
def test_simple_identity_on_random_data(seed, nilpotent_volume):
    rng = random.Random(seed)
    rho = random_volume(rng, D22)
    if nilpotent_volume:
        rho = rho + parse("x1*th1*th2", D22)
    F = random_even_function(rng, D22)
    assert identity_simple_check(rho, F, darboux_tensor(D22)).zero_status()


def test_volume_arrow(super22, S22):
    residual = volume_arrow_check(parse("1 + x1^2", super22), parse("2 + x2^2", super22), S22)
    assert residual.zero_status()


# -- symplectomorphisms ----------------------------------------------------------------------

@pytest.fixture
def lifted(super11):
    base = Diffeomorphism.from_text(Chart("L", ["x"]), Chart("M", ["y"]), {"y": "x/(x+1)"}, {"x": "y/(1-y)"})
    target = Chart("T11", ["y"], ["eta"])
    return point_transformation(base, super11, target)


def test_point_transformation_is_symplectic(lifted, super11):
    check_symplectic(lifted)
    assert lifted.forward["eta"] == parse("(x+1)^2*th", super11)
    assert jacobian(lifted).J == parse("1/(x+1)^4", super11)


def test_rescaling_is_not_symplectic(super11):
    target = Chart("T11", ["y"], ["eta"])
    phi = Diffeomorphism.from_text(super11, target, {"y": "2*x", "eta": "th"}, {"x": "y/2", "th": "eta"})
    with pytest.raises(NotSymplecticError):
        check_symplectic(phi)


def test_lagrangian_shift_needs_odd_generator():
    source = darboux_chart("M1", 3)
    target = darboux_chart("M2", 3, tag="_2")
    with pytest.raises(ParityError):
        lagrangian_shift(source, target, parse("th1*th2", source))


def test_lagrangian_shift(rng):
    source = darboux_chart("M1", 3)
    target = darboux_chart("M2", 3, tag="_2")
    phi = lagrangian_shift(source, target, parse("th1*th2*th3", source))
    check_symplectic(phi)
    assert phi.forward["x1_2"] == parse("x1 + th2*th3", source)
    assert bv_identity_check(phi).zero_status()


@settings(max_examples=5, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_bv_identity_for_composed_point_maps(seed):
    phi = random_composed_symplectomorphism(random.Random(seed), 2, steps=2)
    assert bv_identity_check(phi).zero_status()
    assert darboux_flat_check(phi).zero_status()


@pytest.mark.slow
def test_bv_identity_for_mixing_map():
    phi = random_mixing_symplectomorphism(random.Random(3))
    assert bv_identity_check(phi).zero_status()
    assert darboux_flat_check(phi).zero_status()
