import random

import pytest

from charts import jacobian
from diffops import adjoint
from odd_symplectic import bv_identity_check, check_symplectic
from samples import (
    darboux_chart,
    random_composed_symplectomorphism,
    random_mixing_symplectomorphism,
    random_operator,
    random_rational,
    triangular_diffeo,
)
from symexpr import Chart, Parity


@pytest.mark.parametrize("seed", range(6))
def test_random_rational_is_nonzero(seed):
    assert random_rational(random.Random(seed)) != 0


@pytest.mark.parametrize("parity", list(Parity))
def test_random_operator_has_requested_parity(super22, parity):
    op = random_operator(random.Random(7), super22, parity, terms=6)
    assert not op.is_zero_form()
    assert op.parity is parity
    assert adjoint(adjoint(op)).equals(op)


def test_triangular_diffeo_bends_first_coordinate():
    source, target = Chart("A", ["x1", "x2"]), Chart("B", ["y1", "y2"])
    phi = triangular_diffeo(random.Random(2), source, target)
    J = jacobian(phi).J
    assert not J.diff("x1").is_zero_form()


@pytest.mark.parametrize("seed", range(3))
def test_point_maps_have_theta_free_berezinian(seed):
    phi = random_composed_symplectomorphism(random.Random(seed), 2, steps=2)
    assert jacobian(phi).J.soul.is_zero_form()


@pytest.mark.parametrize("seed", range(3))
def test_mixing_map_berezinian_depends_on_odd_coordinates(seed):
    phi = random_mixing_symplectomorphism(random.Random(seed))
    assert phi.source == darboux_chart("M0", 3)
    check_symplectic(phi)
    J = jacobian(phi).J
    assert not J.soul.is_zero_form()
    assert not J.diff("th2").is_zero_form()


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(3))
def test_bv_identity_holds_for_mixing_maps(seed):
    phi = random_mixing_symplectomorphism(random.Random(seed))
    assert bv_identity_check(phi).zero_status()
