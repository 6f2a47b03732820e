"""
Riemannian and projective-line models.

Metrics give the Laplace-Beltrami pencil and the Levi-Civita connection on
volume forms. On the line, weight-2 tensor S = |Dx|²∂² at the singular
weight −1/2 gives the Sturm-Liouville operator, and the difference of its
potentials along a change of coordinates is the Schwarzian cocycle.
"""

import logging
from typing import List, Optional, Sequence

import sympy as sp

from charts import Diffeomorphism, compose as compose_maps, determinant, matrix_inverse
from connections import (
    VolConnection,
    connection_from_affine,
    connection_from_volume_form,
    groupoid_residual,
    transform_connection,
)
from densities import Density, TensorDensity, WeightLike, as_weight
from diffops import DensOperator, compose
from errors import ChartMismatchError, DensopsError, NonInvertibleError, ParityError
from pencils import FixedWeightOperator, PencilSpec, connection_spec, delta_sing, restrict
from symexpr import Chart, Expr, ZeroStatus, parse

logger = logging.getLogger(__name__)

QUARTER = sp.Rational(1, 4)


class Metric:
    """A symmetric metric g_{ab} on a purely even chart, with inverse and determinant."""

    def __init__(self, chart: Chart, matrix: Sequence[Sequence[Expr]]):
        if chart.is_super:
            raise ParityError("Metrics are supported on purely even charts")
        n = len(chart.variables)
        if len(matrix) != n or any(len(row) != n for row in matrix):
            raise DensopsError(f"Metric on '{chart.name}' must be {n}x{n}")
        for a in range(n):
            for b in range(a + 1, n):
                if (matrix[a][b] - matrix[b][a]).zero_status() is ZeroStatus.NONZERO:
                    raise DensopsError(f"Metric is not symmetric at ({a}, {b})")
        self.chart = chart
        self.matrix = tuple(tuple(row) for row in matrix)
        self.det = determinant(self.matrix)
        if self.det.zero_status() is not ZeroStatus.NONZERO:
            raise NonInvertibleError("Metric is degenerate")
        self.inverse = tuple(tuple(row) for row in matrix_inverse(self.matrix))

    @classmethod
    def from_rows(cls, chart: Chart, rows: Sequence[Sequence[str]]) -> "Metric":
        return cls(chart, [[parse(entry, chart) for entry in row] for row in rows])

    @property
    def size(self) -> int:
        return len(self.matrix)

    def inverse_tensor(self) -> TensorDensity:
        return TensorDensity(self.chart, 0, self.inverse)

    def volume(self) -> Expr:
        """√det g."""
        return self.det.sqrt()

    def __repr__(self):
        return f"Metric({self.chart.name}, {self.size}x{self.size})"


def christoffel(g: Metric) -> List[List[List[Expr]]]:
    """Γ^a_{bc} = ½ g^{ad}(∂_b g_{dc} + ∂_c g_{bd} − ∂_d g_{bc}), indexed [a][b][c]."""
    names = [v.name for v in g.chart.variables]
    n = g.size
    zero = Expr.zero(g.chart)
    half = sp.Rational(1, 2)
    lowered = [
        [
            [
                (g.matrix[d][c].diff(names[b]) + g.matrix[b][d].diff(names[c]) - g.matrix[b][c].diff(names[d])) * half
                for c in range(n)
            ]
            for b in range(n)
        ]
        for d in range(n)
    ]
    return [
        [[sum((g.inverse[a][d] * lowered[d][b][c] for d in range(n)), zero) for c in range(n)] for b in range(n)]
        for a in range(n)
    ]


def levi_civita_volume_connection(g: Metric) -> VolConnection:
    """γ_a = −∂_a log √det g = −½ (∂_a det g)/det g."""
    inverse = g.det.inverse()
    return VolConnection(g.chart, [-(g.det.diff(v.name) * inverse) * sp.Rational(1, 2) for v in g.chart.variables])


def levi_civita_via_christoffel(g: Metric) -> VolConnection:
    return connection_from_affine(g.chart, christoffel(g))


def _coefficient(rho) -> Expr:
    return rho.coefficient if isinstance(rho, Density) else rho


def laplace_beltrami(g: Metric, rho) -> FixedWeightOperator:
    """Δf = ½ ρ⁻¹ ∂_a(ρ g^{ab} ∂_b f) on functions."""
    rho = _coefficient(rho)
    chart = g.chart
    names = [v.name for v in chart.variables]
    total = DensOperator.zero(chart)
    outer = DensOperator.multiplication(rho.inverse() * sp.Rational(1, 2))
    for a in range(g.size):
        for b in range(g.size):
            if g.inverse[a][b].is_zero_form():
                continue
            inner = compose(DensOperator.multiplication(rho * g.inverse[a][b]), DensOperator.derivative(chart, names[b]))
            total = total + compose(outer, compose(DensOperator.derivative(chart, names[a]), inner))
    return restrict(total, 0)


def riemannian_spec(g: Metric, rho) -> PencilSpec:
    """S = g⁻¹, γ^a = −g^{ab}∂_b log ρ, θ = γ^aγ_a."""
    gamma = connection_from_volume_form(_coefficient(rho))
    return connection_spec(g.inverse_tensor(), gamma.components)


def laplace_beltrami_on_densities(g: Metric, rho, lam: WeightLike) -> FixedWeightOperator:
    """ρ^λ ∘ Δ ∘ ρ^{−λ} on F_λ."""
    rho = _coefficient(rho)
    lam = as_weight(lam)
    base = laplace_beltrami(g, rho).lift()
    conjugated = compose(
        DensOperator.multiplication(rho.power(lam)),
        compose(base, DensOperator.multiplication(rho.power(-lam))),
    )
    return restrict(conjugated, lam)


# -- the line ---------------------------------------------------------------------

def _line_variable(chart: Chart) -> str:
    if chart.is_super or len(chart.variables) != 1:
        raise DensopsError(f"Chart '{chart.name}' is not a line")
    return chart.variables[0].name


def line_tensor(chart: Chart) -> TensorDensity:
    """S = |Dx|²∂², the canonical weight-2 tensor on the line."""
    _line_variable(chart)
    return TensorDensity(chart, 2, [[Expr.one(chart)]])


def sturm_liouville_U(gamma: Expr) -> Expr:
    """U = −¼(γ' + ½γ²)."""
    x = _line_variable(gamma.chart)
    return -(gamma.diff(x) + gamma * gamma * sp.Rational(1, 2)) * QUARTER


def sturm_operator(gamma: Expr) -> FixedWeightOperator:
    """½∂² + U: F_{−1/2} → F_{3/2}, the singular operator of γ."""
    return delta_sing(line_tensor(gamma.chart), [gamma])


def schwarzian(x_of_y: Expr, variable: Optional[str] = None) -> Expr:
    """x_yyy/x_y − (3/2)(x_yy/x_y)²."""
    y = variable or _line_variable(x_of_y.chart)
    first = x_of_y.diff(y)
    if first.zero_status() is not ZeroStatus.NONZERO:
        raise NonInvertibleError("Schwarzian of a map with vanishing derivative")
    second = first.diff(y)
    third = second.diff(y)
    inverse = first.inverse()
    ratio = second * inverse
    return third * inverse - ratio * ratio * sp.Rational(3, 2)


def reread(e: Expr, target: Chart) -> Expr:
    """The same formula written in the target chart's letter."""
    source_name = _line_variable(e.chart)
    target_name = _line_variable(target)
    return e.substitute({source_name: Expr.var(target, target_name)}, target)


def line_cocycle(gamma: Expr, f: Diffeomorphism) -> Expr:
    """c_γ(f) = −¼ div-residual of X = T_fγ − γ, a weight-2 density in the target letter."""
    if gamma.chart != f.source:
        raise ChartMismatchError(f"Connection on '{gamma.chart.name}', map starts at '{f.source.name}'")
    target = f.target
    transformed = transform_connection(VolConnection(f.source, [gamma]), f).components[0]
    base = reread(gamma, target)
    X = transformed - base
    residual = groupoid_residual(line_tensor(target), VolConnection(target, [base]), [X])
    return -residual * QUARTER


def line_transform(gamma: Expr, f: Diffeomorphism) -> Expr:
    return transform_connection(VolConnection(f.source, [gamma]), f).components[0]


def line_cocycle_defect(gamma: Expr, f: Diffeomorphism, g: Diffeomorphism) -> Expr:
    """c_γ(f∘g) − c_{T_gγ}(f) − c_γ(g), the last read in the letter of f's target."""
    first = line_cocycle(gamma, g)
    second = line_cocycle(line_transform(gamma, g), f)
    return line_cocycle(gamma, compose_maps(f, g)) - second - reread(first, f.target)


def line_cocycle_schwarzian_check(f: Diffeomorphism) -> Expr:
    """c_0(f) − ¼·S(x(y)), with x(y) the inverse map; identically zero."""
    source_name = _line_variable(f.source)
    x_of_y = f.inverse[source_name]
    return line_cocycle(Expr.zero(f.source), f) - schwarzian(x_of_y) * QUARTER


def schwarzian_chain_rule(f: Diffeomorphism, g: Diffeomorphism) -> Expr:
    """S(f∘g) − (S(f)∘g)·g'² − S(g) for line maps g: a → b, f: b → c; identically zero."""
    a = _line_variable(g.source)
    b = _line_variable(f.source)
    c = _line_variable(f.target)
    if g.target != f.source:
        raise ChartMismatchError(f"Cannot compose {f.name} after {g.name}")
    g_of_a = g.forward[b]
    f_of_b = f.forward[c]
    composed = f_of_b.substitute({b: g_of_a}, g.source)
    pulled = schwarzian(f_of_b).substitute({b: g_of_a}, g.source)
    derivative = g_of_a.diff(a)
    return schwarzian(composed) - pulled * derivative * derivative - schwarzian(g_of_a)


def mobius_chart(name: str = "mob", variable: str = "y") -> Chart:
    """A line chart carrying the Möbius parameters a, b, c, d."""
    return Chart(name, [variable], params=["a", "b", "c", "d"])


def mobius(chart: Chart) -> Expr:
    """(ay + b)/(cy + d) on a chart from mobius_chart."""
    y = Expr.var(chart, _line_variable(chart))
    a, b, c, d = (Expr.var(chart, p) for p in ("a", "b", "c", "d"))
    return (a * y + b) * (c * y + d).inverse()
