"""
Connections on volume forms, upper connections and the groupoid C_S.

A connection on volume forms has symbols γ_A with ∇_A ρ = ∂_Aρ + γ_Aρ; the
flat connection of a volume form ρ is γ_A = −∂_A log ρ. For a tensor density
S of weight δ the arrows γ → γ + X of C_S are cut out by

    div_γ(SX) + ((δ−1)/2) X_A S^{AB} X_B = 0,

which is exactly the condition that the singular-weight operators of γ and
γ + X coincide.
"""

import logging
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import sympy as sp

from charts import Diffeomorphism, jacobian, pushforward
from densities import Density, TensorDensity, WeightLike, as_weight, transform_density
from diffops import coordinate_divergence
from errors import ChartMismatchError, DensopsError, ParityError, WeightConditionError
from symexpr import Chart, Expr, Parity, ZeroStatus

logger = logging.getLogger(__name__)

Covector = Tuple[Expr, ...]


def _check_components(chart: Chart, components: Sequence[Expr], shift: int, what: str) -> None:
    if len(components) != len(chart.variables):
        raise DensopsError(f"{what} on '{chart.name}' needs {len(chart.variables)} components")
    for variable, component in zip(chart.variables, components):
        if component.chart != chart:
            raise ChartMismatchError(f"{what} component lives on '{component.chart.name}'")
        if component.is_zero_form():
            continue
        expected = Parity((variable.parity + shift) % 2)
        if component.parity is not expected:
            raise ParityError(f"{what} component for '{variable.name}' must be {expected.name.lower()}: {component}")


class VolConnection:
    """Symbols γ_A of an even connection on volume forms, p(γ_A) = p(A)."""

    def __init__(self, chart: Chart, components: Sequence[Expr]):
        _check_components(chart, components, 0, "Connection")
        self.chart = chart
        self.components: Covector = tuple(components)

    @classmethod
    def zero(cls, chart: Chart) -> "VolConnection":
        return cls(chart, [Expr.zero(chart)] * len(chart.variables))

    def shifted(self, covector: Sequence[Expr]) -> "VolConnection":
        """γ + X."""
        return VolConnection(self.chart, [a + b for a, b in zip(self.components, covector)])

    def difference(self, other: "VolConnection") -> Covector:
        """The covector X with other = self + X."""
        if other.chart != self.chart:
            raise ChartMismatchError("Connections on different charts")
        return tuple(b - a for a, b in zip(self.components, other.components))

    def zero_status(self) -> ZeroStatus:
        return ZeroStatus.combine(c.zero_status() for c in self.components)

    def equals(self, other: "VolConnection") -> bool:
        return all(bool(c.zero_status()) for c in self.difference(other))

    def to_text(self) -> str:
        return ", ".join(c.to_text() for c in self.components)

    def __repr__(self):
        return f"VolConnection({self.chart.name}: {self.to_text()})"


class UpperConnection:
    """Components γ^A of an upper connection density of weight δ."""

    def __init__(self, chart: Chart, weight: WeightLike, components: Sequence[Expr]):
        if len(components) != len(chart.variables):
            raise DensopsError(f"Upper connection on '{chart.name}' needs {len(chart.variables)} components")
        self.chart = chart
        self.weight = as_weight(weight)
        self.components = tuple(components)

    def __repr__(self):
        return f"UpperConnection({self.chart.name}, w={self.weight})"


def connection_from_volume_form(rho) -> VolConnection:
    """γ_A = −(∂_Aρ)ρ⁻¹ for a volume form ρ (a weight-1 density or its coefficient)."""
    if isinstance(rho, Density):
        if rho.weight != 1:
            raise WeightConditionError(f"Volume form must have weight 1, got {rho.weight}")
        rho = rho.coefficient
    inverse = rho.inverse()
    return VolConnection(rho.chart, [-(rho.diff(v.name) * inverse) for v in rho.chart.variables])


def curvature(gamma: VolConnection) -> List[List[Expr]]:
    """F_{AB} = ∂_Aγ_B − (−1)^{p(A)p(B)}∂_Bγ_A."""
    chart = gamma.chart
    parities = chart.parities()
    names = [v.name for v in chart.variables]
    n = len(names)
    return [
        [
            gamma.components[b].diff(names[a])
            - gamma.components[a].diff(names[b]) * ((-1) ** (parities[a] * parities[b]))
            for b in range(n)
        ]
        for a in range(n)
    ]


def connection_from_affine(chart: Chart, christoffel: Sequence[Sequence[Sequence[Expr]]]) -> VolConnection:
    """γ_A = −Σ_B (−1)^{p(B)} Γ^B_{BA}, with christoffel[A][B][C] = Γ^A_{BC}."""
    parities = chart.parities()
    n = len(chart.variables)
    for a in range(n):
        for b in range(n):
            for c in range(n):
                entry = christoffel[a][b][c]
                expected = Parity((parities[a] + parities[b] + parities[c]) % 2)
                if not entry.is_zero_form() and entry.parity is not expected:
                    raise ParityError(f"Christoffel symbol ({a},{b},{c}) has the wrong parity: {entry}")
    components = []
    for a in range(n):
        total = Expr.zero(chart)
        for b in range(n):
            total = total + christoffel[b][b][a] * ((-1) ** parities[b])
        components.append(-total)
    return VolConnection(chart, components)


def transform_connection(gamma: VolConnection, phi: Diffeomorphism) -> VolConnection:
    """γ'_{A'} = (∂_{A'} z^A)(γ_A + ∂_A log J), expressed on the target chart."""
    if gamma.chart != phi.source:
        raise ChartMismatchError(f"Connection on '{gamma.chart.name}', map starts at '{phi.source.name}'")
    data = jacobian(phi)
    shifted = [
        pushforward(component + data.log_derivative(variable.name), phi)
        for variable, component in zip(phi.source.variables, gamma.components)
    ]
    components = []
    for new in phi.target.variables:
        total = Expr.zero(phi.target)
        for old, value in zip(phi.source.variables, shifted):
            total = total + phi.inverse[old.name].diff(new.name) * value
        components.append(total)
    return VolConnection(phi.target, components)


def upper_from_lower(S: TensorDensity, gamma: VolConnection) -> UpperConnection:
    return UpperConnection(S.chart, S.weight, S.contract_vector(gamma.components))


def transform_upper_connection(upper: UpperConnection, S: TensorDensity, phi: Diffeomorphism) -> UpperConnection:
    """γ'^{a'} = J^{−δ} x'^{a'}_a (γ^a + S^{ab}∂_b log J), purely even charts."""
    if upper.chart.is_super:
        raise ParityError("Upper connection law is implemented on purely even charts")
    data = jacobian(phi)
    names = [v.name for v in phi.source.variables]
    n = len(names)
    scale = data.J.power(-upper.weight) if upper.weight != 0 else Expr.one(phi.source)
    shifted = [
        upper.components[a] + sum((S.matrix[a][b] * data.log_derivative(names[b]) for b in range(n)), Expr.zero(phi.source))
        for a in range(n)
    ]
    components = []
    for new in phi.target.variables:
        image = phi.forward[new.name]
        total = sum((image.diff(names[a]) * shifted[a] for a in range(n)), Expr.zero(phi.source))
        components.append(pushforward(scale * total, phi))
    return UpperConnection(phi.target, upper.weight, components)


def transform_tensor(S: TensorDensity, phi: Diffeomorphism) -> TensorDensity:
    """S'^{a'b'} = J^{−δ} x'^{a'}_a x'^{b'}_b S^{ab}, purely even charts."""
    if S.chart.is_super:
        raise ParityError("Tensor law is implemented on purely even charts")
    data = jacobian(phi)
    names = [v.name for v in phi.source.variables]
    n = len(names)
    scale = data.J.power(-S.weight) if S.weight != 0 else Expr.one(phi.source)
    dx = [[phi.forward[new.name].diff(old) for old in names] for new in phi.target.variables]
    matrix = []
    for i in range(n):
        row = []
        for j in range(n):
            total = Expr.zero(phi.source)
            for a in range(n):
                for b in range(n):
                    if not S.matrix[a][b].is_zero_form():
                        total = total + dx[i][a] * dx[j][b] * S.matrix[a][b]
            row.append(pushforward(scale * total, phi))
        matrix.append(row)
    return TensorDensity(phi.target, S.weight, matrix)


# -- divergence and the groupoid ---------------------------------------------------------

def div_gamma(vector: Sequence[Expr], gamma: VolConnection, weight: WeightLike = 0) -> Expr:
    """∂_A X^A + (δ−1) γ_A X^A for a vector density X of weight δ.

    With γ the flat connection of ρ and δ = 0 this is (1/ρ)∂_A(ρX^A).
    """
    weight = as_weight(weight)
    chart = gamma.chart
    if any(v.chart != chart for v in vector):
        raise ChartMismatchError("Vector density and connection live on different charts")
    contraction = Expr.zero(chart)
    for g, x in zip(gamma.components, vector):
        contraction = contraction + g * x
    return coordinate_divergence(chart, vector) + contraction * (weight - 1)


def _bilinear(S: TensorDensity, left: Sequence[Expr], right: Sequence[Expr]) -> Expr:
    return (S.quadratic(left, right) + S.quadratic(right, left)) * sp.Rational(1, 2)


def groupoid_residual(S: TensorDensity, gamma: VolConnection, covector: Sequence[Expr]) -> Expr:
    """div_γ(SX) + ((δ−1)/2) X_A S^{AB} X_B; zero iff γ → γ + X is an arrow of C_S.

    The connection term is taken symmetrized in (γ, X); for odd S and on
    purely even charts it equals γ_A(SX)^A.
    """
    weight = S.weight
    if weight == 1:
        raise WeightConditionError("The groupoid is trivial for weight 1")
    if gamma.chart != S.chart:
        raise ChartMismatchError("Tensor and connection live on different charts")
    _check_components(S.chart, covector, 0, "Covector")
    vector = S.contract_vector(covector)
    half = sp.Rational(1, 2)
    return (
        coordinate_divergence(S.chart, vector)
        + _bilinear(S, gamma.components, covector) * (weight - 1)
        + S.quadratic(covector, covector) * ((weight - 1) * half)
    )


def cocycle_check(S: TensorDensity, gamma: VolConnection, X: Sequence[Expr], Y: Sequence[Expr]) -> Expr:
    """residual(γ, X+Y) − residual(γ, X) − residual(γ+X, Y); identically zero."""
    total = [x + y for x, y in zip(X, Y)]
    return (
        groupoid_residual(S, gamma, total)
        - groupoid_residual(S, gamma, X)
        - groupoid_residual(S, gamma.shifted(X), Y)
    )


@dataclass(frozen=True)
class GroupoidArrow:
    """An arrow γ → γ' relative to a tensor density S."""

    S: TensorDensity
    source: VolConnection
    target: VolConnection

    @property
    def covector(self) -> Covector:
        return self.source.difference(self.target)

    def residual(self) -> Expr:
        return groupoid_residual(self.S, self.source, self.covector)

    def is_arrow(self) -> bool:
        return bool(self.residual().zero_status())

    def then(self, other: "GroupoidArrow") -> "GroupoidArrow":
        if not self.target.equals(other.source):
            raise DensopsError("Arrows do not compose: target and source differ")
        return GroupoidArrow(self.S, self.source, other.target)

    def inverse(self) -> "GroupoidArrow":
        return GroupoidArrow(self.S, self.target, self.source)


def line_family_covector(chart: Chart, parameter: str) -> Covector:
    """X = 2/(C + x), the closed-form arrows out of γ = 0 on the line with S = 1, δ = 2."""
    if len(chart.variables) != 1 or chart.is_super:
        raise DensopsError("The line family lives on a one-dimensional even chart")
    x = Expr.var(chart, chart.variables[0].name)
    C = Expr.var(chart, parameter)
    return ((C + x).inverse() * 2,)


def volume_form_transform_check(rho: Density, phi: Diffeomorphism) -> Tuple[Expr, ...]:
    """transform(γ_ρ) − γ_{transform(ρ)}, componentwise zero."""
    direct = transform_connection(connection_from_volume_form(rho), phi)
    via_density = connection_from_volume_form(transform_density(rho, phi))
    return direct.difference(via_density)
