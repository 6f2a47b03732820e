"""
Canonical operator pencils.

A PencilSpec (S, γ^A, θ, δ) determines the self-adjoint normalized operator
on F(M); restricting it to F_λ gives the fixed-weight operator Δ_λ. The
reconstruction runs the other way: a single second-order operator on F_λ
lies on exactly one canonical pencil unless λ = 0, λ + δ = 1 or 2λ + δ = 1.
"""

import logging
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import sympy as sp

from charts import Diffeomorphism, jacobian, matrix_inverse, pushforward
from densities import Density, TensorDensity, WeightLike, as_weight
from diffops import (
    DensOperator,
    Matrix,
    Multi,
    adjoint,
    canonical_self_adjoint,
    compose,
    coordinate_divergence,
    lie_derivative,
    symbol_from_principal,
    extract_canonical_data,
    unit,
    word,
)
from errors import (
    ChartMismatchError,
    DegenerateTensorError,
    DensopsError,
    ExceptionalWeightError,
    NonInvertibleError,
    NotNormalizedError,
    OrderError,
    ParityError,
    PatternError,
    SingularWeightError,
    WeightConditionError,
)
from symexpr import Chart, Expr, Parity, ZeroStatus

logger = logging.getLogger(__name__)

HALF = sp.Rational(1, 2)


@dataclass(frozen=True)
class PencilSpec:
    """Data (S, γ^A, θ) of a canonical pencil of weight δ."""

    S: TensorDensity
    gamma: Tuple[Expr, ...]
    theta: Expr

    def __post_init__(self):
        if len(self.gamma) != self.S.size:
            raise DensopsError(f"Upper connection needs {self.S.size} components, got {len(self.gamma)}")
        for component in self.gamma:
            if component.chart != self.S.chart:
                raise ChartMismatchError("Upper connection and tensor live on different charts")
        if self.theta.chart != self.S.chart:
            raise ChartMismatchError("Brans-Dicke function and tensor live on different charts")

    @property
    def chart(self) -> Chart:
        return self.S.chart

    @property
    def weight(self) -> sp.Expr:
        return self.S.weight

    @classmethod
    def from_data(cls, chart: Chart, weight: WeightLike, S: Sequence[Sequence[Expr]], gamma: Sequence[Expr], theta: Expr) -> "PencilSpec":
        return cls(TensorDensity(chart, weight, S), tuple(gamma), theta)

    def equals(self, other: "PencilSpec") -> bool:
        return self.zero_status(other) is not ZeroStatus.NONZERO

    def zero_status(self, other: "PencilSpec") -> ZeroStatus:
        if sp.simplify(self.weight - other.weight) != 0:
            return ZeroStatus.NONZERO
        differences = [self.theta - other.theta]
        differences += [a - b for a, b in zip(self.gamma, other.gamma)]
        for row, other_row in zip(self.S.matrix, other.S.matrix):
            differences += [a - b for a, b in zip(row, other_row)]
        return ZeroStatus.combine(d.zero_status() for d in differences)

    def to_text(self) -> str:
        rows = "; ".join(", ".join(e.to_text() for e in row) for row in self.S.matrix)
        gamma = ", ".join(e.to_text() for e in self.gamma)
        return f"w={self.weight} S=[{rows}] gamma=[{gamma}] theta={self.theta.to_text()}"

    def __str__(self):
        return self.to_text()


def build_pencil(spec: PencilSpec) -> DensOperator:
    return canonical_self_adjoint(spec.chart, spec.weight, spec.S.matrix, spec.gamma, spec.theta)


def extract_spec(op: DensOperator) -> PencilSpec:
    S, gamma, theta, weight = extract_canonical_data(op)
    return PencilSpec(TensorDensity(op.chart, weight, S), gamma, theta)


class FixedWeightOperator:
    """An operator F_λ → F_{λ+δ}: Σ_α c_α ∂^α with coefficients in normal order."""

    def __init__(self, chart: Chart, lam: WeightLike, weight: WeightLike, terms: Optional[Dict[Multi, Expr]] = None):
        self.chart = chart
        self.lam = as_weight(lam)
        self.weight = as_weight(weight)
        self._terms = {tuple(alpha): c for alpha, c in (terms or {}).items() if not c.is_zero_form()}

    @classmethod
    def from_parts(
        cls,
        chart: Chart,
        lam: WeightLike,
        weight: WeightLike,
        second: Sequence[Sequence[Expr]],
        first: Sequence[Expr],
        scalar: Expr,
    ) -> "FixedWeightOperator":
        """A^{ab}∂_a∂_b + A^a∂_a + A on a purely even chart, A^{ab} symmetric."""
        n = len(chart.variables)
        terms: Dict[Multi, Expr] = {(0,) * n: scalar}
        for a in range(n):
            terms[unit(chart, chart.variables[a].name)] = first[a]
            for b in range(a, n):
                key = unit(chart, chart.variables[a].name, chart.variables[b].name)
                terms[key] = second[a][b] if a == b else second[a][b] * 2
        return cls(chart, lam, weight, terms)

    def coefficient(self, alpha: Multi) -> Expr:
        return self._terms.get(tuple(alpha), Expr.zero(self.chart))

    def terms(self):
        return iter(sorted(self._terms.items(), key=lambda item: (sum(item[0]), item[0])))

    @property
    def order(self) -> int:
        return max((sum(alpha) for alpha in self._terms), default=0)

    def principal_symbol(self) -> Matrix:
        """S with principal part ½S^{AB}∂_B∂_A."""
        principal = {alpha: c for alpha, c in self._terms.items() if sum(alpha) == 2}
        return symbol_from_principal(self.chart, principal)

    def second_order(self) -> Matrix:
        """The symmetric A^{ab} of A^{ab}∂_a∂_b (half the principal symbol)."""
        return tuple(tuple(e * HALF for e in row) for row in self.principal_symbol())

    def first_order(self) -> Tuple[Expr, ...]:
        return tuple(self.coefficient(unit(self.chart, v.name)) for v in self.chart.variables)

    def scalar(self) -> Expr:
        return self.coefficient((0,) * len(self.chart.variables))

    def lift(self) -> DensOperator:
        """The λ̂-free operator on F(M) that restricts to this one."""
        return DensOperator(self.chart, self.weight, {(0, alpha): c for alpha, c in self._terms.items()})

    def apply(self, f: Expr) -> Expr:
        """Action on the coefficient of a weight-λ density."""
        total = Expr.zero(self.chart)
        for alpha, c in self._terms.items():
            value = f
            for i in reversed(word(self.chart, alpha)):
                value = value.diff(self.chart.variables[i].name)
            total = total + c * value
        return total

    def apply_density(self, s: Density) -> Density:
        if sp.simplify(s.weight - self.lam) != 0:
            raise WeightConditionError(f"Operator acts on weight {self.lam}, density has weight {s.weight}")
        return Density.single(self.apply(s.coefficient), self.lam + self.weight)

    def adjoint(self) -> "FixedWeightOperator":
        """Δ⁺: F_{1−λ−δ} → F_{1−λ}."""
        return restrict(adjoint(self.lift()), 1 - self.lam - self.weight)

    def __add__(self, other: "FixedWeightOperator") -> "FixedWeightOperator":
        self._check(other)
        terms = dict(self._terms)
        for alpha, c in other._terms.items():
            terms[alpha] = terms[alpha] + c if alpha in terms else c
        return FixedWeightOperator(self.chart, self.lam, self.weight, terms)

    def __neg__(self) -> "FixedWeightOperator":
        return FixedWeightOperator(self.chart, self.lam, self.weight, {a: -c for a, c in self._terms.items()})

    def __sub__(self, other: "FixedWeightOperator") -> "FixedWeightOperator":
        return self + (-other)

    def _check(self, other: "FixedWeightOperator") -> None:
        if other.chart != self.chart:
            raise ChartMismatchError(f"Operators on '{self.chart.name}' and '{other.chart.name}'")
        if sp.simplify(self.lam - other.lam) != 0 or sp.simplify(self.weight - other.weight) != 0:
            raise WeightConditionError(
                f"Operators on F_{self.lam} (w={self.weight}) and F_{other.lam} (w={other.weight}) differ"
            )

    def zero_status(self) -> ZeroStatus:
        return ZeroStatus.combine(c.zero_status() for c in self._terms.values())

    def equals(self, other: "FixedWeightOperator") -> bool:
        return bool((self - other).zero_status())

    def to_text(self) -> str:
        if not self._terms:
            return "0"
        pieces = []
        for alpha, c in self.terms():
            factors = [f"({c.to_text()})"]
            for i, count in enumerate(alpha):
                if count:
                    name = "d" + self.chart.variables[i].name
                    factors.append(name if count == 1 else f"{name}^{count}")
            pieces.append("*".join(factors))
        return " + ".join(pieces)

    def __str__(self):
        return self.to_text()

    def __repr__(self):
        return f"FixedWeightOperator(lam={self.lam}, w={self.weight}: {self.to_text()})"


def restrict(op: DensOperator, lam: WeightLike) -> FixedWeightOperator:
    """Δ_λ = Δ|F_λ: replace λ̂ by λ."""
    lam = as_weight(lam)
    terms: Dict[Multi, Expr] = {}
    for (k, alpha), c in op.terms():
        value = c * (lam ** k) if k else c
        terms[alpha] = terms[alpha] + value if alpha in terms else value
    return FixedWeightOperator(op.chart, lam, op.weight, terms)


def _is_zero_weight(value: sp.Expr) -> bool:
    return sp.simplify(value) == 0


def check_regular_weight(lam: sp.Expr, weight: sp.Expr) -> None:
    """Raise SingularWeightError naming the first failed condition."""
    if _is_zero_weight(lam):
        raise SingularWeightError("lambda=0")
    if _is_zero_weight(lam + weight - 1):
        raise SingularWeightError("mu=1")
    if _is_zero_weight(2 * lam + weight - 1):
        raise SingularWeightError("lambda+mu=1")


def pencil_through(op: FixedWeightOperator) -> PencilSpec:
    """The unique canonical pencil whose restriction to F_λ is op."""
    lam, weight = op.lam, op.weight
    check_regular_weight(lam, weight)
    if op.order > 2:
        raise OrderError(f"Operator of order {op.order} lies on no second-order pencil")
    chart = op.chart
    S = TensorDensity(chart, weight, op.principal_symbol())
    zero = Expr.zero(chart)
    n = len(chart.variables)
    base = restrict(canonical_self_adjoint(chart, weight, S.matrix, [zero] * n, zero), lam)
    factor = 2 / (2 * lam + weight - 1)
    gamma = tuple(
        (a - b) * factor for a, b in zip(op.first_order(), base.first_order())
    )
    partial = restrict(canonical_self_adjoint(chart, weight, S.matrix, gamma, zero), lam)
    theta = (op.scalar() - partial.scalar()) * (2 / (lam * (lam + weight - 1)))
    spec = PencilSpec(S, gamma, theta)
    rebuilt = restrict(build_pencil(spec), lam)
    if (rebuilt - op).zero_status() is ZeroStatus.NONZERO:
        raise PatternError("Operator does not lie on a canonical pencil")
    logger.debug("Reconstructed pencil through operator on F_%s of weight %s", lam, weight)
    return spec


EXCEPTIONAL_WEIGHTS = (sp.Integer(0), HALF, sp.Integer(1))


def phi_iso(op: FixedWeightOperator, mu: WeightLike) -> FixedWeightOperator:
    """The Diff-equivariant map D_λ → D_μ of second-order operators on a purely even chart."""
    mu = as_weight(mu)
    lam = op.lam
    if op.weight != 0:
        raise WeightConditionError("The isomorphism is defined for operators of weight 0 only")
    if op.chart.is_super:
        raise ParityError("The isomorphism is implemented for purely even charts")
    if op.order > 2:
        raise OrderError(f"Operator of order {op.order}")
    for value in (lam, mu):
        if any(_is_zero_weight(value - e) for e in EXCEPTIONAL_WEIGHTS):
            raise ExceptionalWeightError(value)
    chart = op.chart
    names = [v.name for v in chart.variables]
    n = len(names)
    A2 = op.second_order()
    A1 = op.first_order()
    A0 = op.scalar()
    div_A2 = [sum((A2[j][i].diff(names[j]) for j in range(n)), Expr.zero(chart)) for i in range(n)]
    div_A1 = sum((A1[j].diff(names[j]) for j in range(n)), Expr.zero(chart))
    div2_A2 = sum((div_A2[i].diff(names[i]) for i in range(n)), Expr.zero(chart))
    B1 = [
        A1[i] * ((2 * mu - 1) / (2 * lam - 1)) + div_A2[i] * (2 * (lam - mu) / (2 * lam - 1))
        for i in range(n)
    ]
    B0 = A0 * (mu * (mu - 1) / (lam * (lam - 1))) + (div_A1 - div2_A2) * (
        mu * (lam - mu) / ((2 * lam - 1) * (lam - 1))
    )
    return FixedWeightOperator.from_parts(chart, mu, 0, A2, B1, B0)


def phi_iso_via_pencil(op: FixedWeightOperator, mu: WeightLike) -> FixedWeightOperator:
    return restrict(build_pencil(pencil_through(op)), mu)


# -- connections and singular weights ---------------------------------------------

def connection_spec(S: TensorDensity, gamma_lower: Sequence[Expr]) -> PencilSpec:
    """γ^A = S^{AB}γ_B and θ = γ_A S^{AB} γ_B."""
    upper = S.contract_vector(gamma_lower)
    theta = S.quadratic(gamma_lower, gamma_lower)
    return PencilSpec(S, upper, theta)


def singular_weight(weight: WeightLike) -> sp.Expr:
    return (1 - as_weight(weight)) / 2


def delta_sing(S: TensorDensity, gamma_lower: Sequence[Expr]) -> FixedWeightOperator:
    """The operator of the connection pencil at λ = (1−δ)/2, where the γ^A∂_A term drops out."""
    return restrict(build_pencil(connection_spec(S, gamma_lower)), singular_weight(S.weight))


def singular_split(op: FixedWeightOperator, gamma_lower: Sequence[Expr]) -> Tuple[Tuple[Expr, ...], Expr]:
    """Write op − Δ_sing(S, γ) = L_X|_{(1−δ)/2} + F with S the symbol of op."""
    weight = op.weight
    if weight == 1:
        raise WeightConditionError("No singular weight splitting for weight 1")
    if not _is_zero_weight(op.lam - singular_weight(weight)):
        raise WeightConditionError(f"Operator acts on F_{op.lam}, not on F_{singular_weight(weight)}")
    S = TensorDensity(op.chart, weight, op.principal_symbol())
    difference = op - delta_sing(S, gamma_lower)
    if difference.order > 1:
        raise PatternError("Difference with the singular operator is not first order")
    X = difference.first_order()
    F = difference.scalar() - coordinate_divergence(op.chart, X) * HALF
    lie = restrict(lie_derivative(op.chart, X, weight), op.lam)
    residual = difference - lie - FixedWeightOperator(op.chart, op.lam, weight, {(0,) * len(X): F})
    if residual.zero_status() is ZeroStatus.NONZERO:
        raise PatternError("Singular-weight splitting failed to reproduce the operator")
    return X, F


def nondegenerate_split(op: DensOperator) -> Tuple[Tuple[Expr, ...], Expr]:
    """For self-adjoint L with invertible even S: L = Δ(S, γ) + t^δ λ̂(λ̂+δ−1) F."""
    spec = extract_spec(op)
    chart = op.chart
    if chart.is_super or spec.S.parity is not Parity.EVEN:
        raise ParityError("Nondegenerate splitting is implemented for even tensors on purely even charts")
    try:
        inverse = matrix_inverse(spec.S.matrix)
    except NonInvertibleError as error:
        raise DegenerateTensorError("Symbol S is degenerate") from error
    n = spec.S.size
    gamma_lower = tuple(
        sum((inverse[a][b] * spec.gamma[b] for b in range(n)), Expr.zero(chart)) for a in range(n)
    )
    F = (spec.theta - spec.S.quadratic(gamma_lower, gamma_lower)) * HALF
    rebuilt = build_pencil(connection_spec(spec.S, gamma_lower))
    rebuilt = rebuilt + DensOperator(chart, spec.weight, {
        (2, (0,) * n): F,
        (1, (0,) * n): F * (spec.weight - 1),
    })
    if (rebuilt - op).zero_status() is ZeroStatus.NONZERO:
        raise PatternError("Nondegenerate splitting failed to reproduce the operator")
    return gamma_lower, F


def function_operator_connection(op: FixedWeightOperator) -> Tuple[Expr, ...]:
    """Upper connection of a second-order operator on functions with Δ(1) = 0.

    At λ = 0, δ = 0 the first-order part of the pencil is ½(∂_BS^{BA} − γ^A),
    so γ^A = ∂_BS^{BA} − 2A^A.
    """
    if not (_is_zero_weight(op.lam) and _is_zero_weight(op.weight)):
        raise WeightConditionError("Expected an operator on functions (lambda=0, weight 0)")
    if op.scalar().zero_status() is ZeroStatus.NONZERO:
        raise NotNormalizedError("Operator on functions does not kill constants")
    chart = op.chart
    zero = Expr.zero(chart)
    S = op.principal_symbol()
    base = restrict(canonical_self_adjoint(chart, 0, S, [zero] * len(chart.variables), zero), 0)
    return tuple((b - a) * 2 for a, b in zip(op.first_order(), base.first_order()))


def symmetrized_lie_pencil(chart: Chart, X: Sequence[Expr], Y: Sequence[Expr]) -> Tuple[DensOperator, PencilSpec]:
    """½(L_X L_Y + L_Y L_X) and its pencil data (S = XY + YX, γ = (∂X)Y + (∂Y)X, θ = 2(∂X)(∂Y))."""
    if chart.is_super:
        raise ParityError("Symmetrized Lie pencils are built on purely even charts")
    lx, ly = lie_derivative(chart, X, 0), lie_derivative(chart, Y, 0)
    op = (compose(lx, ly) + compose(ly, lx)) * HALF
    div_x = coordinate_divergence(chart, X)
    div_y = coordinate_divergence(chart, Y)
    n = len(X)
    S = [[X[a] * Y[b] + Y[a] * X[b] for b in range(n)] for a in range(n)]
    gamma = [div_x * Y[a] + div_y * X[a] for a in range(n)]
    spec = PencilSpec(TensorDensity(chart, 0, S), tuple(gamma), div_x * div_y * 2)
    return op, spec


# -- coordinate changes ----------------------------------------------------------------

def transform_spec(spec: PencilSpec, phi: Diffeomorphism) -> PencilSpec:
    """Push (S, γ, θ) through φ by the three transformation laws (purely even charts)."""
    if spec.chart != phi.source:
        raise ChartMismatchError(f"Pencil on '{spec.chart.name}', map starts at '{phi.source.name}'")
    if spec.chart.is_super:
        raise ParityError("Transformation laws are implemented on purely even charts")
    source, target = phi.source, phi.target
    data = jacobian(phi)
    n = len(source.variables)
    names = [v.name for v in source.variables]
    dlog = [data.log_derivative(name) for name in names]
    # x'_a = ∂x'/∂x^a, indexed [new][old]
    dx = [[phi.forward[new.name].diff(old) for old in names] for new in target.variables]
    scale = data.J.power(-spec.weight) if spec.weight != 0 else Expr.one(source)
    S = spec.S.matrix
    zero = Expr.zero(source)

    def total(values):
        return sum(values, zero)

    shifted_gamma = [spec.gamma[a] + total(S[a][b] * dlog[b] for b in range(n)) for a in range(n)]
    new_S = [
        [
            pushforward(scale * total(dx[i][a] * dx[j][b] * S[a][b] for a in range(n) for b in range(n)), phi)
            for j in range(n)
        ]
        for i in range(n)
    ]
    new_gamma = [pushforward(scale * total(dx[i][a] * shifted_gamma[a] for a in range(n)), phi) for i in range(n)]
    theta = (
        spec.theta
        + total(spec.gamma[a] * dlog[a] for a in range(n)) * 2
        + total(dlog[a] * S[a][b] * dlog[b] for a in range(n) for b in range(n))
    )
    new_theta = pushforward(scale * theta, phi)
    return PencilSpec(TensorDensity(target, spec.weight, new_S), tuple(new_gamma), new_theta)
