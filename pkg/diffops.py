"""
Differential operators on the algebra of densities.

An operator of weight δ is kept in normal form

    L = Σ c_{k,α} · t^δ · λ̂^k · ∂^α

with coefficients on the left, then powers of the Euler operator λ̂ = t∂_t,
then partial derivatives in chart order (each odd derivative at most once).
Composition and the formal adjoint are computed by pushing generators
through this normal form one at a time.
"""

import logging
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Tuple

import sympy as sp

from charts import Diffeomorphism, jacobian, pushforward
from densities import Density, WeightLike, as_weight, pair_integrand
from errors import (
    ChartMismatchError,
    DensopsError,
    ExprSyntaxError,
    NilpotencyError,
    NotNormalizedError,
    NotSelfAdjointError,
    OrderError,
    ParityError,
    PatternError,
    UndeclaredIdentifierError,
    WeightConditionError,
)
from expr_parser import AstVisitor, integer_exponent, parse_ast
from symexpr import Chart, Expr, Parity, ZeroStatus, default_seed

logger = logging.getLogger(__name__)

Multi = Tuple[int, ...]
Key = Tuple[int, Multi]
Matrix = Tuple[Tuple[Expr, ...], ...]


def unit(chart: Chart, *names: str) -> Multi:
    """Multi-index of the derivative ∂_{names[0]} ∂_{names[1]} ... (order-insensitive)."""
    alpha = [0] * len(chart.variables)
    for name in names:
        alpha[chart.index(name)] += 1
    return tuple(alpha)


def word(chart: Chart, alpha: Multi) -> List[int]:
    """Variable indices of ∂^α in normal order, with repetition."""
    result = []
    for i, count in enumerate(alpha):
        result.extend([i] * count)
    return result


def _sign_flip(c: Expr) -> Expr:
    """(−1)^{p(c)} c, applied part by part."""
    return c.even_part() - c.odd_part()


class DensOperator:
    """An immutable differential operator on F(M) in normal form."""

    def __init__(self, chart: Chart, weight: WeightLike = 0, terms: Optional[Mapping[Key, Expr]] = None):
        self.chart = chart
        self.weight = as_weight(weight)
        odd_positions = [i for i, v in enumerate(chart.variables) if v.is_odd]
        cleaned: Dict[Key, Expr] = {}
        for (k, alpha), c in (terms or {}).items():
            alpha = tuple(alpha)
            if len(alpha) != len(chart.variables) or k < 0 or min(alpha, default=0) < 0:
                raise DensopsError(f"Malformed operator term {(k, alpha)} on chart {chart.name}")
            if any(alpha[i] > 1 for i in odd_positions):
                continue
            if c.chart != chart:
                raise ChartMismatchError(f"Operator coefficient on '{c.chart.name}' for chart '{chart.name}'")
            if not c.is_zero_form():
                cleaned[(k, alpha)] = c
        self._terms = cleaned

    # -- generators -------------------------------------------------------------
    @classmethod
    def zero(cls, chart: Chart, weight: WeightLike = 0) -> "DensOperator":
        return cls(chart, weight)

    @classmethod
    def multiplication(cls, c: Expr, weight: WeightLike = 0) -> "DensOperator":
        return cls(c.chart, weight, {(0, (0,) * len(c.chart.variables)): c})

    @classmethod
    def identity(cls, chart: Chart) -> "DensOperator":
        return cls.multiplication(Expr.one(chart))

    @classmethod
    def derivative(cls, chart: Chart, name: str) -> "DensOperator":
        return cls(chart, 0, {(0, unit(chart, name)): Expr.one(chart)})

    @classmethod
    def euler(cls, chart: Chart) -> "DensOperator":
        return cls(chart, 0, {(1, (0,) * len(chart.variables)): Expr.one(chart)})

    @classmethod
    def t_power(cls, chart: Chart, weight: WeightLike) -> "DensOperator":
        return cls.multiplication(Expr.one(chart), weight)

    # -- structure ----------------------------------------------------------------
    def terms(self) -> Iterator[Tuple[Key, Expr]]:
        return iter(sorted(self._terms.items(), key=lambda item: (item[0][0] + sum(item[0][1]), item[0])))

    def coefficient(self, k: int, alpha: Multi) -> Expr:
        return self._terms.get((k, tuple(alpha)), Expr.zero(self.chart))

    @property
    def order(self) -> int:
        return max((k + sum(alpha) for k, alpha in self._terms), default=0)

    @property
    def parity(self) -> Optional[Parity]:
        found = set()
        odd = [v.is_odd for v in self.chart.variables]
        for (k, alpha), c in self._terms.items():
            if c.parity is None:
                return None
            found.add((c.parity + sum(a for a, is_odd in zip(alpha, odd) if is_odd)) % 2)
        if not found:
            return Parity.EVEN
        return Parity(found.pop()) if len(found) == 1 else None

    def is_zero_form(self) -> bool:
        return not self._terms

    def apply_to_one(self) -> Expr:
        """Coefficient of L(1): the k=0, α=0 term."""
        return self.coefficient(0, (0,) * len(self.chart.variables))

    # -- algebra --------------------------------------------------------------------
    def _check(self, other: "DensOperator") -> None:
        if other.chart != self.chart:
            raise ChartMismatchError(f"Operators on '{self.chart.name}' and '{other.chart.name}'")

    def __add__(self, other: "DensOperator") -> "DensOperator":
        self._check(other)
        if other.is_zero_form():
            return self
        if self.is_zero_form():
            return other
        if sp.simplify(self.weight - other.weight) != 0:
            raise WeightConditionError(f"Cannot add operators of weights {self.weight} and {other.weight}")
        terms = dict(self._terms)
        for key, c in other._terms.items():
            terms[key] = terms[key] + c if key in terms else c
        return DensOperator(self.chart, self.weight, terms)

    def __neg__(self) -> "DensOperator":
        return DensOperator(self.chart, self.weight, {k: -c for k, c in self._terms.items()})

    def __sub__(self, other: "DensOperator") -> "DensOperator":
        return self + (-other)

    def __mul__(self, factor) -> "DensOperator":
        """Multiply every coefficient by an even scalar."""
        if isinstance(factor, Expr):
            return compose(DensOperator.multiplication(factor), self)
        return DensOperator(self.chart, self.weight, {k: c * factor for k, c in self._terms.items()})

    __rmul__ = __mul__

    def __matmul__(self, other: "DensOperator") -> "DensOperator":
        return compose(self, other)

    def with_weight(self, weight: WeightLike) -> "DensOperator":
        return DensOperator(self.chart, weight, self._terms)

    def zero_status(self, seed: Optional[int] = None) -> ZeroStatus:
        return ZeroStatus.combine(c.zero_status(seed=seed) for c in self._terms.values())

    def equals(self, other: "DensOperator") -> bool:
        return bool((self - other).zero_status())

    def to_text(self) -> str:
        if not self._terms:
            return "0"
        pieces = []
        for (k, alpha), c in self.terms():
            factors = [f"({c.to_text()})"]
            if k:
                factors.append("lam" if k == 1 else f"lam^{k}")
            for i, count in enumerate(alpha):
                if count:
                    name = "d" + self.chart.variables[i].name
                    factors.append(name if count == 1 else f"{name}^{count}")
            pieces.append("*".join(factors))
        body = " + ".join(pieces)
        return body if self.weight == 0 else f"t^({self.weight})*[{body}]"

    def __str__(self):
        return self.to_text()

    def __repr__(self):
        return f"DensOperator({self.chart.name}, w={self.weight}: {self.to_text()})"


def _accumulate(terms: Dict[Key, Expr], key: Key, c: Expr) -> None:
    if c.is_zero_form():
        return
    terms[key] = terms[key] + c if key in terms else c


def _left_derivative(op: DensOperator, i: int) -> DensOperator:
    """∂_i ∘ op, using ∂_v c = (∂_v c) + (−1)^{p(v)p(c)} c ∂_v."""
    chart = op.chart
    variable = chart.variables[i]
    odd_before = [j for j in range(i) if chart.variables[j].is_odd]
    terms: Dict[Key, Expr] = {}
    for (k, alpha), c in op._terms.items():
        _accumulate(terms, (k, alpha), c.diff(variable.name))
        if variable.is_odd:
            if alpha[i]:
                continue
            sign = (-1) ** sum(alpha[j] for j in odd_before)
            moved = _sign_flip(c) * sign
        else:
            moved = c
        new_alpha = alpha[:i] + (alpha[i] + 1,) + alpha[i + 1:]
        _accumulate(terms, (k, new_alpha), moved)
    return DensOperator(chart, op.weight, terms)


def _left_euler(op: DensOperator) -> DensOperator:
    """λ̂ ∘ c t^δ λ̂^k ∂^α = c t^δ (λ̂ + δ) λ̂^k ∂^α."""
    terms: Dict[Key, Expr] = {}
    for (k, alpha), c in op._terms.items():
        _accumulate(terms, (k + 1, alpha), c)
        if op.weight != 0:
            _accumulate(terms, (k, alpha), c * op.weight)
    return DensOperator(op.chart, op.weight, terms)


def _left_multiply(c: Expr, op: DensOperator) -> DensOperator:
    return DensOperator(op.chart, op.weight, {key: c * coefficient for key, coefficient in op._terms.items()})


def compose(a: DensOperator, b: DensOperator) -> DensOperator:
    """Normal form of a∘b; the weight is δ_a + δ_b."""
    a._check(b)
    result = DensOperator.zero(a.chart, a.weight + b.weight)
    for (k, alpha), c in a._terms.items():
        op = b
        for i in reversed(word(a.chart, alpha)):
            op = _left_derivative(op, i)
        for _ in range(k):
            op = _left_euler(op)
        op = _left_multiply(c, op.with_weight(op.weight + a.weight))
        result = result + op
    return result


def commutator(a: DensOperator, b: DensOperator) -> DensOperator:
    """Graded commutator [a, b] = ab − (−1)^{p(a)p(b)} ba."""
    sign = 1
    if a.parity is Parity.ODD and b.parity is Parity.ODD:
        sign = -1
    return compose(a, b) - compose(b, a) * sign


def adjoint(op: DensOperator) -> DensOperator:
    """Formal adjoint from x⁺ = x, ∂⁺ = −∂, λ̂⁺ = 1 − λ̂ and (AB)⁺ = (−1)^{p(A)p(B)} B⁺A⁺."""
    chart = op.chart
    result = DensOperator.zero(chart, op.weight)
    for (k, alpha), c in op._terms.items():
        derivatives = word(chart, alpha)
        odd_count = sum(1 for i in derivatives if chart.variables[i].is_odd)
        for parity, part in c.homogeneous_parts():
            sign = (-1) ** (parity * odd_count + odd_count * (odd_count - 1) // 2)
            term = DensOperator.multiplication(part, op.weight)
            for _ in range(k):
                term = term - _left_euler(term)
            for i in derivatives:
                term = -_left_derivative(term, i)
            result = result + term * sign
    return result


def apply(op: DensOperator, s: Density) -> Density:
    """Apply op to a density: λ̂ acts on t^λ as λ, derivatives act on coefficients."""
    if s.chart != op.chart:
        raise ChartMismatchError(f"Operator on '{op.chart.name}' applied to density on '{s.chart.name}'")
    components: Dict[sp.Expr, Expr] = {}
    for weight, coefficient in s.components():
        for (k, alpha), c in op._terms.items():
            value = coefficient
            for i in reversed(word(op.chart, alpha)):
                value = value.diff(op.chart.variables[i].name)
            if value.is_zero_form():
                continue
            term = c * value * (weight ** k)
            target = weight + op.weight
            components[target] = components[target] + term if target in components else term
    return Density(op.chart, components)


def normalize(op: DensOperator) -> DensOperator:
    """L − L(1): drop the pure multiplication term."""
    zero_key = (0, (0,) * len(op.chart.variables))
    return DensOperator(op.chart, op.weight, {k: c for k, c in op._terms.items() if k != zero_key})


def decompose_self_adjoint(op: DensOperator) -> Tuple[DensOperator, DensOperator]:
    """½(L + (−1)ⁿL⁺) and ½(L − (−1)ⁿL⁺) for L of order n."""
    n = op.order
    flipped = adjoint(op) * ((-1) ** n)
    half = sp.Rational(1, 2)
    return (op + flipped) * half, (op - flipped) * half


# -- vector fields ---------------------------------------------------------------------

def coordinate_divergence(chart: Chart, components: Sequence[Expr]) -> Expr:
    """Σ_A (−1)^{p(A)p(X^A)} ∂_A X^A, with parities taken part by part."""
    total = Expr.zero(chart)
    for variable, component in zip(chart.variables, components):
        for parity, part in component.homogeneous_parts():
            sign = -1 if (variable.is_odd and parity is Parity.ODD) else 1
            total = total + part.diff(variable.name) * sign
    return total


class ExtVectorField:
    """X = t^δ (X^A ∂_A + X⁰ λ̂) on the extended manifold."""

    def __init__(self, chart: Chart, weight: WeightLike, components: Sequence[Expr], vertical: Optional[Expr] = None):
        if len(components) != len(chart.variables):
            raise DensopsError(f"Vector field on '{chart.name}' needs {len(chart.variables)} components")
        self.chart = chart
        self.weight = as_weight(weight)
        self.components = tuple(components)
        self.vertical = vertical if vertical is not None else Expr.zero(chart)
        self.parity = self._check_parity()

    def _check_parity(self) -> Parity:
        found = set()
        for variable, component in zip(self.chart.variables, self.components):
            if component.is_zero_form():
                continue
            if component.parity is None:
                raise ParityError(f"Component {component} has no definite parity")
            found.add((component.parity + variable.parity) % 2)
        if not self.vertical.is_zero_form():
            if self.vertical.parity is None:
                raise ParityError(f"Vertical component {self.vertical} has no definite parity")
            found.add(int(self.vertical.parity))
        if len(found) > 1:
            raise ParityError("Vector field components violate p(X^A) = p(X) + p(A)")
        return Parity(found.pop()) if found else Parity.EVEN

    def as_operator(self) -> DensOperator:
        terms: Dict[Key, Expr] = {}
        for variable, component in zip(self.chart.variables, self.components):
            _accumulate(terms, (0, unit(self.chart, variable.name)), component)
        _accumulate(terms, (1, (0,) * len(self.chart.variables)), self.vertical)
        return DensOperator(self.chart, self.weight, terms)

    def __sub__(self, other: "ExtVectorField") -> "ExtVectorField":
        return ExtVectorField(
            self.chart,
            self.weight,
            [a - b for a, b in zip(self.components, other.components)],
            self.vertical - other.vertical,
        )

    def is_vertical(self) -> bool:
        return all(c.is_zero_form() for c in self.components)

    def __repr__(self):
        return f"ExtVectorField({self.chart.name}, w={self.weight})"


def divergence(field: ExtVectorField) -> Density:
    """Canonical divergence: the multiplication operator −(X + X⁺)."""
    op = field.as_operator()
    reduced = -(op + adjoint(op))
    zero_key = (0, (0,) * len(field.chart.variables))
    for key, c in reduced._terms.items():
        if key == zero_key:
            continue
        status = c.zero_status()
        if status is ZeroStatus.NONZERO:
            raise PatternError(f"X + X⁺ is not a multiplication operator (term {key})")
        if status is ZeroStatus.PROBABLY_ZERO:
            logger.debug("Dropping term %s of X + X⁺ judged probably zero (seed %s)", key, default_seed())
    return Density(field.chart, {field.weight: reduced.coefficient(*zero_key)})


def lie_field(chart: Chart, components: Sequence[Expr], weight: WeightLike = 0) -> ExtVectorField:
    """t^δ(X^A ∂_A + div X · λ̂/(1−δ)), the divergence-free lift of X."""
    weight = as_weight(weight)
    if weight == 1:
        raise WeightConditionError("Generalized Lie derivative is undefined for weight 1")
    vertical = coordinate_divergence(chart, components) * (1 / (1 - weight))
    return ExtVectorField(chart, weight, components, vertical)


def lie_derivative(chart: Chart, components: Sequence[Expr], weight: WeightLike = 0) -> DensOperator:
    return lie_field(chart, components, weight).as_operator()


def vertical_projection(field: ExtVectorField) -> ExtVectorField:
    """ΠX = t^δ(∂_A X^A/(δ−1) + X⁰)λ̂; X − ΠX is the Lie field of the horizontal part."""
    if field.weight == 1:
        raise WeightConditionError("Vertical projection is undefined for weight 1")
    vertical = coordinate_divergence(field.chart, field.components) * (1 / (field.weight - 1)) + field.vertical
    zero = Expr.zero(field.chart)
    return ExtVectorField(field.chart, field.weight, [zero] * len(field.components), vertical)


def antiselfadjoint_first_order(chart: Chart, components: Sequence[Expr]) -> DensOperator:
    """X + ½ div X, the anti-self-adjoint first-order operator of a vector field."""
    half_div = coordinate_divergence(chart, components) * sp.Rational(1, 2)
    op = ExtVectorField(chart, 0, components).as_operator()
    return op + DensOperator.multiplication(half_div)


# -- canonical form of self-adjoint operators ------------------------------------

def symbol_from_principal(chart: Chart, principal: Mapping[Multi, Expr]) -> Matrix:
    """Recover S^{AB} from the normal-ordered principal part ½ S^{AB} ∂_B ∂_A."""
    n = len(chart.variables)
    parities = chart.parities()
    zero = Expr.zero(chart)
    rows = [[zero] * n for _ in range(n)]
    for a in range(n):
        for b in range(a, n):
            alpha = [0] * n
            alpha[a] += 1
            alpha[b] += 1
            c = principal.get(tuple(alpha), zero)
            if a == b:
                rows[a][a] = zero if parities[a] is Parity.ODD else c * 2
            else:
                rows[b][a] = c
                rows[a][b] = c * ((-1) ** (parities[a] * parities[b]))
    return tuple(tuple(row) for row in rows)


def canonical_self_adjoint(
    chart: Chart,
    weight: WeightLike,
    S: Sequence[Sequence[Expr]],
    gamma: Sequence[Expr],
    theta: Expr,
) -> DensOperator:
    """The self-adjoint normalized operator with data (S, γ^A, θ).

    Built as ½(P + P⁺) − (½(P + P⁺))(1) from
    P = (t^δ/2)(S^{AB}∂_B∂_A + 2γ^Aλ̂∂_A + θλ̂(λ̂+δ−1)); in the purely even
    case this is, term by term,
    (t^δ/2)(S^{ab}∂_a∂_b + ∂_bS^{ba}∂_a + (2λ̂+δ−1)γ^a∂_a + λ̂∂_aγ^a + λ̂(λ̂+δ−1)θ).
    """
    weight = as_weight(weight)
    half = sp.Rational(1, 2)
    n = len(chart.variables)
    names = [v.name for v in chart.variables]
    p = DensOperator.zero(chart)
    for a in range(n):
        for b in range(n):
            if S[a][b].is_zero_form():
                continue
            second = compose(DensOperator.derivative(chart, names[b]), DensOperator.derivative(chart, names[a]))
            p = p + compose(DensOperator.multiplication(S[a][b] * half), second)
    zero_alpha = (0,) * n
    terms: Dict[Key, Expr] = {}
    for a in range(n):
        _accumulate(terms, (1, unit(chart, names[a])), gamma[a])
    _accumulate(terms, (2, zero_alpha), theta * half)
    _accumulate(terms, (1, zero_alpha), theta * half * (weight - 1))
    p = (p + DensOperator(chart, 0, terms)).with_weight(weight)
    symmetric = (p + adjoint(p)) * half
    return normalize(symmetric)


def extract_canonical_data(op: DensOperator) -> Tuple[Matrix, Tuple[Expr, ...], Expr, sp.Expr]:
    """Read (S, γ^A, θ, δ) off a second-order self-adjoint normalized operator."""
    if op.order > 2:
        raise OrderError(f"Operator of order {op.order} is not second order")
    if (adjoint(op) - op).zero_status() is ZeroStatus.NONZERO:
        raise NotSelfAdjointError("Operator is not self-adjoint")
    if op.apply_to_one().zero_status() is ZeroStatus.NONZERO:
        raise NotNormalizedError(f"Operator does not kill constants: L(1) = {op.apply_to_one()}")
    chart = op.chart
    n = len(chart.variables)
    principal = {alpha: c for (k, alpha), c in op._terms.items() if k == 0 and sum(alpha) == 2}
    S = symbol_from_principal(chart, principal)
    gamma = tuple(op.coefficient(1, unit(chart, v.name)) for v in chart.variables)
    theta = op.coefficient(2, (0,) * n) * 2
    rebuilt = canonical_self_adjoint(chart, op.weight, S, gamma, theta)
    if (rebuilt - op).zero_status() is ZeroStatus.NONZERO:
        raise PatternError("Coefficients do not follow the self-adjoint second-order pattern")
    logger.debug("Extracted (S, gamma, theta) on chart %s at weight %s", chart.name, op.weight)
    return S, gamma, theta, op.weight


# -- integration by parts -----------------------------------------------------------

def integrand_boundary_term(op: DensOperator, a: Density, b: Density) -> Tuple[Expr, ...]:
    """Components V^A with ⟨La, b⟩ − (−1)^{p(L)p(a)}⟨a, L⁺b⟩ = ∂_A V^A at integrand level."""
    chart = op.chart
    if a.chart != chart or b.chart != chart:
        raise ChartMismatchError("Operator and densities live on different charts")
    lam_a, lam_b = a.weight, b.weight
    if sp.simplify(lam_a + lam_b + op.weight - 1) != 0:
        raise WeightConditionError(
            f"Weights {lam_a} + {lam_b} + {op.weight} do not add up to 1"
        )
    if op.parity is None or a.parity is None or b.parity is None:
        raise ParityError("Boundary terms need operators and densities of definite parity")
    names = [v.name for v in chart.variables]
    parities = chart.parities()
    s_a, s_b = a.coefficient, b.coefficient
    p_a = int(a.parity)
    V = [Expr.zero(chart) for _ in names]
    for (k, alpha), c in op._terms.items():
        derivatives = word(chart, alpha)
        # chain[j] = ∂_{w_{j+1}} ... ∂_{w_m} a; its parity is fixed by the word even where it vanishes
        chain = [s_a]
        for i in reversed(derivatives):
            chain.append(chain[-1].diff(names[i]))
        chain.reverse()
        chain_parity = [(p_a + sum(int(parities[i]) for i in derivatives[j:])) % 2 for j in range(len(chain))]
        scalar = lam_a ** k
        for p_c, part in c.homogeneous_parts():
            sign = (-1) ** (int(p_c) * chain_parity[0])
            R = part * s_b
            for j, i in enumerate(derivatives):
                V[i] = V[i] + chain[j + 1] * R * (sign * scalar)
                sign = -sign * (-1) ** (int(parities[i]) * chain_parity[j + 1])
                R = R.diff(names[i])
    V = tuple(V)
    residual = boundary_residual(op, a, b, V)
    if residual.zero_status() is ZeroStatus.NONZERO:
        raise PatternError(f"Integration-by-parts certificate failed: residual {residual}")
    return V


def boundary_residual(op: DensOperator, a: Density, b: Density, V: Sequence[Expr]) -> Expr:
    """⟨La, b⟩ − (−1)^{p(L)p(a)}⟨a, L⁺b⟩ − ∂_A V^A; zero for a valid certificate."""
    sign = (-1) ** (int(op.parity or 0) * int(a.parity or 0))
    lhs = pair_integrand(apply(op, a), b)
    rhs = pair_integrand(a, apply(adjoint(op), b)) * sign
    total_derivative = Expr.zero(op.chart)
    for variable, component in zip(op.chart.variables, V):
        total_derivative = total_derivative + component.diff(variable.name)
    return lhs - rhs - total_derivative


# -- change of coordinates -------------------------------------------------------------

def transform_operator(op: DensOperator, phi: Diffeomorphism) -> DensOperator:
    """The operator in the target chart: ∂_A = (∂_A z'^B)∂'_B + (∂_A log J)λ̂', λ̂ = λ̂', t^δ = J^{-δ}t'^δ."""
    if op.chart != phi.source:
        raise ChartMismatchError(f"Operator on '{op.chart.name}', map starts at '{phi.source.name}'")
    source, target = phi.source, phi.target
    data = jacobian(phi)
    images = []
    for variable in source.variables:
        image = DensOperator(target, 0, {
            (1, (0,) * len(target.variables)): pushforward(data.log_derivative(variable.name), phi),
        })
        for new in target.variables:
            factor = pushforward(phi.forward[new.name].diff(variable.name), phi)
            image = image + DensOperator(target, 0, {(0, unit(target, new.name)): factor})
        images.append(image)
    euler = DensOperator.euler(target)
    t_factor = pushforward(data.J.power(-op.weight), phi) if op.weight != 0 else Expr.one(target)
    result = DensOperator.zero(target, op.weight)
    for (k, alpha), c in op._terms.items():
        term = DensOperator.identity(target)
        for i in reversed(word(source, alpha)):
            term = compose(images[i], term)
        for _ in range(k):
            term = compose(euler, term)
        term = compose(DensOperator.multiplication(pushforward(c, phi) * t_factor, op.weight), term)
        result = result + term
    return result


# -- operator literals -----------------------------------------------------------------

class _OperatorBuilder(AstVisitor):
    """Evaluates an operator AST; values are Expr (multiplication) until an operator symbol appears."""

    def __init__(self, chart: Chart):
        self.chart = chart

    def _as_operator(self, value) -> DensOperator:
        return value if isinstance(value, DensOperator) else DensOperator.multiplication(value)

    def visit_Number(self, node):
        return Expr.constant(self.chart, node.value)

    def visit_Name(self, node):
        name = node.name
        if name == "lam":
            return DensOperator.euler(self.chart)
        if self.chart.has(name):
            return Expr.var(self.chart, name)
        if name.startswith("d") and self.chart.has(name[1:]) and name[1:] not in self.chart.params:
            return DensOperator.derivative(self.chart, name[1:])
        raise UndeclaredIdentifierError(name, node.position)

    def visit_Call(self, node):
        argument = self.visit(node.argument)
        if isinstance(argument, DensOperator):
            raise ExprSyntaxError(f"{node.function}() of an operator", node.position)
        try:
            return getattr(argument, node.function)()
        except ParityError as error:
            raise ExprSyntaxError(str(error), node.position) from error

    def visit_Unary(self, node):
        operand = self.visit(node.operand)
        return -operand if node.op == "-" else operand

    def visit_Binary(self, node):
        left = self.visit(node.left)
        if node.op == "^":
            n = integer_exponent(node.right)
            if isinstance(left, Expr):
                if left.parity is Parity.ODD and n >= 2:
                    raise NilpotencyError(f"Odd expression raised to power {n} at position {node.position}")
                return left.power(n)
            if n < 0:
                raise ExprSyntaxError("Negative power of an operator", node.position)
            result = DensOperator.identity(self.chart)
            for _ in range(n):
                result = compose(result, left)
            return result
        right = self.visit(node.right)
        if node.op == "/":
            if isinstance(right, DensOperator) or right.parity is not Parity.EVEN:
                raise ExprSyntaxError("Division by an operator or a non-even expression", node.position)
            if isinstance(left, Expr):
                return left / right
            return compose(left, DensOperator.multiplication(right.inverse()))
        if isinstance(left, Expr) and isinstance(right, Expr):
            if node.op == "+":
                return left + right
            if node.op == "-":
                return left - right
            return left * right
        left, right = self._as_operator(left), self._as_operator(right)
        if node.op == "+":
            return left + right
        if node.op == "-":
            return left - right
        return compose(left, right)


def parse_operator(source: str, chart: Chart, weight: WeightLike = 0) -> DensOperator:
    """Read `1/2*dx^2 + lam*c*dx` style text as t^δ times the written operator.

    `lam` is the Euler operator and `d<var>` the partial derivative; products
    compose left to right.
    """
    value = _OperatorBuilder(chart).visit(parse_ast(source))
    op = value if isinstance(value, DensOperator) else DensOperator.multiplication(value)
    logger.debug("Parsed operator %r on %s", source, chart.name)
    return op.with_weight(weight)
