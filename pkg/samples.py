"""
Seeded random generators for the sampled checks.

Every generator takes a `random.Random` so that a check file run with
`--seed N` reproduces the same objects. Polynomials are kept small (degree
two, a handful of terms) so that the symbolic identities stay fast.
"""

import logging
import random
import re
from fractions import Fraction
from itertools import combinations
from typing import Dict, List, Optional, Sequence, Tuple

from charts import Diffeomorphism
from densities import Density, TensorDensity
from diffops import DensOperator
from odd_symplectic import compose_symplectic, lagrangian_shift, point_transformation
from pencils import PencilSpec
from riemann_line import Metric
from symexpr import Chart, Expr, Parity, parse

logger = logging.getLogger(__name__)

# generic rational weights: away from 0, 1/2, 1 and pairwise generic
GENERIC_WEIGHTS = (
    Fraction(1, 3), Fraction(2, 3), Fraction(1, 4), Fraction(3, 4), Fraction(-1, 3),
    Fraction(5, 2), Fraction(-2, 5), Fraction(3, 7), Fraction(7, 5), Fraction(-3, 2),
)

# (name, forward image of x, inverse image of y) on x > 0
LINE_MAPS = (
    ("mobius", "(2*x + 1)/(x + 3)", "(3*y - 1)/(2 - y)"),
    ("affine", "3*x + 2", "(y - 2)/3"),
    ("cube", "x^3", "exp(log(y)/3)"),
    ("square", "x^2 + x", "sqrt(y + 1/4) - 1/2"),
    ("exp", "exp(x)", "log(y)"),
    ("reciprocal", "1/x", "1/y"),
    ("shifted-reciprocal", "x/(x + 1)", "y/(1 - y)"),
)


def random_rational(rng: random.Random, low: int = -3, high: int = 3) -> Fraction:
    """A nonzero small rational."""
    numerator = 0
    while numerator == 0:
        numerator = rng.randint(low, high)
    return Fraction(numerator, rng.choice((1, 1, 2, 3)))


def _even_monomial(rng: random.Random, chart: Chart, degree: int) -> Expr:
    result = Expr.one(chart)
    for _ in range(rng.randint(0, degree)):
        result = result * Expr.var(chart, rng.choice(chart.even).name)
    return result


def _odd_monomials(chart: Chart, parity: Parity) -> List[Expr]:
    monomials = []
    for size in range(len(chart.odd) + 1):
        if size % 2 != parity:
            continue
        for subset in combinations(chart.odd, size):
            term = Expr.one(chart)
            for variable in subset:
                term = term * Expr.var(chart, variable.name)
            monomials.append(term)
    return monomials


def random_function(rng: random.Random, chart: Chart, degree: int = 2, terms: int = 3) -> Expr:
    """A polynomial in the even coordinates only."""
    total = Expr.zero(chart)
    for _ in range(terms):
        total = total + _even_monomial(rng, chart, degree) * random_rational(rng)
    return total


def random_polynomial(
    rng: random.Random, chart: Chart, parity: Parity = Parity.EVEN, degree: int = 2, terms: int = 3
) -> Expr:
    """A homogeneous polynomial of the given parity; may be zero only when the chart has no odd part."""
    odd_parts = _odd_monomials(chart, parity)
    if not odd_parts:
        return Expr.zero(chart)
    total = Expr.zero(chart)
    for _ in range(terms):
        total = total + _even_monomial(rng, chart, degree) * rng.choice(odd_parts) * random_rational(rng)
    return total


def random_operator(
    rng: random.Random,
    chart: Chart,
    parity: Parity = Parity.EVEN,
    order: int = 2,
    weight=0,
    terms: int = 4,
) -> DensOperator:
    """A random operator of definite parity with k + |α| ≤ order."""
    n = len(chart.variables)
    odd_positions = {i for i, v in enumerate(chart.variables) if v.is_odd}
    collected: Dict = {}
    for _ in range(terms):
        k = rng.randint(0, order)
        alpha = [0] * n
        for _ in range(rng.randint(0, order - k)):
            i = rng.randrange(n)
            if i in odd_positions and alpha[i]:
                continue
            alpha[i] += 1
        odd_count = sum(alpha[i] for i in odd_positions)
        c = random_polynomial(rng, chart, Parity((parity + odd_count) % 2), degree=1, terms=2)
        if c.is_zero_form():
            continue
        key = (k, tuple(alpha))
        collected[key] = collected[key] + c if key in collected else c
    return DensOperator(chart, weight, collected)


def random_density(rng: random.Random, chart: Chart, weight, parity: Parity = Parity.EVEN) -> Density:
    coefficient = random_polynomial(rng, chart, parity, degree=2, terms=2)
    if coefficient.is_zero_form():
        coefficient = Expr.one(chart)
    return Density.single(coefficient, weight)


def random_weight(rng: random.Random, exclude: Sequence = ()) -> Fraction:
    choices = [w for w in GENERIC_WEIGHTS if w not in exclude]
    return rng.choice(choices)


def random_weight_pairs(rng: random.Random, count: int) -> List[Tuple[Fraction, Fraction]]:
    pairs: List[Tuple[Fraction, Fraction]] = []
    while len(pairs) < count:
        lam, mu = rng.sample(GENERIC_WEIGHTS, 2)
        if lam + mu != 1 and (lam, mu) not in pairs:
            pairs.append((lam, mu))
    return pairs


def random_tensor(rng: random.Random, chart: Chart, weight=0, parity: Parity = Parity.EVEN) -> TensorDensity:
    """A supersymmetric S^{AB} with p(S^{AB}) = p(S) + p(A) + p(B)."""
    variables = chart.variables
    n = len(variables)
    zero = Expr.zero(chart)
    matrix = [[zero] * n for _ in range(n)]
    for a in range(n):
        for b in range(a, n):
            pa, pb = variables[a].parity, variables[b].parity
            if a == b and pa is Parity.ODD:
                continue
            entry = random_polynomial(rng, chart, Parity((parity + pa + pb) % 2), degree=1, terms=2)
            if a == b and parity is Parity.EVEN:
                entry = entry + Expr.constant(chart, rng.randint(1, 3))
            matrix[a][b] = entry
            matrix[b][a] = entry * ((-1) ** (pa * pb))
    return TensorDensity(chart, weight, matrix, parity)


def random_covector(rng: random.Random, chart: Chart, degree: int = 1) -> Tuple[Expr, ...]:
    """Components X_A with p(X_A) = p(A)."""
    return tuple(random_polynomial(rng, chart, v.parity, degree=degree, terms=2) for v in chart.variables)


def random_spec(rng: random.Random, chart: Chart, weight=0) -> PencilSpec:
    S = random_tensor(rng, chart, weight)
    gamma = random_covector(rng, chart)
    theta = random_polynomial(rng, chart, Parity.EVEN, degree=1, terms=2)
    return PencilSpec(S, gamma, theta)


def random_vector_field(rng: random.Random, chart: Chart) -> Tuple[Expr, ...]:
    """An even vector field: p(X^A) = p(A)."""
    return random_covector(rng, chart)


def random_metric(rng: random.Random, chart: Chart) -> Metric:
    """A symmetric polynomial metric with a positive constant on the diagonal."""
    n = len(chart.even)
    zero = Expr.zero(chart)
    matrix = [[zero] * n for _ in range(n)]
    for a in range(n):
        x = Expr.var(chart, chart.even[a].name)
        matrix[a][a] = Expr.constant(chart, rng.randint(1, 4)) + x * x * abs(random_rational(rng))
        for b in range(a + 1, n):
            entry = Expr.var(chart, chart.even[rng.randrange(n)].name) * random_rational(rng, -1, 1)
            matrix[a][b] = matrix[b][a] = entry
    return Metric(chart, matrix)


def random_volume(rng: random.Random, chart: Chart) -> Expr:
    """A positive even volume coefficient: a constant plus squares."""
    total = Expr.constant(chart, rng.randint(1, 3))
    for variable in chart.even:
        if rng.random() < 0.7:
            x = Expr.var(chart, variable.name)
            total = total + x * x * rng.randint(1, 2)
    return total


# -- coordinate changes ---------------------------------------------------------------

def triangular_diffeo(
    rng: random.Random, source: Chart, target: Chart, name: Optional[str] = None
) -> Diffeomorphism:
    """x'_i = c_i x_i + p_i(x_1, ..., x_{i−1}) on purely even charts, with its explicit inverse.

    The first coordinate is also bent by a Möbius factor so that one-dimensional
    maps are not affine.
    """
    old = [v.name for v in source.even]
    new = [v.name for v in target.even]
    n = len(old)
    zero_source, zero_target = Expr.zero(source), Expr.zero(target)
    forward: Dict[str, Expr] = {}
    inverse: Dict[str, Expr] = {}
    a = rng.randint(1, 3)
    x1, y1 = Expr.var(source, old[0]), Expr.var(target, new[0])
    # x' = x/(x + a) on x > 0, inverse x = a y/(1 − y)
    forward[new[0]] = x1 * (x1 + a).inverse()
    inverse[old[0]] = y1 * a * (Expr.one(target) - y1).inverse()
    for i in range(1, n):
        c = random_rational(rng, 1, 3)
        shift = zero_source
        for _ in range(rng.randint(1, 2)):
            j = rng.randrange(i)
            shift = shift + Expr.var(source, old[j]) * Expr.var(source, old[rng.randrange(i)]) * random_rational(rng)
        forward[new[i]] = Expr.var(source, old[i]) * c + shift
        mapping = {old[j]: inverse[old[j]] if j < i else zero_target for j in range(n)}
        inverse[old[i]] = (Expr.var(target, new[i]) - shift.substitute(mapping, target)) * (1 / c)
    return Diffeomorphism(source, target, forward, inverse, name=name or f"tri({source.name})")


def line_map(source: Chart, target: Chart, kind: str) -> Diffeomorphism:
    """One of LINE_MAPS between two line charts."""
    catalog = {entry[0]: entry for entry in LINE_MAPS}
    if kind not in catalog:
        raise KeyError(f"Unknown line map '{kind}'")
    _, forward, inverse = catalog[kind]
    x = source.variables[0].name
    y = target.variables[0].name
    forward = re.sub(r"\bx\b", x, forward)
    inverse = re.sub(r"\by\b", y, inverse)
    return Diffeomorphism(source, target, {y: parse(forward, source)}, {x: parse(inverse, target)}, name=kind)


def line_charts(count: int, prefix: str = "l") -> List[Chart]:
    """Line charts named l0, l1, ... with letters x0, x1, ..."""
    return [Chart(f"{prefix}{i}", [f"x{i}"]) for i in range(count)]


def random_line_pair(rng: random.Random, charts: Sequence[Chart]) -> Tuple[Diffeomorphism, Diffeomorphism]:
    """(f, g) with g: charts[0] → charts[1] and f: charts[1] → charts[2]."""
    g_kind, f_kind = rng.sample([entry[0] for entry in LINE_MAPS], 2)
    return line_map(charts[1], charts[2], f_kind), line_map(charts[0], charts[1], g_kind)


def darboux_chart(name: str, n: int, tag: str = "") -> Chart:
    """x1..xn | th1..thn, optionally suffixed to keep chart names apart."""
    return Chart(name, [f"x{i}{tag}" for i in range(1, n + 1)], [f"th{i}{tag}" for i in range(1, n + 1)])


def random_point_symplectomorphism(
    rng: random.Random, source: Chart, target: Chart
) -> Diffeomorphism:
    """The lift to ΠT*M of a random triangular base map."""
    base_source = Chart(source.name + "_base", [v.name for v in source.even])
    base_target = Chart(target.name + "_base", [v.name for v in target.even])
    base = triangular_diffeo(rng, base_source, base_target)
    return point_transformation(base, source, target)


def random_composed_symplectomorphism(rng: random.Random, n: int = 2, steps: int = 2) -> Diffeomorphism:
    """A composition of random point transformations of ℝ^{n|n}."""
    charts = [darboux_chart(f"D{i}", n, tag="" if i == 0 else "_" + str(i)) for i in range(steps + 1)]
    maps = [random_point_symplectomorphism(rng, charts[i], charts[i + 1]) for i in range(steps)]
    return compose_symplectic(*maps)


def random_mixing_symplectomorphism(rng: random.Random) -> Diffeomorphism:
    """The shift x' = x + ∂Ψ/∂θ with Ψ = cθ1θ2θ3 followed by a point transformation of ℝ^{3|3}.

    The point map bends x1, so its Berezinian picks up θ2θ3 once x1 is shifted.
    """
    first = darboux_chart("M0", 3)
    middle = darboux_chart("M1", 3, tag="_1")
    last = darboux_chart("M2", 3, tag="_2")
    theta = [Expr.var(first, v.name) for v in first.odd]
    psi = theta[0] * theta[1] * theta[2] * random_rational(rng)
    shift = lagrangian_shift(first, middle, psi)
    point = random_point_symplectomorphism(rng, middle, last)
    return compose_symplectic(shift, point)


def random_odd_function(rng: random.Random, chart: Chart) -> Expr:
    return random_polynomial(rng, chart, Parity.ODD, degree=2, terms=3)


def random_even_function(rng: random.Random, chart: Chart) -> Expr:
    return random_polynomial(rng, chart, Parity.EVEN, degree=2, terms=3)
