"""
The algebra of densities of all weights in the t-representation.

A Density is a finite sum s_1 t^λ_1 + ... + s_k t^λ_k with distinct rational
weights; t transforms as t' = J t under a change of coordinates.
"""

import logging
from fractions import Fraction
from typing import Dict, Iterator, Mapping, Optional, Sequence, Tuple, Union

import sympy as sp

from charts import Diffeomorphism, jacobian, pushforward
from errors import ChartMismatchError, DensopsError, ParityError
from symexpr import Chart, Expr, Parity, ZeroStatus, as_sympy, parse

logger = logging.getLogger(__name__)

WeightLike = Union[int, str, Fraction, sp.Expr]


def as_weight(value: WeightLike) -> sp.Expr:
    """Weights are exact: rationals, or sympy symbols for symbolic pencils."""
    if isinstance(value, str):
        value = value.strip()
        try:
            return sp.Rational(value)
        except (TypeError, ValueError):
            return sp.sympify(value)
    if isinstance(value, float):
        raise DensopsError(f"Weights must be exact, got float {value}")
    return as_sympy(value)


class Density:
    """An element of F(M): weight -> coefficient Expr, zero coefficients pruned."""

    def __init__(self, chart: Chart, components: Optional[Mapping[WeightLike, Expr]] = None):
        self.chart = chart
        cleaned: Dict[sp.Expr, Expr] = {}
        for weight, coefficient in (components or {}).items():
            if coefficient.chart != chart:
                raise ChartMismatchError(
                    f"Density component on '{coefficient.chart.name}' added to chart '{chart.name}'"
                )
            w = as_weight(weight)
            total = cleaned[w] + coefficient if w in cleaned else coefficient
            if total.is_zero_form():
                cleaned.pop(w, None)
            else:
                cleaned[w] = total
        self._components = cleaned

    @classmethod
    def single(cls, coefficient: Expr, weight: WeightLike = 0) -> "Density":
        return cls(coefficient.chart, {weight: coefficient})

    @classmethod
    def from_text(cls, source: str, chart: Chart, weight: WeightLike = 0) -> "Density":
        return cls.single(parse(source, chart), weight)

    def components(self) -> Iterator[Tuple[sp.Expr, Expr]]:
        return iter(sorted(self._components.items(), key=lambda item: sp.default_sort_key(item[0])))

    def component(self, weight: WeightLike) -> Expr:
        return self._components.get(as_weight(weight), Expr.zero(self.chart))

    @property
    def weights(self) -> Tuple[sp.Expr, ...]:
        return tuple(w for w, _ in self.components())

    def is_homogeneous(self) -> bool:
        return len(self._components) <= 1

    @property
    def weight(self) -> sp.Expr:
        """Weight of a homogeneous density (0 for the zero density)."""
        if not self._components:
            return sp.Integer(0)
        if len(self._components) > 1:
            raise DensopsError(f"Density with weights {self.weights} has no single weight")
        return next(iter(self._components))

    @property
    def coefficient(self) -> Expr:
        if not self._components:
            return Expr.zero(self.chart)
        return self.component(self.weight)

    @property
    def parity(self) -> Optional[Parity]:
        parities = {c.parity for c in self._components.values()}
        if not parities:
            return Parity.EVEN
        return parities.pop() if len(parities) == 1 else None

    def _check_chart(self, other: "Density") -> None:
        if other.chart != self.chart:
            raise ChartMismatchError(f"Densities on '{self.chart.name}' and '{other.chart.name}'")

    def __add__(self, other: "Density") -> "Density":
        self._check_chart(other)
        merged = dict(self._components)
        for w, c in other._components.items():
            merged[w] = merged[w] + c if w in merged else c
        return Density(self.chart, merged)

    def __neg__(self) -> "Density":
        return Density(self.chart, {w: -c for w, c in self._components.items()})

    def __sub__(self, other: "Density") -> "Density":
        return self + (-other)

    def __mul__(self, other) -> "Density":
        if isinstance(other, Density):
            return multiply(self, other)
        return Density(self.chart, {w: c * other for w, c in self._components.items()})

    def zero_status(self, seed: Optional[int] = None) -> ZeroStatus:
        return ZeroStatus.combine(c.zero_status(seed=seed) for c in self._components.values())

    def equals(self, other: "Density") -> bool:
        return bool((self - other).zero_status())

    def to_text(self) -> str:
        if not self._components:
            return "0"
        return " + ".join(f"({c.to_text()})*t^({w})" for w, c in self.components())

    def __str__(self):
        return self.to_text()

    def __repr__(self):
        return f"Density({self.chart.name}: {self.to_text()})"


def multiply(a: Density, b: Density) -> Density:
    """Weights add; coefficients multiply in order (t is even, so no extra sign)."""
    a._check_chart(b)
    product: Dict[sp.Expr, Expr] = {}
    for wa, ca in a._components.items():
        for wb, cb in b._components.items():
            w = wa + wb
            term = ca * cb
            product[w] = product[w] + term if w in product else term
    return Density(a.chart, product)


def pair_integrand(a: Density, b: Density) -> Expr:
    """Integrand of the canonical scalar product: the t^1 coefficient of a·b."""
    return multiply(a, b).component(1)


def transform_density(a: Density, phi: Diffeomorphism) -> Density:
    """s(x) t^λ = s(x) J^{-λ} t'^λ, then push the coefficient to the target chart."""
    if a.chart != phi.source:
        raise ChartMismatchError(f"Density on '{a.chart.name}', map starts at '{phi.source.name}'")
    J = jacobian(phi).J
    components = {}
    for weight, coefficient in a.components():
        factor = J.power(-weight) if weight != 0 else Expr.one(a.chart)
        components[weight] = pushforward(coefficient * factor, phi)
    return Density(phi.target, components)


class TensorDensity:
    """A supersymmetric contravariant rank-2 tensor density S^{AB} of weight δ.

    The components are indexed by chart variables (even first, then odd). The
    parity p(S) is inferred from the components: p(S^{AB}) = p(S) + p(A) + p(B).
    """

    def __init__(self, chart: Chart, weight: WeightLike, matrix: Sequence[Sequence[Expr]], parity: Optional[Parity] = None):
        n = len(chart.variables)
        if len(matrix) != n or any(len(row) != n for row in matrix):
            raise DensopsError(f"Tensor on '{chart.name}' must be {n}x{n}")
        self.chart = chart
        self.weight = as_weight(weight)
        self.matrix = tuple(tuple(row) for row in matrix)
        self.parity = self._infer_parity(parity)
        self._validate()

    def _infer_parity(self, declared: Optional[Parity]) -> Parity:
        found = set()
        parities = self.chart.parities()
        for i, row in enumerate(self.matrix):
            for j, entry in enumerate(row):
                if entry.is_zero_form():
                    continue
                if entry.parity is None:
                    raise ParityError(f"Tensor component S[{i}][{j}] = {entry} has no definite parity")
                found.add((entry.parity + parities[i] + parities[j]) % 2)
        if len(found) > 1:
            raise ParityError("Tensor components have inconsistent parities")
        inferred = Parity(found.pop()) if found else None
        if declared is not None and inferred is not None and inferred is not Parity(declared):
            raise ParityError(f"Tensor declared {Parity(declared).name.lower()} but components are not")
        if inferred is not None:
            return inferred
        return Parity(declared) if declared is not None else Parity.EVEN

    def _validate(self) -> None:
        parities = self.chart.parities()
        for i in range(len(self.matrix)):
            for j in range(i, len(self.matrix)):
                sign = (-1) ** (parities[i] * parities[j])
                if not (self.matrix[i][j] - self.matrix[j][i] * sign).zero_status():
                    raise DensopsError(
                        f"Tensor is not supersymmetric at ({self.chart.variables[i].name}, "
                        f"{self.chart.variables[j].name})"
                    )

    @classmethod
    def from_rows(cls, chart: Chart, weight: WeightLike, rows: Sequence[Sequence[str]], parity: Optional[Parity] = None) -> "TensorDensity":
        return cls(chart, weight, [[parse(entry, chart) for entry in row] for row in rows], parity)

    @classmethod
    def diagonal(cls, chart: Chart, weight: WeightLike, entries: Sequence[Expr]) -> "TensorDensity":
        n = len(chart.variables)
        zero = Expr.zero(chart)
        return cls(chart, weight, [[entries[i] if i == j else zero for j in range(n)] for i in range(n)])

    def __getitem__(self, index: Tuple[int, int]) -> Expr:
        i, j = index
        return self.matrix[i][j]

    @property
    def size(self) -> int:
        return len(self.matrix)

    def contract_vector(self, covector: Sequence[Expr]) -> Tuple[Expr, ...]:
        """X^A = S^{AB} X_B."""
        return tuple(
            sum((self.matrix[a][b] * covector[b] for b in range(self.size)), Expr.zero(self.chart))
            for a in range(self.size)
        )

    def quadratic(self, left: Sequence[Expr], right: Sequence[Expr]) -> Expr:
        """X_A S^{AB} Y_B."""
        total = Expr.zero(self.chart)
        for a in range(self.size):
            for b in range(self.size):
                entry = self.matrix[a][b]
                if not entry.is_zero_form():
                    total = total + left[a] * entry * right[b]
        return total

    def __repr__(self):
        return f"TensorDensity({self.chart.name}, w={self.weight}, {self.parity.name.lower()})"
