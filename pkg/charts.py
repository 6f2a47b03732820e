"""
Diffeomorphisms between charts, super-Jacobians, Berezinians and the
pushforward/pullback of expressions.

A Diffeomorphism carries both the forward map (target coordinates as
expressions on the source chart) and a user-supplied inverse; the two are
checked against each other when the map is built.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from errors import ChartMismatchError, DiffeomorphismError, NonInvertibleError, ParityError
from symexpr import Chart, Expr, Parity, ZeroStatus, parse

logger = logging.getLogger(__name__)

Matrix = Tuple[Tuple[Expr, ...], ...]

__all__ = [
    "Chart",
    "Diffeomorphism",
    "JacobianData",
    "berezinian",
    "compose",
    "determinant",
    "identity",
    "jacobian",
    "matrix_inverse",
    "pullback",
    "pushforward",
    "relabel",
]


class Diffeomorphism:
    """A change of coordinates source -> target with an explicit inverse.

    Args:
        source: chart of the old coordinates
        target: chart of the new coordinates
        forward: new coordinate name -> Expr on the source chart
        inverse: old coordinate name -> Expr on the target chart
        verify: check forward∘inverse and inverse∘forward symbolically
    """

    def __init__(
        self,
        source: Chart,
        target: Chart,
        forward: Mapping[str, Expr],
        inverse: Mapping[str, Expr],
        name: Optional[str] = None,
        verify: bool = True,
    ):
        self.source = source
        self.target = target
        self.name = name or f"{source.name}->{target.name}"
        if source.dimension != target.dimension:
            raise DiffeomorphismError(
                f"{self.name}: dimensions {source.dimension} and {target.dimension} differ"
            )
        self.forward = self._complete(forward, target, source, "forward")
        self.inverse = self._complete(inverse, source, target, "inverse")
        if verify:
            self._verify()

    def _complete(self, mapping: Mapping[str, Expr], keys: Chart, values: Chart, label: str) -> Dict[str, Expr]:
        result = {}
        for variable in keys.variables:
            if variable.name not in mapping:
                raise DiffeomorphismError(f"{self.name}: {label} map has no entry for '{variable.name}'")
            image = mapping[variable.name]
            if image.chart != values:
                raise ChartMismatchError(
                    f"{self.name}: {label} image of '{variable.name}' is on chart '{image.chart.name}'"
                )
            if image.parity is not variable.parity:
                raise ParityError(
                    f"{self.name}: {label} image of {variable.parity.name.lower()} '{variable.name}' is {image}"
                )
            result[variable.name] = image
        extra = set(mapping) - {v.name for v in keys.variables}
        if extra:
            raise DiffeomorphismError(f"{self.name}: {label} map names unknown coordinates {sorted(extra)}")
        return result

    def _verify(self) -> None:
        statuses = []
        for name, image in self.forward.items():
            round_trip = image.substitute(self.inverse, self.target) - Expr.var(self.target, name)
            statuses.append(round_trip.zero_status())
        for name, image in self.inverse.items():
            round_trip = image.substitute(self.forward, self.source) - Expr.var(self.source, name)
            statuses.append(round_trip.zero_status())
        status = ZeroStatus.combine(statuses)
        if status is ZeroStatus.NONZERO:
            raise DiffeomorphismError(f"{self.name}: forward and inverse maps are not mutually inverse")
        logger.debug("Diffeomorphism %s verified (%s)", self.name, status.value)

    @classmethod
    def from_text(
        cls,
        source: Chart,
        target: Chart,
        forward: Mapping[str, str],
        inverse: Mapping[str, str],
        name: Optional[str] = None,
    ) -> "Diffeomorphism":
        return cls(
            source,
            target,
            {k: parse(v, source) for k, v in forward.items()},
            {k: parse(v, target) for k, v in inverse.items()},
            name=name,
        )

    def inverted(self) -> "Diffeomorphism":
        return Diffeomorphism(
            self.target, self.source, self.inverse, self.forward, name=f"({self.name})^-1", verify=False
        )

    def __repr__(self):
        return f"Diffeomorphism({self.name})"


def relabel(chart: Chart, name: str) -> Chart:
    return Chart(name, [v.name for v in chart.even], [v.name for v in chart.odd], chart.params)


def identity(chart: Chart, target: Optional[Chart] = None) -> Diffeomorphism:
    target = target or chart
    if not target.same_layout(chart):
        raise ChartMismatchError(f"Identity needs charts with the same coordinates: {chart} vs {target}")
    forward = {v.name: Expr.var(chart, v.name) for v in target.variables}
    inverse = {v.name: Expr.var(target, v.name) for v in chart.variables}
    return Diffeomorphism(chart, target, forward, inverse, name=f"id({chart.name})", verify=False)


def compose(outer: Diffeomorphism, inner: Diffeomorphism) -> Diffeomorphism:
    """outer∘inner: apply inner first."""
    if inner.target != outer.source:
        raise ChartMismatchError(f"Cannot compose {outer.name} after {inner.name}")
    forward = {k: e.substitute(inner.forward, inner.source) for k, e in outer.forward.items()}
    inverse = {k: e.substitute(outer.inverse, outer.target) for k, e in inner.inverse.items()}
    return Diffeomorphism(
        inner.source, outer.target, forward, inverse, name=f"{outer.name}∘{inner.name}", verify=False
    )


def pushforward(e: Expr, phi: Diffeomorphism) -> Expr:
    """Express a function of the source coordinates in the target coordinates."""
    if e.chart != phi.source:
        raise ChartMismatchError(f"Expression lives on '{e.chart.name}', map starts at '{phi.source.name}'")
    return e.substitute(phi.inverse, phi.target)


def pullback(e: Expr, phi: Diffeomorphism) -> Expr:
    """Express a function of the target coordinates in the source coordinates."""
    if e.chart != phi.target:
        raise ChartMismatchError(f"Expression lives on '{e.chart.name}', map ends at '{phi.target.name}'")
    return e.substitute(phi.forward, phi.source)


# -- supermatrices ---------------------------------------------------------------

def determinant(matrix: Sequence[Sequence[Expr]]) -> Expr:
    """Determinant of a square matrix with even entries (Laplace expansion)."""
    n = len(matrix)
    if n == 1:
        return matrix[0][0]
    if n == 2:
        return matrix[0][0] * matrix[1][1] - matrix[0][1] * matrix[1][0]
    total = None
    for j in range(n):
        if matrix[0][j].is_zero_form():
            continue
        minor = [row[:j] + row[j + 1:] for row in matrix[1:]]
        term = matrix[0][j] * determinant(minor)
        term = term if j % 2 == 0 else -term
        total = term if total is None else total + term
    if total is None:
        return Expr.zero(matrix[0][0].chart)
    return total


def matrix_inverse(matrix: Sequence[Sequence[Expr]]) -> List[List[Expr]]:
    """Inverse of a square matrix with even entries, via the adjugate."""
    n = len(matrix)
    det = determinant(matrix)
    if det.body == 0:
        raise NonInvertibleError("Matrix with degenerate even part is not invertible")
    det_inv = det.inverse()
    if n == 1:
        return [[det_inv]]
    inverse = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [row[:j] + row[j + 1:] for k, row in enumerate(matrix) if k != i]
            cofactor = determinant(minor)
            inverse[j][i] = (cofactor if (i + j) % 2 == 0 else -cofactor) * det_inv
    return inverse


def _matmul(left: Sequence[Sequence[Expr]], right: Sequence[Sequence[Expr]]) -> List[List[Expr]]:
    rows, inner, cols = len(left), len(right), len(right[0])
    result = []
    for i in range(rows):
        row = []
        for j in range(cols):
            entry = left[i][0] * right[0][j]
            for k in range(1, inner):
                entry = entry + left[i][k] * right[k][j]
            row.append(entry)
        result.append(row)
    return result


def berezinian(matrix: Sequence[Sequence[Expr]], even_rows: int, even_cols: Optional[int] = None) -> Expr:
    """Ber [[A, B], [C, D]] = det(A − B D⁻¹ C) / det D for an even supermatrix.

    Rows and columns are ordered even coordinates first; `even_rows` and
    `even_cols` give the size of the even blocks.
    """
    even_cols = even_rows if even_cols is None else even_cols
    a = [list(row[:even_cols]) for row in matrix[:even_rows]]
    if len(matrix) == even_rows:
        return determinant(a)
    b = [list(row[even_cols:]) for row in matrix[:even_rows]]
    c = [list(row[:even_cols]) for row in matrix[even_rows:]]
    d = [list(row[even_cols:]) for row in matrix[even_rows:]]
    det_d = determinant(d)
    if det_d.body == 0:
        raise NonInvertibleError("Odd-odd block of the supermatrix is not invertible")
    if not a:
        return det_d.inverse()
    correction = _matmul(_matmul(b, matrix_inverse(d)), c)
    schur = [[a[i][j] - correction[i][j] for j in range(even_cols)] for i in range(even_rows)]
    return determinant(schur) * det_d.inverse()


@dataclass(frozen=True)
class JacobianData:
    """Super-Jacobian of a diffeomorphism.

    matrix[i][j] is the right derivative of the i-th target coordinate with
    respect to the j-th source coordinate; J is its determinant or Berezinian,
    a function on the source chart.
    """

    matrix: Matrix
    J: Expr

    def log_derivative(self, name: str) -> Expr:
        """∂_name log J = (∂_name J)/J."""
        return self.J.diff(name) * self.J.inverse()


def jacobian(phi: Diffeomorphism) -> JacobianData:
    rows = []
    for target_variable in phi.target.variables:
        image = phi.forward[target_variable.name]
        rows.append(tuple(image.right_diff(v.name) for v in phi.source.variables))
    matrix = tuple(rows)
    even = len(phi.source.even)
    J = berezinian(matrix, even)
    if J.body == 0:
        raise NonInvertibleError(f"{phi.name}: Jacobian is not invertible")
    return JacobianData(matrix, J)