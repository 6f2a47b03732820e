"""
Supercommutative symbolic expressions over a chart of even and odd variables.

An Expr is stored canonically as a map from odd monomials (sorted tuples of
odd-variable indices, each index at most once) to coefficients that are
sympy expressions in the even variables and parameters. Coefficients are
rational functions cancelled by sympy, possibly containing the opaque atoms
exp, log and sqrt (or rational powers of even expressions).

Odd variables anticommute; derivatives with respect to odd variables are
left derivatives.
"""

import logging
import math
import random
import re
from enum import Enum, IntEnum
from fractions import Fraction
from typing import Callable, Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import sympy as sp

from errors import (
    ChartMismatchError,
    DensopsError,
    ExprSyntaxError,
    NilpotencyError,
    NonInvertibleError,
    ParityError,
    UndeclaredIdentifierError,
)
from expr_parser import FUNCTIONS, AstVisitor, integer_exponent, parse_ast

logger = logging.getLogger(__name__)

_IDENTIFIER = re.compile(r"^[A-Za-z][A-Za-z0-9_]*$")

# identifiers with a fixed meaning in the expression and operator grammars
RESERVED_NAMES = frozenset(FUNCTIONS) | {"lam", "t"}

Scalar = Union[int, Fraction, sp.Expr]
Monomial = Tuple[int, ...]


class Parity(IntEnum):
    EVEN = 0
    ODD = 1


class Variable:
    """A chart coordinate with a fixed parity."""

    __slots__ = ("name", "parity")

    def __init__(self, name: str, parity: Parity):
        if not _IDENTIFIER.match(name):
            raise DensopsError(f"Invalid variable name '{name}'")
        self.name = name
        self.parity = Parity(parity)

    @property
    def is_odd(self) -> bool:
        return self.parity is Parity.ODD

    def __eq__(self, other):
        return isinstance(other, Variable) and (self.name, self.parity) == (other.name, other.parity)

    def __hash__(self):
        return hash((self.name, self.parity))

    def __repr__(self):
        return f"Variable({self.name!r}, {self.parity.name.lower()})"


def coordinate_symbol(name: str) -> sp.Symbol:
    # coordinates and parameters are positive, mirroring the oriented-atlas convention
    return sp.Symbol(name, positive=True)


class Chart:
    """A coordinate chart: ordered even variables, ordered odd variables, parameters.

    Parameters are even constants (zero derivative) that may appear in
    expressions, such as the constant of a family of solutions.

    Even coordinates and parameters are positive real sympy symbols, so the
    chart describes the region where they are all positive: sqrt(x^2) is x and
    log(x*y) splits. Odd coordinates are not sympy symbols at all.
    """

    def __init__(self, name: str, even: Sequence[str], odd: Sequence[str] = (), params: Sequence[str] = ()):
        if not even:
            raise DensopsError(f"Chart '{name}' needs at least one even variable")
        names = list(even) + list(odd) + list(params)
        duplicates = sorted({n for n in names if names.count(n) > 1})
        if duplicates:
            raise DensopsError(f"Chart '{name}' declares {', '.join(duplicates)} more than once")
        for n in names:
            if n in RESERVED_NAMES or (n.startswith("d") and n[1:] in names):
                raise DensopsError(f"Chart '{name}': name '{n}' is reserved or ambiguous")
        self.name = name
        self.even = tuple(Variable(n, Parity.EVEN) for n in even)
        self.odd = tuple(Variable(n, Parity.ODD) for n in odd)
        self.params = tuple(params)
        self.variables = self.even + self.odd
        self._index = {v.name: i for i, v in enumerate(self.variables)}
        self._odd_index = {v.name: i for i, v in enumerate(self.odd)}
        self._symbols = {n: coordinate_symbol(n) for n in list(even) + list(params)}

    # -- lookup -------------------------------------------------------------
    def variable(self, name: str) -> Variable:
        try:
            return self.variables[self._index[name]]
        except KeyError:
            raise UndeclaredIdentifierError(name) from None

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise UndeclaredIdentifierError(name) from None

    def odd_index(self, name: str) -> int:
        return self._odd_index[name]

    def symbol(self, name: str) -> sp.Symbol:
        try:
            return self._symbols[name]
        except KeyError:
            raise UndeclaredIdentifierError(name) from None

    def has(self, name: str) -> bool:
        return name in self._index or name in self.params

    @property
    def dimension(self) -> Tuple[int, int]:
        return len(self.even), len(self.odd)

    @property
    def is_super(self) -> bool:
        return bool(self.odd)

    @property
    def even_symbols(self) -> Tuple[sp.Symbol, ...]:
        return tuple(self._symbols[v.name] for v in self.even)

    def parities(self) -> Tuple[Parity, ...]:
        return tuple(v.parity for v in self.variables)

    def with_params(self, params: Iterable[str], name: Optional[str] = None) -> "Chart":
        merged = list(self.params) + [p for p in params if p not in self.params]
        return Chart(name or self.name, [v.name for v in self.even], [v.name for v in self.odd], merged)

    def same_layout(self, other: "Chart") -> bool:
        return [v.name for v in self.variables] == [v.name for v in other.variables]

    def __eq__(self, other):
        return (
            isinstance(other, Chart)
            and self.name == other.name
            and self.variables == other.variables
            and self.params == other.params
        )

    def __hash__(self):
        return hash((self.name, self.variables, self.params))

    def __repr__(self):
        dims = "%d|%d" % self.dimension
        return f"Chart({self.name!r}, {dims}, {[v.name for v in self.variables]})"


def as_sympy(value: Scalar) -> sp.Expr:
    if isinstance(value, Fraction):
        return sp.Rational(value.numerator, value.denominator)
    if isinstance(value, str):
        return sp.Rational(value)
    return sp.sympify(value)


_TRANSCENDENTAL = (sp.exp, sp.log)


def _has_atoms(c: sp.Expr) -> bool:
    if c.has(*_TRANSCENDENTAL):
        return True
    return any(not p.exp.is_Integer for p in c.atoms(sp.Pow))


def canonical_coefficient(c) -> sp.Expr:
    """Canonical form of an even coefficient: cancelled rational function."""
    c = as_sympy(c)
    if c.is_Rational:
        return c
    if c.has(sp.exp):
        c = sp.powsimp(c, combine="exp")
    return sp.cancel(c)


def _merge(left: Monomial, right: Monomial) -> Optional[Tuple[int, Monomial]]:
    """Product of two sorted odd monomials: (sign, monomial) or None when it vanishes."""
    if not left:
        return 1, right
    if not right:
        return 1, left
    if set(left) & set(right):
        return None
    swaps = sum(1 for i in left for j in right if j < i)
    return (-1) ** swaps, tuple(sorted(left + right))


class ZeroStatus(Enum):
    ZERO = "zero"
    PROBABLY_ZERO = "probably-zero"
    NONZERO = "nonzero"

    def __bool__(self):
        return self is not ZeroStatus.NONZERO

    @staticmethod
    def combine(statuses: Iterable["ZeroStatus"]) -> "ZeroStatus":
        result = ZeroStatus.ZERO
        for status in statuses:
            if status is ZeroStatus.NONZERO:
                return status
            if status is ZeroStatus.PROBABLY_ZERO:
                result = status
        return result


DEFAULT_ZERO_SAMPLES = 16
_default_seed = 0


def set_default_seed(seed: int) -> None:
    """Seed used by randomized zero tests when no seed is passed explicitly."""
    global _default_seed
    _default_seed = seed


def default_seed() -> int:
    return _default_seed


class Expr:
    """An immutable canonical supercommutative expression on a chart."""

    __slots__ = ("chart", "_terms", "_hash")

    def __init__(self, chart: Chart, terms: Optional[Mapping[Monomial, Scalar]] = None, _canonical: bool = False):
        self.chart = chart
        cleaned: Dict[Monomial, sp.Expr] = {}
        for key, coefficient in (terms or {}).items():
            c = coefficient if _canonical else canonical_coefficient(coefficient)
            if c != 0:
                cleaned[tuple(key)] = c
        self._terms = cleaned
        self._hash = None

    # -- constructors ---------------------------------------------------------
    @classmethod
    def constant(cls, chart: Chart, value: Scalar) -> "Expr":
        return cls(chart, {(): value})

    @classmethod
    def zero(cls, chart: Chart) -> "Expr":
        return cls(chart, {})

    @classmethod
    def one(cls, chart: Chart) -> "Expr":
        return cls(chart, {(): sp.Integer(1)}, _canonical=True)

    @classmethod
    def var(cls, chart: Chart, name: str) -> "Expr":
        if name in chart.params:
            return cls(chart, {(): chart.symbol(name)}, _canonical=True)
        variable = chart.variable(name)
        if variable.is_odd:
            return cls(chart, {(chart.odd_index(name),): sp.Integer(1)}, _canonical=True)
        return cls(chart, {(): chart.symbol(name)}, _canonical=True)

    @classmethod
    def from_sympy(cls, chart: Chart, value: Scalar) -> "Expr":
        return cls(chart, {(): value})

    def _new(self, terms: Dict[Monomial, sp.Expr], canonical: bool = False) -> "Expr":
        return Expr(self.chart, terms, _canonical=canonical)

    # -- structure -------------------------------------------------------------
    def terms(self) -> Iterator[Tuple[Monomial, sp.Expr]]:
        return iter(sorted(self._terms.items(), key=lambda item: (len(item[0]), item[0])))

    def coefficient(self, monomial: Monomial = ()) -> sp.Expr:
        return self._terms.get(tuple(monomial), sp.Integer(0))

    @property
    def body(self) -> sp.Expr:
        return self.coefficient(())

    @property
    def soul(self) -> "Expr":
        return self._new({k: c for k, c in self._terms.items() if k}, canonical=True)

    def is_zero_form(self) -> bool:
        """True when the canonical form is literally 0."""
        return not self._terms

    @property
    def parity(self) -> Optional[Parity]:
        parities = {len(k) % 2 for k in self._terms}
        if not parities:
            return Parity.EVEN
        if len(parities) == 1:
            return Parity(parities.pop())
        return None

    def is_homogeneous(self) -> bool:
        return self.parity is not None

    def even_part(self) -> "Expr":
        return self._new({k: c for k, c in self._terms.items() if len(k) % 2 == 0}, canonical=True)

    def odd_part(self) -> "Expr":
        return self._new({k: c for k, c in self._terms.items() if len(k) % 2 == 1}, canonical=True)

    def homogeneous_parts(self) -> List[Tuple[Parity, "Expr"]]:
        parts = []
        for parity, part in ((Parity.EVEN, self.even_part()), (Parity.ODD, self.odd_part())):
            if not part.is_zero_form():
                parts.append((parity, part))
        return parts

    def is_constant(self) -> bool:
        return set(self._terms) <= {()} and not (self.body.free_symbols & set(self.chart.even_symbols))

    def free_symbols(self) -> set:
        symbols = set()
        for c in self._terms.values():
            symbols |= c.free_symbols
        return symbols

    def _check_chart(self, other: "Expr") -> None:
        if other.chart != self.chart:
            raise ChartMismatchError(
                f"Expression on chart '{other.chart.name}' combined with chart '{self.chart.name}'"
            )

    def _coerce(self, other) -> "Expr":
        if isinstance(other, Expr):
            self._check_chart(other)
            return other
        return Expr.constant(self.chart, other)

    # -- arithmetic -------------------------------------------------------------
    def __add__(self, other) -> "Expr":
        other = self._coerce(other)
        terms = dict(self._terms)
        for key, c in other._terms.items():
            terms[key] = canonical_coefficient(terms[key] + c) if key in terms else c
        return self._new(terms, canonical=True)

    __radd__ = __add__

    def __neg__(self) -> "Expr":
        return self._new({k: -c for k, c in self._terms.items()}, canonical=True)

    def __sub__(self, other) -> "Expr":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "Expr":
        return self._coerce(other) - self

    def __mul__(self, other) -> "Expr":
        if not isinstance(other, Expr):
            factor = as_sympy(other)
            return self._new({k: c * factor for k, c in self._terms.items()})
        self._check_chart(other)
        terms: Dict[Monomial, sp.Expr] = {}
        for k1, c1 in self._terms.items():
            for k2, c2 in other._terms.items():
                merged = _merge(k1, k2)
                if merged is None:
                    continue
                sign, key = merged
                terms[key] = terms.get(key, 0) + sign * c1 * c2
        return self._new(terms)

    def __rmul__(self, other) -> "Expr":
        # scalars are even, so they commute with everything
        return self * other

    def __truediv__(self, other) -> "Expr":
        if not isinstance(other, Expr):
            return self * (1 / as_sympy(other))
        return self * other.inverse()

    def __rtruediv__(self, other) -> "Expr":
        return Expr.constant(self.chart, other) * self.inverse()

    def __pow__(self, exponent) -> "Expr":
        return self.power(exponent)

    def power(self, exponent: Scalar) -> "Expr":
        q = as_sympy(exponent)
        if q.is_Integer:
            n = int(q)
            if n < 0:
                return self.inverse().power(-n)
            if self.parity is Parity.ODD and n >= 2:
                return Expr.zero(self.chart)
            result = Expr.one(self.chart)
            base = self
            while n:
                if n & 1:
                    result = result * base
                base = base * base
                n >>= 1
            return result
        self._require_even("power")
        if self.body == 0:
            raise NonInvertibleError(f"Non-integer power of an expression with zero body: {self}")
        return self.apply_function(lambda u: u ** q)

    def _require_even(self, what: str) -> None:
        if self.odd_part().is_zero_form():
            return
        raise ParityError(f"{what} is only defined for even expressions, got {self}")

    def apply_function(self, f: Callable[[sp.Expr], sp.Expr]) -> "Expr":
        """f(b + n) = sum_k f^(k)(b) n^k / k!, terminating because n is nilpotent."""
        self._require_even("function application")
        u = sp.Dummy("u", positive=True)
        fu = f(u)
        body = self.body
        nil = self.soul
        result = Expr.from_sympy(self.chart, fu.xreplace({u: body}))
        power = Expr.one(self.chart)
        k = 0
        derivative = fu
        while True:
            power = power * nil
            if power.is_zero_form():
                break
            k += 1
            derivative = sp.diff(derivative, u)
            factor = derivative.xreplace({u: body}) / math.factorial(k)
            result = result + power * factor
        return result

    def inverse(self) -> "Expr":
        self._require_even("inverse")
        if self.body == 0:
            raise NonInvertibleError(f"Expression {self} is not invertible (zero body)")
        if not self.soul._terms:
            return Expr.from_sympy(self.chart, 1 / self.body)
        return self.apply_function(lambda u: 1 / u)

    def exp(self) -> "Expr":
        return self.apply_function(sp.exp)

    def log(self) -> "Expr":
        if self.body == 0:
            raise NonInvertibleError(f"log of an expression with zero body: {self}")
        return self.apply_function(sp.log)

    def sqrt(self) -> "Expr":
        if self.body == 0:
            raise NonInvertibleError(f"sqrt of an expression with zero body: {self}")
        return self.apply_function(sp.sqrt)

    # -- calculus ---------------------------------------------------------------
    def diff(self, name: str) -> "Expr":
        """Left partial derivative with respect to a chart variable."""
        variable = self.chart.variable(name)
        if not variable.is_odd:
            symbol = self.chart.symbol(name)
            return self._new({k: sp.diff(c, symbol) for k, c in self._terms.items()})
        i = self.chart.odd_index(name)
        terms = {}
        for key, c in self._terms.items():
            if i in key:
                position = key.index(i)
                new_key = key[:position] + key[position + 1:]
                terms[new_key] = (-1) ** position * c
        return self._new(terms, canonical=True)

    def right_diff(self, name: str) -> "Expr":
        """Right partial derivative: e·(d/dv) acting from the right."""
        variable = self.chart.variable(name)
        if not variable.is_odd:
            return self.diff(name)
        i = self.chart.odd_index(name)
        terms = {}
        for key, c in self._terms.items():
            if i in key:
                position = key.index(i)
                new_key = key[:position] + key[position + 1:]
                terms[new_key] = (-1) ** (len(key) - 1 - position) * c
        return self._new(terms, canonical=True)

    # -- substitution -----------------------------------------------------------
    def substitute(self, mapping: Mapping[str, "Expr"], chart: Optional[Chart] = None) -> "Expr":
        """Simultaneously replace variables by expressions living on `chart`.

        Variables missing from `mapping` map to the same-named variable of the
        target chart. Parameters are kept as they are.
        """
        target = chart or self.chart
        images: Dict[str, Expr] = {}
        for variable in self.chart.variables:
            if variable.name in mapping:
                image = mapping[variable.name]
                if image.chart != target:
                    raise ChartMismatchError(
                        f"Image of '{variable.name}' lives on '{image.chart.name}', expected '{target.name}'"
                    )
                if image.parity not in (variable.parity,) and not image.is_zero_form():
                    raise ParityError(f"Substituting {image} for {variable.name} breaks parity")
            elif target.has(variable.name) and target.variable(variable.name).parity is variable.parity:
                image = Expr.var(target, variable.name)
            else:
                raise ChartMismatchError(f"No image for variable '{variable.name}' in chart '{target.name}'")
            images[variable.name] = image

        even_images = {self.chart.symbol(v.name): images[v.name] for v in self.chart.even}
        nilpotent = any(not image.soul.is_zero_form() for image in even_images.values())
        result = Expr.zero(target)
        for key, c in self._terms.items():
            if nilpotent:
                value = _taylor_substitute(c, even_images, target)
            else:
                value = Expr.from_sympy(target, c.xreplace({s: e.body for s, e in even_images.items()}))
            for i in key:
                value = value * images[self.chart.odd[i].name]
            result = result + value
        return result

    def rechart(self, chart: Chart) -> "Expr":
        """The same expression on a chart with identical variables."""
        if not chart.same_layout(self.chart):
            raise ChartMismatchError(f"Charts '{self.chart.name}' and '{chart.name}' differ in variables")
        return Expr(chart, self._terms, _canonical=True)

    # -- comparison -------------------------------------------------------------
    def zero_status(self, seed: Optional[int] = None, samples: int = DEFAULT_ZERO_SAMPLES) -> ZeroStatus:
        return zero_status(self, seed=seed, samples=samples)

    def equals(self, other) -> bool:
        return bool(zero_status(self - self._coerce(other)))

    def __eq__(self, other):
        if isinstance(other, Expr):
            return self.chart == other.chart and self._terms == other._terms
        if isinstance(other, (int, Fraction, sp.Expr)):
            return self == Expr.constant(self.chart, other)
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.chart, frozenset(self._terms.items())))
        return self._hash

    # -- printing ---------------------------------------------------------------
    def to_text(self) -> str:
        if not self._terms:
            return "0"
        pieces = []
        for key, c in self.terms():
            odd_names = "*".join(self.chart.odd[i].name for i in key)
            coefficient = _sympy_text(c)
            if not key:
                pieces.append(coefficient)
            elif c == 1:
                pieces.append(odd_names)
            elif c == -1:
                pieces.append("-" + odd_names)
            else:
                pieces.append(f"({coefficient})*{odd_names}")
        return " + ".join(pieces)

    def __str__(self):
        return self.to_text()

    def __repr__(self):
        return f"Expr({self.chart.name}: {self.to_text()})"


def _sympy_text(c: sp.Expr) -> str:
    return sp.sstr(c, order="lex").replace("**", "^")


def _taylor_substitute(c: sp.Expr, images: Mapping[sp.Symbol, Expr], target: Chart) -> Expr:
    """Substitute even symbols by body + nilpotent expressions in a coefficient."""
    dummies = {s: sp.Dummy(s.name, positive=True) for s in images}
    partial: List[Tuple[sp.Expr, Expr]] = [(c.xreplace(dummies), Expr.one(target))]
    for symbol, image in images.items():
        dummy = dummies[symbol]
        body, nil = image.body, image.soul
        expanded = []
        for expression, factor in partial:
            k = 0
            derivative = expression
            power = Expr.one(target)
            while True:
                expanded.append((derivative.xreplace({dummy: body}) / math.factorial(k), factor * power))
                power = power * nil
                if power.is_zero_form() or not derivative.has(dummy):
                    break
                derivative = sp.diff(derivative, dummy)
                k += 1
        partial = expanded
    result = Expr.zero(target)
    for expression, factor in partial:
        if expression != 0 and not factor.is_zero_form():
            result = result + factor * expression
    return result


def zero_status(e: Expr, seed: Optional[int] = None, samples: int = DEFAULT_ZERO_SAMPLES) -> ZeroStatus:
    """Decide whether `e` is zero.

    A canonical rational-function coefficient is zero exactly when it cancels
    to 0. Coefficients carrying exp/log/sqrt atoms are simplified and, if that
    is inconclusive, evaluated at random positive rational points; agreement at
    every point gives PROBABLY_ZERO.
    """
    statuses = []
    for key, c in e._terms.items():
        if not _has_atoms(c):
            if sp.cancel(c) == 0:
                statuses.append(ZeroStatus.ZERO)
                continue
            return ZeroStatus.NONZERO
        statuses.append(_atom_zero_status(c, seed, samples))
        if statuses[-1] is ZeroStatus.NONZERO:
            return ZeroStatus.NONZERO
    return ZeroStatus.combine(statuses)


def _atom_zero_status(c: sp.Expr, seed: Optional[int], samples: int) -> ZeroStatus:
    simplified = sp.simplify(sp.expand_log(sp.powsimp(c), force=True))
    if simplified == 0:
        return ZeroStatus.ZERO
    if not _has_atoms(simplified):
        return ZeroStatus.ZERO if sp.cancel(simplified) == 0 else ZeroStatus.NONZERO
    seed = _default_seed if seed is None else seed
    rng = random.Random(seed)
    symbols = sorted(simplified.free_symbols, key=lambda s: s.name)
    evaluated = 0
    attempts = 0
    while evaluated < samples and attempts < 4 * samples:
        attempts += 1
        point = {s: sp.Rational(rng.randint(1, 97), rng.randint(1, 13)) for s in symbols}
        value = simplified.xreplace(point).evalf(40)
        if not value.is_number or value.has(sp.zoo, sp.nan, sp.oo):
            continue
        evaluated += 1
        if abs(complex(value)) > 1e-25:
            return ZeroStatus.NONZERO
    if evaluated < samples:
        logger.warning("Only %d of %d sample points were usable (seed %s)", evaluated, samples, seed)
    logger.info("Expression judged probably zero after %d random evaluations (seed %s)", evaluated, seed)
    return ZeroStatus.PROBABLY_ZERO


def is_zero(e: Expr, seed: Optional[int] = None) -> bool:
    """True for a zero or probably-zero expression; use zero_status to tell them apart."""
    return bool(zero_status(e, seed=seed))


class _ExprBuilder(AstVisitor):
    def __init__(self, chart: Chart):
        self.chart = chart

    def visit_Number(self, node):
        return Expr.constant(self.chart, node.value)

    def visit_Name(self, node):
        if not self.chart.has(node.name):
            raise UndeclaredIdentifierError(node.name, node.position)
        return Expr.var(self.chart, node.name)

    def visit_Call(self, node):
        argument = self.visit(node.argument)
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
            if left.parity is Parity.ODD and n >= 2:
                raise NilpotencyError(f"Odd expression raised to power {n} at position {node.position}")
            return left.power(n)
        right = self.visit(node.right)
        if node.op == "+":
            return left + right
        if node.op == "-":
            return left - right
        if node.op == "*":
            return left * right
        if right.parity is not Parity.EVEN:
            raise ExprSyntaxError("Division by a non-even expression", node.position)
        return left / right


def parse(source: str, chart: Chart) -> Expr:
    """Parse infix text into a canonical Expr on `chart`."""
    logger.debug("Parsing %r on chart %s", source, chart.name)
    return _ExprBuilder(chart).visit(parse_ast(source))


def variables_of(chart: Chart) -> List[Expr]:
    return [Expr.var(chart, v.name) for v in chart.variables]
