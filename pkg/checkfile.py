"""
Parser for check files.

A check file is a UTF-8 text of declarations followed by checks, one per
line (a trailing backslash continues a line, `#` starts a comment):

    chart L even=x params=C
    diffeo m source=L target=M forward="y=(2*x+1)/(x+3)" inverse="x=(3*y-1)/(2-y)"
    check family line-family chart=L param=C expect=zero

Declarations are built as soon as they are read, so every name must be
declared before it is used. Problems are reported as CheckFileError with
the line and column of the offending token.
"""

import logging
import os
import shlex
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

from charts import Diffeomorphism, compose as compose_maps
from check_ops import OPERATIONS, split_list
from connections import VolConnection, connection_from_volume_form
from densities import Density, TensorDensity, as_weight
from diffops import parse_operator
from errors import CheckFileError, DensopsError, ExprSyntaxError
from odd_symplectic import darboux_tensor, lagrangian_shift, point_transformation
from pencils import PencilSpec, restrict
from riemann_line import Metric
from samples import line_map
from symexpr import Chart, Parity, parse

logger = logging.getLogger(__name__)

EXPECTATIONS = ("zero", "nonzero", "equal", "error")


@dataclass
class Declaration:
    kind: str
    name: str
    args: Dict[str, str]
    line: int


@dataclass
class CheckSpec:
    """One `check` line: operation, arguments and expected outcome."""

    name: str
    op: str
    args: Dict[str, str]
    expect: str
    line: int
    value: Optional[str] = None
    error: Optional[str] = None


@dataclass
class CheckFile:
    path: str
    declarations: List[Declaration] = field(default_factory=list)
    checks: List[CheckSpec] = field(default_factory=list)
    namespace: Dict[str, object] = field(default_factory=dict)


# -- line handling --------------------------------------------------------------------

def _logical_lines(text: str) -> List[Tuple[int, str]]:
    """Join backslash continuations; keep the number of the first physical line."""
    result = []
    pending, start = "", 0
    for number, raw in enumerate(text.splitlines(), start=1):
        if not pending:
            start = number
        if raw.rstrip().endswith("\\"):
            pending += raw.rstrip()[:-1] + " "
            continue
        result.append((start, pending + raw))
        pending = ""
    if pending:
        result.append((start, pending))
    return result


def _column(raw: str, token: str) -> Optional[int]:
    position = raw.find(token)
    return position + 1 if position >= 0 else None


def _split_args(tokens: List[str], raw: str, line: int) -> Dict[str, str]:
    args: Dict[str, str] = {}
    for token in tokens:
        key, sep, value = token.partition("=")
        if not sep or not key:
            raise CheckFileError(f"Expected key=value, got '{token}'", line, _column(raw, token))
        if key in args:
            raise CheckFileError(f"Argument '{key}' given twice", line, _column(raw, token))
        args[key] = value
    return args


class _LineParser:
    """Parses one file, building declared objects into the namespace as it goes."""

    def __init__(self, path: str):
        self.result = CheckFile(path)
        self.line = 0
        self.raw = ""
        self.builders: Dict[str, Callable[[Dict[str, str]], object]] = {
            "chart": self._chart,
            "expr": self._expr,
            "density": self._density,
            "tensor": self._tensor,
            "metric": self._metric,
            "connection": self._connection,
            "covector": self._covector,
            "vector": self._covector,
            "operator": self._operator,
            "diffeo": self._diffeo,
            "spec": self._spec,
        }

    # -- errors -------------------------------------------------------------------
    def error(self, message: str, token: Optional[str] = None, offset: int = 0) -> CheckFileError:
        column = _column(self.raw, token) if token else None
        if column is not None:
            column += offset
        return CheckFileError(message, self.line, column)

    def _value_column_offset(self, key: str) -> int:
        """Offset from `key=` to the first character of its value."""
        start = self.raw.find(key + "=")
        if start < 0:
            return 0
        offset = len(key) + 1
        if self.raw[start + offset:start + offset + 1] in ("'", '"'):
            offset += 1
        return offset

    # -- lookup -------------------------------------------------------------------
    def require(self, args: Dict[str, str], key: str) -> str:
        if key not in args:
            raise self.error(f"Missing argument '{key}'")
        return args[key]

    def lookup(self, args: Dict[str, str], key: str, kind: type):
        name = self.require(args, key)
        obj = self.result.namespace.get(name)
        if obj is None:
            raise self.error(f"Undeclared name '{name}'", key + "=")
        if not isinstance(obj, kind):
            raise self.error(f"'{name}' is a {type(obj).__name__}, expected {kind.__name__}", key + "=")
        return obj

    def parse_expr(self, args: Dict[str, str], key: str, chart: Chart):
        text = self.require(args, key)
        try:
            return parse(text, chart)
        except ExprSyntaxError as error:
            position = error.position or 0
            raise self.error(str(error), key + "=", self._value_column_offset(key) + position) from error

    def parse_list(self, args: Dict[str, str], key: str, chart: Chart):
        text = self.require(args, key)
        items = split_list(text)
        if items == ["0"]:
            items = ["0"] * len(chart.variables)
        return tuple(self.parse_expr({key: item}, key, chart) for item in items)

    def parse_rows(self, args: Dict[str, str], key: str, chart: Chart):
        rows = []
        for row in split_list(self.require(args, key), ";"):
            rows.append([self.parse_expr({key: entry}, key, chart) for entry in split_list(row)])
        return rows

    # -- declarations ---------------------------------------------------------------
    def _chart(self, args):
        even = split_list(self.require(args, "even"))
        odd = split_list(args.get("odd", ""))
        params = split_list(args.get("params", ""))
        return Chart(args["__name__"], even, odd, params)

    def _expr(self, args):
        return self.parse_expr(args, "value", self.lookup(args, "chart", Chart))

    def _density(self, args):
        chart = self.lookup(args, "chart", Chart)
        return Density.single(self.parse_expr(args, "value", chart), as_weight(args.get("weight", "0")))

    def _tensor(self, args):
        chart = self.lookup(args, "chart", Chart)
        if args.get("rows") == "darboux":
            return darboux_tensor(chart)
        parity = {"even": Parity.EVEN, "odd": Parity.ODD, None: None}.get(args.get("parity"), "bad")
        if parity == "bad":
            raise self.error(f"parity must be even or odd, got {args['parity']}", "parity=")
        return TensorDensity(chart, as_weight(args.get("weight", "0")), self.parse_rows(args, "rows", chart), parity)

    def _metric(self, args):
        chart = self.lookup(args, "chart", Chart)
        return Metric(chart, self.parse_rows(args, "rows", chart))

    def _connection(self, args):
        chart = self.lookup(args, "chart", Chart)
        if "volume" in args:
            return connection_from_volume_form(self.parse_expr(args, "volume", chart))
        return VolConnection(chart, self.parse_list(args, "components", chart))

    def _covector(self, args):
        return self.parse_list(args, "components", self.lookup(args, "chart", Chart))

    def _operator(self, args):
        chart = self.lookup(args, "chart", Chart)
        weight = as_weight(args.get("weight", "0"))
        text = self.require(args, "terms")
        try:
            op = parse_operator(text, chart, weight)
        except ExprSyntaxError as error:
            offset = self._value_column_offset("terms") + (error.position or 0)
            raise self.error(str(error), "terms=", offset) from error
        if "lam" in args:
            return restrict(op, as_weight(args["lam"]))
        return op

    def _mapping(self, args, key: str, chart: Chart):
        mapping = {}
        for item in split_list(self.require(args, key), ";"):
            name, sep, text = item.partition("=")
            if not sep:
                raise self.error(f"Expected name=expression in {key}, got '{item}'", key + "=")
            mapping[name.strip()] = self.parse_expr({key: text.strip()}, key, chart)
        return mapping

    def _diffeo(self, args):
        name = args["__name__"]
        if "compose" in args:
            parts = split_list(args["compose"])
            maps = [self.lookup({"compose": p}, "compose", Diffeomorphism) for p in parts]
            result = maps[-1]
            for outer in reversed(maps[:-1]):
                result = compose_maps(outer, result)
            return result
        source = self.lookup(args, "source", Chart)
        target = self.lookup(args, "target", Chart)
        if "line" in args:
            try:
                return line_map(source, target, args["line"])
            except KeyError as error:
                raise self.error(str(error), "line=") from error
        if "point" in args:
            return point_transformation(self.lookup(args, "point", Diffeomorphism), source, target)
        if "shift" in args:
            return lagrangian_shift(source, target, self.parse_expr(args, "shift", source))
        forward = self._mapping(args, "forward", source)
        inverse = self._mapping(args, "inverse", target)
        return Diffeomorphism(source, target, forward, inverse, name=name)

    def _spec(self, args):
        S = self.lookup(args, "tensor", TensorDensity)
        gamma = self.parse_list(args, "gamma", S.chart)
        theta = self.parse_expr(args, "theta", S.chart)
        return PencilSpec(S, gamma, theta)

    # -- lines ---------------------------------------------------------------------
    def feed(self, line: int, raw: str) -> None:
        self.line, self.raw = line, raw
        try:
            tokens = shlex.split(raw, comments=True, posix=True)
        except ValueError as error:
            raise CheckFileError(str(error), line) from error
        if not tokens:
            return
        keyword = tokens[0]
        if keyword == "check":
            self._check(tokens)
        elif keyword in self.builders:
            self._declaration(keyword, tokens)
        else:
            raise self.error(f"Unknown keyword '{keyword}'", keyword)

    def _claim(self, name: str) -> None:
        taken = {d.name for d in self.result.declarations} | {c.name for c in self.result.checks}
        if name in taken:
            raise self.error(f"Name '{name}' is already used", name)

    def _declaration(self, keyword: str, tokens: List[str]) -> None:
        if len(tokens) < 2 or "=" in tokens[1]:
            raise self.error(f"'{keyword}' needs a name")
        name = tokens[1]
        self._claim(name)
        args = _split_args(tokens[2:], self.raw, self.line)
        try:
            obj = self.builders[keyword](dict(args, __name__=name))
        except CheckFileError:
            raise
        except DensopsError as error:
            raise self.error(f"{keyword} {name}: {error}", name) from error
        self.result.declarations.append(Declaration(keyword, name, args, self.line))
        self.result.namespace[name] = obj
        logger.debug("Declared %s %s at line %d", keyword, name, self.line)

    def _check(self, tokens: List[str]) -> None:
        if len(tokens) < 2:
            raise self.error("check needs an operation")
        if tokens[1] in OPERATIONS and (len(tokens) == 2 or "=" in tokens[2]):
            op, rest = tokens[1], tokens[2:]
            name = f"{op}@{self.line}"
        elif len(tokens) >= 3 and "=" not in tokens[1]:
            name, op, rest = tokens[1], tokens[2], tokens[3:]
        else:
            raise self.error(f"Unknown operation '{tokens[1]}'", tokens[1])
        if op not in OPERATIONS:
            raise self.error(f"Unknown operation '{op}'", op)
        self._claim(name)
        args = _split_args(rest, self.raw, self.line)
        expect = args.pop("expect", "zero")
        if expect not in EXPECTATIONS:
            raise self.error(f"expect must be one of {', '.join(EXPECTATIONS)}", "expect=")
        value = args.pop("value", None)
        error = args.pop("error", None)
        if expect == "equal" and value is None:
            raise self.error("expect=equal needs value=", "expect=")
        for key in OPERATIONS[op].required:
            if key not in args:
                raise self.error(f"Operation '{op}' needs {key}=", op)
        self.result.checks.append(CheckSpec(name, op, args, expect, self.line, value, error))


def parse_checkfile(text: str, path: str = "<string>") -> CheckFile:
    parser = _LineParser(path)
    for line, raw in _logical_lines(text):
        parser.feed(line, raw)
    logger.info(
        "Parsed %s: %d declarations, %d checks",
        path, len(parser.result.declarations), len(parser.result.checks),
    )
    return parser.result


def load_checkfile(path: str) -> CheckFile:
    if not os.path.exists(path):
        raise CheckFileError(f"No such check file: {path}")
    with open(path, "r", encoding="utf-8") as f:
        return parse_checkfile(f.read(), path)
