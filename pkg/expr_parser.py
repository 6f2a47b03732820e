"""
Pratt parser for the infix expression grammar.

    expr   := expr ('+'|'-') expr | expr ('*'|'/') expr | expr '^' expr
            | '-' expr | '+' expr | NUMBER | NAME | NAME '(' expr ')' | '(' expr ')'

The parser only builds an AST. Evaluation is left to visitors, so the same
grammar serves plain expressions (symexpr) and operator terms (diffops), where
`lam` and `dx` style names mean the Euler operator and partial derivatives.
"""

import logging
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Union

from errors import ExprSyntaxError

logger = logging.getLogger(__name__)

FUNCTIONS = ("exp", "log", "sqrt")

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<number>\d+(?:\.\d+)?)|(?P<name>[A-Za-z][A-Za-z0-9_]*)|(?P<op>[-+*/^(),]))"
)


@dataclass(frozen=True)
class Token:
    kind: str  # "number", "name", "op", "end"
    text: str
    position: int


@dataclass(frozen=True)
class Number:
    value: Fraction
    position: int


@dataclass(frozen=True)
class Name:
    name: str
    position: int


@dataclass(frozen=True)
class Call:
    function: str
    argument: "Node"
    position: int


@dataclass(frozen=True)
class Unary:
    op: str
    operand: "Node"
    position: int


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Node"
    right: "Node"
    position: int


Node = Union[Number, Name, Call, Unary, Binary]


def tokenize(source: str) -> List[Token]:
    tokens = []
    idx = 0
    while idx < len(source):
        if source[idx:].strip() == "":
            break
        match = _TOKEN_RE.match(source, idx)
        if not match:
            # report the first non-blank offending character
            bad = idx + len(source[idx:]) - len(source[idx:].lstrip())
            raise ExprSyntaxError(f"Unexpected character {source[bad]!r}", bad)
        kind = match.lastgroup
        start = match.start(kind)
        tokens.append(Token(kind, match.group(kind), start))
        idx = match.end()
    tokens.append(Token("end", "", len(source)))
    return tokens


# left binding powers
_INFIX = {"+": 10, "-": 10, "*": 20, "/": 20, "^": 40}
_PREFIX_BP = 30


class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.tokens = tokenize(source)
        self.index = 0

    @property
    def current(self) -> Token:
        return self.tokens[self.index]

    def advance(self, text: str = None) -> Token:
        token = self.current
        if text is not None and token.text != text:
            found = token.text or "end of input"
            raise ExprSyntaxError(f"Expected {text!r}, found {found!r}", token.position)
        self.index += 1
        return token

    def lbp(self, token: Token) -> int:
        if token.kind == "op":
            return _INFIX.get(token.text, 0)
        return 0

    def expression(self, rbp: int = 0) -> Node:
        token = self.advance()
        left = self.nud(token)
        while rbp < self.lbp(self.current):
            token = self.advance()
            left = self.led(token, left)
        return left

    def nud(self, token: Token) -> Node:
        if token.kind == "number":
            return Number(Fraction(token.text), token.position)
        if token.kind == "name":
            if self.current.text == "(":
                if token.text not in FUNCTIONS:
                    raise ExprSyntaxError(f"Unknown function '{token.text}'", token.position)
                self.advance("(")
                argument = self.expression()
                self.advance(")")
                return Call(token.text, argument, token.position)
            return Name(token.text, token.position)
        if token.text == "(":
            inner = self.expression()
            self.advance(")")
            return inner
        if token.text in ("-", "+"):
            return Unary(token.text, self.expression(_PREFIX_BP), token.position)
        found = token.text or "end of input"
        raise ExprSyntaxError(f"Unexpected {found!r}", token.position)

    def led(self, token: Token, left: Node) -> Node:
        if token.text == "^":
            # right associative, binds tighter than unary minus on its left
            right = self.expression(_INFIX["^"] - 1)
        else:
            right = self.expression(_INFIX[token.text])
        return Binary(token.text, left, right, token.position)


def parse_ast(source: str) -> Node:
    """Parse `source` into an AST, raising ExprSyntaxError with a position."""
    parser = _Parser(source)
    if parser.current.kind == "end":
        raise ExprSyntaxError("Empty expression", 0)
    node = parser.expression()
    if parser.current.kind != "end":
        raise ExprSyntaxError(f"Unexpected {parser.current.text!r}", parser.current.position)
    return node


def names_in(node: Node) -> List[str]:
    """Identifiers referenced by an AST, in first-occurrence order."""
    found: List[str] = []

    def walk(n):
        if isinstance(n, Name):
            if n.name not in found:
                found.append(n.name)
        elif isinstance(n, Call):
            walk(n.argument)
        elif isinstance(n, Unary):
            walk(n.operand)
        elif isinstance(n, Binary):
            walk(n.left)
            walk(n.right)

    walk(node)
    return found


def integer_exponent(node: Node) -> int:
    """Read an exponent that must be an integer literal, possibly signed."""
    sign = 1
    while isinstance(node, Unary):
        if node.op == "-":
            sign = -sign
        node = node.operand
    if isinstance(node, Number) and node.value.denominator == 1:
        return sign * int(node.value)
    position = getattr(node, "position", None)
    raise ExprSyntaxError("Exponent must be an integer literal", position)


class AstVisitor:
    """Dispatches on node type: subclasses implement visit_Number and friends."""

    def visit(self, node: Node):
        method = getattr(self, "visit_" + type(node).__name__)
        return method(node)
