"""Coordinate expression language used by atlas data files.

Grammar (whitespace insensitive)::

    expr   := term (('+'|'-') term)*
    term   := factor ('*' factor)*
    factor := NUMBER | 'U' | ('GetX'|'GetY') '(' REF ')' | '(' expr ')' | '-' factor
    REF    := 'M_HAIRLINE' | 'M' digits | CHANNEL digits ('.L'|'.R')?

`U` is the unit cun. `M<idx>` addresses a face-mesh vertex directly;
`M_HAIRLINE` is the runtime-resolved anterior-hairline point, so the channel
letter M is reserved and cannot name atlas points. Point references may carry
an explicit side qualifier (`RHD3.L`); unqualified references to symmetric
points bind to the side being evaluated.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Optional, Union

from .errors import ExpressionSyntaxError, UnknownFunctionError

MESH_VERTEX_COUNT = 468


class Axis(str, Enum):
    X = "X"
    Y = "Y"


class Side(str, Enum):
    CENTER = "C"
    LEFT = "L"
    RIGHT = "R"


_POINT_ID_RE = re.compile(r"^([A-Z]{1,4})([0-9]+)$")


@dataclass(frozen=True, order=True)
class PointId:
    """Channel code plus index, rendered like ``ST2`` or ``RHD1``."""

    channel: str
    index: int

    def __str__(self) -> str:
        return f"{self.channel}{self.index}"

    @classmethod
    def parse(cls, text: str) -> "PointId":
        m = _POINT_ID_RE.match(text)
        if not m:
            raise ValueError(f"not a point id: {text!r}")
        channel, index = m.group(1), int(m.group(2))
        if channel == "M":
            raise ValueError("channel letter M is reserved for mesh references")
        if index < 1:
            raise ValueError(f"point index must be >= 1: {text!r}")
        return cls(channel, index)


# ---------------------------------------------------------------------------
# References and AST nodes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MeshRef:
    """A face-mesh vertex, addressed by index."""

    index: int

    def __str__(self) -> str:
        return f"M{self.index}"


@dataclass(frozen=True)
class HairlineRef:
    """The anterior-hairline point the runtime extracts per frame."""

    def __str__(self) -> str:
        return "M_HAIRLINE"


@dataclass(frozen=True)
class PointRef:
    point: PointId
    side: Optional[Side] = None  # explicit .L / .R, else None

    def __str__(self) -> str:
        if self.side is None:
            return str(self.point)
        return f"{self.point}.{self.side.value}"


Ref = Union[MeshRef, HairlineRef, PointRef]


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Cun:
    """The literal ``U``."""


@dataclass(frozen=True)
class Coord:
    axis: Axis
    ref: Ref


@dataclass(frozen=True)
class Neg:
    operand: "PositionExpr"


@dataclass(frozen=True)
class Add:
    left: "PositionExpr"
    right: "PositionExpr"


@dataclass(frozen=True)
class Sub:
    left: "PositionExpr"
    right: "PositionExpr"


@dataclass(frozen=True)
class Mul:
    left: "PositionExpr"
    right: "PositionExpr"


PositionExpr = Union[Num, Cun, Coord, Neg, Add, Sub, Mul]


# ---------------------------------------------------------------------------
# Tokenizer
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<num>(?:[0-9]+\.?[0-9]*|\.[0-9]+)(?:[eE][+-]?[0-9]+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*(?:\.[A-Za-z]+)?)
  | (?P<op>[+\-*()])
  | (?P<ws>\s+)
    """,
    re.VERBOSE,
)

_FACTOR_EXPECTED = frozenset({"number", "U", "GetX", "GetY", "(", "-"})


@dataclass(frozen=True)
class _Token:
    kind: str  # 'num' | 'ident' | '+', '-', '*', '(', ')' | 'end'
    text: str
    offset: int


def _tokenize(src: str) -> list[_Token]:
    tokens: list[_Token] = []
    pos = 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if not m:
            raise ExpressionSyntaxError(
                f"unexpected character {src[pos]!r}", pos, _FACTOR_EXPECTED
            )
        if m.lastgroup != "ws":
            kind = m.lastgroup if m.lastgroup != "op" else m.group()
            tokens.append(_Token(kind, m.group(), pos))
        pos = m.end()
    tokens.append(_Token("end", "", len(src)))
    return tokens


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

_MESH_REF_RE = re.compile(r"^M([0-9]+)$")
_SIDED_REF_RE = re.compile(r"^([A-Z]{1,4})([0-9]+)(?:\.(L|R))?$")


class _Parser:
    def __init__(self, src: str):
        self.src = src
        self.tokens = _tokenize(src)
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def fail(self, message: str, expected: frozenset[str]) -> None:
        tok = self.peek()
        found = tok.text or "end of input"
        raise ExpressionSyntaxError(f"{message}, found {found!r}", tok.offset, expected)

    def expect(self, kind: str) -> _Token:
        tok = self.peek()
        if tok.kind != kind:
            self.fail(f"expected {kind!r}", frozenset({kind}))
        return self.advance()

    def parse(self) -> PositionExpr:
        e = self.expr()
        if self.peek().kind != "end":
            self.fail("trailing input after expression", frozenset({"+", "-", "*", "end"}))
        return e

    def expr(self) -> PositionExpr:
        node = self.term()
        while self.peek().kind in ("+", "-"):
            op = self.advance()
            rhs = self.term()
            node = Add(node, rhs) if op.kind == "+" else Sub(node, rhs)
        return node

    def term(self) -> PositionExpr:
        node = self.factor()
        while self.peek().kind == "*":
            self.advance()
            node = Mul(node, self.factor())
        return node

    def factor(self) -> PositionExpr:
        tok = self.peek()
        if tok.kind == "num":
            self.advance()
            value = float(tok.text)
            if math.isinf(value):
                raise ExpressionSyntaxError(
                    f"number literal out of range: {tok.text}", tok.offset,
                    frozenset({"number"}),
                )
            return Num(value)
        if tok.kind == "-":
            self.advance()
            return Neg(self.factor())
        if tok.kind == "(":
            self.advance()
            inner = self.expr()
            self.expect(")")
            return inner
        if tok.kind == "ident":
            self.advance()
            if tok.text == "U":
                return Cun()
            if self.peek().kind == "(":
                if tok.text not in ("GetX", "GetY"):
                    raise UnknownFunctionError(tok.text, tok.offset)
                self.advance()
                ref_tok = self.expect("ident")
                ref = self._classify_ref(ref_tok)
                self.expect(")")
                axis = Axis.X if tok.text == "GetX" else Axis.Y
                return Coord(axis, ref)
            raise ExpressionSyntaxError(
                f"bare identifier {tok.text!r} (references must go through GetX/GetY)",
                tok.offset,
                _FACTOR_EXPECTED,
            )
        self.fail("expected a value", _FACTOR_EXPECTED)
        raise AssertionError("unreachable")

    def _classify_ref(self, tok: _Token) -> Ref:
        text = tok.text
        if text == "M_HAIRLINE":
            return HairlineRef()
        m = _MESH_REF_RE.match(text)
        if m:
            return MeshRef(int(m.group(1)))
        m = _SIDED_REF_RE.match(text)
        if m:
            channel, index, side = m.group(1), int(m.group(2)), m.group(3)
            if channel == "M":
                raise ExpressionSyntaxError(
                    "channel letter M is reserved for mesh references", tok.offset,
                    frozenset({"reference"}),
                )
            if index < 1:
                raise ExpressionSyntaxError(
                    f"point index must be >= 1 in {text!r}", tok.offset,
                    frozenset({"reference"}),
                )
            return PointRef(PointId(channel, index), Side(side) if side else None)
        raise ExpressionSyntaxError(
            f"invalid reference {text!r}", tok.offset, frozenset({"reference"})
        )


def parse_expression(src: str) -> PositionExpr:
    """Parse one coordinate expression into its AST.

    Raises ExpressionSyntaxError (with offset and expected-token set) or
    UnknownFunctionError; never anything else, for any input string.
    """
    if not src or not src.strip():
        raise ExpressionSyntaxError("empty expression", 0, _FACTOR_EXPECTED)
    return _Parser(src).parse()


# ---------------------------------------------------------------------------
# Serializer (minimal parentheses; parse(serialize(e)) == e)
# ---------------------------------------------------------------------------

_PREC_ADD = 1
_PREC_MUL = 2
_PREC_NEG = 3
_PREC_ATOM = 4


def _precedence(e: PositionExpr) -> int:
    if isinstance(e, (Add, Sub)):
        return _PREC_ADD
    if isinstance(e, Mul):
        return _PREC_MUL
    if isinstance(e, Neg):
        return _PREC_NEG
    return _PREC_ATOM


def _fmt_number(v: float) -> str:
    text = repr(v)
    return text


def serialize(e: PositionExpr) -> str:
    """Render an AST back to source text."""
    if isinstance(e, Num):
        return _fmt_number(e.value)
    if isinstance(e, Cun):
        return "U"
    if isinstance(e, Coord):
        return f"Get{e.axis.value}({e.ref})"
    if isinstance(e, Neg):
        inner = serialize(e.operand)
        if _precedence(e.operand) < _PREC_NEG:
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(e, (Add, Sub, Mul)):
        prec = _precedence(e)
        left = serialize(e.left)
        if _precedence(e.left) < prec:
            left = f"({left})"
        right = serialize(e.right)
        # the grammar is left-associative: a right child at the same level
        # needs parentheses to survive a round trip
        if _precedence(e.right) <= prec:
            right = f"({right})"
        op = {Add: "+", Sub: "-", Mul: "*"}[type(e)]
        return f"{left}{op}{right}"
    raise TypeError(f"not an expression node: {e!r}")


# ---------------------------------------------------------------------------
# Static analysis
# ---------------------------------------------------------------------------

def iter_refs(e: PositionExpr) -> Iterator[Ref]:
    """Yield every reference in the expression, left to right."""
    if isinstance(e, Coord):
        yield e.ref
    elif isinstance(e, Neg):
        yield from iter_refs(e.operand)
    elif isinstance(e, (Add, Sub, Mul)):
        yield from iter_refs(e.left)
        yield from iter_refs(e.right)


def uses_cun(e: PositionExpr) -> bool:
    if isinstance(e, Cun):
        return True
    if isinstance(e, Neg):
        return uses_cun(e.operand)
    if isinstance(e, (Add, Sub, Mul)):
        return uses_cun(e.left) or uses_cun(e.right)
    return False


_KIND_NUM = "number"
_KIND_LEN = "length"


def expression_kind(e: PositionExpr) -> str:
    """Dimension of an expression: plain number or length.

    Cun and coordinates are lengths. Sums may mix freely, but a product of
    two length-valued subtrees has no geometric meaning and is rejected.
    """
    if isinstance(e, Num):
        return _KIND_NUM
    if isinstance(e, (Cun, Coord)):
        return _KIND_LEN
    if isinstance(e, Neg):
        return expression_kind(e.operand)
    if isinstance(e, (Add, Sub)):
        kinds = (expression_kind(e.left), expression_kind(e.right))
        return _KIND_LEN if _KIND_LEN in kinds else _KIND_NUM
    if isinstance(e, Mul):
        lk, rk = expression_kind(e.left), expression_kind(e.right)
        if lk == _KIND_LEN and rk == _KIND_LEN:
            from .errors import DimensionError

            raise DimensionError(
                f"product of two length-valued subexpressions: "
                f"({serialize(e.left)}) * ({serialize(e.right)})"
            )
        return _KIND_LEN if _KIND_LEN in (lk, rk) else _KIND_NUM
    raise TypeError(f"not an expression node: {e!r}")
