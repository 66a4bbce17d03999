"""Expression trees: lexing, parsing, canonical printing, and evaluation.

Expressions are immutable trees over variables (``x`` or ``x1``, ``x2``, ...),
constant placeholders (``C``), integer literals, the binary operators
``+ - * / ^``, unary negation, and the functions ``sin``, ``cos``, ``sqrt``,
``exp``, ``log``.

Constant placeholders are positional: ``C + C*x`` has two independent
constants, numbered 0..k-1 in left-to-right leaf order. Integer literals are
not constants; ``5*x`` has constant count 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Mapping, Sequence, Union

FUNCTIONS = ("sin", "cos", "sqrt", "exp", "log")
OPERATORS = ("+", "-", "*", "/", "^")

DEFAULT_MAX_DEPTH = 64
DEFAULT_MAGNITUDE_CAP = 1e30

GENERIC_VAR = 0  # Var index reserved for the generic variable ``x``


class LexError(ValueError):
    """Unrecognized input character; ``offset`` is the byte position."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset


class ParseError(ValueError):
    """Malformed token sequence; ``position`` indexes the offending token."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (token {position})")
        self.position = position


class EvalFailure(Enum):
    """Why an evaluation produced no value. Carries no numeric payload."""

    DOMAIN_ERROR = "domain-error"
    NON_FINITE = "non-finite"
    DEPTH_EXCEEDED = "depth-exceeded"


@dataclass(frozen=True)
class Token:
    kind: str  # var | const | int | op | func | lparen | rparen
    value: object = None
    offset: int = -1

    def lexeme(self) -> str:
        if self.kind == "var":
            return "x" if self.value == GENERIC_VAR else f"x{self.value}"
        if self.kind == "const":
            return "C"
        if self.kind == "int":
            return str(self.value)
        if self.kind in ("op", "func"):
            return str(self.value)
        return "(" if self.kind == "lparen" else ")"

    def same_symbol(self, other: "Token") -> bool:
        return self.kind == other.kind and self.value == other.value


@dataclass(frozen=True)
class Var:
    index: int  # 0 = generic x, k >= 1 = specific variable x_k


@dataclass(frozen=True)
class Const:
    slot: int


@dataclass(frozen=True)
class IntLit:
    value: int

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("integer literals are nonnegative; wrap in Neg")


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Unary:
    fn: str
    arg: "Expr"


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


Expr = Union[Var, Const, IntLit, Binary, Unary, Neg]


def tokenize(text: str) -> list[Token]:
    """Split ``text`` into tokens. Whitespace is insignificant.

    Both ``C`` and ``c`` lex as the constant placeholder. Raises
    :class:`LexError` with the byte offset of any unrecognized character.
    """
    tokens: list[Token] = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch in "+-*/^":
            tokens.append(Token("op", ch, i))
            i += 1
        elif ch == "(":
            tokens.append(Token("lparen", offset=i))
            i += 1
        elif ch == ")":
            tokens.append(Token("rparen", offset=i))
            i += 1
        elif ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            tokens.append(Token("int", int(text[i:j]), i))
            i = j
        elif ch.isalpha():
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            if word in FUNCTIONS:
                tokens.append(Token("func", word, i))
            elif word in ("C", "c"):
                tokens.append(Token("const", offset=i))
            elif word == "x":
                tokens.append(Token("var", GENERIC_VAR, i))
            elif word[0] == "x" and word[1:].isdigit() and int(word[1:]) >= 1:
                tokens.append(Token("var", int(word[1:]), i))
            else:
                raise LexError(f"unrecognized name {word!r}", i)
            i = j
        else:
            raise LexError(f"unrecognized character {ch!r}", i)
    return tokens


# Pratt binding powers: ^ binds tightest, then unary minus, then * /, then + -.
_INFIX_BP = {"+": (10, 11), "-": (10, 11), "*": (20, 21), "/": (20, 21), "^": (40, 40)}
_PREFIX_MINUS_BP = 30


class _Parser:
    def __init__(self, tokens: Sequence[Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> Token | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def next(self) -> Token:
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of input", self.pos)
        self.pos += 1
        return tok

    def expect(self, kind: str, what: str) -> Token:
        tok = self.peek()
        if tok is None or tok.kind != kind:
            raise ParseError(f"expected {what}", self.pos)
        return self.next()

    def parse_expr(self, min_bp: int) -> Expr:
        tok = self.next()
        if tok.kind == "int":
            lhs: Expr = IntLit(tok.value)
        elif tok.kind == "const":
            lhs = Const(-1)  # slots renumbered after the full parse
        elif tok.kind == "var":
            lhs = Var(tok.value)
        elif tok.kind == "func":
            self.expect("lparen", f"'(' after {tok.value}")
            arg = self.parse_expr(0)
            self.expect("rparen", "closing parenthesis")
            lhs = Unary(tok.value, arg)
        elif tok.kind == "lparen":
            lhs = self.parse_expr(0)
            self.expect("rparen", "closing parenthesis")
        elif tok.kind == "op" and tok.value == "-":
            lhs = Neg(self.parse_expr(_PREFIX_MINUS_BP))
        else:
            raise ParseError(f"unexpected token {tok.lexeme()!r}", self.pos - 1)

        while True:
            tok = self.peek()
            if tok is None or tok.kind != "op":
                break
            lbp, rbp = _INFIX_BP[tok.value]
            if lbp < min_bp:
                break
            self.next()
            rhs = self.parse_expr(rbp)
            lhs = Binary(tok.value, lhs, rhs)
        return lhs


def parse(tokens: Sequence[Token], max_depth: int = DEFAULT_MAX_DEPTH) -> Expr:
    """Parse a token sequence into an :data:`Expr`.

    Precedence: ``^`` > unary minus > ``* /`` > ``+ -``; ``^`` is
    right-associative, the rest left-associative. Constant slots are numbered
    left to right.
    """
    if not tokens:
        raise ParseError("empty input", 0)
    parser = _Parser(tokens)
    try:
        expr = parser.parse_expr(0)
    except RecursionError:
        raise ParseError("expression nested too deeply", parser.pos) from None
    if parser.pos != len(tokens):
        tok = tokens[parser.pos]
        if tok.kind == "rparen":
            raise ParseError("unbalanced closing parenthesis", parser.pos)
        raise ParseError(f"unexpected trailing token {tok.lexeme()!r}", parser.pos)
    if depth(expr) > max_depth:
        raise ParseError(f"expression deeper than {max_depth}", 0)
    return _renumber_consts(expr)


def parse_text(text: str, max_depth: int = DEFAULT_MAX_DEPTH) -> Expr:
    return parse(tokenize(text), max_depth)


def _renumber_consts(e: Expr) -> Expr:
    counter = [0]

    def walk(node: Expr) -> Expr:
        if isinstance(node, Const):
            slot = counter[0]
            counter[0] += 1
            return Const(slot)
        if isinstance(node, Binary):
            return Binary(node.op, walk(node.left), walk(node.right))
        if isinstance(node, Unary):
            return Unary(node.fn, walk(node.arg))
        if isinstance(node, Neg):
            return Neg(walk(node.arg))
        return node

    return walk(e)


# Precedence levels used by the canonical printer.
_PREC_ADD, _PREC_MUL, _PREC_NEG, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4, 5


def _prec(e: Expr) -> int:
    if isinstance(e, Binary):
        if e.op in "+-":
            return _PREC_ADD
        if e.op in "*/":
            return _PREC_MUL
        return _PREC_POW
    if isinstance(e, Neg):
        return _PREC_NEG
    return _PREC_ATOM


def to_canonical_string(e: Expr) -> str:
    """Deterministic infix rendering with minimal parentheses.

    ``parse(tokenize(to_canonical_string(e)))`` is structurally identical
    to ``e``.
    """

    def render(node: Expr, min_prec: int) -> str:
        if isinstance(node, Var):
            s = "x" if node.index == GENERIC_VAR else f"x{node.index}"
        elif isinstance(node, Const):
            s = "C"
        elif isinstance(node, IntLit):
            s = str(node.value)
        elif isinstance(node, Unary):
            s = f"{node.fn}({render(node.arg, 0)})"
        elif isinstance(node, Neg):
            s = "-" + render(node.arg, _PREC_NEG)
        else:
            if node.op in "+-":
                s = render(node.left, _PREC_ADD) + node.op + render(node.right, _PREC_ADD + 1)
            elif node.op in "*/":
                s = render(node.left, _PREC_MUL) + node.op + render(node.right, _PREC_MUL + 1)
            else:
                s = render(node.left, _PREC_ATOM) + "^" + render(node.right, _PREC_POW)
        if _prec(node) < min_prec:
            return "(" + s + ")"
        return s

    return render(e, 0)


class _EvalFail(Exception):
    def __init__(self, reason: EvalFailure):
        self.reason = reason


def _int_pow(base: float, p: int, cap: float) -> float:
    # Repeated multiplication (square-and-multiply) keeps negative bases exact
    # and lets us cap intermediates before they overflow.
    if p == 0:
        return 1.0
    if p < 0:
        if base == 0.0:
            raise _EvalFail(EvalFailure.DOMAIN_ERROR)
        return 1.0 / _int_pow(base, -p, cap)
    result = 1.0
    factor = base
    while True:
        if p & 1:
            result *= factor
            if not math.isfinite(result) or abs(result) > cap:
                raise _EvalFail(EvalFailure.NON_FINITE)
        p >>= 1
        if p == 0:
            return result
        factor *= factor
        if not math.isfinite(factor) or abs(factor) > cap:
            raise _EvalFail(EvalFailure.NON_FINITE)


def evaluate(
    e: Expr,
    variables: Mapping[int, float],
    constants: Sequence[float] = (),
    max_depth: int = DEFAULT_MAX_DEPTH,
    magnitude_cap: float = DEFAULT_MAGNITUDE_CAP,
) -> Union[float, EvalFailure]:
    """Evaluate ``e`` with the given variable values and constant vector.

    Returns a finite float, or an :class:`EvalFailure` naming why no value
    exists: ``log``/``sqrt``/division domain violations, any non-finite or
    over-cap intermediate, or a tree deeper than ``max_depth``. Constant-free
    expressions accept an empty ``constants`` sequence.
    """

    def check(v: float) -> float:
        if not math.isfinite(v) or abs(v) > magnitude_cap:
            raise _EvalFail(EvalFailure.NON_FINITE)
        return v

    def walk(node: Expr, d: int) -> float:
        if d > max_depth:
            raise _EvalFail(EvalFailure.DEPTH_EXCEEDED)
        if isinstance(node, Var):
            return check(variables[node.index])
        if isinstance(node, Const):
            return check(constants[node.slot])
        if isinstance(node, IntLit):
            return float(node.value)
        if isinstance(node, Neg):
            return -walk(node.arg, d + 1)
        if isinstance(node, Unary):
            a = walk(node.arg, d + 1)
            if node.fn == "sin":
                return math.sin(a)
            if node.fn == "cos":
                return math.cos(a)
            if node.fn == "sqrt":
                if a < 0.0:
                    raise _EvalFail(EvalFailure.DOMAIN_ERROR)
                return math.sqrt(a)
            if node.fn == "exp":
                try:
                    return check(math.exp(a))
                except OverflowError:
                    raise _EvalFail(EvalFailure.NON_FINITE) from None
            # log
            if a <= 0.0:
                raise _EvalFail(EvalFailure.DOMAIN_ERROR)
            return check(math.log(a))
        left = walk(node.left, d + 1)
        if node.op == "^":
            right = walk(node.right, d + 1)
            if float(right).is_integer():
                return _int_pow(left, int(right), magnitude_cap)
            try:
                return check(math.pow(left, right))
            except ValueError:
                raise _EvalFail(EvalFailure.DOMAIN_ERROR) from None
            except OverflowError:
                raise _EvalFail(EvalFailure.NON_FINITE) from None
        right = walk(node.right, d + 1)
        if node.op == "+":
            return check(left + right)
        if node.op == "-":
            return check(left - right)
        if node.op == "*":
            return check(left * right)
        # division
        if right == 0.0:
            raise _EvalFail(EvalFailure.DOMAIN_ERROR)
        return check(left / right)

    try:
        return walk(e, 1)
    except _EvalFail as fail:
        return fail.reason


def iter_nodes(e: Expr) -> Iterator[Expr]:
    """Preorder traversal, children left to right."""
    stack = [e]
    while stack:
        node = stack.pop()
        yield node
        if isinstance(node, Binary):
            stack.append(node.right)
            stack.append(node.left)
        elif isinstance(node, (Unary, Neg)):
            stack.append(node.arg)


def constant_count(e: Expr) -> int:
    return sum(1 for node in iter_nodes(e) if isinstance(node, Const))


def free_variables(e: Expr) -> set[int]:
    return {node.index for node in iter_nodes(e) if isinstance(node, Var)}


def node_count(e: Expr) -> int:
    return sum(1 for _ in iter_nodes(e))


def depth(e: Expr) -> int:
    if isinstance(e, Binary):
        return 1 + max(depth(e.left), depth(e.right))
    if isinstance(e, (Unary, Neg)):
        return 1 + depth(e.arg)
    return 1


def read_expressions(path, max_depth: int = DEFAULT_MAX_DEPTH) -> list[Expr]:
    """Read one infix expression per line; ``#`` lines and blanks ignored."""
    exprs = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            exprs.append(parse_text(stripped, max_depth))
    return exprs


def write_expressions(path, exprs: Sequence[Expr]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for e in exprs:
            fh.write(to_canonical_string(e) + "\n")
