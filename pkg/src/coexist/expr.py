"""Small arithmetic expression language for user-supplied nonlinearities.

Grammar (highest binding first)::

    atom    := number | name | name "(" args ")" | "(" expr ")"
    power   := atom "^" power              (right associative)
    unary   := "-" unary | power
    product := unary (("*" | "/") unary)*
    sum     := product (("+" | "-") product)*

Named functions: ``abs sin cos cbrt sqrt exp log`` (one argument) and
``min max`` (two arguments).  Constants ``pi`` and ``inf`` are predefined.

Piecewise definitions partition ``[0, inf)`` for one variable::

    piecewise(u1; 0, 1: cbrt(u1); 1, 10: u1^3; 10, inf: cbrt(u1 - 10) + 1000)

Piece ``k`` covers ``[lo_k, hi_k)``; the last piece is closed at infinity.
Consecutive guards must share their breakpoint.  A
:class:`PiecewiseDiscontinuityWarning` is emitted at parse time when the
pieces on either side of a breakpoint disagree by more than ``1e-9``.

Expressions are evaluated with numpy, so every variable may be a scalar or
an array of matching shape.
"""

from __future__ import annotations

import math
import re
import warnings
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

__all__ = [
    "ExprError",
    "ExprSyntaxError",
    "ExprEvalError",
    "PiecewiseDiscontinuityWarning",
    "Const",
    "Var",
    "Unary",
    "Binary",
    "Piecewise",
    "parse",
    "render",
    "evaluate",
    "eval_env",
    "as_function",
    "discontinuities",
    "variables_of",
]

DEFAULT_VARIABLES = ("u1", "u2")

UNARY_FUNCS = ("abs", "sin", "cos", "cbrt", "sqrt", "exp", "log")
BINARY_FUNCS = ("min", "max")
CONSTANTS = {"pi": math.pi, "inf": math.inf}

CONTINUITY_TOL = 1e-9


class ExprError(ValueError):
    """Base class for expression errors."""


class ExprSyntaxError(ExprError):
    """Parse failure.  ``offset`` is the byte offset into the UTF-8 source."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class ExprEvalError(ExprError):
    """Evaluation failure: division by zero, domain error or a negative value."""


class PiecewiseDiscontinuityWarning(UserWarning):
    pass


# --------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Unary:
    op: str  # "neg" or one of UNARY_FUNCS
    arg: "Node"


@dataclass(frozen=True)
class Binary:
    op: str  # + - * / ^ min max
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Piecewise:
    var: str
    pieces: tuple  # tuple of (lo, hi, Node)

    @property
    def breakpoints(self) -> tuple:
        return tuple(hi for _, hi, _ in self.pieces[:-1])


Node = Const | Var | Unary | Binary | Piecewise


# --------------------------------------------------------------------------
# Tokenizer

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),;:])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    offset: int  # byte offset


def _tokenize(source: str) -> list[_Token]:
    tokens = []
    pos = 0
    byte_pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {source[pos]!r}", byte_pos)
        kind = m.lastgroup
        text = m.group()
        if kind != "ws":
            tokens.append(_Token(kind, text, byte_pos))
        byte_pos += len(text.encode("utf-8"))
        pos = m.end()
    tokens.append(_Token("end", "", byte_pos))
    return tokens


# --------------------------------------------------------------------------
# Pratt parser

_INFIX_BP = {"+": 10, "-": 10, "*": 20, "/": 20, "^": 40}
_UNARY_BP = 30


class _Parser:
    def __init__(self, source: str, variables: Sequence[str]):
        self.tokens = _tokenize(source)
        self.i = 0
        self.variables = tuple(variables)

    @property
    def tok(self) -> _Token:
        return self.tokens[self.i]

    def advance(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, text: str) -> _Token:
        if self.tok.text != text or self.tok.kind == "end":
            found = self.tok.text or "end of input"
            raise ExprSyntaxError(f"expected {text!r}, found {found!r}", self.tok.offset)
        return self.advance()

    def parse(self) -> Node:
        node = self.expr(0)
        if self.tok.kind != "end":
            raise ExprSyntaxError(f"unexpected {self.tok.text!r}", self.tok.offset)
        return node

    def expr(self, rbp: int) -> Node:
        left = self.nud(self.advance())
        while True:
            tok = self.tok
            lbp = _INFIX_BP.get(tok.text, 0) if tok.kind == "op" else 0
            if lbp <= rbp:
                return left
            self.advance()
            # ^ is right associative
            right = self.expr(lbp - 1 if tok.text == "^" else lbp)
            left = Binary(tok.text, left, right)

    def nud(self, tok: _Token) -> Node:
        if tok.kind == "number":
            return Const(float(tok.text))
        if tok.kind == "op":
            if tok.text == "(":
                node = self.expr(0)
                self.expect(")")
                return node
            if tok.text == "-":
                return Unary("neg", self.expr(_UNARY_BP))
            if tok.text == "+":
                return self.expr(_UNARY_BP)
        if tok.kind == "name":
            return self.name(tok)
        found = tok.text or "end of input"
        raise ExprSyntaxError(f"unexpected {found!r}", tok.offset)

    def name(self, tok: _Token) -> Node:
        name = tok.text
        if name == "piecewise":
            return self.piecewise(tok)
        if name in UNARY_FUNCS or name in BINARY_FUNCS:
            self.expect("(")
            first = self.expr(0)
            if name in BINARY_FUNCS:
                self.expect(",")
                second = self.expr(0)
                self.expect(")")
                return Binary(name, first, second)
            self.expect(")")
            return Unary(name, first)
        if name in self.variables:
            return Var(name)
        if name in CONSTANTS:
            return Const(CONSTANTS[name])
        raise ExprSyntaxError(f"unknown identifier {name!r}", tok.offset)

    def piecewise(self, start: _Token) -> Piecewise:
        self.expect("(")
        var_tok = self.advance()
        if var_tok.kind != "name" or var_tok.text not in self.variables:
            raise ExprSyntaxError("piecewise needs a variable to guard", var_tok.offset)
        pieces = []
        while self.tok.text == ";":
            self.advance()
            lo = self.guard_bound()
            self.expect(",")
            hi = self.guard_bound()
            self.expect(":")
            body = self.expr(0)
            pieces.append((lo, hi, body))
        self.expect(")")
        _check_guards(pieces, start.offset)
        node = Piecewise(var_tok.text, tuple(pieces))
        for b, jump in discontinuities(node):
            warnings.warn(
                f"piecewise({node.var}) jumps by {jump:.3g} at {b:g}",
                PiecewiseDiscontinuityWarning,
                stacklevel=4,
            )
        return node

    def guard_bound(self) -> float:
        tok = self.tok
        node = self.expr(0)
        if variables_of(node):
            raise ExprSyntaxError("piecewise guard must be constant", tok.offset)
        with np.errstate(all="ignore"):
            value = float(eval_env(node, {}))
        if math.isnan(value):
            raise ExprSyntaxError("piecewise guard is not a number", tok.offset)
        return value


def _check_guards(pieces: list, offset: int) -> None:
    if not pieces:
        raise ExprSyntaxError("piecewise needs at least one piece", offset)
    if pieces[0][0] != 0.0:
        raise ExprSyntaxError("malformed piecewise guards: first piece must start at 0", offset)
    if pieces[-1][1] != math.inf:
        raise ExprSyntaxError("malformed piecewise guards: last piece must end at inf", offset)
    for k, (lo, hi, _) in enumerate(pieces):
        if not lo < hi:
            raise ExprSyntaxError(f"malformed piecewise guards: empty piece [{lo}, {hi}]", offset)
        if k and lo != pieces[k - 1][1]:
            raise ExprSyntaxError(
                f"malformed piecewise guards: gap or overlap at {pieces[k - 1][1]} / {lo}", offset
            )


def parse(source: str, variables: Sequence[str] = DEFAULT_VARIABLES) -> Node:
    """Parse ``source`` into an immutable AST over the given variable names."""
    return _Parser(source, variables).parse()


# --------------------------------------------------------------------------
# Rendering

_RENDER_BP = {"+": 10, "-": 10, "*": 20, "/": 20, "^": 40}


def render(node: Node) -> str:
    """Render an AST back to source text.  ``parse(render(a)) == a``."""
    return _render(node, 0)


def _render_const(value: float) -> str:
    if value == math.inf:
        return "inf"
    return repr(float(value))


def _render(node: Node, ctx: int) -> str:
    if isinstance(node, Const):
        return _render_const(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Unary):
        if node.op == "neg":
            text = "-" + _render(node.arg, _UNARY_BP)
            return f"({text})" if ctx >= _UNARY_BP else text
        return f"{node.op}({_render(node.arg, 0)})"
    if isinstance(node, Binary):
        if node.op in BINARY_FUNCS:
            return f"{node.op}({_render(node.left, 0)}, {_render(node.right, 0)})"
        bp = _RENDER_BP[node.op]
        if node.op == "^":
            text = f"{_render(node.left, bp)}^{_render(node.right, bp - 1)}"
        else:
            text = f"{_render(node.left, bp - 1)} {node.op} {_render(node.right, bp)}"
        return f"({text})" if bp <= ctx else text
    if isinstance(node, Piecewise):
        parts = [
            f"{_render_const(lo)}, {_render_const(hi)}: {_render(body, 0)}"
            for lo, hi, body in node.pieces
        ]
        return f"piecewise({node.var}; " + "; ".join(parts) + ")"
    raise TypeError(f"not an expression node: {node!r}")


# --------------------------------------------------------------------------
# Evaluation


def variables_of(node: Node) -> set[str]:
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, Unary):
        return variables_of(node.arg)
    if isinstance(node, Binary):
        return variables_of(node.left) | variables_of(node.right)
    if isinstance(node, Piecewise):
        out = {node.var}
        for _, _, body in node.pieces:
            out |= variables_of(body)
        return out
    return set()


def _unary(op: str, x: np.ndarray) -> np.ndarray:
    if op == "neg":
        return -x
    if op == "abs":
        return np.abs(x)
    if op == "sin":
        return np.sin(x)
    if op == "cos":
        return np.cos(x)
    if op == "cbrt":
        return np.cbrt(x)
    if op == "sqrt":
        if np.any(x < 0):
            raise ExprEvalError("sqrt of a negative value")
        return np.sqrt(x)
    if op == "exp":
        return np.exp(x)
    if op == "log":
        if np.any(x <= 0):
            raise ExprEvalError("log of a non-positive value")
        return np.log(x)
    raise ExprEvalError(f"unknown function {op!r}")


def _binary(op: str, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        if np.any(b == 0):
            raise ExprEvalError("division by zero")
        return a / b
    if op == "^":
        a, b = np.broadcast_arrays(a, b)
        if np.any((a < 0) & (b != np.round(b))):
            raise ExprEvalError("fractional power of a negative value")
        if np.any((a == 0) & (b < 0)):
            raise ExprEvalError("division by zero")
        return np.power(a, b)
    if op == "min":
        return np.minimum(a, b)
    if op == "max":
        return np.maximum(a, b)
    raise ExprEvalError(f"unknown operator {op!r}")


def eval_env(node: Node, env: Mapping[str, object]) -> np.ndarray:
    """Evaluate without sign checks; ``env`` maps variable names to values."""
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        return _eval(node, {k: np.asarray(v, dtype=float) for k, v in env.items()})


def _eval(node: Node, env: dict) -> np.ndarray:
    if isinstance(node, Const):
        return np.asarray(node.value)
    if isinstance(node, Var):
        try:
            return env[node.name]
        except KeyError:
            raise ExprEvalError(f"no value bound for {node.name!r}") from None
    if isinstance(node, Unary):
        return _unary(node.op, _eval(node.arg, env))
    if isinstance(node, Binary):
        return _binary(node.op, _eval(node.left, env), _eval(node.right, env))
    if isinstance(node, Piecewise):
        return _eval_piecewise(node, env)
    raise TypeError(f"not an expression node: {node!r}")


def _eval_piecewise(node: Piecewise, env: dict) -> np.ndarray:
    x = env.get(node.var)
    if x is None:
        raise ExprEvalError(f"no value bound for {node.var!r}")
    shape = np.broadcast_shapes(*(np.shape(v) for v in env.values()))
    full = {k: np.broadcast_to(v, shape) for k, v in env.items()}
    xs = full[node.var]
    out = np.full(shape, np.nan)
    if np.any(xs < 0):
        raise ExprEvalError(f"piecewise variable {node.var} is negative")
    last = len(node.pieces) - 1
    for k, (lo, hi, body) in enumerate(node.pieces):
        mask = (xs >= lo) & ((xs < hi) | (k == last))
        if not np.any(mask):
            continue
        sub = {name: v[mask] for name, v in full.items()}
        out[mask] = np.broadcast_to(_eval(body, sub), out[mask].shape)
    return out if shape else out[()]


def evaluate(node: Node, u1, u2):
    """Evaluate a nonlinearity ``f(u1, u2)``.

    The inputs must be nonnegative and the result must be finite and
    nonnegative, since the nonlinearities map the closed quadrant into
    itself.
    """
    u1 = np.asarray(u1, dtype=float)
    u2 = np.asarray(u2, dtype=float)
    if np.any(u1 < 0) or np.any(u2 < 0):
        raise ExprEvalError("nonlinearity arguments must be nonnegative")
    value = _checked(eval_env(node, {"u1": u1, "u2": u2}), nonnegative=True)
    value = np.broadcast_to(value, np.broadcast_shapes(u1.shape, u2.shape))
    return float(value) if value.ndim == 0 else value.copy()


def _checked(value: np.ndarray, nonnegative: bool) -> np.ndarray:
    if not np.all(np.isfinite(value)):
        raise ExprEvalError("expression produced a non-finite value")
    if nonnegative and np.any(value < 0):
        worst = float(np.min(value))
        raise ExprEvalError(f"expression produced a negative value ({worst:.6g})")
    return value


def as_function(
    node: Node,
    variables: Sequence[str] = DEFAULT_VARIABLES,
    nonnegative: bool = True,
) -> Callable[..., np.ndarray]:
    """Return a vectorized callable ``f(*values)`` bound positionally to ``variables``."""
    names = tuple(variables)

    def f(*args):
        if len(args) != len(names):
            raise TypeError(f"expected {len(names)} arguments, got {len(args)}")
        arrays = [np.asarray(a, dtype=float) for a in args]
        shape = np.broadcast_shapes(*(a.shape for a in arrays))
        value = _checked(eval_env(node, dict(zip(names, arrays))), nonnegative)
        return np.broadcast_to(value, shape).astype(float)

    f.expr = node
    f.source = render(node)
    return f


_CONTINUITY_PROBES = (0.0, 0.5, 1.0, 3.0, 10.0)


def discontinuities(node: Piecewise, tol: float = CONTINUITY_TOL) -> list[tuple[float, float]]:
    """Breakpoints where adjacent pieces disagree by more than ``tol``.

    Other variables appearing in the piece bodies are probed at a few fixed
    nonnegative values.  Returns ``(breakpoint, jump)`` pairs.
    """
    others = sorted(variables_of(node) - {node.var})
    grids = np.meshgrid(*([_CONTINUITY_PROBES] * len(others)), indexing="ij") if others else []
    out = []
    for k in range(len(node.pieces) - 1):
        b = node.pieces[k][1]
        env = {name: g.ravel() for name, g in zip(others, grids)}
        env[node.var] = np.full(len(_CONTINUITY_PROBES) ** len(others), b)
        try:
            with np.errstate(all="ignore"):
                left = _eval(node.pieces[k][2], env)
                right = _eval(node.pieces[k + 1][2], env)
                gaps = np.abs(np.asarray(left) - np.asarray(right))
            # both sides undefined at every probe counts as a jump
            jump = float(np.nanmax(gaps)) if not np.all(np.isnan(gaps)) else math.inf
        except ExprEvalError:
            jump = math.inf
        if not jump <= tol:
            out.append((b, jump))
    return out
