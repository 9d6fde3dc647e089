"""Differentiable scalar expressions in the variables x and p.

Maps, their derivatives, and weight functions are all small closed-form
expressions over a point variable ``x`` and a parameter variable ``p``.
This module provides the abstract syntax tree, a recursive-descent parser,
a printer whose output re-parses to an equivalent tree, structural
differentiation with respect to ``x``, and two evaluation paths: a checked
tree walk that accepts scalars or numpy arrays, and a code-generated scalar
fast path for hot loops.

Grammar::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := NUMBER | 'x' | 'p' | func '(' args ')' | '(' expr ')' | '-' factor
    func   := sin | cos | exp | log | abs | pow | phi | phid

``pow(e, k)`` takes an integer literal exponent k.  ``phi(e, n)`` with an
integer literal n >= 1 is the oscillatory bump u^(n+1) * sin(1/u), defined
as 0 at u = 0; it is n-times-differentiable fuel for smoothness
experiments.  ``phid(e, n)`` is its derivative (emitted by diff_x; accepted
by the parser so printed derivatives round-trip).

Evaluation is total on the declared domain: division by zero and log of a
non-positive argument raise EvalDomainError instead of producing
non-finite values.  Arguments of phi with |u| < 1e-300 evaluate to 0 so
1/u cannot overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EvalDomainError, ExprSyntaxError

_PHI_TINY = 1e-300

_FUNCS = ("sin", "cos", "exp", "log", "abs")


class Expr:
    __slots__ = ()


@dataclass(frozen=True)
class Num(Expr):
    value: float


@dataclass(frozen=True)
class Var(Expr):
    name: str  # 'x' or 'p'


@dataclass(frozen=True)
class BinOp(Expr):
    op: str  # one of + - * /
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True)
class Func(Expr):
    name: str  # sin cos exp log abs
    arg: Expr


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: int


@dataclass(frozen=True)
class Phi(Expr):
    arg: Expr
    n: int


@dataclass(frozen=True)
class PhiD(Expr):
    arg: Expr
    n: int


# ---------------------------------------------------------------------------
# tokenizer / parser
# ---------------------------------------------------------------------------

_SINGLE = set("+-*/(),")


def _tokenize(src):
    """Return a list of (kind, text, position) tokens.

    Kinds: 'num', 'name', or the literal character for operators and
    punctuation.  Numbers are decimal literals with optional fraction and
    exponent.
    """
    tokens = []
    i = 0
    n = len(src)
    while i < n:
        c = src[i]
        if c.isspace():
            i += 1
            continue
        if c in _SINGLE:
            tokens.append((c, c, i))
            i += 1
            continue
        if c.isdigit() or (c == "." and i + 1 < n and src[i + 1].isdigit()):
            j = i
            while j < n and src[j].isdigit():
                j += 1
            if j < n and src[j] == ".":
                j += 1
                while j < n and src[j].isdigit():
                    j += 1
            if j < n and src[j] in "eE":
                k = j + 1
                if k < n and src[k] in "+-":
                    k += 1
                if k < n and src[k].isdigit():
                    j = k
                    while j < n and src[j].isdigit():
                        j += 1
            tokens.append(("num", src[i:j], i))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (src[j].isalnum() or src[j] == "_"):
                j += 1
            tokens.append(("name", src[i:j], i))
            i = j
            continue
        raise ExprSyntaxError(f"unexpected character {c!r}", i)
    return tokens


class _Parser:
    def __init__(self, src):
        self.src = src
        self.tokens = _tokenize(src)
        self.pos = 0

    def _peek(self):
        if self.pos < len(self.tokens):
            return self.tokens[self.pos]
        return None

    def _end_offset(self):
        # where to point when input ends unexpectedly: end of last token
        if self.tokens:
            kind, text, at = self.tokens[min(self.pos, len(self.tokens)) - 1]
            if self.pos == 0:
                return 0
            return at + len(text)
        return 0

    def _next(self, expect=None):
        tok = self._peek()
        if tok is None:
            what = expect or "more input"
            raise ExprSyntaxError(f"unexpected end of input, expected {what}", self._end_offset())
        self.pos += 1
        return tok

    def _expect(self, kind):
        tok = self._next(expect=repr(kind))
        if tok[0] != kind:
            raise ExprSyntaxError(f"expected {kind!r} but found {tok[1]!r}", tok[2])
        return tok

    def parse(self):
        e = self._expr()
        tok = self._peek()
        if tok is not None:
            raise ExprSyntaxError(f"unexpected trailing input {tok[1]!r}", tok[2])
        return e

    def _expr(self):
        e = self._term()
        while True:
            tok = self._peek()
            if tok is not None and tok[0] in "+-":
                self.pos += 1
                rhs = self._term()
                e = BinOp(tok[0], e, rhs)
            else:
                return e

    def _term(self):
        e = self._factor()
        while True:
            tok = self._peek()
            if tok is not None and tok[0] in "*/":
                self.pos += 1
                rhs = self._factor()
                e = BinOp(tok[0], e, rhs)
            else:
                return e

    def _int_literal(self, what):
        neg = False
        tok = self._next(expect=f"integer {what}")
        if tok[0] == "-":
            neg = True
            tok = self._next(expect=f"integer {what}")
        if tok[0] != "num" or any(ch in tok[1] for ch in ".eE"):
            raise ExprSyntaxError(f"expected integer literal for {what}", tok[2])
        value = int(tok[1])
        return -value if neg else value

    def _factor(self):
        tok = self._next(expect="a value")
        kind, text, at = tok
        if kind == "num":
            return Num(float(text))
        if kind == "-":
            return Neg(self._factor())
        if kind == "(":
            e = self._expr()
            self._expect(")")
            return e
        if kind == "name":
            if text in ("x", "p"):
                return Var(text)
            if text in _FUNCS:
                self._expect("(")
                arg = self._expr()
                self._expect(")")
                return Func(text, arg)
            if text == "pow":
                self._expect("(")
                base = self._expr()
                self._expect(",")
                k = self._int_literal("pow exponent")
                self._expect(")")
                return Pow(base, k)
            if text in ("phi", "phid"):
                self._expect("(")
                arg = self._expr()
                self._expect(",")
                n = self._int_literal(f"{text} order")
                if n < 1:
                    raise ExprSyntaxError(f"{text} order must be >= 1", at)
                self._expect(")")
                return Phi(arg, n) if text == "phi" else PhiD(arg, n)
            raise ExprSyntaxError(f"unknown identifier {text!r}", at)
        raise ExprSyntaxError(f"unexpected token {text!r}", at)


def parse_expr(src: str) -> Expr:
    """Parse expression source into an AST.

    Raises ExprSyntaxError with the character offset on malformed input.
    """
    return _Parser(src).parse()


# ---------------------------------------------------------------------------
# printer
# ---------------------------------------------------------------------------

# precedence levels for minimal parenthesisation
_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _fmt_num(v):
    return repr(float(v))


def to_source(e: Expr) -> str:
    """Render an AST as parseable source (inverse of parse_expr up to
    whitespace and redundant parentheses)."""
    return _emit(e, 0)


def _emit(e, parent_prec):
    if isinstance(e, Num):
        s = _fmt_num(e.value)
        # a negative literal behaves like a unary minus under precedence
        if e.value < 0 and parent_prec >= 2:
            return f"({s})"
        return s
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        inner = _emit(e.arg, 3)
        s = f"-{inner}"
        return f"({s})" if parent_prec >= 2 else s
    if isinstance(e, BinOp):
        prec = _PREC[e.op]
        left = _emit(e.left, prec - 1)
        # right operand of - and / must re-parenthesise at equal precedence
        right = _emit(e.right, prec)
        s = f"{left} {e.op} {right}"
        return f"({s})" if prec <= parent_prec else s
    if isinstance(e, Func):
        return f"{e.name}({_emit(e.arg, 0)})"
    if isinstance(e, Pow):
        return f"pow({_emit(e.base, 0)}, {e.exponent})"
    if isinstance(e, Phi):
        return f"phi({_emit(e.arg, 0)}, {e.n})"
    if isinstance(e, PhiD):
        return f"phid({_emit(e.arg, 0)}, {e.n})"
    raise TypeError(f"not an Expr node: {e!r}")


# ---------------------------------------------------------------------------
# evaluation (checked; scalar or ndarray)
# ---------------------------------------------------------------------------


def _phi_val(u, n):
    if isinstance(u, np.ndarray):
        small = np.abs(u) < _PHI_TINY
        safe = np.where(small, 1.0, u)
        return np.where(small, 0.0, safe ** (n + 1) * np.sin(1.0 / safe))
    if -_PHI_TINY < u < _PHI_TINY:
        return 0.0
    return u ** (n + 1) * math.sin(1.0 / u)


def _phid_val(u, n):
    # derivative of phi(.,n); equals 0 at u=0 (the difference-quotient limit)
    if isinstance(u, np.ndarray):
        small = np.abs(u) < _PHI_TINY
        safe = np.where(small, 1.0, u)
        val = (n + 1) * safe**n * np.sin(1.0 / safe) - safe ** (n - 1) * np.cos(1.0 / safe)
        return np.where(small, 0.0, val)
    if -_PHI_TINY < u < _PHI_TINY:
        return 0.0
    return (n + 1) * u**n * math.sin(1.0 / u) - u ** (n - 1) * math.cos(1.0 / u)


def eval_expr(e: Expr, x, p):
    """Evaluate e at point(s) x with parameter p.

    x may be a float or a numpy array; the result has matching shape.
    Raises EvalDomainError on division by zero or log of a non-positive
    argument (element-wise for arrays).
    """
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        return x if e.name == "x" else p
    if isinstance(e, Neg):
        return -eval_expr(e.arg, x, p)
    if isinstance(e, BinOp):
        a = eval_expr(e.left, x, p)
        b = eval_expr(e.right, x, p)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if isinstance(b, np.ndarray):
            if np.any(b == 0.0):
                raise EvalDomainError(f"division by zero in {to_source(e)!r}")
        elif b == 0.0:
            raise EvalDomainError(f"division by zero in {to_source(e)!r}")
        return a / b
    if isinstance(e, Func):
        a = eval_expr(e.arg, x, p)
        if e.name == "log":
            if isinstance(a, np.ndarray):
                if np.any(a <= 0.0):
                    raise EvalDomainError(f"log of non-positive value in {to_source(e)!r}")
                return np.log(a)
            if a <= 0.0:
                raise EvalDomainError(f"log of non-positive value in {to_source(e)!r}")
            return math.log(a)
        if isinstance(a, np.ndarray):
            return {"sin": np.sin, "cos": np.cos, "exp": np.exp, "abs": np.abs}[e.name](a)
        return {"sin": math.sin, "cos": math.cos, "exp": math.exp, "abs": abs}[e.name](a)
    if isinstance(e, Pow):
        a = eval_expr(e.base, x, p)
        if e.exponent < 0:
            if isinstance(a, np.ndarray):
                if np.any(a == 0.0):
                    raise EvalDomainError(f"zero base with negative exponent in {to_source(e)!r}")
            elif a == 0.0:
                raise EvalDomainError(f"zero base with negative exponent in {to_source(e)!r}")
        if isinstance(a, np.ndarray):
            return a ** float(e.exponent)
        return a**e.exponent
    if isinstance(e, Phi):
        return _phi_val(eval_expr(e.arg, x, p), e.n)
    if isinstance(e, PhiD):
        return _phid_val(eval_expr(e.arg, x, p), e.n)
    raise TypeError(f"not an Expr node: {e!r}")


# ---------------------------------------------------------------------------
# structural differentiation w.r.t. x
# ---------------------------------------------------------------------------

_ZERO = Num(0.0)
_ONE = Num(1.0)


def _is_num(e, v):
    return isinstance(e, Num) and e.value == v


def _add(a, b):
    if _is_num(a, 0.0):
        return b
    if _is_num(b, 0.0):
        return a
    return BinOp("+", a, b)


def _sub(a, b):
    if _is_num(b, 0.0):
        return a
    if _is_num(a, 0.0):
        return Neg(b)
    return BinOp("-", a, b)


def _mul(a, b):
    if _is_num(a, 0.0) or _is_num(b, 0.0):
        return _ZERO
    if _is_num(a, 1.0):
        return b
    if _is_num(b, 1.0):
        return a
    return BinOp("*", a, b)


def _div(a, b):
    if _is_num(a, 0.0):
        return _ZERO
    if _is_num(b, 1.0):
        return a
    return BinOp("/", a, b)


def _neg(a):
    if _is_num(a, 0.0):
        return _ZERO
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def diff_x(e: Expr) -> Expr:
    """Structural derivative of e with respect to x.

    Defined for every node.  abs contributes arg/abs(arg) (its sign), which
    correctly raises a domain error if evaluated exactly at the kink.  phi
    differentiates to phid, whose value at 0 is the true derivative 0.
    """
    if isinstance(e, Num):
        return _ZERO
    if isinstance(e, Var):
        return _ONE if e.name == "x" else _ZERO
    if isinstance(e, Neg):
        return _neg(diff_x(e.arg))
    if isinstance(e, BinOp):
        da, db = diff_x(e.left), diff_x(e.right)
        if e.op == "+":
            return _add(da, db)
        if e.op == "-":
            return _sub(da, db)
        if e.op == "*":
            return _add(_mul(da, e.right), _mul(e.left, db))
        num = _sub(_mul(da, e.right), _mul(e.left, db))
        return _div(num, Pow(e.right, 2))
    if isinstance(e, Func):
        da = diff_x(e.arg)
        if e.name == "sin":
            return _mul(Func("cos", e.arg), da)
        if e.name == "cos":
            return _neg(_mul(Func("sin", e.arg), da))
        if e.name == "exp":
            return _mul(e, da)
        if e.name == "log":
            return _div(da, e.arg)
        # abs: sign(arg) * da, written in-grammar as arg/abs(arg) * da
        return _mul(_div(e.arg, e), da)
    if isinstance(e, Pow):
        if e.exponent == 0:
            return _ZERO
        da = diff_x(e.base)
        if e.exponent == 1:
            return da
        if e.exponent == 2:
            inner = e.base
        else:
            inner = Pow(e.base, e.exponent - 1)
        return _mul(_mul(Num(float(e.exponent)), inner), da)
    if isinstance(e, Phi):
        return _mul(PhiD(e.arg, e.n), diff_x(e.arg))
    if isinstance(e, PhiD):
        raise EvalDomainError("phid has no structural derivative (second derivative of phi is not provided)")
    raise TypeError(f"not an Expr node: {e!r}")


def _uses_var(e: Expr, name: str) -> bool:
    if isinstance(e, Var):
        return e.name == name
    if isinstance(e, (Num,)):
        return False
    if isinstance(e, BinOp):
        return _uses_var(e.left, name) or _uses_var(e.right, name)
    if isinstance(e, Neg):
        return _uses_var(e.arg, name)
    if isinstance(e, Func):
        return _uses_var(e.arg, name)
    if isinstance(e, (Pow,)):
        return _uses_var(e.base, name)
    if isinstance(e, (Phi, PhiD)):
        return _uses_var(e.arg, name)
    raise TypeError(f"not an Expr node: {e!r}")


def uses_x(e: Expr) -> bool:
    """True if the expression references the point variable x."""
    return _uses_var(e, "x")


def uses_p(e: Expr) -> bool:
    """True if the expression references the parameter variable p."""
    return _uses_var(e, "p")


# ---------------------------------------------------------------------------
# scalar fast path (code generation)
# ---------------------------------------------------------------------------

_SCALAR_NS = {
    "sin": math.sin,
    "cos": math.cos,
    "exp": math.exp,
    "log": math.log,
    "abs": abs,
    "_phi": _phi_val,
    "_phid": _phid_val,
    "__builtins__": {},
}


def _gen(e):
    if isinstance(e, Num):
        return f"({_fmt_num(e.value)})"
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        return f"(-{_gen(e.arg)})"
    if isinstance(e, BinOp):
        return f"({_gen(e.left)} {e.op} {_gen(e.right)})"
    if isinstance(e, Func):
        return f"{e.name}({_gen(e.arg)})"
    if isinstance(e, Pow):
        return f"({_gen(e.base)} ** {e.exponent})"
    if isinstance(e, Phi):
        return f"_phi({_gen(e.arg)}, {e.n})"
    if isinstance(e, PhiD):
        return f"_phid({_gen(e.arg)}, {e.n})"
    raise TypeError(f"not an Expr node: {e!r}")


def compile_scalar(e: Expr):
    """Compile to a fast scalar callable f(x, p).

    Uses math-module functions, so domain violations surface as ValueError/
    ZeroDivisionError from the interpreter rather than EvalDomainError;
    hot-loop callers wrap them.  Semantics otherwise match eval_expr.
    """
    src = f"lambda x, p: {_gen(e)}"
    return eval(src, dict(_SCALAR_NS))  # noqa: S307 - controlled codegen


def compile_scalar_bound(e: Expr, p: float):
    """Compile to f(x) with the parameter inlined as a literal."""
    src = f"lambda x, p={_fmt_num(p)}: {_gen(e)}"
    return eval(src, dict(_SCALAR_NS))  # noqa: S307 - controlled codegen
