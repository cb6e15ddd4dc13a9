"""Natural interval extension over small expression trees.

Used to bound, over a box S, the entrywise range of the symmetric Jacobian
deviation E(x) = J_f(x) + J_f^T(x) - (J + J^T).  Outward rounding is
approximated by inflating every primitive result by 4 ulps, which keeps the
module portable while staying sound at the tolerances used downstream.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import DomainExitError, UnboundedIntervalError
from .geometry import Box
from .linalg import entrywise_norm_upper

_ULPS = 4


def _pad(x: float) -> float:
    return _ULPS * math.ulp(abs(x)) if math.isfinite(x) else 0.0


def _mk(lo: float, hi: float) -> "Interval":
    # Fast construction for bounds that are ordered by construction.
    iv = object.__new__(Interval)
    object.__setattr__(iv, "lo", lo)
    object.__setattr__(iv, "hi", hi)
    return iv


@dataclass(frozen=True)
class Interval:
    """Closed interval [lo, hi] with lo <= hi."""

    lo: float
    hi: float

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"interval requires lo <= hi, got [{self.lo}, {self.hi}]")

    @staticmethod
    def point(v: float) -> "Interval":
        return _mk(v, v)

    @staticmethod
    def outward(lo: float, hi: float) -> "Interval":
        return _mk(lo - _pad(lo), hi + _pad(hi))

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def is_finite(self) -> bool:
        return math.isfinite(self.lo) and math.isfinite(self.hi)

    def contains(self, v: float, atol: float = 0.0) -> bool:
        return self.lo - atol <= v <= self.hi + atol

    def contains_interval(self, other: "Interval") -> bool:
        return self.lo <= other.lo and other.hi <= self.hi

    def magnitude(self) -> float:
        return max(abs(self.lo), abs(self.hi))

    def __add__(self, other: "Interval") -> "Interval":
        return Interval.outward(self.lo + other.lo, self.hi + other.hi)

    def __sub__(self, other: "Interval") -> "Interval":
        return Interval.outward(self.lo - other.hi, self.hi - other.lo)

    def __neg__(self) -> "Interval":
        return _mk(-self.hi, -self.lo)

    def __mul__(self, other: "Interval") -> "Interval":
        products = (
            self.lo * other.lo,
            self.lo * other.hi,
            self.hi * other.lo,
            self.hi * other.hi,
        )
        return Interval.outward(min(products), max(products))

    def __truediv__(self, other: "Interval") -> "Interval":
        if other.lo <= 0.0 <= other.hi:
            raise ZeroDivisionError(
                f"divisor interval [{other.lo}, {other.hi}] contains zero"
            )
        quotients = (
            self.lo / other.lo,
            self.lo / other.hi,
            self.hi / other.lo,
            self.hi / other.hi,
        )
        return Interval.outward(min(quotients), max(quotients))

    def int_pow(self, k: int) -> "Interval":
        if k == 0:
            return Interval.point(1.0)
        if k < 0:
            return Interval.point(1.0) / self.int_pow(-k)
        a, b = self.lo**k, self.hi**k
        if k % 2 == 0 and self.lo < 0.0 < self.hi:
            return Interval.outward(0.0, max(a, b))
        return Interval.outward(min(a, b), max(a, b))

    def exp(self) -> "Interval":
        try:
            lo = math.exp(self.lo)
        except OverflowError:
            lo = math.inf
        try:
            hi = math.exp(self.hi)
        except OverflowError:
            hi = math.inf
        return Interval.outward(lo, hi)

    def _trig(self, fn, max_angle: float, min_angle: float) -> "Interval":
        if self.width >= 2.0 * math.pi:
            return Interval(-1.0, 1.0)
        lo = min(fn(self.lo), fn(self.hi))
        hi = max(fn(self.lo), fn(self.hi))
        two_pi = 2.0 * math.pi
        if math.ceil((self.lo - max_angle) / two_pi) <= (self.hi - max_angle) / two_pi:
            hi = 1.0
        if math.ceil((self.lo - min_angle) / two_pi) <= (self.hi - min_angle) / two_pi:
            lo = -1.0
        return Interval(max(lo - _pad(lo), -1.0), min(hi + _pad(hi), 1.0))

    def sin(self) -> "Interval":
        return self._trig(math.sin, math.pi / 2.0, -math.pi / 2.0)

    def cos(self) -> "Interval":
        return self._trig(math.cos, 0.0, math.pi)


# --------------------------------------------------------------------------
# Expression trees
# --------------------------------------------------------------------------


class Expr:
    """Base node; subclasses implement interval and point evaluation."""

    def interval(self, vars_: list[Interval]) -> Interval:
        raise NotImplementedError

    def value(self, x: np.ndarray) -> float:
        raise NotImplementedError

    def max_var(self) -> int:
        """Largest variable index used, or -1 if constant."""
        return -1


@dataclass(frozen=True)
class Const(Expr):
    v: float

    def interval(self, vars_):
        return Interval.point(self.v)

    def value(self, x):
        return self.v


@dataclass(frozen=True)
class Var(Expr):
    index: int

    def interval(self, vars_):
        return vars_[self.index]

    def value(self, x):
        return float(x[self.index])

    def max_var(self):
        return self.index


@dataclass(frozen=True)
class _Binary(Expr):
    a: Expr
    b: Expr

    def max_var(self):
        return max(self.a.max_var(), self.b.max_var())


@dataclass(frozen=True)
class Add(_Binary):
    def interval(self, vars_):
        return self.a.interval(vars_) + self.b.interval(vars_)

    def value(self, x):
        return self.a.value(x) + self.b.value(x)


@dataclass(frozen=True)
class Sub(_Binary):
    def interval(self, vars_):
        return self.a.interval(vars_) - self.b.interval(vars_)

    def value(self, x):
        return self.a.value(x) - self.b.value(x)


@dataclass(frozen=True)
class Mul(_Binary):
    def interval(self, vars_):
        return self.a.interval(vars_) * self.b.interval(vars_)

    def value(self, x):
        return self.a.value(x) * self.b.value(x)


@dataclass(frozen=True)
class Div(_Binary):
    def interval(self, vars_):
        return self.a.interval(vars_) / self.b.interval(vars_)

    def value(self, x):
        return self.a.value(x) / self.b.value(x)


@dataclass(frozen=True)
class _Unary(Expr):
    a: Expr

    def max_var(self):
        return self.a.max_var()


@dataclass(frozen=True)
class Neg(_Unary):
    def interval(self, vars_):
        return -self.a.interval(vars_)

    def value(self, x):
        return -self.a.value(x)


@dataclass(frozen=True)
class Pow(_Unary):
    k: int = 2

    def interval(self, vars_):
        return self.a.interval(vars_).int_pow(self.k)

    def value(self, x):
        return self.a.value(x) ** self.k


@dataclass(frozen=True)
class Sin(_Unary):
    def interval(self, vars_):
        return self.a.interval(vars_).sin()

    def value(self, x):
        return math.sin(self.a.value(x))


@dataclass(frozen=True)
class Cos(_Unary):
    def interval(self, vars_):
        return self.a.interval(vars_).cos()

    def value(self, x):
        return math.cos(self.a.value(x))


@dataclass(frozen=True)
class ExpNode(_Unary):
    def interval(self, vars_):
        return self.a.interval(vars_).exp()

    def value(self, x):
        return math.exp(self.a.value(x))


def box_intervals(box: Box) -> list[Interval]:
    """Per-coordinate intervals of a box, for repeated expression evaluation."""
    return [_mk(float(lo), float(hi)) for lo, hi in zip(box.lo, box.hi)]


def eval_interval(e: Expr, box: Box) -> Interval:
    """Interval containing {e(x) : x in box} (inclusion isotone)."""
    if e.max_var() >= box.dim:
        raise ValueError(
            f"expression uses variable index {e.max_var()} beyond box dim {box.dim}"
        )
    return e.interval(box_intervals(box))


# --------------------------------------------------------------------------
# Expression grammar: infix + - * / ^, sin cos exp, variables x1..xn u1..up
# --------------------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)

_FUNCS = {"sin": Sin, "cos": Cos, "exp": ExpNode}


class _Parser:
    def __init__(self, text: str, n_states: int, n_inputs: int):
        self.tokens: list[str] = []
        pos = 0
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if m is None or m.end() == pos:
                rest = text[pos:].strip()
                if not rest:
                    break
                raise ValueError(f"bad token near {rest[:10]!r} in {text!r}")
            self.tokens.append(m.group().strip())
            pos = m.end()
        self.pos = 0
        self.n_states = n_states
        self.n_inputs = n_inputs

    def peek(self) -> str | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self) -> str:
        tok = self.peek()
        if tok is None:
            raise ValueError("unexpected end of expression")
        self.pos += 1
        return tok

    def parse(self) -> Expr:
        e = self.expr()
        if self.peek() is not None:
            raise ValueError(f"trailing input at token {self.peek()!r}")
        return e

    def expr(self) -> Expr:
        node = self.term()
        while self.peek() in ("+", "-"):
            op = self.take()
            rhs = self.term()
            node = Add(node, rhs) if op == "+" else Sub(node, rhs)
        return node

    def term(self) -> Expr:
        node = self.factor()
        while self.peek() in ("*", "/"):
            op = self.take()
            rhs = self.factor()
            node = Mul(node, rhs) if op == "*" else Div(node, rhs)
        return node

    def factor(self) -> Expr:
        # Unary minus binds looser than '^': -x1^2 is -(x1^2).
        if self.peek() == "-":
            self.take()
            return Neg(self.factor())
        if self.peek() == "+":
            self.take()
            return self.factor()
        return self.postfix()

    def postfix(self) -> Expr:
        node = self.atom()
        while self.peek() == "^":
            self.take()
            node = Pow(node, self.exponent())
        return node

    def exponent(self) -> int:
        sign = 1
        if self.peek() == "-":
            self.take()
            sign = -1
        tok = self.take()
        if not re.fullmatch(r"\d+", tok):
            raise ValueError(f"power exponent must be an integer, got {tok!r}")
        return sign * int(tok)

    def atom(self) -> Expr:
        tok = self.take()
        if tok == "(":
            node = self.expr()
            if self.take() != ")":
                raise ValueError("expected closing parenthesis")
            return node
        if re.fullmatch(r"(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?", tok):
            return Const(float(tok))
        if tok in _FUNCS:
            if self.take() != "(":
                raise ValueError(f"expected '(' after {tok}")
            arg = self.expr()
            if self.take() != ")":
                raise ValueError(f"unclosed call to {tok}")
            return _FUNCS[tok](arg)
        m = re.fullmatch(r"([xu])(\d+)", tok)
        if m:
            kind, idx = m.group(1), int(m.group(2))
            if idx < 1:
                raise ValueError(f"variable indices start at 1: {tok!r}")
            if kind == "x":
                if idx > self.n_states:
                    raise ValueError(f"state variable {tok!r} beyond dimension")
                return Var(idx - 1)
            if idx > self.n_inputs:
                raise ValueError(f"input variable {tok!r} beyond input dimension")
            return Var(self.n_states + idx - 1)
        raise ValueError(f"unknown symbol {tok!r}")


def parse_expr(text: str, n_states: int, n_inputs: int = 0) -> Expr:
    """Parse an infix expression over x1..xn and u1..up into a tree."""
    return _Parser(text, n_states, n_inputs).parse()


# --------------------------------------------------------------------------
# Jacobian deviation bound
# --------------------------------------------------------------------------


def jacobian_error_bound(model, S: Box, J_center: np.ndarray, input_box: Box | None = None) -> float:
    """Upper bound on || (J_f(x) + J_f^T(x)) - (J_center + J_center^T) || over
    all x in S (and all inputs in input_box, when the model has inputs).

    Evaluates each symmetric-deviation entry with the natural interval
    extension and combines them with the entrywise-norm bound.
    """
    if not model.domain.contains_box(S):
        raise DomainExitError(
            f"enclosure {S.lo}..{S.hi} leaves the domain of model {model.name!r}"
        )
    if input_box is not None:
        eval_box = Box(
            np.concatenate([S.lo, input_box.lo]),
            np.concatenate([S.hi, input_box.hi]),
        )
    else:
        eval_box = S
    n = model.n
    Jc = np.asarray(J_center, dtype=float)
    sym_center = Jc + Jc.T
    vars_ = box_intervals(eval_box)
    bounds = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            iv = (
                model.jac_exprs[i][j].interval(vars_)
                + model.jac_exprs[j][i].interval(vars_)
                - Interval.point(sym_center[i, j])
            )
            if not iv.is_finite():
                raise UnboundedIntervalError(
                    f"unbounded deviation for Jacobian entry ({i}, {j}) over {S.lo}..{S.hi}"
                )
            bounds[i, j] = bounds[j, i] = iv.magnitude()
    return entrywise_norm_upper(bounds)
