"""Exact expression trees in one real variable ``u``.

Nodes are constants, the variable, n-ary sums and products, negation,
integer powers and quotients.  The node set is closed under
differentiation, so derivatives of any order are again trees.  Besides
pointwise (numpy-vectorised) evaluation every tree can be evaluated in
interval arithmetic, which the hypothesis checker uses to prove sign
conditions and non-vanishing denominators on whole intervals.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial

from .errors import DomainError, ParseError


# ---------------------------------------------------------------- intervals

def _down(x):
    return np.nextafter(x, -np.inf)


def _up(x):
    return np.nextafter(x, np.inf)


@dataclass(frozen=True)
class Interval:
    """Closed interval with outward rounding after every operation."""

    lo: float
    hi: float

    @staticmethod
    def point(x):
        return Interval(float(x), float(x))

    def __add__(self, other):
        return Interval(_down(self.lo + other.lo), _up(self.hi + other.hi))

    def __neg__(self):
        return Interval(-self.hi, -self.lo)

    def __mul__(self, other):
        p = (self.lo * other.lo, self.lo * other.hi, self.hi * other.lo, self.hi * other.hi)
        return Interval(_down(min(p)), _up(max(p)))

    def __pow__(self, n: int):
        if n == 0:
            return Interval(1.0, 1.0)
        if n < 0:
            return Interval(1.0, 1.0) / (self ** (-n))
        a, b = self.lo ** n, self.hi ** n
        if n % 2 == 0:
            if self.lo <= 0.0 <= self.hi:
                return Interval(0.0, _up(max(a, b)))
            return Interval(_down(min(a, b)), _up(max(a, b)))
        return Interval(_down(a), _up(b))

    def __truediv__(self, other):
        if other.lo <= 0.0 <= other.hi:
            raise DomainError(f"denominator enclosure [{other.lo}, {other.hi}] contains zero")
        inv = Interval(_down(1.0 / other.hi), _up(1.0 / other.lo))
        return self * inv

    def contains_zero(self):
        return self.lo <= 0.0 <= self.hi

    @property
    def width(self):
        return self.hi - self.lo


# -------------------------------------------------------------------- nodes

class Expr:
    """Base node.  Subclasses are immutable."""

    def __call__(self, u):
        return self.evaluate(u)

    def evaluate(self, u):
        raise NotImplementedError

    def enclose(self, iv: Interval) -> Interval:
        raise NotImplementedError

    def diff(self) -> Expr:
        raise NotImplementedError

    def children(self):
        return ()

    def to_prefix(self):
        raise NotImplementedError

    def denominators(self):
        """Yield every denominator subtree, outermost first."""
        if isinstance(self, Div):
            yield self.den
        for ch in self.children():
            yield from ch.denominators()

    def is_polynomial(self):
        return not any(True for _ in self.denominators())

    def to_polynomial(self) -> Polynomial:
        raise NotImplementedError

    # operator sugar for building models in code
    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return add(self, neg(as_expr(other)))

    def __rsub__(self, other):
        return add(as_expr(other), neg(self))

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __neg__(self):
        return neg(self)

    def __truediv__(self, other):
        return div(self, as_expr(other))

    def __rtruediv__(self, other):
        return div(as_expr(other), self)

    def __pow__(self, n):
        return power(self, n)

    def __repr__(self):
        return f"Expr({self.to_prefix()!r})"


class Const(Expr):
    __slots__ = ("value",)

    def __init__(self, value):
        self.value = float(value)

    def evaluate(self, u):
        return np.full_like(np.asarray(u, dtype=float), self.value) if np.ndim(u) else self.value

    def enclose(self, iv):
        return Interval.point(self.value)

    def diff(self):
        return ZERO

    def to_prefix(self):
        v = self.value
        return int(v) if v.is_integer() and abs(v) < 2**53 else v

    def to_polynomial(self):
        return Polynomial([self.value])

    def __str__(self):
        return repr(self.to_prefix())


class Var(Expr):
    __slots__ = ()

    def evaluate(self, u):
        return np.asarray(u, dtype=float) if np.ndim(u) else float(u)

    def enclose(self, iv):
        return iv

    def diff(self):
        return ONE

    def to_prefix(self):
        return "u"

    def to_polynomial(self):
        return Polynomial([0.0, 1.0])

    def __str__(self):
        return "u"


class Add(Expr):
    __slots__ = ("terms",)

    def __init__(self, terms):
        self.terms = tuple(terms)

    def children(self):
        return self.terms

    def evaluate(self, u):
        out = self.terms[0].evaluate(u)
        for t in self.terms[1:]:
            out = out + t.evaluate(u)
        return out

    def enclose(self, iv):
        out = self.terms[0].enclose(iv)
        for t in self.terms[1:]:
            out = out + t.enclose(iv)
        return out

    def diff(self):
        return add(*(t.diff() for t in self.terms))

    def to_prefix(self):
        return ["add", *(t.to_prefix() for t in self.terms)]

    def to_polynomial(self):
        return sum((t.to_polynomial() for t in self.terms), Polynomial([0.0]))

    def __str__(self):
        return "(" + " + ".join(str(t) for t in self.terms) + ")"


class Mul(Expr):
    __slots__ = ("factors",)

    def __init__(self, factors):
        self.factors = tuple(factors)

    def children(self):
        return self.factors

    def evaluate(self, u):
        out = self.factors[0].evaluate(u)
        for t in self.factors[1:]:
            out = out * t.evaluate(u)
        return out

    def enclose(self, iv):
        out = self.factors[0].enclose(iv)
        for t in self.factors[1:]:
            out = out * t.enclose(iv)
        return out

    def diff(self):
        terms = []
        for i, fi in enumerate(self.factors):
            rest = self.factors[:i] + self.factors[i + 1:]
            terms.append(mul(fi.diff(), *rest))
        return add(*terms)

    def to_prefix(self):
        return ["mul", *(t.to_prefix() for t in self.factors)]

    def to_polynomial(self):
        out = Polynomial([1.0])
        for t in self.factors:
            out = out * t.to_polynomial()
        return out

    def __str__(self):
        return "*".join(str(t) for t in self.factors)


class Neg(Expr):
    __slots__ = ("arg",)

    def __init__(self, arg):
        self.arg = arg

    def children(self):
        return (self.arg,)

    def evaluate(self, u):
        return -self.arg.evaluate(u)

    def enclose(self, iv):
        return -self.arg.enclose(iv)

    def diff(self):
        return neg(self.arg.diff())

    def to_prefix(self):
        return ["neg", self.arg.to_prefix()]

    def to_polynomial(self):
        return -self.arg.to_polynomial()

    def __str__(self):
        return f"-({self.arg})"


class Pow(Expr):
    __slots__ = ("base", "n")

    def __init__(self, base, n):
        self.base = base
        self.n = int(n)

    def children(self):
        return (self.base,)

    def evaluate(self, u):
        b = self.base.evaluate(u)
        if self.n < 0:
            if np.any(np.asarray(b) == 0):
                raise DomainError("negative power of zero")
            return 1.0 / b ** (-self.n)
        return b ** self.n

    def enclose(self, iv):
        return self.base.enclose(iv) ** self.n

    def diff(self):
        return mul(Const(self.n), power(self.base, self.n - 1), self.base.diff())

    def to_prefix(self):
        return ["pow", self.base.to_prefix(), self.n]

    def to_polynomial(self):
        if self.n < 0:
            raise ValueError("negative power is not polynomial")
        return self.base.to_polynomial() ** self.n

    def denominators(self):
        if self.n < 0:
            yield self.base
        yield from self.base.denominators()

    def __str__(self):
        return f"({self.base})^{self.n}"


class Div(Expr):
    __slots__ = ("num", "den")

    def __init__(self, num, den):
        self.num = num
        self.den = den

    def children(self):
        return (self.num, self.den)

    def evaluate(self, u):
        d = self.den.evaluate(u)
        if np.any(np.asarray(d) == 0):
            raise DomainError(f"denominator {self.den} vanishes")
        return self.num.evaluate(u) / d

    def enclose(self, iv):
        return self.num.enclose(iv) / self.den.enclose(iv)

    def diff(self):
        top = add(mul(self.num.diff(), self.den), neg(mul(self.num, self.den.diff())))
        return div(top, power(self.den, 2))

    def to_prefix(self):
        return ["div", self.num.to_prefix(), self.den.to_prefix()]

    def to_polynomial(self):
        raise ValueError("quotient is not polynomial")

    def __str__(self):
        return f"({self.num})/({self.den})"


ZERO = Const(0.0)
ONE = Const(1.0)
U = Var()


# ------------------------------------------------- smart constructors
# Only trivial folding (zeros, ones, constant subtrees); no general
# simplification is attempted.

def _is_const(e, value=None):
    return isinstance(e, Const) and (value is None or e.value == value)


def as_expr(x):
    if isinstance(x, Expr):
        return x
    if isinstance(x, (int, float, np.floating, np.integer)):
        return Const(x)
    raise TypeError(f"cannot convert {x!r} to an expression")


def add(*terms):
    flat, const = [], 0.0
    for t in terms:
        if isinstance(t, Add):
            parts = t.terms
        else:
            parts = (t,)
        for p in parts:
            if _is_const(p):
                const += p.value
            else:
                flat.append(p)
    if const != 0.0 or not flat:
        flat.append(Const(const))
    return flat[0] if len(flat) == 1 else Add(flat)


def mul(*factors):
    flat, const = [], 1.0
    for f in factors:
        parts = f.factors if isinstance(f, Mul) else (f,)
        for p in parts:
            if _is_const(p):
                const *= p.value
            else:
                flat.append(p)
    if const == 0.0:
        return ZERO
    if const != 1.0 or not flat:
        flat.insert(0, Const(const))
    return flat[0] if len(flat) == 1 else Mul(flat)


def neg(a):
    if _is_const(a):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def power(base, n):
    if int(n) != n:
        raise ValueError("only integer powers are supported")
    n = int(n)
    if n == 0:
        return ONE
    if n == 1:
        return base
    if _is_const(base):
        return Const(base.value ** n)
    return Pow(base, n)


def div(num, den):
    if _is_const(den, 0.0):
        raise DomainError("division by the constant zero")
    if _is_const(num, 0.0):
        return ZERO
    if _is_const(den, 1.0):
        return num
    if _is_const(num) and _is_const(den):
        return Const(num.value / den.value)
    return Div(num, den)


# --------------------------------------------------------------- parsing

_ARITY = {"neg": 1, "pow": 2, "div": 2}


def from_prefix(obj, path="expr") -> Expr:
    """Build a tree from a nested prefix array such as ``["add", "u", 1]``."""
    if isinstance(obj, bool):
        raise ParseError(f"boolean {obj!r} is not an expression", path=path)
    if isinstance(obj, (int, float)):
        if not math.isfinite(obj):
            raise ParseError("non-finite constant", path=path)
        return Const(obj)
    if isinstance(obj, str):
        if obj == "u":
            return U
        raise ParseError(f"unknown symbol {obj!r} (only 'u' is allowed)", path=path)
    if not isinstance(obj, list) or not obj:
        raise ParseError(f"expected number, 'u' or non-empty list, got {obj!r}", path=path)
    op, args = obj[0], obj[1:]
    if op not in ("add", "mul", "neg", "pow", "div"):
        raise ParseError(f"unknown operator {op!r}", path=path)
    if op in _ARITY and len(args) != _ARITY[op]:
        raise ParseError(f"{op!r} takes {_ARITY[op]} arguments, got {len(args)}", path=path)
    if op in ("add", "mul") and len(args) < 1:
        raise ParseError(f"{op!r} needs at least one argument", path=path)
    if op == "pow":
        n = args[1]
        if isinstance(n, bool) or not isinstance(n, (int, float)) or int(n) != n:
            raise ParseError(f"exponent must be an integer, got {n!r}", path=f"{path}[2]")
        return power(from_prefix(args[0], f"{path}[1]"), int(n))
    kids = [from_prefix(a, f"{path}[{i + 1}]") for i, a in enumerate(args)]
    if op == "add":
        return add(*kids)
    if op == "mul":
        return mul(*kids)
    if op == "neg":
        return neg(kids[0])
    try:
        return div(*kids)
    except DomainError as exc:
        raise ParseError(str(exc), path=path) from None
