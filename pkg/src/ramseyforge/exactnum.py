"""Exact numbers and certified sign determination for log expressions.

Ground arithmetic is Python ``int`` and :class:`fractions.Fraction`; floats
are rejected everywhere. Expressions built from rational constants, the four
field operations and logarithms are represented by small immutable trees
(:class:`LogExpr`). The sign of such a tree is decided either

* exactly, when the tree is a rational-coefficient combination
  ``sum c_i*log2(d_i) + r`` of logs of rationals (cleared to an integer
  power comparison), or
* by outward-rounded interval evaluation with doubling precision; this
  path never reports zero.
"""

from __future__ import annotations

import contextlib
import contextvars
import enum
import functools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

from mpmath.ctx_iv import MPIntervalContext
from mpmath.libmp import mpf_sign, to_rational

from .errors import DomainError

ExactNumber = Union[int, Fraction]

DEFAULT_START_BITS = 64
DEFAULT_MAX_BITS = 4096
_MAX_BITS = contextvars.ContextVar("ramseyforge_max_bits", default=DEFAULT_MAX_BITS)
# cleared products larger than this many bits go to the interval path
EXACT_BIT_LIMIT = 1 << 21


def exact(x) -> ExactNumber:
    """Coerce ``x`` to an exact number.

    Accepts ``int``, ``Fraction`` and strings like ``"12"`` or ``"-7/3"``.
    Fractions with denominator 1 come back as ``int``.
    """
    if isinstance(x, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(x, int):
        return x
    if isinstance(x, Fraction):
        return x.numerator if x.denominator == 1 else x
    if isinstance(x, str):
        s = x.strip()
        if "/" in s:
            num, den = s.split("/", 1)
            f = Fraction(int(num), int(den))
        else:
            f = Fraction(int(s))
        return f.numerator if f.denominator == 1 else f
    raise TypeError(f"not an exact number: {x!r} ({type(x).__name__})")


def format_exact(x: ExactNumber) -> str:
    x = exact(x)
    if isinstance(x, int):
        return str(x)
    return f"{x.numerator}/{x.denominator}"


def is_power_of_two(x: ExactNumber) -> bool:
    x = Fraction(x)
    if x <= 0:
        return False
    n, d = x.numerator, x.denominator
    return (n & (n - 1)) == 0 and (d & (d - 1)) == 0


def exact_log2(x: ExactNumber) -> int:
    """log2 of an exact power of two (possibly negative exponent)."""
    x = Fraction(x)
    return (x.numerator.bit_length() - 1) - (x.denominator.bit_length() - 1)


# ---------------------------------------------------------------------------
# expression trees


class LogExpr:
    """Base class of expression nodes. Nodes are immutable and hashable."""

    __slots__ = ()

    def __add__(self, other):
        return Add(self, as_expr(other))

    def __radd__(self, other):
        return Add(as_expr(other), self)

    def __sub__(self, other):
        return Sub(self, as_expr(other))

    def __rsub__(self, other):
        return Sub(as_expr(other), self)

    def __mul__(self, other):
        return Mul(self, as_expr(other))

    def __rmul__(self, other):
        return Mul(as_expr(other), self)

    def __truediv__(self, other):
        return Div(self, as_expr(other))

    def __rtruediv__(self, other):
        return Div(as_expr(other), self)

    def __neg__(self):
        return Mul(Const(-1), self)


def _hash_fields(obj, *values):
    object.__setattr__(obj, "_h", hash((type(obj).__name__,) + values))


@dataclass(frozen=True, eq=True, repr=False)
class Const(LogExpr):
    value: ExactNumber
    _h: int = field(init=False, compare=False, default=0)

    def __post_init__(self):
        object.__setattr__(self, "value", exact(self.value))
        _hash_fields(self, self.value)

    def __hash__(self):
        return self._h

    def __repr__(self):
        return format_exact(self.value)


@dataclass(frozen=True, eq=True, repr=False)
class _Binary(LogExpr):
    left: LogExpr
    right: LogExpr
    _h: int = field(init=False, compare=False, default=0)

    def __post_init__(self):
        _hash_fields(self, self.left._h, self.right._h)

    def __hash__(self):
        return self._h

    def __repr__(self):
        return f"({self.left!r} {self._symbol} {self.right!r})"


class Add(_Binary):
    _symbol = "+"


class Sub(_Binary):
    _symbol = "-"


class Mul(_Binary):
    _symbol = "*"


class Div(_Binary):
    _symbol = "/"


@dataclass(frozen=True, eq=True, repr=False)
class Log(LogExpr):
    """Logarithm of ``arg`` to the exact base ``base`` (> 1)."""

    arg: LogExpr
    base: ExactNumber = 2
    _h: int = field(init=False, compare=False, default=0)

    def __post_init__(self):
        object.__setattr__(self, "base", exact(self.base))
        _hash_fields(self, self.arg._h, self.base)

    def __hash__(self):
        return self._h

    def __repr__(self):
        if self.base == 2:
            return f"log2({self.arg!r})"
        return f"log_{format_exact(self.base)}({self.arg!r})"


def as_expr(x) -> LogExpr:
    if isinstance(x, LogExpr):
        return x
    return Const(x)


def log2(x) -> Log:
    return Log(as_expr(x), 2)


def log(x, base) -> Log:
    return Log(as_expr(x), base)


# ---------------------------------------------------------------------------
# signs


class Sign(enum.Enum):
    NEGATIVE = -1
    ZERO = 0
    POSITIVE = 1
    UNDETERMINED = None


@dataclass(frozen=True)
class SignResult:
    sign: Sign
    precision_bits: int | None = None
    method: str = "exact"

    @property
    def determined(self) -> bool:
        return self.sign is not Sign.UNDETERMINED

    @property
    def value(self) -> int | None:
        """-1, 0, 1, or None when undetermined."""
        return self.sign.value

    def __str__(self):
        if self.sign is Sign.UNDETERMINED:
            return f"Undetermined({self.precision_bits} bits)"
        return self.sign.name.capitalize()


_EXACT = {s: SignResult(Sign(s), None, "exact") for s in (-1, 0, 1)}


def _sign_of(x) -> int:
    return (x > 0) - (x < 0)


# ---------------------------------------------------------------------------
# base normalisation


def _same_base_linear(expr: LogExpr):
    """Base T if ``expr`` is a constant-free linear combination of log_T terms."""
    if isinstance(expr, Log):
        return expr.base
    if isinstance(expr, (Add, Sub)):
        a = _same_base_linear(expr.left)
        b = _same_base_linear(expr.right)
        return a if a is not None and a == b else None
    if isinstance(expr, Mul):
        if isinstance(expr.left, Const):
            return _same_base_linear(expr.right)
        if isinstance(expr.right, Const):
            return _same_base_linear(expr.left)
    if isinstance(expr, Div) and isinstance(expr.right, Const) and expr.right.value != 0:
        return _same_base_linear(expr.left)
    return None


def _rebase_to_two(expr: LogExpr) -> LogExpr:
    """Replace every top-level log_T in a same-base linear form by log2."""
    if isinstance(expr, Log):
        return Log(normalize_log_base(expr.arg), 2)
    if isinstance(expr, (Add, Sub, Mul, Div)):
        return type(expr)(_rebase_to_two(expr.left), _rebase_to_two(expr.right))
    return expr


def _check_base(base):
    if Fraction(base) <= 1:
        raise DomainError(f"logarithm base must exceed 1, got {format_exact(base)}")


def normalize_log_base(expr: LogExpr) -> LogExpr:
    """Rewrite ``expr`` so that every logarithm has base 2.

    A quotient whose numerator and denominator are both constant-free
    linear combinations of logs to one common base is rewritten base-free
    (the ratio does not depend on the base). Any other ``log_T(x)`` becomes
    ``log2(x) / log2(T)``, with ``log2(T)`` folded to an exact integer when T
    is a power of two. Structurally non-positive constant log arguments
    raise :class:`DomainError`.
    """
    if isinstance(expr, Const):
        return expr
    if isinstance(expr, Log):
        _check_base(expr.base)
        arg = normalize_log_base(expr.arg)
        if isinstance(arg, Const) and arg.value <= 0:
            raise DomainError(f"log of non-positive constant {arg!r}")
        if expr.base == 2:
            return Log(arg, 2)
        if is_power_of_two(expr.base):
            return Div(Log(arg, 2), Const(exact_log2(expr.base)))
        return Div(Log(arg, 2), Log(Const(expr.base), 2))
    if isinstance(expr, Div):
        tb = _same_base_linear(expr.left)
        if tb is not None and tb == _same_base_linear(expr.right):
            _check_base(tb)
            return Div(_rebase_to_two(expr.left), _rebase_to_two(expr.right))
    if isinstance(expr, (Add, Sub, Mul, Div)):
        return type(expr)(normalize_log_base(expr.left), normalize_log_base(expr.right))
    raise TypeError(f"unknown expression node {expr!r}")


def _needs_normalizing(expr: LogExpr) -> bool:
    if isinstance(expr, Log):
        return expr.base != 2 or _needs_normalizing(expr.arg)
    if isinstance(expr, _Binary):
        return _needs_normalizing(expr.left) or _needs_normalizing(expr.right)
    return False


# ---------------------------------------------------------------------------
# exact multiplicative path


@functools.lru_cache(maxsize=1 << 16)
def _linear(expr: LogExpr):
    """Return ``(coeffs, const)`` with value sum(c*log2(d)) + const, or None.

    ``coeffs`` is a tuple of ``(d, c)`` pairs with rational d > 0.
    """
    if isinstance(expr, Const):
        return (), Fraction(expr.value)
    if isinstance(expr, Log):
        inner = _linear(expr.arg)
        if inner is None or inner[0]:
            return None
        d = inner[1]
        if d <= 0:
            raise DomainError(f"log of non-positive value {format_exact(d)}")
        if is_power_of_two(d):
            return (), Fraction(exact_log2(d))
        return ((d, Fraction(1)),), Fraction(0)
    if isinstance(expr, (Add, Sub)):
        a = _linear(expr.left)
        b = _linear(expr.right) if a is not None else None
        if b is None:
            return None
        s = 1 if isinstance(expr, Add) else -1
        acc = dict(a[0])
        for d, c in b[0]:
            acc[d] = acc.get(d, 0) + s * c
        return tuple((d, c) for d, c in acc.items() if c != 0), a[1] + s * b[1]
    if isinstance(expr, Mul):
        a = _linear(expr.left)
        b = _linear(expr.right) if a is not None else None
        if b is None:
            return None
        if a[0] and b[0]:
            return None
        if a[0]:
            a, b = b, a
        k = a[1]
        return tuple((d, c * k) for d, c in b[0] if c * k != 0), b[1] * k
    if isinstance(expr, Div):
        b = _linear(expr.right)
        if b is None or b[0] or b[1] == 0:
            return None
        a = _linear(expr.left)
        if a is None:
            return None
        k = b[1]
        return tuple((d, c / k) for d, c in a[0]), a[1] / k
    return None


def _exact_linear_sign(coeffs, const) -> int | None:
    if not coeffs:
        return _sign_of(const)
    lcm = const.denominator
    for _, c in coeffs:
        lcm = lcm * c.denominator // math.gcd(lcm, c.denominator)
    cost = abs(const * lcm)
    for d, c in coeffs:
        cost += abs(c * lcm) * (d.numerator.bit_length() + d.denominator.bit_length())
    if cost > EXACT_BIT_LIMIT:
        return None
    num, den = 1, 1
    for d, c in coeffs:
        e = int(c * lcm)
        if e > 0:
            num *= d.numerator**e
            den *= d.denominator**e
        else:
            num *= d.denominator ** (-e)
            den *= d.numerator ** (-e)
    r = int(const * lcm)
    if r > 0:
        num <<= r
    elif r < 0:
        den <<= -r
    return _sign_of(num - den)


# ---------------------------------------------------------------------------
# interval path


class _Imprecise(Exception):
    pass


def _iv_eval(expr: LogExpr, ctx, memo, ln2):
    hit = memo.get(expr)
    if hit is not None:
        return hit
    if isinstance(expr, Const):
        v = Fraction(expr.value)
        out = ctx.mpf(v.numerator) / ctx.mpf(v.denominator) if v.denominator != 1 else ctx.mpf(v.numerator)
    elif isinstance(expr, Log):
        x = _iv_eval(expr.arg, ctx, memo, ln2)
        lo, _ = x._mpi_
        if mpf_sign(lo) <= 0:
            raise _Imprecise
        out = ctx.log(x) / ln2
    else:
        a = _iv_eval(expr.left, ctx, memo, ln2)
        b = _iv_eval(expr.right, ctx, memo, ln2)
        if isinstance(expr, Add):
            out = a + b
        elif isinstance(expr, Sub):
            out = a - b
        elif isinstance(expr, Mul):
            out = a * b
        else:
            lo, hi = b._mpi_
            if mpf_sign(lo) <= 0 <= mpf_sign(hi):
                raise _Imprecise
            out = a / b
    memo[expr] = out
    return out


def interval_enclosure(expr: LogExpr, bits: int):
    """Certified enclosure ``(lo, hi)`` of the value at ``bits`` of working precision.

    Returns ``None`` when the precision is too low to evaluate (a log
    argument or divisor not yet separated from zero).
    """
    if _needs_normalizing(expr):
        expr = normalize_log_base(expr)
    ctx = MPIntervalContext()
    ctx.prec = bits
    try:
        iv = _iv_eval(expr, ctx, {}, ctx.log(2))
    except _Imprecise:
        return None
    lo, hi = iv._mpi_
    return Fraction(*to_rational(lo)), Fraction(*to_rational(hi))


def _interval_sign(expr: LogExpr, max_bits: int) -> SignResult:
    bits = DEFAULT_START_BITS
    reached = bits
    while bits <= max_bits:
        reached = bits
        ctx = MPIntervalContext()
        ctx.prec = bits
        try:
            iv = _iv_eval(expr, ctx, {}, ctx.log(2))
        except _Imprecise:
            iv = None
        if iv is not None:
            lo, hi = iv._mpi_
            if mpf_sign(lo) > 0:
                return SignResult(Sign.POSITIVE, bits, "interval")
            if mpf_sign(hi) < 0:
                return SignResult(Sign.NEGATIVE, bits, "interval")
        bits *= 2
    return SignResult(Sign.UNDETERMINED, reached, "interval")


# ---------------------------------------------------------------------------
# sign dispatcher


def _combine(a: SignResult, b: SignResult, divide: bool) -> SignResult:
    if divide and b.sign is Sign.ZERO:
        raise DomainError("division by an expression that is exactly zero")
    if a.sign is Sign.ZERO or (b.sign is Sign.ZERO and not divide):
        return _EXACT[0]
    if not (a.determined and b.determined):
        bits = max(a.precision_bits or 0, b.precision_bits or 0)
        return SignResult(Sign.UNDETERMINED, bits, "interval")
    s = a.sign.value * b.sign.value
    method = "exact" if a.method == b.method == "exact" else "interval"
    bits = max(a.precision_bits or 0, b.precision_bits or 0) or None
    return SignResult(Sign(s), bits, method)


def _log_args(expr: LogExpr, out: list):
    if isinstance(expr, Log):
        out.append(expr.arg)
        _log_args(expr.arg, out)
    elif isinstance(expr, _Binary):
        _log_args(expr.left, out)
        _log_args(expr.right, out)


@functools.lru_cache(maxsize=1 << 17)
def _sign(expr: LogExpr, max_bits: int) -> SignResult:
    if isinstance(expr, Const):
        return _EXACT[_sign_of(expr.value)]
    if isinstance(expr, (Mul, Div)):
        return _combine(_sign(expr.left, max_bits), _sign(expr.right, max_bits), isinstance(expr, Div))
    lin = _linear(expr)
    if lin is not None:
        s = _exact_linear_sign(*lin)
        if s is not None:
            return _EXACT[s]
    if isinstance(expr, Log):
        # log2(x) has the sign of x - 1
        return _sign(Sub(expr.arg, Const(1)), max_bits)
    return _interval_sign(expr, max_bits)


@contextlib.contextmanager
def precision_ceiling(bits: int):
    """Temporarily change the default ceiling used by :func:`eval_sign`."""
    if bits < DEFAULT_START_BITS:
        raise DomainError(f"precision ceiling must be at least {DEFAULT_START_BITS} bits")
    token = _MAX_BITS.set(bits)
    try:
        yield bits
    finally:
        _MAX_BITS.reset(token)


def eval_sign(expr: LogExpr, max_precision_bits: int | None = None) -> SignResult:
    """Sign of ``expr``: exact where possible, certified intervals otherwise.

    Every logarithm argument is first proven strictly positive; a provably
    non-positive argument raises :class:`DomainError`, an argument whose
    sign cannot be settled within the ceiling makes the result undetermined.
    Trees containing non-base-2 logs are normalized first.
    """
    if max_precision_bits is None:
        max_precision_bits = _MAX_BITS.get()
    expr = as_expr(expr)
    if _needs_normalizing(expr):
        expr = normalize_log_base(expr)
    args: list = []
    _log_args(expr, args)
    pending = None
    for arg in args:
        s = _sign(arg, max_precision_bits)
        if s.sign in (Sign.NEGATIVE, Sign.ZERO):
            raise DomainError(f"log argument is not positive: {arg!r}")
        if not s.determined:
            pending = s
    if pending is not None:
        return SignResult(Sign.UNDETERMINED, pending.precision_bits, "interval")
    return _sign(expr, max_precision_bits)
