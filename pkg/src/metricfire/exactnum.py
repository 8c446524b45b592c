"""Exact arithmetic in Q(sqrt 2).

Every length, offset and firing length in the engine is a :class:`QF2`,
``rat + coef*sqrt(2)`` with rational components.  Ordering is decided by
integer comparisons only; floats never enter a decision.
"""

from __future__ import annotations

import math
import re
from fractions import Fraction
from typing import Union

Number = Union["QF2", Fraction, int]


class ParseError(ValueError):
    """Malformed number text.  ``pos`` is the 0-based offending column."""

    def __init__(self, message: str, text: str, pos: int):
        super().__init__(f"{message} at position {pos} in {text!r}")
        self.text = text
        self.pos = pos


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    raise TypeError(f"expected int or Fraction, got {type(x).__name__}")


class QF2:
    """The number ``rat + coef*sqrt(2)``; immutable, hashable, exactly ordered."""

    __slots__ = ("rat", "coef")

    def __init__(self, rat=0, coef=0):
        object.__setattr__(self, "rat", _frac(rat))
        object.__setattr__(self, "coef", _frac(coef))

    def __setattr__(self, name, value):
        raise AttributeError("QF2 is immutable")

    @classmethod
    def of(cls, x: Number) -> "QF2":
        if isinstance(x, QF2):
            return x
        if isinstance(x, (int, Fraction)):
            return cls(x, 0)
        if isinstance(x, str):
            return parse(x)
        raise TypeError(f"cannot convert {type(x).__name__} to QF2")

    # ---- arithmetic -------------------------------------------------
    def __add__(self, other):
        try:
            o = QF2.of(other)
        except TypeError:
            return NotImplemented
        return QF2(self.rat + o.rat, self.coef + o.coef)

    __radd__ = __add__

    def __sub__(self, other):
        try:
            o = QF2.of(other)
        except TypeError:
            return NotImplemented
        return QF2(self.rat - o.rat, self.coef - o.coef)

    def __rsub__(self, other):
        try:
            o = QF2.of(other)
        except TypeError:
            return NotImplemented
        return o - self

    def __neg__(self):
        return QF2(-self.rat, -self.coef)

    def __pos__(self):
        return self

    def __mul__(self, other):
        try:
            o = QF2.of(other)
        except TypeError:
            return NotImplemented
        a, b, c, d = self.rat, self.coef, o.rat, o.coef
        return QF2(a * c + 2 * b * d, a * d + b * c)

    __rmul__ = __mul__

    def conjugate(self) -> "QF2":
        return QF2(self.rat, -self.coef)

    def norm(self) -> Fraction:
        """Field norm ``rat^2 - 2 coef^2``; zero only for zero."""
        return self.rat * self.rat - 2 * self.coef * self.coef

    def __truediv__(self, other):
        try:
            o = QF2.of(other)
        except TypeError:
            return NotImplemented
        if not o:
            raise ZeroDivisionError("QF2 division by zero")
        n = o.norm()
        num = self * o.conjugate()
        return QF2(num.rat / n, num.coef / n)

    def __rtruediv__(self, other):
        try:
            o = QF2.of(other)
        except TypeError:
            return NotImplemented
        return o / self

    def __pow__(self, k: int):
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return (1 / self) ** -k
        out, base = QF2(1), self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    # ---- ordering ---------------------------------------------------
    def sign(self) -> int:
        a, b = self.rat, self.coef
        if a >= 0 and b >= 0:
            return 0 if (a == 0 and b == 0) else 1
        if a <= 0 and b <= 0:
            return -1
        # opposite signs: compare a^2 with 2 b^2 (never equal, sqrt 2 is irrational)
        if a > 0:
            return 1 if a * a > 2 * b * b else -1
        return 1 if 2 * b * b > a * a else -1

    def cmp(self, other: Number) -> int:
        return (self - QF2.of(other)).sign()

    def __eq__(self, other):
        if isinstance(other, QF2):
            return self.rat == other.rat and self.coef == other.coef
        if isinstance(other, (int, Fraction)):
            return self.coef == 0 and self.rat == other
        return NotImplemented

    def __hash__(self):
        if self.coef == 0:
            return hash(self.rat)
        return hash((self.rat, self.coef))

    def __lt__(self, other):
        try:
            return self.cmp(other) < 0
        except TypeError:
            return NotImplemented

    def __le__(self, other):
        try:
            return self.cmp(other) <= 0
        except TypeError:
            return NotImplemented

    def __gt__(self, other):
        try:
            return self.cmp(other) > 0
        except TypeError:
            return NotImplemented

    def __ge__(self, other):
        try:
            return self.cmp(other) >= 0
        except TypeError:
            return NotImplemented

    def __bool__(self):
        return self.rat != 0 or self.coef != 0

    def __abs__(self):
        return -self if self.sign() < 0 else self

    def is_rational(self) -> bool:
        return self.coef == 0

    def __float__(self):
        # display only; never used by decision procedures
        return float(self.rat) + float(self.coef) * math.sqrt(2)

    def __repr__(self):
        return f"QF2({render(self)!r})"

    def __str__(self):
        return render(self)


ZERO = QF2(0)
ONE = QF2(1)
SQRT2 = QF2(0, 1)


def field_arith(x: Number, y: Number, op: str):
    """Dispatch one of ``add sub mul div neg cmp`` on QF2 operands."""
    x, y = QF2.of(x), QF2.of(y)
    if op == "add":
        return x + y
    if op == "sub":
        return x - y
    if op == "mul":
        return x * y
    if op == "div":
        return x / y
    if op == "neg":
        return -x
    if op == "cmp":
        return x.cmp(y)
    raise ValueError(f"unknown op {op!r}")


def _floor(x: QF2) -> int:
    """Exact floor of ``x``; a rational guess is corrected by exact comparisons."""
    if x.coef == 0:
        return math.floor(x.rat)
    # s*sqrt(2) = sign(s) * sqrt(2 s^2); estimate with an integer square root
    s = x.coef
    scale = 10**12
    root = math.isqrt(2 * s.numerator * s.numerator * scale * scale // (s.denominator * s.denominator))
    est = x.rat + (Fraction(root, scale) if s > 0 else -Fraction(root, scale))
    guess = math.floor(est)
    while QF2(guess) > x:
        guess -= 1
    while QF2(guess + 1) <= x:
        guess += 1
    return guess


def floor_ratio(b: Number, a: Number) -> int:
    """Largest ``n`` with ``n*a <= b``: the Euclid quotient of ``b`` by ``a``."""
    a, b = QF2.of(a), QF2.of(b)
    if a.sign() <= 0:
        raise ValueError(f"floor_ratio needs a > 0, got {a}")
    if b.sign() < 0:
        raise ValueError(f"floor_ratio needs b >= 0, got {b}")
    n = _floor(b / a)
    assert n * a <= b < (n + 1) * a
    return n


def geometric_sum(first: Number, ratio: Number) -> QF2:
    """``first / (1 - ratio)``, the sum of ``first * ratio**i`` over i >= 0."""
    first, ratio = QF2.of(first), QF2.of(ratio)
    if ratio.sign() < 0 or ratio >= 1:
        raise ValueError(f"geometric_sum needs 0 <= ratio < 1, got {ratio}")
    return first / (ONE - ratio)


# ---- text form ----------------------------------------------------------

_RAT = r"-?\d+(?:/\d+)?"
_VALUE = re.compile(rf"({_RAT})(?:\+({_RAT})\*sqrt\(2\))?|({_RAT})\*sqrt\(2\)")
_RAT_RE = re.compile(_RAT)


def _parse_rat(text: str, start: int, end: int, full: str) -> Fraction:
    chunk = text[start:end]
    if "/" in chunk:
        num, den = chunk.split("/")
        if int(den) == 0:
            raise ParseError("zero denominator", full, start + len(num) + 1)
        return Fraction(int(num), int(den))
    return Fraction(int(chunk))


def parse(text: str) -> QF2:
    """Parse ``rat``, ``rat+rat*sqrt(2)`` or ``rat*sqrt(2)``."""
    if not isinstance(text, str):
        raise TypeError("parse expects str")
    m = _VALUE.fullmatch(text)
    if m is None:
        # longest valid prefix locates the error
        pos = 0
        pm = _RAT_RE.match(text)
        if pm:
            pos = pm.end()
            rest = text[pos:]
            for tail in ("*sqrt(2)", "+"):
                if rest.startswith(tail):
                    pos += len(tail)
                    break
        raise ParseError("malformed number", text, min(pos, len(text)))
    if m.group(3) is not None:
        return QF2(0, _parse_rat(text, m.start(3), m.end(3), text))
    rat = _parse_rat(text, m.start(1), m.end(1), text)
    coef = Fraction(0)
    if m.group(2) is not None:
        coef = _parse_rat(text, m.start(2), m.end(2), text)
    return QF2(rat, coef)


def _render_rat(x: Fraction) -> str:
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


def render(x: Number) -> str:
    x = QF2.of(x)
    if x.coef == 0:
        return _render_rat(x.rat)
    if x.rat == 0:
        return f"{_render_rat(x.coef)}*sqrt(2)"
    return f"{_render_rat(x.rat)}+{_render_rat(x.coef)}*sqrt(2)"


def approx(x: Number, digits: int = 6) -> str:
    """Decimal approximation for human-readable reports (marked ``~``)."""
    return f"~{float(QF2.of(x)):.{digits}f}"
