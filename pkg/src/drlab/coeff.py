"""Exact arithmetic in the Gaussian rationals Q(i), plus Bernoulli numbers."""

from fractions import Fraction
from functools import lru_cache
import re

__all__ = ["GaussianRational", "qarith", "bernoulli", "as_gr", "ZERO", "ONE", "I"]


class GaussianRational:
    """An element re + im*i with ``re`` and ``im`` exact fractions.

    Instances are immutable and hashable.  Fractions keep themselves in lowest
    terms with positive denominators, so equality is structural.
    """

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        object.__setattr__(self, "re", re if type(re) is Fraction else Fraction(re))
        object.__setattr__(self, "im", im if type(im) is Fraction else Fraction(im))

    @classmethod
    def _raw(cls, re, im):
        obj = object.__new__(cls)
        object.__setattr__(obj, "re", re)
        object.__setattr__(obj, "im", im)
        return obj

    def __setattr__(self, name, value):
        raise AttributeError("GaussianRational is immutable")

    def __reduce__(self):
        return (GaussianRational, (self.re, self.im))

    # arithmetic
    def __add__(self, other):
        if type(other) is not GaussianRational:
            other = as_gr(other)
        return GaussianRational._raw(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other):
        if type(other) is not GaussianRational:
            other = as_gr(other)
        return GaussianRational._raw(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        return as_gr(other) - self

    def __neg__(self):
        return GaussianRational._raw(-self.re, -self.im)

    def __mul__(self, other):
        if type(other) is not GaussianRational:
            if isinstance(other, (int, Fraction)):
                return GaussianRational._raw(self.re * other, self.im * other)
            other = as_gr(other)
        a, b, c, d = self.re, self.im, other.re, other.im
        if not b:
            if not d:
                return GaussianRational._raw(a * c, b)
            return GaussianRational._raw(a * c, a * d)
        if not d:
            return GaussianRational._raw(a * c, b * c)
        return GaussianRational._raw(a * c - b * d, a * d + b * c)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if type(other) is not GaussianRational:
            other = as_gr(other)
        if not other:
            raise ZeroDivisionError("division by zero in Q(i)")
        return self * other.inverse()

    def __rtruediv__(self, other):
        return as_gr(other) / self

    def __pow__(self, n):
        if not isinstance(n, int):
            raise TypeError("only integer powers are supported")
        if n < 0:
            return self.inverse() ** (-n)
        result, base = ONE, self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def inverse(self):
        norm = self.re * self.re + self.im * self.im
        if not norm:
            raise ZeroDivisionError("0 has no inverse in Q(i)")
        return GaussianRational._raw(self.re / norm, -self.im / norm)

    def conj(self):
        return GaussianRational._raw(self.re, -self.im)

    def is_real(self):
        return not self.im

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __eq__(self, other):
        if type(other) is GaussianRational:
            return self.re == other.re and self.im == other.im
        if isinstance(other, (int, Fraction)):
            return not self.im and self.re == other
        return NotImplemented

    def __hash__(self):
        if not self.im:
            return hash(self.re)
        return hash((self.re, self.im))

    def __repr__(self):
        return f"GaussianRational({self})"

    def __str__(self):
        re_part, im_part = self.re, self.im
        if not im_part:
            return _frac_text(re_part)
        im_text = _frac_text(abs(im_part)) + "*I"
        if not re_part:
            return ("-" if im_part < 0 else "") + im_text
        return f"{_frac_text(re_part)} {'-' if im_part < 0 else '+'} {im_text}"

    @classmethod
    def parse(cls, text):
        """Parse ``a/b + c/d*I`` style text (either part may be absent)."""
        s = text.replace(" ", "")
        if not s:
            raise ValueError("empty coefficient text")
        pieces = re.findall(r"[+-]?[^+-]+", s)
        if "".join(pieces) != s:
            raise ValueError(f"malformed coefficient: {text!r}")
        total = ZERO
        for piece in pieces:
            sign = -1 if piece.startswith("-") else 1
            body = piece.lstrip("+-")
            if body == "I":
                total = total + GaussianRational(0, sign)
            elif body.endswith("*I"):
                total = total + GaussianRational(0, sign * _parse_frac(body[:-2]))
            else:
                total = total + GaussianRational(sign * _parse_frac(body))
        return total


def _frac_text(q):
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def _parse_frac(body):
    if not re.fullmatch(r"\d+(/\d+)?", body):
        raise ValueError(f"malformed rational: {body!r}")
    return Fraction(body)


def as_gr(x):
    if type(x) is GaussianRational:
        return x
    if isinstance(x, (int, Fraction)):
        return GaussianRational._raw(Fraction(x), Fraction(0))
    if isinstance(x, complex):
        raise TypeError("floating complex numbers are not exact")
    if isinstance(x, str):
        return GaussianRational.parse(x)
    raise TypeError(f"cannot convert {type(x).__name__} to GaussianRational")


ZERO = GaussianRational(0)
ONE = GaussianRational(1)
I = GaussianRational(0, 1)


def qarith(x, y, op):
    x, y = as_gr(x), as_gr(y)
    if op == "add":
        return x + y
    if op == "sub":
        return x - y
    if op == "mul":
        return x * y
    if op == "div":
        return x / y
    raise ValueError(f"unknown operation {op!r}")


@lru_cache(maxsize=None)
def bernoulli(n):
    """Bernoulli number B_n with the convention B_1 = -1/2.

    Uses the Akiyama-Tanigawa algorithm, which produces B_1 = +1/2; the sign
    is flipped for n = 1.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    row = []
    for m in range(n + 1):
        row.append(Fraction(1, m + 1))
        for j in range(m, 0, -1):
            row[j - 1] = j * (row[j - 1] - row[j])
    return -row[0] if n == 1 else row[0]
