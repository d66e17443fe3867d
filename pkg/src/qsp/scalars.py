"""Exact arithmetic in Q(v) where v^D = q.

A Scalar is stored as v^shift * num(v) / den(v) with num(0) != 0,
den(0) != 0, gcd(num, den) = 1 over Z[v] and den having a positive
leading coefficient.  Zero is stored as 0/1 with shift 0.  This form is
unique, so equality is a tuple comparison.
"""
from __future__ import annotations

import re
from fractions import Fraction
from functools import lru_cache
from math import gcd

from flint import fmpz_poly

_ROOT_ORDER = [1]


class NonIntegralExponent(ValueError):
    pass


class ScalarParseError(ValueError):
    pass


def root_order() -> int:
    return _ROOT_ORDER[0]


def set_root_order(D: int) -> None:
    if not isinstance(D, int) or D < 1:
        raise ValueError(f"root order must be a positive integer, got {D!r}")
    _ROOT_ORDER[0] = D
    _cached_qpow.cache_clear()


class root_order_ctx:
    """Temporarily switch the root order D."""

    def __init__(self, D: int):
        self.D = D

    def __enter__(self):
        self.old = root_order()
        set_root_order(self.D)
        return self

    def __exit__(self, *exc):
        set_root_order(self.old)
        return False


_ZERO_POLY = fmpz_poly([])
_ONE_POLY = fmpz_poly([1])


def _low_degree(p: fmpz_poly) -> int:
    if p[0] != 0 or p.is_zero():
        return 0
    k = 1
    while p[k] == 0:
        k += 1
    return k


class Scalar:
    __slots__ = ("num", "den", "shift", "_key")

    def __init__(self, num=0, den=None, shift: int = 0, _raw: bool = False):
        if _raw:
            self.num, self.den, self.shift = num, den, shift
            self._key = None
            return
        if isinstance(num, Fraction):
            if den is not None:
                raise TypeError("Fraction numerator takes no denominator")
            num, den = fmpz_poly([num.numerator]), fmpz_poly([num.denominator])
        elif isinstance(num, int):
            num = fmpz_poly([num])
        elif isinstance(num, (list, tuple)):
            num = fmpz_poly(list(num))
        if den is None:
            den = _ONE_POLY
        elif isinstance(den, int):
            den = fmpz_poly([den])
        elif isinstance(den, (list, tuple)):
            den = fmpz_poly(list(den))
        if den.is_zero():
            raise ZeroDivisionError("zero denominator")
        self.num, self.den, self.shift = _normalize(num, den, shift)
        self._key = None

    # construction helpers
    @staticmethod
    def monomial(c: int, k: int) -> "Scalar":
        if c == 0:
            return ZERO
        return Scalar(fmpz_poly([c]), _ONE_POLY, k, _raw=True)

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_one(self) -> bool:
        return self.shift == 0 and self.num.is_one() and self.den.is_one()

    def is_laurent(self) -> bool:
        return self.den.is_one()

    def key(self):
        if self._key is None:
            self._key = (self.shift, tuple(int(c) for c in self.num.coeffs()),
                         tuple(int(c) for c in self.den.coeffs()))
        return self._key

    def __eq__(self, other):
        if isinstance(other, int):
            other = Scalar(other)
        if not isinstance(other, Scalar):
            return NotImplemented
        return (self.shift == other.shift and self.num == other.num
                and self.den == other.den)

    def __ne__(self, other):
        r = self.__eq__(other)
        return r if r is NotImplemented else not r

    def __hash__(self):
        return hash(self.key())

    def __bool__(self):
        return not self.num.is_zero()

    # arithmetic
    def __add__(self, other):
        if not isinstance(other, Scalar):
            if isinstance(other, int):
                other = Scalar(other)
            else:
                return NotImplemented
        if self.num.is_zero():
            return other
        if other.num.is_zero():
            return self
        s1, s2 = self.shift, other.shift
        m = min(s1, s2)
        n1 = self.num if s1 == m else self.num.left_shift(s1 - m)
        n2 = other.num if s2 == m else other.num.left_shift(s2 - m)
        if self.den == other.den:
            return _make(n1 + n2, self.den, m)
        return _make(n1 * other.den + n2 * self.den, self.den * other.den, m)

    __radd__ = __add__

    def __neg__(self):
        if self.num.is_zero():
            return self
        return Scalar(-self.num, self.den, self.shift, _raw=True)

    def __sub__(self, other):
        if isinstance(other, int):
            other = Scalar(other)
        if not isinstance(other, Scalar):
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Scalar):
            if isinstance(other, int):
                if other == 0:
                    return ZERO
                return Scalar(self.num * other, self.den, self.shift) if other != 1 else self
            return NotImplemented
        if self.num.is_zero() or other.num.is_zero():
            return ZERO
        if self.den.is_one() and other.den.is_one():
            return Scalar(self.num * other.num, _ONE_POLY,
                          self.shift + other.shift, _raw=True)
        return _make(self.num * other.num, self.den * other.den,
                     self.shift + other.shift)

    __rmul__ = __mul__

    def inverse(self) -> "Scalar":
        if self.num.is_zero():
            raise ZeroDivisionError("inverse of zero scalar")
        num, den = self.den, self.num
        if den.leading_coefficient() < 0:
            num, den = -num, -den
        return Scalar(num, den, -self.shift, _raw=True)

    def __truediv__(self, other):
        if isinstance(other, int):
            other = Scalar(other)
        if not isinstance(other, Scalar):
            return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other):
        return Scalar(other) * self.inverse() if isinstance(other, int) else NotImplemented

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        result = ONE
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def bar(self) -> "Scalar":
        return bar(self)

    def __repr__(self):
        return f"Scalar({self})"

    def __str__(self):
        return to_string(self)


def _deflation(p: fmpz_poly) -> int:
    return 0 if p.degree() <= 0 else p.deflation()[1]


def _normalize(num: fmpz_poly, den: fmpz_poly, shift: int):
    if num.is_zero():
        return _ZERO_POLY, _ONE_POLY, 0
    a = _low_degree(num)
    if a:
        num = num.right_shift(a)
        shift += a
    b = _low_degree(den)
    if b:
        den = den.right_shift(b)
        shift -= b
    if not den.is_one():
        # gcd(p(x^k), r(x^k)) = gcd(p, r)(x^k); most scalars only use every D-th power of v
        k = gcd(_deflation(num), _deflation(den))
        if k > 1:
            n0, d0 = num.deflate(k), den.deflate(k)
            g = n0.gcd(d0)
            if not g.is_one():
                num = (n0 // g).inflate(k)
                den = (d0 // g).inflate(k)
        else:
            g = num.gcd(den)
            if not g.is_one():
                num = num // g
                den = den // g
        if den.leading_coefficient() < 0:
            num, den = -num, -den
    return num, den, shift


def _make(num, den, shift) -> Scalar:
    n, d, s = _normalize(num, den, shift)
    return Scalar(n, d, s, _raw=True)


def dot(pairs) -> "Scalar":
    """Sum of x*y over pairs, reducing once per distinct denominator."""
    groups = []  # [den, num, shift]
    for x, y in pairs:
        if x.num.is_zero() or y.num.is_zero():
            continue
        n = x.num * y.num
        if x.den.is_one():
            d = y.den
        elif y.den.is_one():
            d = x.den
        else:
            d = x.den * y.den
        sh = x.shift + y.shift
        for g in groups:
            if g[0] == d:
                if sh < g[2]:
                    g[1] = g[1].left_shift(g[2] - sh) + n
                    g[2] = sh
                elif sh > g[2]:
                    g[1] = g[1] + n.left_shift(sh - g[2])
                else:
                    g[1] = g[1] + n
                break
        else:
            groups.append([d, n, sh])
    acc = ZERO
    for d, n, sh in groups:
        acc = acc + _make(n, d, sh)
    return acc


ZERO = Scalar(_ZERO_POLY, _ONE_POLY, 0, _raw=True)
ONE = Scalar(_ONE_POLY, _ONE_POLY, 0, _raw=True)


def S(x) -> Scalar:
    """Coerce an int, Fraction or Scalar to a Scalar."""
    if isinstance(x, Scalar):
        return x
    if isinstance(x, (int, Fraction)):
        return Scalar(x)
    if isinstance(x, str):
        return parse(x)
    raise TypeError(f"cannot coerce {x!r} to Scalar")


def vpow(k: int) -> Scalar:
    return Scalar(_ONE_POLY, _ONE_POLY, k, _raw=True)


@lru_cache(maxsize=4096)
def _cached_qpow(e: Fraction) -> Scalar:
    D = root_order()
    k = e * D
    if k.denominator != 1:
        raise NonIntegralExponent(f"q^{e} needs root order divisible by {e.denominator}, have D={D}")
    return vpow(int(k))


def qpow(e) -> Scalar:
    """q^e for a rational exponent e, i.e. v^(e*D)."""
    return _cached_qpow(Fraction(e))


def q() -> Scalar:
    return qpow(1)


def _reverse(p: fmpz_poly) -> fmpz_poly:
    c = p.coeffs()
    return fmpz_poly(c[::-1])


def bar(x: Scalar) -> Scalar:
    """Substitute v -> 1/v."""
    if x.num.is_zero():
        return x
    # v^s n(v)/d(v) -> v^-s n(1/v)/d(1/v) = v^(-s - deg n + deg d) rev(n)/rev(d)
    dn, dd = x.num.degree(), x.den.degree()
    return _make(_reverse(x.num), _reverse(x.den), -x.shift - dn + dd)


def nth_root(x: Scalar, n: int) -> Scalar:
    """Exact n-th root of a monomial c*v^k; raises ValueError if none exists."""
    if n == 1:
        return x
    if x.is_zero():
        return x
    if not (x.num.degree() == 0 and x.den.degree() == 0):
        raise ValueError(f"no exact {n}-th root of non-monomial {x}")
    c = Fraction(int(x.num.coeffs()[0]), int(x.den.coeffs()[0]))
    if x.shift % n:
        raise ValueError(f"no exact {n}-th root of {x} in Q(v)")
    sign = 1
    if c < 0:
        if n % 2 == 0:
            raise ValueError(f"no real {n}-th root of {x}")
        sign, c = -1, -c
    rn, rd = _int_root(c.numerator, n), _int_root(c.denominator, n)
    if rn is None or rd is None:
        raise ValueError(f"no exact {n}-th root of coefficient {c}")
    return Scalar(Fraction(sign * rn, rd)) * vpow(x.shift // n)


def _int_root(a: int, n: int):
    r = round(a ** (1.0 / n))
    for cand in (r - 1, r, r + 1):
        if cand >= 0 and cand ** n == a:
            return cand
    return None


def power_rational(x: Scalar, e) -> Scalar:
    """x^e for rational e, taking roots of monomials where needed."""
    e = Fraction(e)
    base = x ** e.numerator if e.numerator >= 0 else x.inverse() ** (-e.numerator)
    return nth_root(base, e.denominator)


# q-combinatorics in q_i = q^eps


def qint(k: int, eps: int = 1) -> Scalar:
    """Balanced q-integer [k]_{q_i} = (q_i^k - q_i^-k)/(q_i - q_i^-1)."""
    if k == 0:
        return ZERO
    sgn = 1 if k > 0 else -1
    k = abs(k)
    total = ZERO
    for j in range(k):
        total = total + qpow(eps * (k - 1 - 2 * j))
    return total if sgn > 0 else -total


def qfact(n: int, eps: int = 1) -> Scalar:
    r = ONE
    for k in range(1, n + 1):
        r = r * qint(k, eps)
    return r


def qbinom(n: int, r: int, eps: int = 1) -> Scalar:
    if not 0 <= r <= n:
        raise ValueError("qbinom needs 0 <= r <= n")
    return qfact(n, eps) / (qfact(r, eps) * qfact(n - r, eps))


# serialization

def _poly_terms(p: fmpz_poly, shift: int, sym: str):
    c = p.coeffs()
    terms = []
    for k in range(len(c) - 1, -1, -1):
        if c[k] != 0:
            terms.append(f"{int(c[k])}*{sym}^{k + shift}")
    return " + ".join(terms) if terms else "0"


def to_string(x: Scalar) -> str:
    """Canonical 'num/den' form with monomials 'c*v^k' in decreasing degree."""
    sym = "q" if root_order() == 1 else "v"
    return f"{_poly_terms(x.num, x.shift, sym)}/{_poly_terms(x.den, 0, sym)}"


_TERM = re.compile(r"^\s*(-?\d+)\*([vq])\^(-?\d+)\s*$")


def _parse_poly(text: str):
    text = text.strip()
    if text == "0":
        return {}
    out = {}
    for part in text.split(" + "):
        m = _TERM.match(part)
        if not m:
            raise ScalarParseError(f"bad monomial {part!r}")
        c, sym, k = int(m.group(1)), m.group(2), int(m.group(3))
        if sym == "q" and root_order() != 1:
            k *= root_order()
        out[k] = out.get(k, 0) + c
    return out


def _dict_to_scalar(d) -> Scalar:
    if not d:
        return ZERO
    lo = min(d)
    coeffs = [0] * (max(d) - lo + 1)
    for k, c in d.items():
        coeffs[k - lo] = c
    return Scalar(fmpz_poly(coeffs), _ONE_POLY, lo)


_CANON_TERM = r"-?\d+\*[qv]\^-?\d+"
_CANON_POLY = rf"\s*(?:0|{_CANON_TERM}(?:\s\+\s{_CANON_TERM})*)\s*"
_CANON = re.compile(rf"^{_CANON_POLY}/{_CANON_POLY}$")


def parse(text: str) -> Scalar:
    """Parse either the canonical form or a small expression language.

    The expression language accepts integers, q, v, +, -, *, /, ^ and
    parentheses, e.g. "q^-2" or "(q - q^-1)/2".
    """
    text = text.strip()
    if _CANON.match(text):
        num, den = text.split("/", 1)
        n, d = _dict_to_scalar(_parse_poly(num)), _dict_to_scalar(_parse_poly(den))
        if d.is_zero():
            raise ScalarParseError("zero denominator")
        return n / d
    return _Expr(text).parse()


class _Expr:
    _tok = re.compile(r"\s*(\d+|[qv]|\*\*|[-+*/^()])")

    def __init__(self, text: str):
        self.toks = []
        pos = 0
        text = text.strip()
        while pos < len(text):
            m = self._tok.match(text, pos)
            if not m:
                raise ScalarParseError(f"cannot parse scalar {text!r} at {pos}")
            self.toks.append(m.group(1))
            pos = m.end()
            while pos < len(text) and text[pos].isspace():
                pos += 1
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else None

    def take(self):
        t = self.peek()
        self.i += 1
        return t

    def parse(self) -> Scalar:
        if not self.toks:
            raise ScalarParseError("empty scalar")
        x = self.expr()
        if self.peek() is not None:
            raise ScalarParseError(f"trailing tokens in scalar: {self.toks[self.i:]}")
        return x

    def expr(self):
        x = self.term()
        while self.peek() in ("+", "-"):
            op = self.take()
            y = self.term()
            x = x + y if op == "+" else x - y
        return x

    def term(self):
        x = self.unary()
        while self.peek() in ("*", "/"):
            op = self.take()
            y = self.unary()
            if op == "*":
                x = x * y
            else:
                if y.is_zero():
                    raise ScalarParseError("division by zero")
                x = x / y
        return x

    def unary(self):
        if self.peek() == "-":
            self.take()
            return -self.unary()
        if self.peek() == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        x = self.atom()
        if self.peek() in ("^", "**"):
            self.take()
            if self.peek() == "(":
                self.take()
                num = self.signed_int()
                den = 1
                if self.peek() == "/":
                    self.take()
                    den = self.signed_int()
                if self.take() != ")" or den == 0:
                    raise ScalarParseError("bad rational exponent")
                try:
                    return power_rational(x, Fraction(num, den))
                except (ValueError, NonIntegralExponent) as e:
                    raise ScalarParseError(str(e)) from None
            x = x ** self.signed_int()
        return x

    def signed_int(self) -> int:
        sign = 1
        if self.peek() == "-":
            self.take()
            sign = -1
        t = self.take()
        if t is None or not t.isdigit():
            raise ScalarParseError("exponent must be an integer")
        return sign * int(t)

    def atom(self):
        t = self.take()
        if t is None:
            raise ScalarParseError("unexpected end of scalar")
        if t.isdigit():
            return Scalar(int(t))
        if t == "q":
            return q()
        if t == "v":
            return vpow(1)
        if t == "(":
            x = self.expr()
            if self.take() != ")":
                raise ScalarParseError("missing ')'")
            return x
        raise ScalarParseError(f"unexpected token {t!r}")
