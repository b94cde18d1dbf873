"""Dense univariate and sparse multivariate polynomials over Fractions or Balls."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .exactnum import Ball, ball_str


def _is_zero(c) -> bool:
    if isinstance(c, Ball):
        return c.is_zero()
    return c == 0


class UPoly:
    """Coefficient tuple indexed by degree; the length fixes a degree bound."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable):
        self.coeffs = tuple(coeffs)
        if not self.coeffs:
            self.coeffs = (0,)

    @property
    def n(self) -> int:
        return len(self.coeffs) - 1

    def degree(self) -> int:
        """Index of the last coefficient that is not exactly zero (-1 for zero)."""
        for i in range(len(self.coeffs) - 1, -1, -1):
            if not _is_zero(self.coeffs[i]):
                return i
        return -1

    def trimmed(self) -> UPoly:
        return UPoly(self.coeffs[: self.degree() + 1] or (self.coeffs[0] * 0,))

    def padded(self, n: int) -> UPoly:
        zero = self.coeffs[0] * 0
        return UPoly(self.coeffs + (zero,) * (n + 1 - len(self.coeffs)))

    def __getitem__(self, i):
        return self.coeffs[i] if i < len(self.coeffs) else 0

    def __len__(self):
        return len(self.coeffs)

    def __iter__(self):
        return iter(self.coeffs)

    def __eq__(self, other):
        if not isinstance(other, UPoly):
            return NotImplemented
        a, b = self.trimmed().coeffs, other.trimmed().coeffs
        if len(a) != len(b):
            return False
        return all(x == y for x, y in zip(a, b))

    def __hash__(self):
        return hash(self.trimmed().coeffs)

    def __repr__(self):
        return f"UPoly({format_upoly(self)})"

    def __call__(self, y):
        acc = self.coeffs[-1]
        for c in reversed(self.coeffs[:-1]):
            acc = acc * y + c
        return acc

    def __add__(self, other):
        if not isinstance(other, UPoly):
            other = UPoly([other])
        n = max(len(self), len(other))
        return UPoly(self[i] + other[i] for i in range(n))

    __radd__ = __add__

    def __neg__(self):
        return UPoly(-c for c in self.coeffs)

    def __sub__(self, other):
        if not isinstance(other, UPoly):
            other = UPoly([other])
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, UPoly):
            return UPoly(c * other for c in self.coeffs)
        out = [None] * (len(self) + len(other) - 1)
        for i, a in enumerate(self.coeffs):
            for j, b in enumerate(other.coeffs):
                t = a * b
                out[i + j] = t if out[i + j] is None else out[i + j] + t
        return UPoly(out)

    def __rmul__(self, other):
        return UPoly(other * c for c in self.coeffs)

    def derivative(self) -> UPoly:
        if len(self) == 1:
            return UPoly([self.coeffs[0] * 0])
        return UPoly([c * i for i, c in enumerate(self.coeffs)][1:] + [self.coeffs[0] * 0])

    def derivatives(self) -> list:
        """[p, p', p'', ...] up to the degree bound."""
        out = [self]
        for _ in range(self.n):
            out.append(out[-1].derivative())
        return out

    def shift(self, a) -> UPoly:
        """q(y) = p(y + a), by Taylor shift (repeated synthetic division)."""
        c = list(self.coeffs)
        n = len(c)
        for i in range(n - 1):
            for j in range(n - 2, i - 1, -1):
                c[j] = c[j] + a * c[j + 1]
        return UPoly(c)

    def reflect(self) -> UPoly:
        """q(y) = p(-y)."""
        return UPoly(c if i % 2 == 0 else -c for i, c in enumerate(self.coeffs))

    def map(self, fn) -> UPoly:
        return UPoly(fn(c) for c in self.coeffs)


def upoly_derivative(p: UPoly) -> UPoly:
    return p.derivative()


def upoly_shift(p: UPoly, a) -> UPoly:
    return p.shift(a)


def grlex_key(exps: tuple):
    return (sum(exps), exps)


class MPoly:
    """Sparse polynomial in y_1..y_s: ``terms`` maps exponent tuples to scalars."""

    __slots__ = ("s", "terms")

    def __init__(self, s: int, terms: dict | None = None):
        if s < 1:
            raise ValueError("need at least one variable")
        self.s = s
        clean = {}
        for exps, c in (terms or {}).items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != s or any(e < 0 for e in exps):
                raise ValueError(f"bad exponent {exps} for {s} variables")
            if not _is_zero(c):
                clean[exps] = c
        self.terms = clean

    @classmethod
    def from_upoly(cls, p: UPoly) -> MPoly:
        return cls(1, {(i,): c for i, c in enumerate(p.coeffs)})

    def to_upoly(self, n: int | None = None) -> UPoly:
        if self.s != 1:
            raise ValueError("not univariate")
        deg = max((e[0] for e in self.terms), default=0)
        n = deg if n is None else max(n, deg)
        zero = next(iter(self.terms.values()), 0) * 0
        return UPoly(self.terms.get((i,), zero) for i in range(n + 1))

    def total_degree(self) -> int:
        return max((sum(e) for e in self.terms), default=-1)

    def items(self):
        """Terms in graded-lexicographic order of exponents."""
        return sorted(self.terms.items(), key=lambda kv: grlex_key(kv[0]))

    def __eq__(self, other):
        if not isinstance(other, MPoly):
            return NotImplemented
        return self.s == other.s and self.terms == other.terms

    def __repr__(self):
        return f"MPoly({format_mpoly(self)})"

    def __add__(self, other: MPoly) -> MPoly:
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out[e] + c if e in out else c
        return MPoly(self.s, out)

    def __neg__(self):
        return MPoly(self.s, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, MPoly):
            return MPoly(self.s, {e: c * other for e, c in self.terms.items()})
        out: dict = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                t = c1 * c2
                out[e] = out[e] + t if e in out else t
        return MPoly(self.s, out)

    def __call__(self, point):
        return mpoly_eval(self, point)

    def map(self, fn) -> MPoly:
        return MPoly(self.s, {e: fn(c) for e, c in self.terms.items()})


def mpoly_eval(p: MPoly, x):
    """Evaluate at a point; with Ball inputs the result encloses p(x)."""
    if len(x) != p.s:
        raise ValueError(f"point has {len(x)} coordinates, polynomial has {p.s} variables")
    total = None
    for exps, c in p.terms.items():
        term = c
        for xi, e in zip(x, exps):
            if e:
                term = term * xi**e
        total = term if total is None else total + term
    if total is None:
        prec = max((xi.prec for xi in x if isinstance(xi, Ball)), default=None)
        return Ball(0, 0, 0, 0, prec) if prec else 0
    return total


@dataclass(frozen=True)
class LogFunction:
    """f(x) = p(log x_1, ..., log x_s) / (x_1 ... x_s) with rational p of degree <= n."""

    s: int
    n: int
    coeffs: MPoly

    def __post_init__(self):
        if self.s < 1 or self.n < 0:
            raise ValueError("need s >= 1 and n >= 0")
        if self.coeffs.s != self.s:
            raise ValueError("coefficient polynomial has the wrong number of variables")
        for exps, c in self.coeffs.terms.items():
            if sum(exps) > self.n:
                raise ValueError(f"exponent {exps} exceeds total degree {self.n}")
            if not isinstance(c, (int, Fraction)):
                raise TypeError("LogFunction coefficients must be rationals")

    @classmethod
    def univariate(cls, c) -> LogFunction:
        c = [Fraction(v) for v in c]
        return cls(1, len(c) - 1, MPoly(1, {(i,): v for i, v in enumerate(c)}))

    def coefficient_vector(self) -> list:
        if self.s != 1:
            raise ValueError("coefficient_vector is only defined for s = 1")
        return [Fraction(self.coeffs.terms.get((i,), 0)) for i in range(self.n + 1)]

    def __call__(self, *x: float) -> float:
        """Floating-point value of f at a point of the positive orthant."""
        logs = [math.log(v) for v in x]
        total = 0.0
        for exps, c in self.coeffs.terms.items():
            total += float(c) * math.prod(l**e for l, e in zip(logs, exps))
        return total / math.prod(x)


# ---------------------------------------------------------------------------
# canonical text form


def format_scalar(c, digits: int | None = None) -> str:
    if isinstance(c, Ball):
        return "(" + ball_str(c, digits) + ")"
    c = Fraction(c)
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def _monomial(exps: tuple, names) -> str:
    return "*".join(n + (f"^{e}" if e > 1 else "") for n, e in zip(names, exps) if e)


def format_mpoly(p: MPoly, names=None, digits: int | None = None) -> str:
    if names is None:
        names = ["y"] if p.s == 1 else [f"y{i + 1}" for i in range(p.s)]
    parts = []
    for exps, c in p.items():
        mono = _monomial(exps, names)
        coef = format_scalar(c, digits)
        parts.append(coef if not mono else f"{coef}*{mono}")
    return " + ".join(parts) if parts else "0"


def format_upoly(p: UPoly, name: str = "y", digits: int | None = None) -> str:
    return format_mpoly(MPoly.from_upoly(p), [name], digits)
