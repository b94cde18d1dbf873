"""Stirling numbers, harmonic numbers, complete Bell polynomials and w(k)."""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

_stirling_rows: list[list[int]] = [[1]]


def stirling_signed(n: int, k: int) -> int:
    """Signed Stirling number of the first kind c(n, k)."""
    if n < 0 or k < 0:
        raise ValueError("n and k must be non-negative")
    if k > n:
        return 0
    rows = _stirling_rows
    while len(rows) <= n:
        m = len(rows)  # build row m from row m-1
        prev = rows[-1]
        row = [0] * (m + 1)
        for j in range(1, m + 1):
            left = prev[j - 1]
            right = prev[j] if j < m else 0
            row[j] = left - (m - 1) * right
        rows.append(row)
    return rows[n][k]


def stirling_table(N: int) -> list[list[int]]:
    stirling_signed(N, 0)
    return [list(r) for r in _stirling_rows[: N + 1]]


@lru_cache(maxsize=4096)
def harmonic(n: int, m: int) -> Fraction:
    """H_n^(m) = sum_{i=1}^n i^-m, exactly."""
    if n < 0 or m < 1:
        raise ValueError("need n >= 0 and m >= 1")
    if n == 0:
        return Fraction(0)
    return harmonic(n - 1, m) + Fraction(1, n**m)


def bell_complete(k: int, x, one=1):
    """Complete exponential Bell polynomial B_k(x_1, x_2, ...).

    ``x[j]`` holds x_{j+1}.  Works over any ring whose elements accept int
    multiples; ``one`` is the multiplicative unit returned for k = 0.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    if len(x) < k:
        raise ValueError(f"need at least {k} sequence entries, got {len(x)}")
    B = [one]
    for n in range(1, k + 1):
        acc = None
        for j in range(n):
            term = B[n - 1 - j] * x[j] * math.comb(n - 1, j)
            acc = term if acc is None else acc + term
        B.append(acc)
    return B[k]


class WPoly:
    """Integer polynomial in formal variables H_1, H_2, ...

    Monomials are exponent tuples ``(a_1, a_2, ...)`` with trailing zeros
    stripped; ``()`` is the constant monomial.
    """

    __slots__ = ("k", "terms")

    def __init__(self, k: int, terms: dict):
        self.k = k
        self.terms = {m: c for m, c in terms.items() if c}

    def __eq__(self, other):
        return isinstance(other, WPoly) and self.terms == other.terms

    def __repr__(self):
        return f"WPoly({self.k}, {format_wpoly(self)})"

    def partial(self, i: int) -> WPoly:
        """Partial derivative with respect to H_i (1-based)."""
        out: dict = {}
        for mono, c in self.terms.items():
            if len(mono) >= i and mono[i - 1]:
                a = mono[i - 1]
                new = list(mono)
                new[i - 1] -= 1
                key = _strip(new)
                out[key] = out.get(key, 0) + c * a
        return WPoly(self.k, out)

    def weight_ok(self) -> bool:
        return all(sum((i + 1) * a for i, a in enumerate(m)) == self.k for m in self.terms)


def _strip(exps) -> tuple:
    exps = list(exps)
    while exps and exps[-1] == 0:
        exps.pop()
    return tuple(exps)


def _times_H(mono: tuple, i: int) -> tuple:
    exps = list(mono) + [0] * max(0, i - len(mono))
    exps[i - 1] += 1
    return tuple(exps)


@lru_cache(maxsize=None)
def _w_terms(k: int) -> tuple:
    if k == 0:
        return (((), 1),)
    out: dict = {}
    for m in range(k):
        coeff = (-1) ** m * math.factorial(k - 1) // math.factorial(k - m - 1)
        for mono, c in _w_terms(k - m - 1):
            key = _times_H(mono, m + 1)
            out[key] = out.get(key, 0) + coeff * c
    return tuple(sorted((m, c) for m, c in out.items() if c))


def w_poly(k: int) -> WPoly:
    """w(k) from its defining recursion in H_1..H_k."""
    if k < 0:
        raise ValueError("k must be non-negative")
    return WPoly(k, dict(_w_terms(k)))


def w_eval(k: int, H, one=1):
    """w(k) with H_i replaced by ``H[i-1]``."""
    if len(H) < k:
        raise ValueError(f"w({k}) needs {k} values, got {len(H)}")
    total = None
    for mono, c in _w_terms(k):
        term = one * c
        for i, a in enumerate(mono):
            if a:
                term = term * H[i] ** a
        total = term if total is None else total + term
    return total if total is not None else one * 0


def format_wpoly(w: WPoly) -> str:
    if not w.terms:
        return "0"
    parts = []
    for mono, c in sorted(w.terms.items(), reverse=True):
        factors = [f"H{i + 1}" + (f"^{a}" if a > 1 else "") for i, a in enumerate(mono) if a]
        body = "*".join(factors)
        if not body:
            parts.append(str(c))
        elif c == 1:
            parts.append(body)
        elif c == -1:
            parts.append("-" + body)
        else:
            parts.append(f"{c}*{body}")
    return " + ".join(parts).replace("+ -", "- ")
