"""Derivative-side view of univariate log-functions.

For f(x) = p(log x)/x the k-th derivative is h_k(log x)/x^(k+1).  This module
computes h_k two ways, the shifted polynomials g~_k, the degree-2
discriminants, membership in the outer approximations

    D_k = {f : (-1)^k f^(k)(x) >= 0 for all x > 0},

and an empirical probe of whether D_1, D_2, ... are nested.
"""

from __future__ import annotations

import math
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from .combinat import harmonic, stirling_signed, w_eval, w_poly
from .constants import zeta_int
from .exactnum import Ball, PrecisionCtx
from .nonneg import Status, Verdict, integer_scaled, decide_cm, exact_nonneg
from .poly import LogFunction, UPoly


class DerivativeMismatch(AssertionError):
    """The recursion and the Stirling closed form disagree (a bug, never user error)."""


@dataclass(frozen=True)
class DerivativeSequence:
    p: UPoly
    k_max: int
    h: tuple  # h_0 .. h_{k_max}


def _frac_poly(p) -> UPoly:
    coeffs = p.coeffs if isinstance(p, UPoly) else p
    return UPoly(Fraction(c) for c in coeffs)


def _by_recursion(p: UPoly, k_max: int) -> list:
    h = [p]
    for k in range(1, k_max + 1):
        prev = h[-1]
        h.append(prev.derivative() - prev * k)
    return h


def _by_stirling(p: UPoly, k: int) -> UPoly:
    ders = p.derivatives()
    acc = UPoly([Fraction(0)] * len(p))
    for l in range(min(k, p.n) + 1):
        c = stirling_signed(k + 1, l + 1)
        if c:
            acc = acc + ders[l] * c
    return acc


def derivative_polys(p, k_max: int) -> DerivativeSequence:
    """h_0..h_{k_max}, computed by recursion and checked against the closed form."""
    if k_max < 0:
        raise ValueError("k_max must be >= 0")
    p = _frac_poly(p)
    h = _by_recursion(p, k_max)
    for k, hk in enumerate(h):
        if hk != _by_stirling(p, k):
            raise DerivativeMismatch(f"h_{k} recursion and closed form differ")
    return DerivativeSequence(p, k_max, tuple(h))


def h_closed_form(p, k: int) -> UPoly:
    return _by_stirling(_frac_poly(p), k)


def _harmonic_vector(k: int, length: int) -> list:
    return [harmonic(k, i) for i in range(1, length + 1)]


def g_unshifted(p, k: int) -> UPoly:
    """g_k(y) = sum_j (-1)^j w(j)/j! p^(j)(y) with H_i = H_k^(i)."""
    if k < 0:
        raise ValueError("k must be >= 0")
    p = _frac_poly(p)
    H = _harmonic_vector(k, p.n)
    ders = p.derivatives()
    acc = UPoly([Fraction(0)] * len(p))
    for j in range(p.n + 1):
        w = w_eval(j, H, one=Fraction(1))
        if w:
            acc = acc + ders[j] * (w * (-1) ** j / math.factorial(j))
    return acc


def g_shifted(p, k: int) -> UPoly:
    """g~_k(y) = g_k(y + H_k)."""
    return g_unshifted(p, k).shift(harmonic(k, 1) if k else Fraction(0))


def _mono_mul(a: tuple, b: tuple) -> tuple:
    n = max(len(a), len(b))
    out = [(a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0) for i in range(n)]
    while out and out[-1] == 0:
        out.pop()
    return tuple(out)


def g_tilde_symbolic(p) -> dict:
    """g~(y) = sum_j (-1)^j w(j)/j! p^(j)(y + H_1) with the H_i kept formal.

    Returns {(power of y, H-monomial): coefficient}, H-monomials as in WPoly.
    """
    p = _frac_poly(p)
    out: dict = {}
    for j in range(p.n + 1):
        wj = w_poly(j).terms
        scale = Fraction((-1) ** j, math.factorial(j))
        for i in range(j, p.n + 1):
            ci = p.coeffs[i]
            if not ci:
                continue
            d = i - j
            base = ci * (math.factorial(i) // math.factorial(d)) * scale
            # (y + H_1)^d
            for a in range(d + 1):
                binom = math.comb(d, a)
                h1 = (d - a,) if d - a else ()
                for mono, wc in wj.items():
                    key = (a, _mono_mul(mono, h1))
                    out[key] = out.get(key, 0) + base * binom * wc
    return {k: v for k, v in out.items() if v}


def g_tilde_from_w(p) -> dict:
    """sum_k c_k (-1)^k w(k) with H_1 -> -y, in the format of g_tilde_symbolic."""
    p = _frac_poly(p)
    out: dict = {}
    for k, ck in enumerate(p.coeffs):
        if not ck:
            continue
        for mono, wc in w_poly(k).terms.items():
            a1 = mono[0] if mono else 0
            rest = _mono_mul((0,) + tuple(mono[1:]), ())
            key = (a1, rest)
            out[key] = out.get(key, 0) + ck * (-1) ** k * wc * (-1) ** a1
    return {k: v for k, v in out.items() if v}


def check_g_h_relation(p, k: int) -> bool:
    """(-1)^k k! g_k == h_k exactly."""
    lhs = g_unshifted(p, k) * ((-1) ** k * math.factorial(k))
    return lhs == h_closed_form(p, k)


def disc_quadratic(c0, c1, c2, k=None, ctx: PrecisionCtx | None = None):
    """Discriminant of g~_k for p = c2 y^2 + c1 y + c0.

    Finite k gives an exact rational; k = None (or math.inf) gives a Ball using zeta(2).
    """
    c0, c1, c2 = Fraction(c0), Fraction(c1), Fraction(c2)
    base = c1 * c1 - 4 * c0 * c2
    if k is None or k == math.inf:
        ctx = ctx or PrecisionCtx()
        return Ball.from_rational(base, ctx.bits) + zeta_int(2, ctx) * Ball.from_rational(4 * c2 * c2, ctx.bits)
    if k < 0:
        raise ValueError("k must be >= 0")
    return base + 4 * c2 * c2 * harmonic(k, 2)


@lru_cache(maxsize=1024)
def signed_derivative_matrix(n: int, k: int) -> tuple:
    """Integer matrix M with (-1)^k h_k = M c for p of degree <= n."""
    rows = []
    sign = (-1) ** k
    for i in range(n + 1):
        row = [0] * (n + 1)
        for l in range(min(k, n - i) + 1):
            j = i + l
            row[j] = sign * stirling_signed(k + 1, l + 1) * math.factorial(j) // math.factorial(i)
        rows.append(tuple(row))
    return tuple(rows)


def signed_derivative(c, k: int) -> list:
    """Coefficients of (-1)^k h_k for p with coefficients c."""
    M = signed_derivative_matrix(len(c) - 1, k)
    return [sum(m * x for m, x in zip(row, c) if m) for row in M]


def dk_membership(f: LogFunction, k: int, ctx: PrecisionCtx | None = None) -> Verdict:
    """Is (-1)^k f^(k) >= 0 on (0, inf)?  Status CM means 'member of D_k'.

    The polynomial is rational, so the decision is exact and never UNKNOWN.
    """
    if f.s != 1:
        raise ValueError("D_k membership is defined for univariate f")
    if k < 0:
        raise ValueError("k must be >= 0")
    v = exact_nonneg(signed_derivative(f.coefficient_vector(), k))
    v.precision_used = ctx.bits if ctx else 0
    return v


# ---------------------------------------------------------------------------
# nesting probe


@dataclass
class NestingRow:
    coeffs: tuple  # Fractions c_0..c_n
    member: dict  # k -> Status
    cm: Status | None = None

    def violations(self) -> list:
        """Pairs (k, k') with k < k', member of D_k' but not of D_k; and CM-but-not-D_k."""
        ks = sorted(self.member)
        out = []
        for a in range(len(ks)):
            for b in range(a + 1, len(ks)):
                lo, hi = self.member[ks[a]], self.member[ks[b]]
                if hi is Status.CM and lo is Status.NOT_CM:
                    out.append((ks[a], ks[b]))
        if self.cm is Status.CM:
            out.extend((k, "CM") for k in ks if self.member[k] is Status.NOT_CM)
        return out


@dataclass
class NestingReport:
    n: int
    k_values: list
    evaluated: int = 0
    abstentions: int = 0
    member_counts: dict = field(default_factory=dict)
    cm_count: int | None = None
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "k_values": self.k_values,
            "evaluated": self.evaluated,
            "abstentions": self.abstentions,
            "member_counts": {str(k): v for k, v in self.member_counts.items()},
            "cm_count": self.cm_count,
            "violation_count": len(self.violations),
            "violations": self.violations,
            "note": "evidence only; nesting is proved for n = 2 and conjectured beyond",
        }


def evaluate_row(c, k_values, with_cm: bool, bits: int = 256, max_bits: int = 1024) -> NestingRow:
    c = tuple(Fraction(x) for x in c)
    scaled, _ = integer_scaled(c)
    member = {}
    for k in k_values:
        member[k] = exact_nonneg(signed_derivative(scaled, k)).status
    cm = None
    if with_cm:
        f = LogFunction.univariate(c)
        cm = decide_cm(f, PrecisionCtx(bits, max_bits)).status
    return NestingRow(c, member, cm)


def _evaluate_chunk(args):
    chunk, k_values, with_cm, bits, max_bits = args
    return [evaluate_row(c, k_values, with_cm, bits, max_bits) for c in chunk]


def evaluate_rows(points, k_values, with_cm: bool, ctx: PrecisionCtx | None = None,
                  workers: int = 1) -> list:
    """Evaluate membership rows, in input order, optionally with a process pool."""
    ctx = ctx or PrecisionCtx()
    points = list(points)
    if workers <= 1 or len(points) < 64:
        return [evaluate_row(c, k_values, with_cm, ctx.bits, ctx.max_bits) for c in points]
    size = max(16, len(points) // (workers * 8))
    chunks = [points[i:i + size] for i in range(0, len(points), size)]
    with ProcessPoolExecutor(workers) as pool:
        parts = pool.map(_evaluate_chunk,
                         [(ch, k_values, with_cm, ctx.bits, ctx.max_bits) for ch in chunks])
        return [row for part in parts for row in part]


def summarize(rows, n: int, k_values) -> NestingReport:
    rep = NestingReport(n, list(k_values))
    rep.member_counts = {k: 0 for k in k_values}
    with_cm = any(r.cm is not None for r in rows)
    if with_cm:
        rep.cm_count = 0
    for r in rows:
        rep.evaluated += 1
        if any(s is Status.UNKNOWN for s in r.member.values()) or r.cm is Status.UNKNOWN:
            rep.abstentions += 1
        for k, s in r.member.items():
            if s is Status.CM:
                rep.member_counts[k] += 1
        if r.cm is Status.CM:
            rep.cm_count += 1
        bad = r.violations()
        if bad:
            rep.violations.append({
                "coeffs": [str(x) for x in r.coeffs],
                "member": {str(k): s.value for k, s in r.member.items()},
                "cm": r.cm.value if r.cm else None,
                "pairs": [[a, b] for a, b in bad],
            })
    return rep


def _dyadic_uniform(rng: random.Random, lo: Fraction, hi: Fraction, denom: int) -> Fraction:
    a = math.ceil(lo * denom)
    b = math.floor(hi * denom)
    return Fraction(rng.randint(a, b), denom)


def nesting_probe(n: int, k_max: int, samples: int, seed: int = 0,
                  ctx: PrecisionCtx | None = None, box=None, fixed: dict | None = None,
                  with_cm: bool = False, workers: int = 1, denom: int = 256) -> NestingReport:
    """Sample dyadic coefficient vectors and check D_1 ⊇ D_2 ⊇ ... ⊇ D_{k_max} (⊇ CM).

    ``box`` maps coefficient index to (lo, hi), default (-4, 4) for every index;
    ``fixed`` pins some coefficients (e.g. {n: 1} to normalise the top one).
    """
    if n < 0 or k_max < 1 or samples < 0:
        raise ValueError("need n >= 0, k_max >= 1, samples >= 0")
    rng = random.Random(seed)
    box = box or {}
    fixed = {int(k): Fraction(v) for k, v in (fixed or {}).items()}
    points = []
    for _ in range(samples):
        c = []
        for i in range(n + 1):
            if i in fixed:
                c.append(fixed[i])
            else:
                lo, hi = box.get(i, (-4, 4))
                c.append(_dyadic_uniform(rng, Fraction(lo), Fraction(hi), denom))
        points.append(c)
    k_values = list(range(1, k_max + 1))
    rows = evaluate_rows(points, k_values, with_cm, ctx, workers)
    return summarize(rows, n, k_values)
