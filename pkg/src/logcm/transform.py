"""Laplace transform on log-polynomials: the matrices A and C = A^-1.

Column k of A holds the coefficients (in powers of log x, divided by x) of the
Laplace transform of log(t)^k.  C is built from its Bell-polynomial closed form
in (-gamma, -1!zeta(2), -2!zeta(3), ...), never by solving with A.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .combinat import bell_complete, w_poly
from .constants import bell_sequence, euler_gamma, gamma_derivatives, zeta_int
from .exactnum import Ball, PrecisionCtx
from .poly import LogFunction, MPoly, UPoly


@dataclass(frozen=True)
class TransformMatrix:
    n: int
    kind: str  # "A" or "C"
    entries: tuple  # rows of Balls

    def __getitem__(self, mk):
        m, k = mk
        return self.entries[m][k]

    def column(self, k: int) -> list:
        return [row[k] for row in self.entries]

    def apply(self, v) -> list:
        """Matrix-vector product over Balls (v may hold Fractions or Balls)."""
        out = []
        for m in range(self.n + 1):
            acc = self.entries[m][m] * v[m]
            for k in range(m + 1, self.n + 1):
                if not _is_exact_zero(v[k]):
                    acc = acc + self.entries[m][k] * v[k]
            out.append(acc)
        return out

    def matmul(self, other: TransformMatrix) -> list:
        n = self.n
        prod = []
        for i in range(n + 1):
            row = []
            for j in range(n + 1):
                acc = Ball(0, 0, 0, 0, self.entries[0][0].prec)
                for k in range(n + 1):
                    acc = acc + self.entries[i][k] * other.entries[k][j]
                row.append(acc)
            prod.append(row)
        return prod


def _is_exact_zero(x) -> bool:
    return x.is_zero() if isinstance(x, Ball) else x == 0


@lru_cache(maxsize=128)
def _matrix_A(n: int, bits: int, max_bits: int) -> TransformMatrix:
    ctx = PrecisionCtx(bits, max(bits, max_bits))
    g = gamma_derivatives(n, ctx)
    zero = Ball(0, 0, 0, 0, bits)
    rows = []
    for m in range(n + 1):
        row = []
        for k in range(n + 1):
            if k < m:
                row.append(zero)
            else:
                row.append(g[k - m] * ((-1) ** m * math.comb(k, m)))
        rows.append(tuple(row))
    return TransformMatrix(n, "A", tuple(rows))


def matrix_A(n: int, ctx: PrecisionCtx) -> TransformMatrix:
    """Laplace transform on polynomials in log t, A[m,k] = (-1)^m C(k,m) g_{k-m}."""
    if n < 0:
        raise ValueError("n must be >= 0")
    return _matrix_A(n, ctx.bits, ctx.max_bits)


@lru_cache(maxsize=128)
def _matrix_C(n: int, bits: int, max_bits: int) -> TransformMatrix:
    ctx = PrecisionCtx(bits, max(bits, max_bits))
    d = bell_sequence(n, ctx, sign=-1)
    one = Ball(1, 0, 0, 0, bits + 32)
    bell = [bell_complete(j, d, one=one) for j in range(n + 1)]
    zero = Ball(0, 0, 0, 0, bits)
    rows = []
    for m in range(n + 1):
        row = []
        for k in range(n + 1):
            if k < m:
                row.append(zero)
            else:
                row.append((bell[k - m] * ((-1) ** m * math.comb(k, m))).with_prec(bits))
        rows.append(tuple(row))
    return TransformMatrix(n, "C", tuple(rows))


def matrix_A_inverse(n: int, ctx: PrecisionCtx) -> TransformMatrix:
    """C = A^-1 with C[m,k] = (-1)^m C(k,m) B_{k-m}(-gamma, -1!zeta(2), -2!zeta(3), ...)."""
    if n < 0:
        raise ValueError("n must be >= 0")
    return _matrix_C(n, ctx.bits, ctx.max_bits)


def _as_balls(c, bits: int) -> list:
    out = []
    for v in c:
        if isinstance(v, Ball):
            out.append(v)
        else:
            out.append(Ball.from_rational(Fraction(v), bits))
    return out


def inverse_laplace_uni(c, ctx: PrecisionCtx) -> UPoly:
    """Density polynomial q = A^-1 c: L^-1(f)(t) = q(log t) for f = sum c_k log(x)^k / x."""
    n = len(c) - 1
    C = matrix_A_inverse(n, ctx)
    return UPoly(C.apply(_as_balls(c, ctx.bits)))


def forward_laplace_uni(q: UPoly, ctx: PrecisionCtx) -> UPoly:
    """Coefficients of L(q(log t)) in the basis log(x)^j / x."""
    A = matrix_A(q.n, ctx)
    return UPoly(A.apply(_as_balls(q.coeffs, ctx.bits)))


def _modewise(p: MPoly, M: TransformMatrix, bits: int) -> MPoly:
    """Apply a triangular matrix to each variable of p in turn."""
    terms = {e: (c if isinstance(c, Ball) else Ball.from_rational(Fraction(c), bits))
             for e, c in p.terms.items()}
    for j in range(p.s):
        out: dict = {}
        for exps, c in terms.items():
            lam = exps[j]
            for mu in range(lam + 1):
                entry = M.entries[mu][lam]
                if entry.is_zero():
                    continue
                key = exps[:j] + (mu,) + exps[j + 1:]
                t = entry * c
                out[key] = out[key] + t if key in out else t
        terms = out
    return MPoly(p.s, terms)


def inverse_laplace_multi(f: LogFunction, ctx: PrecisionCtx) -> MPoly:
    """Polynomial q in u_j = log t_j with L^-1(f)(t) = q(log t_1, ..., log t_s)."""
    return _modewise(f.coeffs, matrix_A_inverse(f.n, ctx), ctx.bits)


def forward_laplace_multi(q: MPoly, n: int, ctx: PrecisionCtx) -> MPoly:
    return _modewise(q, matrix_A(n, ctx), ctx.bits)


def g_tilde_infinity(c, ctx: PrecisionCtx) -> UPoly:
    """sum_k c_k (-1)^k w(k) with H_1 -> -y and H_i -> zeta(i) for i >= 2."""
    n = len(c) - 1
    bits = ctx.bits + 32
    work = PrecisionCtx(bits, max(bits, ctx.max_bits))
    zeta = {i: zeta_int(i, work) for i in range(2, n + 1)}
    coeffs = [Ball(0, 0, 0, 0, bits) for _ in range(n + 1)]
    for k, ck in enumerate(c):
        ck = Fraction(ck)
        if ck == 0:
            continue
        scale = ck * (-1) ** k
        for mono, w in w_poly(k).terms.items():
            a1 = mono[0] if mono else 0
            # H_1^a1 -> (-y)^a1
            val = Ball.from_rational(scale * w * (-1) ** a1, bits)
            for i, a in enumerate(mono[1:], start=2):
                if a:
                    val = val * zeta[i] ** a
            coeffs[a1] = coeffs[a1] + val
    return UPoly(x.with_prec(ctx.bits) for x in coeffs)


def check_gtilde_matches_laplace(c, ctx: PrecisionCtx) -> tuple[bool, Fraction]:
    """Compare g~_inf(-u - gamma) with A^-1 c coefficientwise.

    Returns (all coefficient balls overlap, largest midpoint defect).
    """
    g = g_tilde_infinity(c, ctx)
    gamma = euler_gamma(ctx)
    composed = g.reflect().shift(gamma)
    direct = inverse_laplace_uni(c, ctx)
    ok = True
    defect = Fraction(0)
    for a, b in zip(composed.coeffs, direct.coeffs):
        if not a.overlaps(b):
            ok = False
        defect = max(defect, abs(a.mid - b.mid))
    return ok, defect
