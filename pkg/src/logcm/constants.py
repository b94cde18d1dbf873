"""Certified enclosures of the Euler-Mascheroni constant, zeta(m) and Gamma^(l)(1)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .combinat import bell_complete
from .exactnum import Ball, PrecisionCtx, PrecisionError, ball_ln2

# Self-test references (50 digits after the point, truncated).  Never used in
# any computation.
REFERENCE_DIGITS = {
    "gamma": "0.57721566490153286060651209008240243104215933593992",
    2: "1.64493406684822643647241516664602518921894990120679",
    3: "1.20205690315959428539973816151144999076498629234049",
    4: "1.08232323371113819151600369654116790277475095191872",
    5: "1.03692775514336992633136548645703416805708091950191",
    6: "1.01734306198444913971451792979092052790181749003285",
    7: "1.00834927738192282683979754984979675959986356056523",
    8: "1.00407735619794433937868523850865246525896079064985",
    9: "1.00200839282608221441785276923241206048560585139488",
    10: "1.00099457512781808533714595890031901700601953156447",
}
REFERENCE_TOLERANCE = Fraction(1, 10**50)


@dataclass(frozen=True)
class ConstantTable:
    gamma: Ball
    zeta: dict  # m -> Ball, m = 2..n
    g: tuple  # g_0 .. g_n
    bits: int


def _radius_target(bits: int) -> Fraction:
    return Fraction(1, 1 << (bits - 8)) if bits > 8 else Fraction(1 << (8 - bits))


@lru_cache(maxsize=64)
def _gamma_at(bits: int) -> Ball:
    # Brent-McMillan: with t_k = (N^k/k!)^2,
    #   |gamma - (sum t_k H_k)/(sum t_k) + log N| < pi*exp(-4N)
    # and pi*exp(-4N) < 4*2**(-5N).
    guard = 24 + 2 * max(bits, 64).bit_length()
    work = bits + guard
    N = 1
    while 5 * N < work + 8:
        N *= 2
    logN = ball_ln2(work + 16) * (N.bit_length() - 1)
    n2 = N * N
    t = Ball(1, 0, 0, 0, work)
    h = Ball(0, 0, 0, 0, work)
    B = Ball(1, 0, 0, 0, work)
    S = Ball(0, 0, 0, 0, work)
    tol = Fraction(1, 1 << (work + 8))
    k = 0
    while True:
        k += 1
        t = t * n2 / (k * k)
        h = h + Ball(1, 0, 0, 0, work) / k
        B = B + t
        S = S + t * h
        if k > 2 * N and t.upper() < tol:
            break
    # tails beyond K=k: ratio t_{j+1}/t_j <= rho = (N/(K+1))^2 <= 1/4 and H_j <= j
    rho = Fraction(n2, (k + 1) ** 2)
    tK = t.upper()
    tail_B = tK * rho / (1 - rho)
    tail_S = 2 * (k + 1) * tK * rho / (1 - 2 * rho)
    B = B + Ball.from_mid_rad(tail_B / 2, tail_B / 2, work)
    S = S + Ball.from_mid_rad(tail_S / 2, tail_S / 2, work)
    bm_err = Fraction(4, 1 << (5 * N))
    gamma = S / B - logN + Ball.from_mid_rad(0, bm_err, work)
    return gamma.with_prec(bits)


def euler_gamma(ctx: PrecisionCtx) -> Ball:
    """Enclosure of the Euler-Mascheroni constant with radius <= 2**(8 - bits)."""
    g = _gamma_at(ctx.bits)
    if g.rad > _radius_target(ctx.bits):
        raise PrecisionError(f"gamma radius target missed at {ctx.bits} bits")
    return g


@lru_cache(maxsize=8)
def _tangent_numbers(count: int) -> tuple:
    # Brent-Harvey in-place recurrence; T[k] is the k-th tangent number
    T = [0] * (count + 1)
    if count >= 1:
        T[1] = 1
    for k in range(2, count + 1):
        T[k] = (k - 1) * T[k - 1]
    for k in range(2, count + 1):
        for j in range(k, count + 1):
            T[j] = (j - k) * T[j - 1] + (j - k + 2) * T[j]
    return tuple(T)


def bernoulli_even(j: int) -> Fraction:
    """B_{2j} for j >= 1."""
    if j < 1:
        raise ValueError("j must be >= 1")
    T = _tangent_numbers(_tangent_count(j))
    four = 4**j
    return Fraction((-1) ** (j - 1) * 2 * j * T[j], four * (four - 1))


def _rising(s: int, k: int) -> int:
    out = 1
    for i in range(k):
        out *= s + i
    return out


def _em_remainder(m: int, N: int, M: int) -> Fraction:
    # |R| <= 2 zeta(2M)/(2pi)^{2M} * int_N^inf |f^{(2M)}|, with zeta(2M) <= 2, 2pi > 6
    return Fraction(4 * _rising(m, 2 * M), 6 ** (2 * M) * (m + 2 * M - 1) * N ** (m + 2 * M - 1))


@lru_cache(maxsize=256)
def _zeta_at(m: int, bits: int) -> Ball:
    # Euler-Maclaurin in fixed point with W fractional bits; every floor division
    # is off by less than one ulp and is charged to the radius.
    W = bits + 24
    tol = Fraction(1, 1 << (W + 4))
    # few Bernoulli corrections (they are the costly part), many plain terms
    M = W // 12 + 2
    N = 2 * M
    while _em_remainder(m, N, M) > tol:
        N += N // 4 + 1
    one = 1 << W
    total = 0
    for k in range(1, N):
        total += one // k**m
    total += one // ((m - 1) * N ** (m - 1))
    total += one // (2 * N**m)
    roundings = N + 1
    T = _tangent_numbers(_tangent_count(M))
    fact = 1
    for j in range(1, M + 1):
        fact *= (2 * j - 1) * (2 * j)
        four = 4**j
        # B_2j = (-1)^(j-1) 2j T_j / (4^j (4^j - 1))
        num = (-1) ** (j - 1) * 2 * j * T[j] * _rising(m, 2 * j - 1)
        den = four * (four - 1) * fact * N ** (m + 2 * j - 1)
        total += (num << W) // den
        roundings += 1
    rad = Fraction(roundings, one) + _em_remainder(m, N, M)
    return Ball.from_mid_rad(Fraction(total, one), rad, W).with_prec(bits)


def _tangent_count(j: int) -> int:
    count = 16
    while count < j:
        count *= 2
    return count


def zeta_int(m: int, ctx: PrecisionCtx) -> Ball:
    """Enclosure of zeta(m) for an integer m >= 2 (Euler-Maclaurin with explicit remainder)."""
    if not isinstance(m, int) or m < 2:
        raise ValueError(f"zeta_int needs an integer m >= 2, got {m!r}")
    z = _zeta_at(m, ctx.bits)
    if z.rad > _radius_target(ctx.bits):
        raise PrecisionError(f"zeta({m}) radius target missed at {ctx.bits} bits")
    return z


def bell_sequence(n: int, ctx: PrecisionCtx, sign: int = 1) -> list:
    """``sign * (gamma, 1!zeta(2), 2!zeta(3), ...)`` truncated to length n."""
    work = PrecisionCtx(ctx.bits + 32, max(ctx.max_bits, ctx.bits + 32))
    seq = []
    if n >= 1:
        seq.append(euler_gamma(work))
    for m in range(2, n + 1):
        seq.append(zeta_int(m, work) * math.factorial(m - 1))
    if sign < 0:
        seq = [-x for x in seq]
    return seq


@lru_cache(maxsize=64)
def _gamma_derivatives_at(n: int, bits: int, max_bits: int) -> tuple:
    ctx = PrecisionCtx(bits, max(bits, max_bits))
    x = bell_sequence(n, ctx)
    out = []
    for k in range(n + 1):
        b = bell_complete(k, x, one=Ball(1, 0, 0, 0, bits + 32))
        out.append((b if k % 2 == 0 else -b).with_prec(bits))
    return tuple(out)


def gamma_derivatives(n: int, ctx: PrecisionCtx) -> list:
    """g_0..g_n with g_k the k-th derivative of Gamma at 1, via (-1)^k B_k(gamma, 1!zeta(2), ...)."""
    if n < 0:
        raise ValueError("n must be >= 0")
    return list(_gamma_derivatives_at(n, ctx.bits, ctx.max_bits))


def constant_table(n: int, ctx: PrecisionCtx) -> ConstantTable:
    gamma = euler_gamma(ctx)
    zeta = {m: zeta_int(m, ctx) for m in range(2, n + 1)}
    return ConstantTable(gamma=gamma, zeta=zeta, g=tuple(gamma_derivatives(n, ctx)), bits=ctx.bits)
