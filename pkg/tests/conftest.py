from fractions import Fraction

import mpmath
import pytest

from logcm.exactnum import PrecisionCtx


def mp_to_fraction(x, digits: int = 400) -> Fraction:
    """Exact Fraction from an mpmath number via a long decimal string."""
    return Fraction(mpmath.nstr(x, digits, min_fixed=-10**6, max_fixed=10**6))


@pytest.fixture
def ctx256():
    return PrecisionCtx(256, 1024)


@pytest.fixture
def ctx64():
    return PrecisionCtx(64, 256)


@pytest.fixture(autouse=True)
def _mp_precision():
    old = mpmath.mp.prec
    mpmath.mp.prec = 1400
    yield
    mpmath.mp.prec = old


def log_moment_quad(k: int, x: Fraction):
    """Tail-bounded value of int_0^inf log(t)^k exp(-x t) dt.

    With t = e^s the integrand s^k exp(s - x e^s) is smooth, so mpmath's error
    estimate is meaningful (it is not for the log singularity at t = 0).
    Returns (value, bound) with |true - value| <= bound.
    """
    with mpmath.workdps(60):
        xm = mpmath.mpf(x.numerator) / x.denominator
        L = mpmath.mpf(160)
        # s < -L: |s|^k e^s integrates to e^-L sum_j k!/j! L^j
        left = mpmath.exp(-L) * sum(mpmath.factorial(k) / mpmath.factorial(j) * L**j for j in range(k + 1))
        V = 300 / xm
        # t > V: log(t)^k <= e^(x t / 2) there, so the tail is at most (2/x) e^(-x V / 2)
        assert mpmath.log(V) ** k <= mpmath.exp(xm * V / 2)
        assert k / (V * mpmath.log(V)) <= xm / 2
        right = 2 / xm * mpmath.exp(-xm * V / 2)
        val, err = mpmath.quad(lambda s: s**k * mpmath.exp(s - xm * mpmath.exp(s)),
                               mpmath.linspace(-L, mpmath.log(V), 40), error=True)
        bound = err + left + right + mpmath.mpf(10) ** -55 * (1 + abs(val))
        return mp_to_fraction(val, 80), mp_to_fraction(bound, 80)


def _rand_poly(rng, deg: int, num: int = 9, den: int = 4) -> list:
    return [Fraction(rng.randint(-num, num), rng.randint(1, den)) for _ in range(deg + 1)]


def _pushed(q, ctx) -> list:
    """Coefficients c of f with L^-1(f) = q, rounded to the (dyadic) Ball midpoints."""
    from logcm.transform import forward_laplace_uni
    return [Fraction(b.mid) for b in forward_laplace_uni(q, ctx).coeffs]


def sos_case(rng, ctx, max_n: int = 10):
    """Sum of two random squares, degree <= max_n, pushed forward; returns (q, c)."""
    from logcm.nonneg import count_real_roots
    from logcm.poly import UPoly
    while True:
        half = rng.randint(1, max_n // 2)
        a = UPoly(_rand_poly(rng, half))
        b = UPoly(_rand_poly(rng, rng.randint(0, half)))
        if a.coeffs[-1] == 0:
            a = a + UPoly([0] * half + [1])
        q = a * a + b * b
        # a common real root of a and b puts q on the boundary of the cone, where
        # rounding the pushed coefficients can legitimately make it negative
        if count_real_roots(list(q.coeffs)) == 0:
            return q, _pushed(q, ctx)


def negative_case(rng, ctx, max_n: int = 10):
    """A polynomial with q(y0) = -delta < 0 at a known rational y0; returns (q, c, y0)."""
    from logcm.poly import UPoly
    q, _ = sos_case(rng, ctx, max_n)
    y0 = Fraction(rng.randint(-12, 12), 4)
    delta = Fraction(rng.randint(1, 20), 10)
    q = q - UPoly([q(y0) + delta])
    return q, _pushed(q, ctx), y0
