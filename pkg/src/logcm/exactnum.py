"""Exact rationals and midpoint-radius ball arithmetic.

A :class:`Ball` is a dyadic midpoint ``man * 2**exp`` together with a dyadic
radius ``rman * 2**rexp``.  Every operation rounds the midpoint to the ball's
working precision and widens the radius by all rounding and propagated
errors, so the exact result of the operation applied to any points of the
inputs is always enclosed.  Radii carry only ``RAD_BITS`` bits and are always
rounded up.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import lru_cache

Rational = Fraction

RAD_BITS = 30

DEFAULT_BITS = 256
DEFAULT_MAX_BITS = 16384
DEFAULT_ESCALATION = 4


class PrecisionError(ArithmeticError):
    """Raised when a target accuracy cannot be reached within ``max_bits``."""


class Sign(enum.Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    UNCERTAIN = "uncertain"


@dataclass(frozen=True)
class PrecisionCtx:
    bits: int = DEFAULT_BITS
    max_bits: int = DEFAULT_MAX_BITS
    escalation_factor: int = DEFAULT_ESCALATION

    def __post_init__(self):
        if self.bits < 2:
            raise ValueError("bits must be at least 2")
        if self.bits > self.max_bits:
            raise ValueError(f"bits={self.bits} exceeds max_bits={self.max_bits}")
        if self.escalation_factor < 2:
            raise ValueError("escalation_factor must be >= 2")

    def with_bits(self, bits: int) -> PrecisionCtx:
        return replace(self, bits=bits, max_bits=max(bits, self.max_bits))

    def escalated(self) -> PrecisionCtx | None:
        """Next context in the escalation ladder, or None at the ceiling."""
        if self.bits >= self.max_bits:
            return None
        return replace(self, bits=min(self.bits * self.escalation_factor, self.max_bits))


def parse_rational(value) -> Fraction:
    """Exact conversion of ints, Fractions and strings like ``"3/4"`` or ``"1.25"``.

    Floats are converted through their shortest decimal repr, so ``0.1`` becomes
    ``1/10`` rather than the nearest binary double.
    """
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"non-finite value {value!r}")
        return Fraction(repr(value))
    if isinstance(value, str):
        text = value.strip()
        try:
            return Fraction(text)
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"cannot parse rational from {value!r}") from exc
    raise TypeError(f"cannot convert {type(value).__name__} to a rational")


# ---------------------------------------------------------------------------
# dyadic helpers; all magnitudes are (mantissa >= 0, exponent) pairs


def _up(m: int, e: int) -> tuple[int, int]:
    bl = m.bit_length()
    if bl > RAD_BITS:
        sh = bl - RAD_BITS
        return (m >> sh) + 1, e + sh
    return m, e


def _down(m: int, e: int) -> tuple[int, int]:
    bl = m.bit_length()
    if bl > RAD_BITS:
        sh = bl - RAD_BITS
        return m >> sh, e + sh
    return m, e


def _add_up(m1: int, e1: int, m2: int, e2: int) -> tuple[int, int]:
    if m2 == 0:
        return _up(m1, e1)
    if m1 == 0:
        return _up(m2, e2)
    if e1 < e2:
        m1, e1, m2, e2 = m2, e2, m1, e1
    # now e1 >= e2
    if e2 + m2.bit_length() < e1 - 2:
        # the smaller term is below one unit of the larger
        return _up(m1 + 1, e1)
    return _up((m1 << (e1 - e2)) + m2, e2)


def _mul_up(m1: int, e1: int, m2: int, e2: int) -> tuple[int, int]:
    if m1 == 0 or m2 == 0:
        return 0, 0
    a, ea = _up(m1, e1)
    b, eb = _up(m2, e2)
    return _up(a * b, ea + eb)


def _cmp(m1: int, e1: int, m2: int, e2: int) -> int:
    """Compare non-negative dyadics exactly."""
    if m1 == 0 or m2 == 0:
        return (m1 > 0) - (m2 > 0)
    t1 = m1.bit_length() + e1
    t2 = m2.bit_length() + e2
    if t1 != t2:
        return 1 if t1 > t2 else -1
    if e1 >= e2:
        a, b = m1 << (e1 - e2), m2
    else:
        a, b = m1, m2 << (e2 - e1)
    return (a > b) - (a < b)


def _round_mid(man: int, exp: int, prec: int) -> tuple[int, int, int, int]:
    """Round ``man*2**exp`` to ``prec`` bits; returns (man, exp, err_m, err_e)."""
    a = -man if man < 0 else man
    bl = a.bit_length()
    if bl <= prec:
        return man, exp, 0, 0
    sh = bl - prec
    q = (a + (1 << (sh - 1))) >> sh
    if (q << sh) == a:
        err = (0, 0)
    else:
        err = (1, exp + sh - 1)
    if q.bit_length() > prec:
        q >>= 1
        sh += 1
        err = (1, exp + sh)
    return (-q if man < 0 else q), exp + sh, err[0], err[1]


def _frac_to_dyadic_up(x: Fraction) -> tuple[int, int]:
    """Upper bound of a non-negative Fraction as a short dyadic."""
    if x <= 0:
        return 0, 0
    p, q = x.numerator, x.denominator
    sh = RAD_BITS + q.bit_length() - p.bit_length() + 1
    if sh >= 0:
        m = -((-p << sh) // q)
        return _up(m, -sh)
    m = -((-p) // (q << -sh))
    return _up(m, -sh)


def _dyadic_to_frac(m: int, e: int) -> Fraction:
    if e >= 0:
        return Fraction(m << e)
    return Fraction(m, 1 << -e)


class Ball:
    """Real enclosure ``[mid - rad, mid + rad]`` with a dyadic midpoint."""

    __slots__ = ("man", "exp", "rman", "rexp", "prec")

    def __init__(self, man: int = 0, exp: int = 0, rman: int = 0, rexp: int = 0,
                 prec: int = DEFAULT_BITS):
        if rman < 0:
            raise ValueError("negative radius")
        if man == 0:
            exp = 0
        self.man = man
        self.exp = exp
        self.rman, self.rexp = _up(rman, rexp) if rman else (0, 0)
        self.prec = prec

    # -- construction ------------------------------------------------------

    @classmethod
    def exact(cls, value, prec: int = DEFAULT_BITS) -> Ball:
        """Ball for an int or dyadic Fraction without rounding."""
        if isinstance(value, int):
            return cls(value, 0, 0, 0, prec)
        value = Fraction(value)
        q = value.denominator
        if q & (q - 1):
            raise ValueError(f"{value} is not dyadic")
        return cls(value.numerator, -(q.bit_length() - 1), 0, 0, prec)

    @classmethod
    def from_rational(cls, q, prec: int) -> Ball:
        q = Fraction(q)
        p, d = q.numerator, q.denominator
        if p == 0:
            return cls(0, 0, 0, 0, prec)
        if d & (d - 1) == 0 and abs(p).bit_length() <= prec:
            return cls(p, -(d.bit_length() - 1), 0, 0, prec)
        # produce prec+1 significant bits then round to prec
        sh = prec + 2 + d.bit_length() - abs(p).bit_length()
        a = abs(p)
        num = a << sh if sh >= 0 else a >> -sh
        man, rem = divmod(num, d)
        exp = -sh
        # |exact - man*2^exp| < 2^exp
        inexact = rem != 0 or sh < 0
        man_s = -man if p < 0 else man
        m, e, rm, re_ = _round_mid(man_s, exp, prec)
        if inexact:
            rm, re_ = _add_up(rm, re_, 1, exp)
        return cls(m, e, rm, re_, prec)

    @classmethod
    def from_mid_rad(cls, mid, rad, prec: int) -> Ball:
        """Ball containing every point of ``[mid - rad, mid + rad]`` (Fractions)."""
        b = cls.from_rational(mid, prec)
        rm, re_ = _frac_to_dyadic_up(Fraction(rad))
        return b._widen(rm, re_)

    @classmethod
    def from_interval(cls, lo, hi, prec: int) -> Ball:
        lo, hi = Fraction(lo), Fraction(hi)
        if lo > hi:
            raise ValueError("empty interval")
        return cls.from_mid_rad((lo + hi) / 2, (hi - lo) / 2, prec)

    def _widen(self, rm: int, re_: int) -> Ball:
        if rm == 0:
            return self
        m, e = _add_up(self.rman, self.rexp, rm, re_)
        return Ball(self.man, self.exp, m, e, self.prec)

    def with_prec(self, prec: int) -> Ball:
        m, e, rm, re_ = _round_mid(self.man, self.exp, prec)
        r = _add_up(self.rman, self.rexp, rm, re_) if rm else (self.rman, self.rexp)
        return Ball(m, e, r[0], r[1], prec)

    # -- inspection --------------------------------------------------------

    @property
    def mid(self) -> Fraction:
        return _dyadic_to_frac(self.man, self.exp)

    @property
    def rad(self) -> Fraction:
        return _dyadic_to_frac(self.rman, self.rexp)

    def lower(self) -> Fraction:
        return self.mid - self.rad

    def upper(self) -> Fraction:
        return self.mid + self.rad

    def abs_upper(self) -> Fraction:
        return abs(self.mid) + self.rad

    def is_exact(self) -> bool:
        return self.rman == 0

    def is_zero(self) -> bool:
        return self.man == 0 and self.rman == 0

    def sign(self) -> Sign:
        if self.man == 0:
            return Sign.UNCERTAIN
        if _cmp(abs(self.man), self.exp, self.rman, self.rexp) > 0:
            return Sign.POSITIVE if self.man > 0 else Sign.NEGATIVE
        return Sign.UNCERTAIN

    def excludes_zero(self) -> bool:
        return self.sign() is not Sign.UNCERTAIN

    def contains(self, x) -> bool:
        if isinstance(x, Ball):
            return abs(x.mid - self.mid) + x.rad <= self.rad
        return abs(Fraction(x) - self.mid) <= self.rad

    def overlaps(self, other: Ball) -> bool:
        return abs(self.mid - other.mid) <= self.rad + other.rad

    def __float__(self) -> float:
        return math.ldexp(self.man, self.exp) if self.man else 0.0

    def __repr__(self) -> str:
        return f"Ball({ball_str(self, 20)})"

    def __str__(self) -> str:
        return ball_str(self)

    # -- arithmetic --------------------------------------------------------

    def _coerce(self, other) -> Ball:
        if isinstance(other, Ball):
            return other
        if isinstance(other, int):
            return Ball(other, 0, 0, 0, self.prec)
        if isinstance(other, Fraction):
            return Ball.from_rational(other, self.prec)
        return NotImplemented

    def __neg__(self) -> Ball:
        return Ball(-self.man, self.exp, self.rman, self.rexp, self.prec)

    def __pos__(self) -> Ball:
        return self

    def __add__(self, other) -> Ball:
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        prec = max(self.prec, other.prec)
        rm, re_ = _add_up(self.rman, self.rexp, other.rman, other.rexp)
        a, b = self, other
        if a.man == 0:
            m, e, em, ee = _round_mid(b.man, b.exp, prec)
            return Ball(m, e, *_add_up(rm, re_, em, ee), prec)
        if b.man == 0:
            m, e, em, ee = _round_mid(a.man, a.exp, prec)
            return Ball(m, e, *_add_up(rm, re_, em, ee), prec)
        ta = abs(a.man).bit_length() + a.exp
        tb = abs(b.man).bit_length() + b.exp
        if ta < tb:
            a, b = b, a
            ta, tb = tb, ta
        if ta - tb > prec + 4:
            # b is below the rounding resolution of a: absorb it into the radius
            m, e, em, ee = _round_mid(a.man, a.exp, prec)
            rm, re_ = _add_up(rm, re_, em, ee)
            rm, re_ = _add_up(rm, re_, abs(b.man), b.exp)
            return Ball(m, e, rm, re_, prec)
        e = min(a.exp, b.exp)
        s = (a.man << (a.exp - e)) + (b.man << (b.exp - e))
        m, e2, em, ee = _round_mid(s, e, prec)
        if em:
            rm, re_ = _add_up(rm, re_, em, ee)
        return Ball(m, e2, rm, re_, prec)

    __radd__ = __add__

    def __sub__(self, other) -> Ball:
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other) -> Ball:
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other + (-self)

    def __mul__(self, other) -> Ball:
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        prec = max(self.prec, other.prec)
        m, e, em, ee = _round_mid(self.man * other.man, self.exp + other.exp, prec)
        r1 = _mul_up(abs(self.man), self.exp, other.rman, other.rexp)
        r2 = _mul_up(abs(other.man), other.exp, self.rman, self.rexp)
        r3 = _mul_up(self.rman, self.rexp, other.rman, other.rexp)
        rm, re_ = _add_up(*r1, *r2)
        rm, re_ = _add_up(rm, re_, *r3)
        rm, re_ = _add_up(rm, re_, em, ee)
        return Ball(m, e, rm, re_, prec)

    __rmul__ = __mul__

    def __truediv__(self, other) -> Ball:
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if not other.excludes_zero():
            raise ZeroDivisionError("division by a ball that contains zero")
        prec = max(self.prec, other.prec)
        a, b = abs(self.man), abs(other.man)
        neg = (self.man < 0) != (other.man < 0)
        if a == 0:
            q, qexp, trunc = 0, 0, (0, 0)
        else:
            sh = max(prec + 2 + b.bit_length() - a.bit_length(), 0)
            q, rem = divmod(a << sh, b)
            qexp = self.exp - other.exp - sh
            trunc = (1, qexp) if rem else (0, 0)
        m, e, em, ee = _round_mid(-q if neg else q, qexp, prec)
        # |x/y - mx/my| <= (rx + |mx/my| ry) / (|my| - ry)
        qa = _add_up(q, qexp, *trunc)
        num = _add_up(self.rman, self.rexp, *_mul_up(qa[0], qa[1], other.rman, other.rexp))
        rm, re_ = _add_up(em, ee, *trunc)
        if num[0]:
            den = _den_lower(b, other.exp, other.rman, other.rexp)
            rm, re_ = _add_up(rm, re_, *_div_up(num[0], num[1], den[0], den[1]))
        return Ball(m, e, rm, re_, prec)

    def __rtruediv__(self, other) -> Ball:
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other / self

    def __pow__(self, k: int) -> Ball:
        if not isinstance(k, int) or k < 0:
            raise ValueError("only non-negative integer powers are supported")
        result = Ball(1, 0, 0, 0, self.prec)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result


def _den_lower(b: int, be: int, rm: int, re_: int) -> tuple[int, int]:
    """Lower bound of ``b*2**be - rm*2**re_`` (assumed positive)."""
    e = min(be, re_)
    d = (b << (be - e)) - (rm << (re_ - e))
    if d <= 0:
        raise ZeroDivisionError("division by a ball that contains zero")
    return _down(d, e)


def _div_up(nm: int, ne: int, dm: int, de: int) -> tuple[int, int]:
    sh = RAD_BITS + dm.bit_length() - nm.bit_length() + 2
    sh = max(sh, 0)
    q = ((nm << sh) // dm) + 1
    return _up(q, ne - de - sh)


def ball_from_rational(q, ctx: PrecisionCtx) -> Ball:
    return Ball.from_rational(parse_rational(q), ctx.bits)


def ball_sign(b: Ball) -> Sign:
    return b.sign()


def ball_str(b: Ball, digits: int | None = None) -> str:
    """Decimal ``midpoint ± radius`` whose interval encloses the ball."""
    if digits is None:
        digits = max(int(b.prec * 0.30103) + 1, 3)
    mid, rad = b.mid, b.rad
    if rad > 0:
        # no point printing digits far below the radius
        exp10 = math.floor(math.log10(float(rad))) if float(rad) > 0 else -digits
        mag = math.floor(math.log10(abs(float(mid)))) if mid and float(mid) != 0 else exp10
        digits = max(1, min(digits, mag - exp10 + 3))
    shown, shown_str = _round_decimal(mid, digits)
    err = rad + abs(mid - shown)
    if err == 0:
        return f"{shown_str} ± 0"
    return f"{shown_str} ± {_decimal_up(err)}"


def _round_decimal(x: Fraction, digits: int) -> tuple[Fraction, str]:
    if x == 0:
        return Fraction(0), "0"
    mag = math.floor(math.log10(abs(float(x)))) if float(x) != 0 else _log10_floor(abs(x))
    scale = digits - 1 - mag
    if scale >= 0:
        n = round(x * 10**scale)
        val = Fraction(n, 10**scale)
    else:
        n = round(x / 10**(-scale))
        val = Fraction(n * 10**(-scale))
    sgn = "-" if n < 0 else ""
    s = str(abs(n))
    if scale > 0:
        s = s.rjust(scale + 1, "0")
        s = s[:-scale] + "." + s[-scale:]
        s = s.rstrip("0").rstrip(".") if "." in s else s
    elif scale < 0:
        s = s + "0" * (-scale)
    return val, sgn + s


def _log10_floor(x: Fraction) -> int:
    e = len(str(x.numerator)) - len(str(x.denominator))
    while Fraction(10) ** e > x:
        e -= 1
    while Fraction(10) ** (e + 1) <= x:
        e += 1
    return e


def _decimal_up(x: Fraction) -> str:
    """Three-significant-digit scientific string that is >= x."""
    e = _log10_floor(x)
    scaled = x / Fraction(10) ** (e - 2)
    n = -((-scaled.numerator) // scaled.denominator)
    if n >= 1000:
        n = -((-n) // 10)
        e += 1
    s = str(n)
    return f"{s[0]}.{s[1:]}e{e:+d}"


# ---------------------------------------------------------------------------
# fixed-point series for pi and log(2)


def _atan_inv(x: int, w: int, hyperbolic: bool) -> tuple[int, int]:
    """floor-sum of atan(1/x) (or atanh) scaled by 2**w, with an error bound in ulps."""
    p = (1 << w) // x
    x2 = x * x
    total = 0
    k = 0
    while p:
        term = p // (2 * k + 1)
        if hyperbolic or k % 2 == 0:
            total += term
        else:
            total -= term
        p //= x2
        k += 1
    return total, 2 * (k + 2)


@lru_cache(maxsize=None)
def _pi_fixed(w: int) -> tuple[int, int]:
    a, ea = _atan_inv(5, w, False)
    b, eb = _atan_inv(239, w, False)
    return 16 * a - 4 * b, 16 * ea + 4 * eb


@lru_cache(maxsize=None)
def _ln2_fixed(w: int) -> tuple[int, int]:
    a, ea = _atan_inv(3, w, True)
    return 2 * a, 2 * ea


def _from_fixed(v: int, err: int, w: int, prec: int) -> Ball:
    m, e, em, ee = _round_mid(v, -w, prec)
    rm, re_ = _add_up(err, -w, em, ee)
    return Ball(m, e, rm, re_, prec)


def ball_pi(ctx_or_bits) -> Ball:
    prec = _prec_of(ctx_or_bits)
    w = prec + 16
    return _from_fixed(*_pi_fixed(w), w, prec)


def ball_ln2(ctx_or_bits) -> Ball:
    prec = _prec_of(ctx_or_bits)
    w = prec + 16
    return _from_fixed(*_ln2_fixed(w), w, prec)


def _prec_of(ctx_or_bits) -> int:
    return ctx_or_bits.bits if isinstance(ctx_or_bits, PrecisionCtx) else int(ctx_or_bits)


# ---------------------------------------------------------------------------
# elementary functions


def _exp_exact_point(x: Fraction, prec: int) -> Ball:
    """Enclosure of exp(x) for an exact dyadic x."""
    if x == 0:
        return Ball(1, 0, 0, 0, prec)
    top = math.frexp(float(abs(x)))[1] if abs(x) < 2**1000 else abs(x).numerator.bit_length()
    s = max(0, top + 8)
    work = prec + s + 24
    t = Ball.from_rational(x / (1 << s), work)
    # |t| < 2**-8
    total = Ball(1, 0, 0, 0, work)
    term = Ball(1, 0, 0, 0, work)
    j = 0
    tol = Fraction(1, 1 << (work + 4))
    tabs = t.abs_upper()
    bound = tabs
    while True:
        j += 1
        term = term * t / j
        total = total + term
        bound = bound * tabs / (j + 1)
        if bound < tol:
            break
    # remaining tail <= 2*|t|^(j+1)/(j+1)! since |t| < 1/2
    total = Ball.from_mid_rad(0, 2 * bound, work) + total
    for _ in range(s):
        total = total * total
    return total.with_prec(prec)


def ball_exp(x: Ball) -> Ball:
    prec = x.prec
    centre = _exp_exact_point(x.mid, prec + 10)
    if x.is_exact():
        return centre.with_prec(prec)
    r = x.rad
    # |exp(x) - exp(m)| <= exp(m) * (exp(r) - 1)
    er = _exp_exact_point(r, 40)
    spread = centre.abs_upper() * (er.upper() - 1)
    return (centre + Ball.from_mid_rad(0, spread, prec + 10)).with_prec(prec)


def _log_exact_point(x: Fraction, prec: int) -> Ball:
    if x <= 0:
        raise ValueError("log of a non-positive number")
    if x == 1:
        return Ball(0, 0, 0, 0, prec)
    work = prec + 24
    k = x.numerator.bit_length() - x.denominator.bit_length()
    u = x / Fraction(2) ** k
    # bring u into [3/4, 3/2)
    while u >= Fraction(3, 2):
        u /= 2
        k += 1
    while u < Fraction(3, 4):
        u *= 2
        k -= 1
    z = Ball.from_rational((u - 1) / (u + 1), work)
    z2 = z * z
    za = z.abs_upper()
    power = z
    total = Ball(0, 0, 0, 0, work)
    j = 0
    tol = Fraction(1, 1 << (work + 4))
    zpow = za
    while True:
        total = total + power / (2 * j + 1)
        j += 1
        power = power * z2
        zpow = zpow * za * za
        if zpow < tol:
            break
    # tail of sum z^(2j+1)/(2j+1) from index j on is below zpow/(1-z^2) <= 2*zpow
    total = (total + Ball.from_mid_rad(0, 2 * zpow, work)) * 2
    if k:
        total = total + ball_ln2(work) * k
    return total.with_prec(prec)


def ball_log(x: Ball) -> Ball:
    if x.sign() is not Sign.POSITIVE:
        raise ValueError("log requires a certified positive ball")
    prec = x.prec
    centre = _log_exact_point(x.mid, prec + 10)
    if x.is_exact():
        return centre.with_prec(prec)
    # |log(x) - log(m)| <= r / (m - r)
    spread = x.rad / (x.mid - x.rad)
    return (centre + Ball.from_mid_rad(0, spread, prec + 10)).with_prec(prec)


def ball_sqrt(x: Ball) -> Ball:
    lo, hi = x.lower(), x.upper()
    if lo < 0:
        raise ValueError("sqrt requires a certified non-negative ball")
    w = x.prec + 8
    scale = 1 << (2 * w)
    lo_n = (lo * scale).numerator // (lo * scale).denominator
    hi_s = hi * scale
    hi_n = -((-hi_s.numerator) // hi_s.denominator)
    s_lo = Fraction(math.isqrt(lo_n), 1 << w)
    s_hi = Fraction(math.isqrt(hi_n) + 1, 1 << w)
    return Ball.from_interval(s_lo, s_hi, x.prec)
