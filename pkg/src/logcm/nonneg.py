"""Certified nonnegativity of polynomials and the complete-monotonicity decision.

A log-function f is completely monotone exactly when its density polynomial
q (L^-1(f)(t) = q(log t)) is nonnegative.  The deciders here only answer
YES with a certificate of strict positivity (or an exact certificate for
rational input) and only answer NO with a rational point at which q is
certified negative.  Everything else is UNKNOWN.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .exactnum import Ball, PrecisionCtx, Sign, ball_str
from .poly import LogFunction, MPoly, UPoly, format_mpoly
from .constants import euler_gamma, zeta_int
from .transform import inverse_laplace_multi, inverse_laplace_uni


class Status(enum.Enum):
    CM = "CM"
    NOT_CM = "NOT_CM"
    UNKNOWN = "UNKNOWN"


class PsdStatus(enum.Enum):
    YES = "YES"
    NO = "NO"
    UNKNOWN = "UNKNOWN"


@dataclass
class Verdict:
    status: Status
    certificate: dict | None = None
    witness: tuple | None = None  # rational point in log-coordinates u = log t
    precision_used: int = 0
    notes: str = ""
    witness_value: Ball | None = None
    polynomial: object = None  # the transformed polynomial that was decided

    @property
    def is_cm(self) -> bool:
        return self.status is Status.CM

    def to_dict(self) -> dict:
        out = {
            "status": self.status.value,
            "precision_bits": self.precision_used,
            "notes": self.notes,
        }
        if self.certificate is not None:
            out["certificate"] = self.certificate
        if self.witness is not None:
            out["witness"] = {
                "log_t": [_qstr(w) for w in self.witness],
                "t": [_exp_str(w) for w in self.witness],
                "value": ball_str(self.witness_value, 30) if self.witness_value else None,
            }
        return out


def _qstr(x: Fraction) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def _exp_str(x: Fraction) -> str:
    v = float(x)
    try:
        return repr(math.exp(v))
    except OverflowError:
        return "inf"


# ---------------------------------------------------------------------------
# exact univariate decision (rational coefficients)


def _trim(c: list) -> list:
    c = list(c)
    while c and c[-1] == 0:
        c.pop()
    return c


def _pdivmod(a: list, b: list) -> tuple[list, list]:
    a = list(a)
    q = [Fraction(0)] * max(len(a) - len(b) + 1, 1)
    lead = b[-1]
    while len(a) >= len(b) and a:
        f = a[-1] / lead
        shift = len(a) - len(b)
        q[shift] = f
        for i, bc in enumerate(b):
            a[shift + i] -= f * bc
        a.pop()
        a = _trim(a)
    return _trim(q), a


def _deriv(c: list) -> list:
    return [c[i] * i for i in range(1, len(c))]


def _gcd(a: list, b: list) -> list:
    a, b = _trim(a), _trim(b)
    while b:
        _, r = _pdivmod(a, b)
        a, b = b, r
    if not a:
        return a
    lead = a[-1]
    return [x / lead for x in a]


def _peval(c: list, y: Fraction) -> Fraction:
    acc = Fraction(0)
    for x in reversed(c):
        acc = acc * y + x
    return acc


def odd_multiplicity_part(c: list) -> list:
    """Product of the square-free factors of odd multiplicity (Yun's algorithm)."""
    f = _trim([Fraction(x) for x in c])
    if len(f) <= 1:
        return [Fraction(1)]
    fp = _deriv(f)
    a0 = _gcd(f, fp)
    b, _ = _pdivmod(f, a0)
    cc, _ = _pdivmod(fp, a0)
    d = [x - y for x, y in itertools.zip_longest(cc, _deriv(b), fillvalue=Fraction(0))]
    d = _trim(d)
    odd = [Fraction(1)]
    i = 1
    while len(b) > 1:
        a = _gcd(b, d) if d else b
        if i % 2 == 1 and len(a) > 1:
            odd = _pmul(odd, a)
        b, _ = _pdivmod(b, a)
        cc, _ = _pdivmod(d, a) if d else ([], [])
        d = _trim([x - y for x, y in itertools.zip_longest(cc, _deriv(b), fillvalue=Fraction(0))])
        i += 1
    return odd


def _pmul(a: list, b: list) -> list:
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] += x * y
    return out


def sturm_sequence(c: list) -> list:
    seq = [_trim(c), _trim(_deriv(c))]
    while seq[-1] and len(seq[-1]) > 1:
        _, r = _pdivmod(seq[-2], seq[-1])
        if not r:
            break
        seq.append([-x for x in r])
    return [s for s in seq if s]


def _sign_changes(values) -> int:
    signs = [v > 0 for v in values if v != 0]
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def _changes_at(seq, y) -> int:
    return _sign_changes([_peval(s, y) for s in seq])


def _changes_at_inf(seq, sign: int) -> int:
    vals = []
    for s in seq:
        deg = len(s) - 1
        vals.append(s[-1] * (sign ** deg))
    return _sign_changes(vals)


def cauchy_bound(c: list) -> Fraction:
    lead = abs(c[-1])
    return 1 + Fraction(max((abs(x) for x in c[:-1]), default=0)) / lead


def isolate_real_roots(c: list) -> list:
    """Disjoint rational intervals (lo, hi], each holding exactly one root of square-free c."""
    seq = sturm_sequence(c)
    B = cauchy_bound(c)
    out = []
    stack = [(-B, B)]
    while stack:
        lo, hi = stack.pop()
        n = _changes_at(seq, lo) - _changes_at(seq, hi)
        if n == 0:
            continue
        if n == 1:
            out.append((lo, hi))
            continue
        mid = (lo + hi) / 2
        stack.append((mid, hi))
        stack.append((lo, mid))
    return sorted(out)


def integer_scaled(coeffs) -> tuple[list, int]:
    """Integer coefficients D*c with D > 0 the lcm of the denominators."""
    if all(type(x) is int for x in coeffs):
        return list(coeffs), 1
    fr = [Fraction(x) for x in coeffs]
    D = math.lcm(*(x.denominator for x in fr)) if fr else 1
    return [x.numerator * (D // x.denominator) for x in fr], D


def exact_nonneg(p) -> Verdict:
    """Decide p(y) >= 0 for all real y, for exact rational coefficients."""
    c, scale = integer_scaled(p.coeffs if isinstance(p, UPoly) else p)
    c = _trim(c)

    def negative(y, note):
        v = Fraction(_peval(c, y), scale)
        return Verdict(Status.NOT_CM, witness=(Fraction(y),), notes=note,
                       witness_value=Ball.from_rational(v, 64))

    if not c:
        return Verdict(Status.CM, {"kind": "zero_polynomial"}, notes="identically zero")
    d = len(c) - 1
    if d == 0:
        if c[0] > 0:
            return Verdict(Status.CM, {"kind": "positive_constant",
                                       "value": _qstr(Fraction(c[0], scale))})
        return negative(Fraction(0), "negative constant")
    if d % 2 == 1 or c[-1] < 0:
        B = cauchy_bound(c) + 1
        for y in (B, -B):
            if _peval(c, y) < 0:
                return negative(y, "odd degree or negative leading term")
        raise AssertionError("no negative point beyond the root bound")
    if d == 2:
        disc = c[1] * c[1] - 4 * c[0] * c[2]
        if disc <= 0:
            return Verdict(Status.CM, {"kind": "quadratic_completed_square",
                                       "discriminant": _qstr(Fraction(disc, scale * scale))})
        return negative(Fraction(-c[1], 2 * c[2]), "positive discriminant")
    # cheap falsification at the approximate critical points before any gcd work
    for y in _float_gap_points(_deriv(c), spread=False):
        v = _peval(c, y)
        if v < 0:
            return negative(y, "negative value at a local minimum")
    c = [Fraction(x) for x in c]
    odd = odd_multiplicity_part(c)
    if len(odd) == 1 or count_real_roots(odd) == 0:
        return Verdict(Status.CM, {
            "kind": "exact_root_count",
            "odd_multiplicity_factor": [_qstr(x) for x in odd],
            "real_roots_of_odd_factor": 0,
        })
    # p changes sign at every real root of the odd part: look between them
    for y in _float_gap_points(odd):
        v = _peval(c, y)
        if v < 0:
            return negative(y, "sign change at an odd-multiplicity root")
    roots = isolate_real_roots(odd)
    B = cauchy_bound(c) + 1
    ends = [-B] + [x for iv in roots for x in iv] + [B]
    for a, b in zip(ends, ends[1:]):
        y = (a + b) / 2
        v = _peval(c, y)
        if v < 0:
            return negative(y, "sign change at an odd-multiplicity root")
    # isolating intervals may touch; refine until a gap point turns negative
    seq = sturm_sequence(odd)
    for _ in range(200):
        refined = []
        for lo, hi in roots:
            mid = (lo + hi) / 2
            if _changes_at(seq, lo) - _changes_at(seq, mid) == 1:
                refined.append((lo, mid))
            else:
                refined.append((mid, hi))
        roots = refined
        ends = [-B] + [x for iv in roots for x in iv] + [B]
        for a, b in zip(ends, ends[1:]):
            y = (a + b) / 2
            v = _peval(c, y)
            if v < 0:
                return negative(y, "sign change at an odd-multiplicity root")
    raise AssertionError("odd-multiplicity root found but no negative sample")


def count_real_roots(c: list) -> int:
    """Number of distinct real roots (Sturm sign changes at -inf minus +inf)."""
    seq = sturm_sequence(c)
    return _changes_at_inf(seq, -1) - _changes_at_inf(seq, 1)


def _float_gap_points(c: list, spread: bool = True) -> list:
    """Short dyadic points between and beyond the approximate real roots of c
    (or at the roots themselves when ``spread`` is false)."""
    try:
        r = np.roots([float(x) for x in reversed(c)])
    except (np.linalg.LinAlgError, OverflowError, ValueError):
        return []
    real = sorted(float(z.real) for z in r if abs(z.imag) <= 1e-7 * (1 + abs(z)))
    if not real or not all(math.isfinite(x) for x in real):
        return []
    if spread:
        pts = [real[0] - 1, real[-1] + 1] + [(a + b) / 2 for a, b in zip(real, real[1:])]
    else:
        pts = real
    out = []
    for y in pts:
        for e in (4, 16, 40):
            out.append(Fraction(round(y * 2**e), 2**e))
    return out


# ---------------------------------------------------------------------------
# Ball univariate certification


MAX_COVER_INTERVALS = 20000


def _ball_parts(q: UPoly) -> tuple[list, list]:
    mids, rads = [], []
    for c in q.coeffs:
        if isinstance(c, Ball):
            mids.append(c.mid)
            rads.append(c.rad)
        else:
            mids.append(Fraction(c))
            rads.append(Fraction(0))
    return mids, rads


def _taylor(c: list, a: Fraction) -> list:
    c = list(c)
    n = len(c)
    for i in range(n - 1):
        for j in range(n - 2, i - 1, -1):
            c[j] += a * c[j + 1]
    return c


def _interval_lower(mids, rads, centre: Fraction, r: Fraction) -> Fraction:
    """Lower bound of q over [centre - r, centre + r] for every coefficient choice."""
    t = _taylor(mids, centre)
    low = t[0]
    rp = r
    for tj in t[1:]:
        low -= abs(tj) * rp
        rp *= r
    reach = abs(centre) + r
    rp = Fraction(1)
    for ri in rads:
        low -= ri * rp
        rp *= reach
    return low


def point_upper(mids, rads, y: Fraction) -> Fraction:
    v = _peval(mids, y)
    ay = abs(y)
    rp = Fraction(1)
    for ri in rads:
        v += ri * rp
        rp *= ay
    return v


def point_ball(q: UPoly, y: Fraction) -> Ball:
    """Enclosure of q(y) at a rational point."""
    mids, rads = _ball_parts(q)
    v = _peval(mids, y)
    ay = abs(y)
    r = Fraction(0)
    rp = Fraction(1)
    for ri in rads:
        r += ri * rp
        rp *= ay
    prec = max((c.prec for c in q.coeffs if isinstance(c, Ball)), default=256)
    return Ball.from_mid_rad(v, r, prec)


def _dyadic_ceil(x: Fraction) -> Fraction:
    """Smallest power of two >= x (x > 0)."""
    p = 1
    while p < x:
        p *= 2
    return Fraction(p)


def _search_minima(mids: list, R: float) -> list:
    """Candidate points where the midpoint polynomial is small (floats)."""
    coeffs = [float(c) for c in mids]
    poly = np.polynomial.Polynomial(coeffs)
    cands = []
    for d in range(4, 11):
        grid = np.linspace(-R, R, 2**d + 1)
        vals = poly(grid)
        i = int(np.argmin(vals))
        cands.append(float(grid[i]))
    dp = poly.deriv()
    d2 = dp.deriv()
    polished = []
    for y in cands:
        for _ in range(50):
            g2 = d2(y)
            if g2 == 0 or not math.isfinite(g2):
                break
            step = dp(y) / g2
            if not math.isfinite(step):
                break
            y -= step
            if abs(step) < 1e-15 * (1 + abs(y)):
                break
        if math.isfinite(y):
            polished.append(y)
    crit = []
    if len(coeffs) > 2:
        try:
            for r in dp.roots():
                if abs(r.imag) < 1e-9 * (1 + abs(r.real)):
                    crit.append(float(r.real))
        except np.linalg.LinAlgError:
            pass
    pts = cands + polished + crit + [0.0]
    return sorted(set(pts), key=lambda y: poly(y))


def find_negative_point(q: UPoly, R: Fraction | None = None):
    """Rational y with q(y) certified negative, or None."""
    mids, rads = _ball_parts(q)
    if R is None:
        R = Fraction(16)
    for y in _search_minima(mids, float(R)):
        for cand in _rational_candidates(y):
            if point_upper(mids, rads, cand) < 0:
                return cand
    return None


def _rational_candidates(y: float):
    for bits in (0, 4, 8, 16, 32):
        yield Fraction(round(y * 2**bits), 2**bits)
    yield Fraction(y)


def positivity_cover(q: UPoly, max_intervals: int = MAX_COVER_INTERVALS):
    """Try to certify q > 0 on the real line.

    Returns (certificate or None, best point seen).  The certificate holds the
    dominance radius R (no realisation of the coefficients has a root with
    |y| > R) and a list of intervals tiling [-R, R] with a positive lower bound
    on each.
    """
    mids, rads = _ball_parts(q)
    d = len(mids) - 1
    lead_low = abs(mids[d]) - rads[d]
    R = _dyadic_ceil(1 + max((abs(m) + r for m, r in zip(mids[:-1], rads[:-1])),
                             default=Fraction(0)) / lead_low)
    intervals = []
    stack = [(Fraction(0), R)]
    best = (None, None)
    # a minimum m > 0 needs intervals of width about sqrt(m); go down to sqrt(radius)
    prec = max((c.prec for c in q.coeffs if isinstance(c, Ball)), default=256)
    min_r = R / (1 << (prec // 2 + 16))
    examined = 0
    while stack:
        centre, r = stack.pop()
        examined += 1
        if examined > max_intervals:
            return None, best
        low = _interval_lower(mids, rads, centre, r)
        if low > 0:
            intervals.append((centre - r, centre + r, low))
            continue
        up = point_upper(mids, rads, centre)
        if best[1] is None or up < best[1]:
            best = (centre, up)
        if up < 0 or r < min_r:
            return None, best
        h = r / 2
        stack.append((centre + h, h))
        stack.append((centre - h, h))
    intervals.sort()
    cert = {
        "kind": "positivity_cover",
        "dominance_radius": _qstr(R),
        "intervals": [[_qstr(a), _qstr(b), _qstr(low)] for a, b, low in intervals],
    }
    return cert, best


def verify_positivity_cover(q: UPoly, cert: dict) -> bool:
    """Re-check a cover certificate against (possibly recomputed) q."""
    mids, rads = _ball_parts(q)
    d = len(mids) - 1
    while d > 0 and mids[d] == 0 and rads[d] == 0:
        d -= 1
    mids, rads = mids[: d + 1], rads[: d + 1]
    if d % 2 or mids[d] - rads[d] <= 0:
        return False
    R = Fraction(cert["dominance_radius"])
    lead_low = mids[d] - rads[d]
    bound = 1 + max((abs(m) + r for m, r in zip(mids[:-1], rads[:-1])), default=Fraction(0)) / lead_low
    if bound > R:
        return False
    pos = -R
    for a, b, _ in cert["intervals"]:
        a, b = Fraction(a), Fraction(b)
        if a != pos or b <= a:
            return False
        if _interval_lower(mids, rads, (a + b) / 2, (b - a) / 2) <= 0:
            return False
        pos = b
    return pos == R


def uni_nonneg(q: UPoly, ctx: PrecisionCtx | None = None) -> Verdict:
    """Decide global nonnegativity of a univariate polynomial.

    Exact rational coefficients are decided exactly.  Ball coefficients are
    decided by a strict-positivity cover (YES) or a certified negative point
    (NO); anything else is UNKNOWN.
    """
    bits = ctx.bits if ctx else 0
    if not any(isinstance(c, Ball) for c in q.coeffs):
        v = exact_nonneg(q)
        v.precision_used = bits
        return v
    q = q.map(lambda c: c if isinstance(c, Ball) else Ball.from_rational(Fraction(c), bits or 256))
    deg = q.degree()
    if deg < 0:
        return Verdict(Status.CM, {"kind": "zero_polynomial"}, precision_used=bits,
                       notes="identically zero")
    q = UPoly(q.coeffs[: deg + 1])
    lead = q.coeffs[deg]
    lead_sign = lead.sign()

    def negative(y, note):
        return Verdict(Status.NOT_CM, witness=(y,), precision_used=bits, notes=note,
                       witness_value=point_ball(q, y))

    if lead_sign is Sign.UNCERTAIN:
        y = find_negative_point(q)
        if y is not None:
            return negative(y, "certified negative value")
        return Verdict(Status.UNKNOWN, precision_used=bits,
                       notes="leading coefficient not sign-certified")
    if deg == 0:
        if lead_sign is Sign.POSITIVE:
            return Verdict(Status.CM, {"kind": "positive_constant", "value": ball_str(lead, 30)},
                           precision_used=bits)
        return negative(Fraction(0), "negative constant")
    if deg % 2 == 1 or lead_sign is Sign.NEGATIVE:
        mids, rads = _ball_parts(q)
        lead_low = abs(mids[-1]) - rads[-1]
        B = _dyadic_ceil(1 + max(abs(m) + r for m, r in zip(mids[:-1], rads[:-1])) / lead_low) + 1
        for y in (B, -B):
            if point_upper(mids, rads, y) < 0:
                return negative(y, "odd degree or negative leading coefficient")
        return Verdict(Status.UNKNOWN, precision_used=bits, notes="could not certify the tail sign")
    if deg == 2:
        a, b, c0 = q.coeffs[2], q.coeffs[1], q.coeffs[0]
        disc = b * b - a * c0 * 4
        if disc.sign() is Sign.NEGATIVE:
            # a (y + b/2a)^2 + (4ac - b^2)/4a with both parts certified positive
            return Verdict(Status.CM, {"kind": "quadratic_completed_square",
                                       "leading": ball_str(a, 30),
                                       "discriminant": ball_str(disc, 30)},
                           precision_used=bits)
        if disc.sign() is Sign.POSITIVE:
            y0 = -b.mid / (2 * a.mid)
            short = [Fraction(round(y0 * 2**e), 2**e) for e in (0, 4, 8, 16, 32, 64)]
            for y in short + [y0]:
                if point_ball(q, y).sign() is Sign.NEGATIVE:
                    return negative(y, "positive discriminant")
    cert, best = positivity_cover(q)
    if cert is not None:
        return Verdict(Status.CM, cert, precision_used=bits)
    if best[1] is not None and best[1] < 0:
        return negative(best[0], "certified negative value")
    mids, _ = _ball_parts(q)
    y = find_negative_point(q, _dyadic_ceil(1 + max(abs(m) for m in mids[:-1]) / abs(mids[-1])))
    if y is not None:
        return negative(y, "certified negative value")
    return Verdict(Status.UNKNOWN, precision_used=bits,
                   notes="positivity not certified; minimum too close to zero for this precision")


# ---------------------------------------------------------------------------
# PSD check over Balls


@dataclass
class LdltResult:
    status: PsdStatus
    pivots: list = field(default_factory=list)  # (index, pivot ball)
    direction: list | None = None  # float vector v with v^T M v < 0 (midpoint estimate)
    dropped: list = field(default_factory=list)


def _to_ball(x, prec: int) -> Ball:
    return x if isinstance(x, Ball) else Ball.from_rational(Fraction(x), prec)


def ldlt_balls(M) -> LdltResult:
    n = len(M)
    if any(len(row) != n for row in M):
        raise ValueError("psd_check needs a square matrix")
    prec = max((x.prec for row in M for x in row if isinstance(x, Ball)), default=256)
    S = [[_to_ball(x, prec) for x in row] for row in M]
    active = [i for i in range(n) if not all(S[i][j].is_zero() for j in range(n))]
    dropped = [i for i in range(n) if i not in active]
    pivots = []
    # Schur complement bookkeeping over the active index set
    L = {}
    remaining = list(active)
    while remaining:
        for i in remaining:
            if S[i][i].sign() is Sign.NEGATIVE:
                return LdltResult(PsdStatus.NO, pivots, _negative_direction(M, pivots, i, L), dropped)
        cands = [i for i in remaining if S[i][i].sign() is Sign.POSITIVE]
        if not cands:
            return LdltResult(PsdStatus.UNKNOWN, pivots, None, dropped)
        p = max(cands, key=lambda i: S[i][i].lower())
        piv = S[p][p]
        pivots.append((p, piv))
        remaining.remove(p)
        for i in remaining:
            L[(i, p)] = S[i][p] / piv
        for i in remaining:
            for j in remaining:
                if j < i:
                    continue
                upd = S[i][j] - L[(i, p)] * S[p][j]
                S[i][j] = upd
                S[j][i] = upd
    return LdltResult(PsdStatus.YES, pivots, None, dropped)


def _negative_direction(M, pivots, i: int, L) -> list:
    """v with v_i = 1 and pivot coordinates eliminating the pivot rows (midpoints)."""
    A = np.array([[float(x) for x in row] for row in M])
    n = A.shape[0]
    P = [p for p, _ in pivots]
    v = np.zeros(n)
    v[i] = 1.0
    if P:
        App = A[np.ix_(P, P)]
        rhs = A[np.ix_(P, [i])].ravel()
        try:
            v[P] = -np.linalg.solve(App, rhs)
        except np.linalg.LinAlgError:
            pass
    return v.tolist()


def psd_check(M) -> PsdStatus:
    """YES if certified positive definite (after dropping exactly-zero rows), NO if a
    principal minor is certified negative, UNKNOWN otherwise."""
    return ldlt_balls(M).status


def ldlt_exact(M) -> bool:
    """Exact positive-definiteness test for a symmetric rational matrix."""
    n = len(M)
    S = [[Fraction(x) for x in row] for row in M]
    for k in range(n):
        if S[k][k] <= 0:
            return False
        for i in range(k + 1, n):
            f = S[i][k] / S[k][k]
            if f:
                for j in range(k + 1, n):
                    S[i][j] -= f * S[k][j]
    return True


# ---------------------------------------------------------------------------
# degree-2 multivariate case


@dataclass
class QuadraticMatrix:
    """f = (l, 1) D (l, 1)^T / prod x with l = log x; D~ is the density's matrix
    in the variables y_i = -log t_i - gamma."""

    D: list
    D_tilde: list


def quadratic_matrix(f: LogFunction, ctx: PrecisionCtx) -> QuadraticMatrix:
    if f.n > 2:
        raise ValueError("quadratic_matrix needs total degree <= 2")
    s = f.s
    D = [[Fraction(0)] * (s + 1) for _ in range(s + 1)]
    for exps, c in f.coeffs.terms.items():
        c = Fraction(c)
        idx = [i for i, e in enumerate(exps) for _ in range(e)]
        if len(idx) == 0:
            D[s][s] += c
        elif len(idx) == 1:
            D[idx[0]][s] += c / 2
            D[s][idx[0]] += c / 2
        elif idx[0] == idx[1]:
            D[idx[0]][idx[0]] += c
        else:
            D[idx[0]][idx[1]] += c / 2
            D[idx[1]][idx[0]] += c / 2
    z2 = zeta_int(2, ctx)
    Dt = [[Ball.from_rational(x, ctx.bits) for x in row] for row in D]
    trace = sum((D[i][i] for i in range(s)), Fraction(0))
    if trace:
        Dt[s][s] = Dt[s][s] - z2 * Ball.from_rational(trace, ctx.bits)
    return QuadraticMatrix(D, Dt)


def mpoly_point_ball(q: MPoly, point) -> Ball:
    prec = max((c.prec for c in q.terms.values() if isinstance(c, Ball)), default=256)
    pt = [Ball.from_rational(Fraction(x), prec) for x in point]
    return q(pt)


def decide_cm_quadratic(f: LogFunction, ctx: PrecisionCtx, q: MPoly | None = None) -> Verdict:
    """s-variate degree <= 2: CM iff D~ is positive semidefinite."""
    if q is None:
        q = inverse_laplace_multi(f, ctx)
    Q = quadratic_matrix(f, ctx)
    res = ldlt_balls(Q.D_tilde)
    s = f.s
    if res.status is PsdStatus.YES:
        cert = {
            "kind": "ldlt_positive_pivots",
            "matrix": [[ball_str(x, 30) for x in row] for row in Q.D_tilde],
            "pivots": [[i, ball_str(p, 30)] for i, p in res.pivots],
            "dropped_zero_rows": res.dropped,
        }
        return Verdict(Status.CM, cert, precision_used=ctx.bits, polynomial=q)
    gamma_mid = float(euler_gamma(ctx))
    tries = []
    if res.direction is not None:
        # (y, 1) D~ (y, 1)^T < 0 at y = v/v_s; with v_s = 0 go far along v instead
        v = np.array(res.direction)
        if abs(v[s]) > 1e-12:
            tries.append(v[:s] / v[s])
        for scale in (1.0, 1e2, 1e4, 1e8):
            tries.append(v[:s] * scale)
    for y in tries:
        u = [-float(yi) - gamma_mid for yi in y]
        for cand in _rational_points(u):
            val = mpoly_point_ball(q, cand)
            if val.sign() is Sign.NEGATIVE:
                return Verdict(Status.NOT_CM, witness=tuple(cand), precision_used=ctx.bits,
                               notes="D~ has a certified negative principal minor",
                               witness_value=val, polynomial=q)
    # boundary fallback: sample the density polynomial
    w = find_negative_point_multi(q)
    if w is not None:
        return Verdict(Status.NOT_CM, witness=w, precision_used=ctx.bits,
                       notes="certified negative value", witness_value=mpoly_point_ball(q, w),
                       polynomial=q)
    return Verdict(Status.UNKNOWN, precision_used=ctx.bits, polynomial=q,
                   notes="D~ not certified definite; likely on the boundary of the cone")


def _rational_points(u):
    """Short dyadic roundings of a float point, coarse first, then the exact float."""
    for bits in (0, 4, 8, 20, 40):
        yield [Fraction(round(x * 2**bits), 2**bits) for x in u]
    yield [Fraction(x) for x in u]


# ---------------------------------------------------------------------------
# general multivariate case


MAX_GRID_POINTS = 200_000


def _mpoly_float(q: MPoly):
    exps = np.array([e for e in q.terms], dtype=float) if q.terms else np.zeros((0, q.s))
    coefs = np.array([float(c) for c in q.terms.values()])

    def f(X):
        X = np.atleast_2d(X)
        with np.errstate(all="ignore"):
            mons = np.prod(X[:, None, :] ** exps[None, :, :], axis=2)
        return mons @ coefs
    return f


def find_negative_point_multi(q: MPoly, R: float | None = None):
    """Grid plus local descent on the midpoint polynomial, then Ball certification."""
    if not q.terms:
        return None
    f = _mpoly_float(q)
    s = q.s
    if R is None:
        R = 8.0
    cands = []
    for d in range(4, 11):
        per_axis = 2**d + 1
        if per_axis**s > MAX_GRID_POINTS:
            break
        axis = np.linspace(-R, R, per_axis)
        grid = np.array(list(itertools.product(axis, repeat=s)))
        vals = f(grid)
        order = np.argsort(vals)[:4]
        cands.extend(grid[i] for i in order)
    if not cands:
        per_axis = max(3, int(MAX_GRID_POINTS ** (1 / s)))
        axis = np.linspace(-R, R, per_axis)
        rng = np.random.default_rng(0)
        grid = rng.choice(axis, size=(MAX_GRID_POINTS, s))
        vals = f(grid)
        cands.extend(grid[i] for i in np.argsort(vals)[:8])
    from scipy.optimize import minimize

    polished = []
    for x0 in cands[-8:]:
        try:
            with np.errstate(all="ignore"):
                r = minimize(lambda x: float(f(x)[0]), x0, method="Nelder-Mead",
                             bounds=[(-R, R)] * s,
                             options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 2000})
            polished.append(r.x)
        except (ValueError, FloatingPointError):
            pass
    pts = sorted(cands + polished, key=lambda x: float(f(x)[0]))
    for x in pts[:12]:
        if not np.all(np.isfinite(x)) or float(f(x)[0]) >= 0:
            continue
        for cand in _rational_points(x):
            if mpoly_point_ball(q, cand).sign() is Sign.NEGATIVE:
                return tuple(cand)
    return None


def _monomials(s: int, max_deg: int) -> list:
    out = []
    for d in range(max_deg + 1):
        for c in itertools.product(range(d + 1), repeat=s):
            if sum(c) == d:
                out.append(c)
    return sorted(out, key=lambda e: (sum(e), tuple(-x for x in e)))


def sos_certificate(q: MPoly, denominator_bits: int = 40):
    """Best-effort rational Gram certificate for q (Ball coefficients).

    Returns a certificate dict or None.
    """
    import cvxpy as cp

    d = max((sum(e) for e, c in q.terms.items() if not c.is_zero()), default=0)
    if d % 2:
        return None
    half = d // 2
    basis = _monomials(q.s, half)
    N = len(basis)
    index: dict = {}
    for i in range(N):
        for j in range(i, N):
            a = tuple(x + y for x, y in zip(basis[i], basis[j]))
            index.setdefault(a, []).append((i, j))
    support = set(index)
    if any(e not in support for e in q.terms):
        return None
    G = cp.Variable((N, N), symmetric=True)
    t = cp.Variable()
    cons = [G - t * np.eye(N) >> 0, t <= 1]
    for a, pairs in index.items():
        target = float(q.terms[a]) if a in q.terms else 0.0
        cons.append(sum(G[i, j] if i == j else 2 * G[i, j] for i, j in pairs) == target)
    prob = cp.Problem(cp.Maximize(t), cons)
    try:
        prob.solve(solver=cp.CLARABEL)
    except Exception:  # solver failures just mean no certificate
        try:
            prob.solve(solver=cp.SCS, eps=1e-9)
        except Exception:
            return None
    if G.value is None or t.value is None or t.value <= 0:
        return None
    scale = 1 << denominator_bits
    Gv = G.value
    Gq = [[Fraction(round(float((Gv[i, j] + Gv[j, i]) / 2) * scale), scale) for j in range(N)]
          for i in range(N)]
    # residual r = q - Y^T G Y, coefficientwise, with Ball radii folded in
    resid_l1 = Fraction(0)
    for a, pairs in index.items():
        gram = sum((Gq[i][j] if i == j else 2 * Gq[i][j]) for i, j in pairs)
        c = q.terms.get(a)
        if c is None:
            resid_l1 += abs(gram)
        else:
            resid_l1 += abs(c.mid - gram) + c.rad
    eps = 2 * resid_l1
    shifted = [[Gq[i][j] - (eps if i == j else 0) for j in range(N)] for i in range(N)]
    if not ldlt_exact(shifted):
        return None
    return {
        "kind": "sos_gram",
        "basis": [list(b) for b in basis],
        "gram": [[_qstr(x) for x in row] for row in Gq],
        "residual_l1": _qstr(resid_l1),
        "epsilon": _qstr(eps),
    }


def multi_nonneg(q: MPoly, ctx: PrecisionCtx) -> Verdict:
    """Best-effort decision for s >= 2: certified witness (NO) or rational SOS Gram (YES)."""
    w = find_negative_point_multi(q)
    if w is not None:
        return Verdict(Status.NOT_CM, witness=w, precision_used=ctx.bits,
                       notes="certified negative value", witness_value=mpoly_point_ball(q, w),
                       polynomial=q)
    cert = sos_certificate(q)
    if cert is not None:
        return Verdict(Status.CM, cert, precision_used=ctx.bits, polynomial=q)
    return Verdict(Status.UNKNOWN, precision_used=ctx.bits, polynomial=q,
                   notes="no negative point found and no SOS certificate; "
                         "UNKNOWN does not imply NOT_CM outside the Hilbert cases")


# ---------------------------------------------------------------------------
# top level


def _decide_once(f: LogFunction, ctx: PrecisionCtx) -> tuple[Verdict, bool]:
    """(verdict, worth escalating precision)."""
    if f.s == 1:
        q = inverse_laplace_uni(f.coefficient_vector(), ctx)
        v = uni_nonneg(q, ctx)
        v.polynomial = q
        return v, True
    q = inverse_laplace_multi(f, ctx)
    if f.n <= 2:
        return decide_cm_quadratic(f, ctx, q), True
    return multi_nonneg(q, ctx), False


def decide_cm(f: LogFunction, ctx: PrecisionCtx | None = None) -> Verdict:
    """Decide complete monotonicity of f, escalating precision on UNKNOWN."""
    ctx = ctx or PrecisionCtx()
    cur = ctx
    tried = []
    while True:
        verdict, escalate = _decide_once(f, cur)
        tried.append(cur.bits)
        if verdict.status is not Status.UNKNOWN or not escalate:
            break
        nxt = cur.escalated()
        if nxt is None:
            break
        cur = nxt
    if verdict.status is Status.UNKNOWN and len(tried) > 1:
        verdict.notes += f" (tried {', '.join(map(str, tried))} bits)"
    return verdict


def verdict_document(f: LogFunction, verdict: Verdict) -> dict:
    doc = verdict.to_dict()
    if verdict.polynomial is not None:
        p = verdict.polynomial
        mp = p if isinstance(p, MPoly) else MPoly.from_upoly(p)
        names = ["u"] if mp.s == 1 else [f"u{i + 1}" for i in range(mp.s)]
        doc["density_polynomial"] = format_mpoly(mp, names, 30)
        doc["density_variables"] = "u_j = log t_j"
    doc["input"] = {"s": f.s, "n": f.n,
                    "coeffs": [{"exponent": list(e), "value": _qstr(c)} for e, c in f.coeffs.items()]}
    return doc
