import math
import random
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from logcm.combinat import harmonic
from logcm.derivatives import (
    DerivativeMismatch, _by_recursion, derivative_polys, disc_quadratic, dk_membership,
    NestingRow, evaluate_row, g_shifted, g_tilde_from_w, g_tilde_symbolic, g_unshifted, h_closed_form,
    nesting_probe, signed_derivative, summarize,
)
from logcm.exactnum import PrecisionCtx, Sign
from logcm.nonneg import Status
from logcm.poly import LogFunction, UPoly
from logcm.transform import forward_laplace_uni

fracs = st.fractions(-30, 30, max_denominator=20)
polys = st.lists(fracs, min_size=1, max_size=11)


def test_examples():
    assert derivative_polys([0, 1], 1).h[1] == UPoly([1, -1])
    for k in range(8):
        assert derivative_polys([1], k).h[k] == UPoly([(-1) ** k * math.factorial(k)])
    p = [Fraction(3), Fraction(-1, 2), Fraction(7)]
    assert derivative_polys(p, 0).h[0] == UPoly(p)
    with pytest.raises(ValueError):
        derivative_polys(p, -1)


@given(polys, st.integers(0, 25))
@settings(max_examples=100, deadline=None)
def test_recursion_equals_closed_form(c, k):
    p = UPoly(c)
    assert _by_recursion(p, k)[k] == h_closed_form(p, k)


def test_mismatch_is_a_hard_error(monkeypatch):
    import logcm.derivatives as d
    monkeypatch.setattr(d, "_by_stirling", lambda p, k: p * 0 + 1)
    with pytest.raises(DerivativeMismatch):
        d.derivative_polys([1, 2, 3], 2)


@pytest.mark.parametrize("k", range(7))
@pytest.mark.parametrize("x", ["1/2", "1", "2"])
def test_h_matches_numerical_derivative(k, x):
    c = [Fraction(3), Fraction(-2), Fraction(1, 2), Fraction(1)]
    h = derivative_polys(c, k).h[k]
    with mpmath.workdps(40):
        xv = mpmath.mpf(Fraction(x).numerator) / Fraction(x).denominator

        def f(t):
            lt = mpmath.log(t)
            return sum(mpmath.mpf(ci.numerator) / ci.denominator * lt**i for i, ci in enumerate(c)) / t

        numeric = mpmath.diff(f, xv, k)
        lx = mpmath.log(xv)
        exact = sum(mpmath.mpf(ci.numerator) / ci.denominator * lx**i for i, ci in enumerate(h.coeffs)) / xv ** (k + 1)
        assert abs(numeric - exact) <= mpmath.mpf(10) ** -25 * (1 + abs(exact))


@given(polys, st.integers(0, 25))
@settings(max_examples=60, deadline=None)
def test_g_times_signed_factorial_is_h(c, k):
    lhs = g_unshifted(c, k) * ((-1) ** k * math.factorial(k))
    assert lhs == h_closed_form(c, k)


@pytest.mark.parametrize("n", range(9))
def test_symbolic_g_tilde_is_free_of_H1(n):
    c = [Fraction(i * i - 3, i + 1) for i in range(n + 1)]
    sym = g_tilde_symbolic(c)
    assert all(len(mono) == 0 or mono[0] == 0 for _, mono in sym)
    assert sym == g_tilde_from_w(c)


@given(polys, st.integers(0, 30))
@settings(max_examples=40, deadline=None)
def test_symbolic_g_tilde_specialises_to_g_shifted(c, k):
    sym = g_tilde_symbolic(c)
    n = len(c) - 1
    H = [harmonic(k, i) for i in range(1, n + 1)]
    out = [Fraction(0)] * (n + 1)
    for (a, mono), v in sym.items():
        out[a] += v * math.prod(H[i] ** e for i, e in enumerate(mono))
    assert UPoly(out) == g_shifted(c, k)


def test_g_shifted_quadratic_and_trivial_cases():
    c0, c1, c2 = Fraction(5), Fraction(-1), Fraction(2)
    for k in range(10):
        assert g_shifted([c0, c1, c2], k) == UPoly([c0 - c2 * harmonic(k, 2), c1, c2])
        assert g_shifted([Fraction(7)], k) == UPoly([7])
    c = [Fraction(1), Fraction(2), Fraction(-3), Fraction(4)]
    assert g_shifted(c, 0) == UPoly(c)


def test_disc_examples(ctx256):
    d = disc_quadratic(2, 0, 1, ctx=ctx256)
    assert d.sign() is Sign.NEGATIVE and abs(float(d) + 1.4203) < 1e-4
    d = disc_quadratic(1, 0, 1, k=math.inf, ctx=ctx256)
    assert d.sign() is Sign.POSITIVE and abs(float(d) - 2.5797) < 1e-4
    with pytest.raises(ValueError):
        disc_quadratic(1, 0, 1, k=-1)


@given(fracs, fracs, fracs)
def test_disc_consecutive_difference(c0, c1, c2):
    for k in range(1, 51):
        assert disc_quadratic(c0, c1, c2, k - 1) - disc_quadratic(c0, c1, c2, k) == -4 * c2 * c2 / k**2


@given(fracs, fracs)
def test_disc_tends_to_the_limit(c0, c1):
    lim = disc_quadratic(c0, c1, 1, ctx=PrecisionCtx(128, 128))
    assert disc_quadratic(c0, c1, 1, 500) < lim.upper()


def test_dk_membership_examples():
    assert dk_membership(LogFunction.univariate([2, 0, 1]), 0).status is Status.CM
    v = dk_membership(LogFunction.univariate([0, 1]), 0)
    assert v.status is Status.NOT_CM and v.witness[0] < 0
    with pytest.raises(ValueError):
        dk_membership(LogFunction.univariate([1]), -1)


@given(fracs, fracs, st.fractions(Fraction(1, 20), 20, max_denominator=20), st.integers(1, 15))
@settings(max_examples=80, deadline=None)
def test_dk_membership_agrees_with_discriminant(c0, c1, c2, k):
    d = disc_quadratic(c0, c1, c2, k)
    status = dk_membership(LogFunction.univariate([c0, c1, c2]), k).status
    assert status is (Status.CM if d <= 0 else Status.NOT_CM)


def test_signed_derivative_matches_h():
    c = [Fraction(1), Fraction(-3), Fraction(2, 5), Fraction(1)]
    for k in range(8):
        assert UPoly(signed_derivative(c, k)) == h_closed_form(c, k) * (-1) ** k


@pytest.mark.parametrize("seed", range(5))
def test_cm_functions_are_in_every_dk(seed, ctx256):
    rng = random.Random(seed)
    a = [Fraction(rng.randint(-5, 5), rng.randint(1, 4)) for _ in range(3)]
    b = [Fraction(rng.randint(-5, 5), rng.randint(1, 4)) for _ in range(2)]
    # keep a strictly positive margin so that rounding the Ball coefficients stays CM
    sq = UPoly(a) * UPoly(a) + UPoly(b) * UPoly(b) + UPoly([Fraction(1, 10)])
    f_coeffs = forward_laplace_uni(sq, ctx256)
    c = [Fraction(x.mid).limit_denominator(10**30) for x in f_coeffs.coeffs]
    row = evaluate_row(c, list(range(26)), with_cm=True)
    assert row.cm is Status.CM
    assert all(s is Status.CM for s in row.member.values())


def test_nesting_probe_n2_has_no_violations(ctx256):
    rep = nesting_probe(2, 10, 300, seed=1, ctx=ctx256, with_cm=True)
    assert rep.ok and rep.evaluated == 300 and rep.abstentions == 0
    counts = [rep.member_counts[k] for k in range(1, 11)]
    assert counts == sorted(counts, reverse=True)
    assert rep.cm_count <= counts[-1]
    assert "evidence only" in rep.to_dict()["note"]


def test_nesting_probe_is_seeded():
    a = nesting_probe(3, 4, 40, seed=7).to_dict()
    b = nesting_probe(3, 4, 40, seed=7).to_dict()
    assert a == b
    with pytest.raises(ValueError):
        nesting_probe(2, 0, 10)


def test_violation_detection():
    row = NestingRow((Fraction(1),), {1: Status.NOT_CM, 2: Status.CM}, Status.CM)
    assert (1, 2) in row.violations() and (1, "CM") in row.violations()
    rep = summarize([row], 0, [1, 2])
    assert not rep.ok and rep.to_dict()["violation_count"] == 1
    abstain = NestingRow((Fraction(1),), {1: Status.UNKNOWN, 2: Status.CM})
    assert abstain.violations() == []
