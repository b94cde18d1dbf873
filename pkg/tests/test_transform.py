import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import log_moment_quad
from logcm.constants import euler_gamma, zeta_int
from logcm.exactnum import Ball, PrecisionCtx, ball_log, ball_pi
from logcm.poly import LogFunction, MPoly, UPoly
from logcm.transform import (
    check_gtilde_matches_laplace, forward_laplace_multi, forward_laplace_uni, g_tilde_infinity,
    inverse_laplace_multi, inverse_laplace_uni, matrix_A, matrix_A_inverse,
)

CTX = PrecisionCtx(256, 1024)
coeff_vectors = st.lists(st.fractions(-50, 50, max_denominator=30), min_size=1, max_size=11)


def test_matrix_A_n2():
    A = matrix_A(2, CTX)
    gamma, z2 = euler_gamma(CTX), zeta_int(2, CTX)
    assert A[0, 0].contains(1) and A[1, 1].contains(-1) and A[2, 2].contains(1)
    assert A[0, 1].overlaps(-gamma)
    assert A[0, 2].overlaps(gamma * gamma + z2)
    assert A[1, 2].overlaps(gamma * 2)
    assert all(A[m, k].is_zero() for m in range(3) for k in range(m))


def test_matrix_C_n2():
    C = matrix_A_inverse(2, CTX)
    gamma = euler_gamma(CTX)
    pi = ball_pi(300)
    assert C[0, 1].overlaps(-gamma)
    assert C[0, 2].overlaps(gamma * gamma - pi * pi / 6)
    assert C[1, 2].overlaps(gamma * 2)
    assert C[2, 2].contains(1)


def test_n0_matrices():
    assert matrix_A(0, CTX).entries[0][0].contains(1)
    assert matrix_A_inverse(0, CTX).entries[0][0].contains(1)
    with pytest.raises(ValueError):
        matrix_A(-1, CTX)


@pytest.mark.parametrize("n", range(1, 13))
def test_A_times_C_encloses_identity(n):
    A, C = matrix_A(n, CTX), matrix_A_inverse(n, CTX)
    for prod in (A.matmul(C), C.matmul(A)):
        for i in range(n + 1):
            assert prod[i][i].contains(1)
            for j in range(n + 1):
                if i != j:
                    assert prod[i][j].contains(0)
                    assert prod[i][j].rad < Fraction(1, 10**40)
    for m in range(n + 1):
        assert A[m, m].contains((-1) ** m) and C[m, m].contains((-1) ** m)


def test_inverse_examples():
    gamma = euler_gamma(CTX)
    q = inverse_laplace_uni([0, 1], CTX)
    assert q[0].overlaps(-gamma) and q[1].contains(-1)
    q = inverse_laplace_uni([1, 0, 0, 0], CTX)
    assert q[0].contains(1) and all(c.contains(0) for c in q.coeffs[1:])
    c0, c1, c2 = Fraction(3), Fraction(-2, 7), Fraction(5, 3)
    q = inverse_laplace_uni([c0, c1, c2], CTX)
    z2 = zeta_int(2, CTX)
    assert q[0].overlaps(gamma * gamma * c2 - z2 * c2 - gamma * c1 + c0)
    assert q[1].overlaps(gamma * (2 * c2) - c1)
    assert q[2].contains(c2)


def test_forward_examples():
    assert forward_laplace_uni(UPoly([1]), CTX)[0].contains(1)
    col = forward_laplace_uni(UPoly([0, 0, 1]), CTX)
    A = matrix_A(2, CTX)
    assert all(col[m].overlaps(A[m, 2]) for m in range(3))


@given(coeff_vectors)
@settings(max_examples=40, deadline=None)
def test_round_trip(c):
    back = forward_laplace_uni(inverse_laplace_uni(c, CTX), CTX)
    assert all(b.contains(v) for b, v in zip(back.coeffs, c))


@pytest.mark.parametrize("k", range(6))
@pytest.mark.parametrize("x", [Fraction(1, 2), Fraction(1), Fraction(2)])
def test_column_matches_quadrature(k, x):
    val, bound = log_moment_quad(k, x)
    A = matrix_A(5, CTX)
    lx = ball_log(Ball.from_rational(x, 300))
    pred = sum((A[m, k] * lx**m for m in range(1, k + 1)), A[0, k]) / x
    assert pred.overlaps(Ball.from_mid_rad(val, bound, 256))


def test_multi_examples():
    gamma = euler_gamma(CTX)
    f = LogFunction(2, 2, MPoly(2, {(1, 1): 1}))
    q = inverse_laplace_multi(f, CTX)
    assert set(q.terms) == {(1, 1), (1, 0), (0, 1), (0, 0)}
    assert q.terms[(1, 1)].contains(1)
    assert q.terms[(1, 0)].overlaps(gamma) and q.terms[(0, 1)].overlaps(gamma)
    assert q.terms[(0, 0)].overlaps(gamma * gamma)
    one = inverse_laplace_multi(LogFunction(3, 2, MPoly(3, {(0, 0, 0): 1})), CTX)
    assert list(one.terms) == [(0, 0, 0)] and one.terms[(0, 0, 0)].contains(1)


@given(coeff_vectors)
@settings(max_examples=20, deadline=None)
def test_multi_with_one_variable_is_univariate(c):
    f = LogFunction.univariate(c)
    multi = inverse_laplace_multi(f, CTX).to_upoly(len(c) - 1)
    uni = inverse_laplace_uni(c, CTX)
    for a, b in zip(multi.coeffs, uni.coeffs):
        assert a.overlaps(b) if isinstance(a, Ball) else b.contains(a)


def test_multi_factorizes_on_products():
    rng = random.Random(3)
    for _ in range(5):
        a = [Fraction(rng.randint(-9, 9), rng.randint(1, 5)) for _ in range(3)]
        b = [Fraction(rng.randint(-9, 9), rng.randint(1, 5)) for _ in range(3)]
        terms = {(i, j): a[i] * b[j] for i in range(3) for j in range(3) if a[i] * b[j]}
        q = inverse_laplace_multi(LogFunction(2, 4, MPoly(2, terms)), CTX)
        qa, qb = inverse_laplace_uni(a, CTX), inverse_laplace_uni(b, CTX)
        for i in range(3):
            for j in range(3):
                expected = qa[i] * qb[j]
                got = q.terms.get((i, j))
                assert expected.contains(0) if got is None else got.overlaps(expected)


def test_multi_round_trip():
    f = LogFunction(2, 3, MPoly(2, {(2, 1): 3, (0, 2): Fraction(-1, 2), (1, 0): 7, (0, 0): 1}))
    back = forward_laplace_multi(inverse_laplace_multi(f, CTX), 3, CTX)
    for e in set(back.terms) | set(f.coeffs.terms):
        assert back.terms[e].contains(f.coeffs.terms.get(e, 0))


def test_g_tilde_examples():
    pi = ball_pi(300)
    c0, c1, c2 = Fraction(2), Fraction(-3), Fraction(1, 5)
    g = g_tilde_infinity([c0, c1, c2], CTX)
    assert g[2].contains(c2) and g[1].contains(c1)
    assert g[0].overlaps(pi * pi * (-c2 / 6) + c0)
    assert g_tilde_infinity([Fraction(7)], CTX)[0].contains(7)
    g = g_tilde_infinity([0, 1], CTX)
    assert g[0].contains(0) and g[1].contains(1)


@given(coeff_vectors)
@settings(max_examples=30, deadline=None)
def test_g_tilde_matches_inverse_transform(c):
    ok, defect = check_gtilde_matches_laplace(c, CTX)
    assert ok and defect < Fraction(1, 10**30)


@pytest.mark.parametrize("k", range(8))
def test_g_tilde_of_unit_vector_is_C_column(k):
    e = [0] * k + [1]
    C = matrix_A_inverse(k, CTX)
    g = g_tilde_infinity(e, CTX).reflect().shift(euler_gamma(CTX))
    assert all(g[m].overlaps(C[m, k]) for m in range(k + 1))


def test_consistency_defect_shrinks_with_precision():
    c = [Fraction(3), Fraction(-1, 3), Fraction(2, 7), Fraction(5), Fraction(-1, 9)]
    d = [check_gtilde_matches_laplace(c, PrecisionCtx(b, 4096))[1] for b in (128, 512)]
    assert d[1] <= d[0] / 2 or d[1] == 0
