"""Exact-arithmetic tests for the jet layer (spec'd examples plus property checks)."""

import random
from fractions import Fraction as Q

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from yamabe.jets import (
    INF_ORDER,
    Jet,
    JetError,
    JetMatrix,
    jet_inverse,
    jet_sqrt,
    jet_substitute,
    matrix_inverse,
    monomials_up_to,
)
from yamabe.scalars import LAMBDA, LambdaRational, lambda_residue


def var(i, n, order=INF_ORDER):
    return Jet.variable(i, n, order)


def rnd_jet(rng, nvars, order, max_den=4):
    coeffs = {}
    for m in monomials_up_to(nvars, order):
        if rng.random() < 0.6:
            coeffs[m] = Q(rng.randint(-3, 3), rng.randint(1, max_den))
    return Jet(nvars, order, coeffs)


# --- jet_mul -----------------------------------------------------------------


def test_mul_truncates():
    x = var(0, 1, 2)
    p = (1 + x) * (1 - x)
    assert p == 1 - x.truncate(2) * x
    assert p.coefficient((2,)) == -1
    assert p.order == 2


def test_mul_kills_overflow():
    K = 5
    x = var(0, 1, K)
    assert not (x**K * x)


def test_mul_inverse_roundtrip():
    x, y = var(0, 2, 5), var(1, 2, 5)
    a = 1 + x + y * y
    assert a * jet_inverse(a) == 1


def test_variable_count_mismatch():
    with pytest.raises(JetError):
        var(0, 1, 3) * var(0, 2, 3)


# --- jet_inverse -------------------------------------------------------------


def test_inverse_geometric():
    s = var(0, 1, 3)
    inv = jet_inverse(1 - 2 * s)
    assert inv == 1 + 2 * s + 4 * s**2 + 8 * s**3


def test_inverse_constant():
    c = Jet.constant(3, 2)
    assert jet_inverse(c) == Jet.constant(Q(1, 3), 2)


def test_inverse_squared_geometric_derived():
    # oracle: multiply the candidate series out and confirm the product is 1
    K = 4
    s = var(0, 1, K)
    a = (1 - s) ** 2
    candidate = Jet(1, K, {(k,): Q(k + 1) for k in range(K + 1)})
    assert a * candidate == 1
    assert jet_inverse(a) == candidate


def test_inverse_zero_constant_term():
    with pytest.raises(JetError):
        jet_inverse(var(0, 1, 3))


# --- jet_sqrt ----------------------------------------------------------------


def binomial_half(k):
    # C(1/2, k)
    out = Q(1)
    for j in range(k):
        out *= (Q(1, 2) - j) / (j + 1)
    return out


def test_sqrt_binomial_oracle():
    K = 3
    s = var(0, 1, K)
    got = jet_sqrt(1 - 2 * s)
    expected = Jet(1, K, {(k,): binomial_half(k) * (-2) ** k for k in range(K + 1)})
    assert got == expected
    assert got == 1 - s - s**2 / Q(2) - s**3 / Q(2)
    assert got * got == 1 - 2 * s


def test_sqrt_constant():
    assert jet_sqrt(Jet.constant(4, 1)) == Jet.constant(2, 1)


def test_sqrt_nonsquare_refused():
    s = var(0, 1, 3)
    with pytest.raises(JetError):
        jet_sqrt(2 + s)


# --- jet_substitute ----------------------------------------------------------


def test_substitute_square():
    x = var(0, 1)
    f = x * x
    s, t = var(0, 2, 6), var(1, 2, 6)
    assert jet_substitute(f, [s + t]) == s**2 + 2 * s * t + t**2


def test_substitute_geometric():
    K = 5
    x = var(0, 1, K)
    f = jet_inverse(1 - x)
    s = var(0, 1, K)
    got = jet_substitute(f, [2 * s])
    assert got == Jet(1, K, {(k,): Q(2**k) for k in range(K + 1)})


def test_substitute_chain_rule():
    K = 6
    rng = random.Random(11)
    f = rnd_jet(rng, 1, K)
    g = rnd_jet(rng, 1, K)
    g = g - g.constant_term()  # zero constant term
    lhs = jet_substitute(f, [g]).deriv(0)
    rhs = jet_substitute(f.deriv(0), [g]) * g.deriv(0)
    assert lhs == rhs


def test_substitute_arity_and_shift_errors():
    f = var(0, 2) * var(1, 2)
    with pytest.raises(JetError):
        jet_substitute(f, [var(0, 1, 3)])
    with pytest.raises(JetError):
        jet_substitute(f, [1 + var(0, 2, 3), var(1, 2, 3)])
    # with an explicit matching shift the composition goes through
    ok = jet_substitute(f, [1 + var(0, 2, 3), var(1, 2, 3)], shift=[Q(1), Q(0)])
    assert ok == var(0, 2, 3) * var(1, 2, 3)


# --- matrix_inverse ----------------------------------------------------------


def test_matrix_inverse_identity():
    m = JetMatrix.identity(3, 2, 4)
    assert matrix_inverse(m) == m


def test_matrix_inverse_diag():
    s = var(0, 1, 4)
    one = Jet.constant(1, 1)
    m = JetMatrix([[1 - 2 * s, s.zero_like()], [s.zero_like(), one.truncate(4)]])
    inv = matrix_inverse(m)
    assert inv.entries[0][0] == jet_inverse(1 - 2 * s)
    assert inv.entries[1][1] == one
    assert not inv.entries[0][1]


def test_matrix_inverse_random():
    K = 4
    rng = random.Random(7)
    d = 3
    ent = [[rnd_jet(rng, 2, K) for _ in range(d)] for _ in range(d)]
    for i in range(d):
        for j in range(d):
            ent[i][j] = ent[i][j] - ent[i][j].constant_term() + (1 if i == j else 0)
    m = JetMatrix(ent)
    assert m * matrix_inverse(m) == JetMatrix.identity(d, 2, K)


def test_matrix_inverse_singular():
    z = Jet.constant(0, 1, 3)
    with pytest.raises(JetError):
        matrix_inverse(JetMatrix([[z, z], [z, z]]))


# --- lambda_residue ----------------------------------------------------------


def test_residue_simple_pole():
    f = LambdaRational(1) / (LAMBDA - Q(1, 2))
    assert lambda_residue(f, Q(1, 2)) == 1


def test_residue_partial_fraction():
    n = 4
    f = LAMBDA / (2 * LAMBDA - n + 2)
    assert lambda_residue(f, Q(n - 2, 2)) == Q(1, 2)


def test_residue_double_pole_errors():
    f = (LAMBDA * LAMBDA + 1) / ((LAMBDA - 3) * (LAMBDA - 3))
    with pytest.raises(ValueError):
        lambda_residue(f, 3)


def test_residue_regular_point():
    f = LAMBDA / (LAMBDA - 1)
    assert lambda_residue(f, 5) == 0


# --- ring axioms and self-consistency (property style) ------------------------


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 4))
def test_ring_axioms(seed, order):
    rng = random.Random(seed)
    a, b, c = (rnd_jet(rng, 2, order) for _ in range(3))
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert a + b == b + a
    assert a * b == b * a


def test_inverse_sqrt_self_consistency_bulk():
    rng = random.Random(2024)
    K = 4
    for _ in range(100):
        a = rnd_jet(rng, 2, K)
        a = a - a.constant_term() + rng.choice([1, 4, Q(9, 4), Q(1, 4)])
        assert a * jet_inverse(a) == 1
        assert jet_sqrt(a) ** 2 == a


def test_lambda_rational_eval_homomorphism():
    rng = random.Random(5)
    for _ in range(50):
        f = (LAMBDA**2 - rng.randint(1, 5)) / (LAMBDA + rng.randint(1, 7))
        g = (rng.randint(-4, 4) * LAMBDA + Q(rng.randint(1, 9), 2)) / (
            2 * LAMBDA - rng.randint(10, 20)
        )
        x = Q(rng.randint(30, 90), rng.randint(1, 7))
        assert (f * g)(x) == f(x) * g(x)
        assert (f + g)(x) == f(x) + g(x)


def test_truncation_monotone():
    rng = random.Random(13)
    for _ in range(20):
        a, b = rnd_jet(rng, 2, 6), rnd_jet(rng, 2, 6)
        hi = (a * b + a * a).truncate(3)
        lo = a.truncate(3) * b.truncate(3) + a.truncate(3) * a.truncate(3)
        assert hi == lo


def test_lambda_rational_in_jets():
    s = var(0, 1, 3)
    j = s * LAMBDA + Jet.constant(LambdaRational(1) / (LAMBDA - 1), 1)
    k = j * (LAMBDA - 1)
    assert k.constant_term() == LambdaRational(1)
    assert k.coefficient((1,)) == LAMBDA * (LAMBDA - 1)


def test_normal_slicing_and_shift():
    # anisotropic jet: variable 0 is normal
    s = Jet.variable(0, 2, 6, xorder=2, normal=0)
    x = Jet.variable(1, 2, 6, xorder=2, normal=0)
    f = s**3 * x + s * x**2 + x
    assert f.normal_coefficient(1) == Jet(1, 5, {(2,): Q(1)})
    assert f.restrict() == Jet.variable(0, 1, 2)
    g = f.shift_normal(1)
    assert g.normal_coefficient(2) == Jet(1, 5, {(2,): Q(1)})
    back = g.shift_normal(-1)
    assert back == f
    with pytest.raises(JetError):
        f.shift_normal(-1)


def test_derivative_order_bookkeeping():
    a = rnd_jet(random.Random(3), 2, 5)
    d = a.deriv(0)
    assert d.order == 4
    assert a.integrate(1).order == 6
