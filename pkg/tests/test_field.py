import random

import pytest
import sympy
from hypothesis import given, settings, strategies as st

from cssim.field import (
    RUN_PRIME,
    FieldElement,
    FieldError,
    Polynomial,
    fe_inv,
    lagrange_interpolate,
    poly_divmod,
    poly_eval,
    poly_mul,
    solve_linear_system,
)

PRIMES = [17, 97, 257, RUN_PRIME]


def test_inverse_examples():
    assert fe_inv(1, 17) == 1
    assert fe_inv(3, 17) == 6
    with pytest.raises(FieldError):
        fe_inv(0, 17)
    with pytest.raises(FieldError):
        FieldElement(0, 17).inverse()


@pytest.mark.parametrize("p", PRIMES)
def test_inverse_matches_sympy(p):
    rng = random.Random(p)
    for _ in range(200):
        a = rng.randrange(1, p)
        assert fe_inv(a, p) == sympy.mod_inverse(a, p)


def test_eval_examples():
    assert poly_eval([5], 13, 17) == 5
    assert poly_eval([5, 3], 2, 17) == 11
    assert poly_eval([5, 3], 0, 17) == 5
    assert Polynomial([5, 3], 17)(2) == 11


def test_interpolation_examples():
    assert lagrange_interpolate([(1, 7)], 17) == Polynomial([7], 17)
    assert lagrange_interpolate([(1, 8), (2, 11)], 17) == Polynomial([5, 3], 17)
    with pytest.raises(FieldError):
        lagrange_interpolate([(1, 7), (1, 9)], 17)
    with pytest.raises(FieldError):
        lagrange_interpolate([], 17)


def test_solve_examples():
    assert solve_linear_system([[1, 0], [0, 1]], [4, 9], 17) == [4, 9]
    assert solve_linear_system([[1, 1], [1, 2]], [8, 11], 17) == [5, 3]
    assert solve_linear_system([[1, 1], [1, 1]], [0, 1], 17) is None
    assert solve_linear_system([[0, 0]], [1], 17) is None
    with pytest.raises(FieldError):
        solve_linear_system([[1, 0]], [1, 2], 17)


def test_polynomial_trimming():
    assert Polynomial([1, 2, 0, 0], 17) == Polynomial([1, 2], 17)
    assert Polynomial([17, 34], 17).coeffs == ()
    assert Polynomial([17, 34], 17).degree == -1
    assert hash(Polynomial([3, 0], 17)) == hash(Polynomial([3], 17))


@pytest.mark.parametrize("p", PRIMES)
def test_field_axioms_sweep(p):
    rng = random.Random(1000 + p)
    for _ in range(10_000):
        a, b, c = (FieldElement(rng.randrange(p), p) for _ in range(3))
        assert (a + b) + c == a + (b + c)
        assert (a * b) * c == a * (b * c)
        assert a + b == b + a
        assert a * b == b * a
        assert a * (b + c) == a * b + a * c
        assert 0 <= int(a * b) < p
        if int(a):
            assert a * a.inverse() == FieldElement(1, p)


@settings(max_examples=300, deadline=None)
@given(st.sampled_from(PRIMES), st.integers(), st.integers(), st.integers())
def test_field_axioms_property(p, x, y, z):
    a, b, c = FieldElement(x, p), FieldElement(y, p), FieldElement(z, p)
    assert a * (b + c) == a * b + a * c
    assert a - b == -(b - a)
    assert (a + b) - b == a
    if int(b):
        assert (a / b) * b == a


@settings(max_examples=200, deadline=None)
@given(st.sampled_from(PRIMES), st.integers(1, 8), st.randoms(use_true_random=False))
def test_interpolate_eval_round_trip(p, k, rnd):
    coeffs = [rnd.randrange(p) for _ in range(k)]
    xs = rnd.sample(range(1, min(p, 10_000)), k)
    pts = [(x, poly_eval(coeffs, x, p)) for x in xs]
    assert lagrange_interpolate(pts, p) == Polynomial(coeffs, p)


@settings(max_examples=200, deadline=None)
@given(st.sampled_from(PRIMES), st.integers(1, 6), st.integers(1, 6), st.randoms(use_true_random=False))
def test_solve_substitutes_back(p, rows, cols, rnd):
    A = [[rnd.randrange(p) for _ in range(cols)] for _ in range(rows)]
    x_true = [rnd.randrange(p) for _ in range(cols)]
    b = [sum(a * x for a, x in zip(row, x_true)) % p for row in A]
    x = solve_linear_system(A, b, p)
    assert x is not None
    assert [sum(a * v for a, v in zip(row, x)) % p for row in A] == b


def test_solve_matches_sympy_on_square_systems():
    rng = random.Random(5)
    for p in (17, 97, 257):
        done = 0
        while done < 50:
            n = rng.randint(1, 5)
            A = [[rng.randrange(p) for _ in range(n)] for _ in range(n)]
            M = sympy.Matrix(A)
            if M.det() % p == 0:
                continue
            b = [rng.randrange(p) for _ in range(n)]
            want = (M.inv_mod(p) * sympy.Matrix(b)).applyfunc(lambda v: v % p)
            assert solve_linear_system(A, b, p) == [int(v) for v in want]
            done += 1


@settings(max_examples=200, deadline=None)
@given(st.sampled_from([17, 97, 257]), st.lists(st.integers(0, 300), min_size=1, max_size=7),
       st.lists(st.integers(0, 300), min_size=1, max_size=5))
def test_divmod_identity(p, num, den):
    den = Polynomial(den, p).coeffs
    if not den:
        return
    q, r = poly_divmod(num, list(den), p)
    assert len(Polynomial(r, p).coeffs) < len(den)
    prod = poly_mul(q, list(den), p) if q else []
    size = max(len(prod), len(r))
    prod += [0] * (size - len(prod))
    r = list(r) + [0] * (size - len(r))
    assert Polynomial([a + b for a, b in zip(prod, r)], p) == Polynomial(num, p)
