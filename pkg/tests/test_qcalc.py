import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qsugawara.qcalc import (Deformation, DeformationError, LaurentPoly, exact_divide, qbinomial_coefficient,
                             qbinomial_product, qbinomial_sum, qderiv, qderiv_at, qderiv_iterated,
                             qderiv_nth_closed, qfactorial, qnum, qtaylor, qtaylor_sum)

eps_st = st.floats(min_value=0.01, max_value=0.5)
coeff_st = st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False)


def laurent_st(lo=-4, hi=4):
    return st.dictionaries(st.integers(lo, hi), coeff_st, min_size=1, max_size=6).map(LaurentPoly)


def rel(a, b):
    size = max([abs(v) for v in b.coeffs.values()] + [1.0])
    return a.max_abs_diff(b) / size


@given(eps_st, st.integers(-30, 30))
def test_qnum_matches_q_expression(eps, n):
    d = Deformation(eps)
    assert qnum(d, n) == pytest.approx(((d.q ** n - d.q ** -n) / d.kappa).real, abs=1e-12)
    assert qnum(d, -n) == -qnum(d, n)


def test_qnum_undeformed_is_n():
    d = Deformation(0.0)
    assert [qnum(d, n) for n in range(-3, 4)] == [-3, -2, -1, 0, 1, 2, 3]


def test_deformation_rejects_roots_of_unity_and_complex():
    with pytest.raises(DeformationError):
        Deformation(math.pi / 5)
    with pytest.raises(DeformationError):
        Deformation(float("nan"))
    with pytest.raises(DeformationError):
        Deformation.from_q(1.1)
    assert Deformation.from_q(np.exp(0.2j)).epsilon == pytest.approx(0.2)


def test_qfactorial_and_binomial(d):
    assert qfactorial(d, 0) == 1.0
    assert qfactorial(d, 4) == pytest.approx(qnum(d, 2) * qnum(d, 3) * qnum(d, 4))
    # q-Pascal rule: [n k] = q^k [n-1 k] + q^{k-n} [n-1 k-1]
    for n in range(1, 7):
        for k in range(1, n):
            lhs = qbinomial_coefficient(d, n, k)
            rhs = (d.qpow(k) * qbinomial_coefficient(d, n - 1, k)
                   + d.qpow(k - n) * qbinomial_coefficient(d, n - 1, k - 1))
            assert lhs == pytest.approx(rhs.real, abs=1e-12)
            assert abs(rhs.imag) < 1e-12
    with pytest.raises(ValueError):
        qfactorial(d, -1)


@given(laurent_st(), laurent_st(), st.complex_numbers(min_magnitude=0.5, max_magnitude=2))
def test_laurent_ring_operations(a, b, z):
    assert (a * b)(z) == pytest.approx(a(z) * b(z), rel=1e-9, abs=1e-9)
    assert (a + b)(z) == pytest.approx(a(z) + b(z), rel=1e-9, abs=1e-9)
    assert (a - a).is_zero()


def test_laurent_divide_linear_and_exact_divide():
    p = LaurentPoly({-1: 2.0, 0: 1.0, 2: 3.0})
    root = 0.7 + 0.2j
    product = p * LaurentPoly({1: 1.0, 0: -root})
    quotient, remainder = product.divide_linear(root)
    assert abs(remainder) < 1e-12
    assert quotient.max_abs_diff(p) < 1e-12
    assert exact_divide(product, [root], 1e-10).max_abs_diff(p) < 1e-12
    with pytest.raises(ArithmeticError):
        exact_divide(p, [root], 1e-10)


@given(eps_st, st.integers(-6, 6))
def test_qderiv_monomial_rule(eps, n):
    d = Deformation(eps)
    g = qderiv(d, LaurentPoly.monomial(n))
    expected = LaurentPoly({n - 1: qnum(d, n)}) if n else LaurentPoly()
    assert g.max_abs_diff(expected) < 1e-12


@given(eps_st, laurent_st(), st.integers(0, 6))
def test_closed_nth_qderivative(eps, f, n):
    d = Deformation(eps)
    closed, iterated = qderiv_nth_closed(d, f, n), qderiv_iterated(d, f, n)
    # the closed form sums 2^n samples and divides by (q - q^-1)^n: rounding grows like 2^n u |f| / |kappa|^n
    size = sum(abs(v) for v in f.coeffs.values())
    conditioning = 2 ** n * np.finfo(float).eps * size / abs(d.kappa) ** n
    assert closed.max_abs_diff(iterated) <= 1e-12 * max(1.0, size) + 8 * conditioning


def test_closed_nth_qderivative_seeded_sample(d, rng):
    for n in range(7):
        f = LaurentPoly({k: complex(*rng.normal(size=2)) for k in range(-5, 6)})
        assert rel(qderiv_nth_closed(d, f, n), qderiv_iterated(d, f, n)) < 1e-12


def test_qderiv_at_is_difference_quotient(d, rng):
    f = LaurentPoly({k: complex(*rng.normal(size=2)) for k in range(-3, 4)})
    z = 0.8 * np.exp(0.3j)
    assert qderiv_at(d, f, 1, z) == pytest.approx((f(z * d.q) - f(z / d.q)) / (z * d.kappa), rel=1e-12)


@given(eps_st, st.integers(0, 8), st.complex_numbers(min_magnitude=0.3, max_magnitude=2))
def test_qbinomial_product_equals_sum(eps, n, w):
    d = Deformation(eps)
    assert rel(qbinomial_product(d, n, w), qbinomial_sum(d, n, w)) < 1e-12


@pytest.mark.parametrize("variant", ["plus", "minus"])
@given(f=laurent_st(0, 8), w=st.complex_numbers(min_magnitude=0.3, max_magnitude=1.5))
def test_qtaylor_reconstructs_polynomials(variant, f, w):
    d = Deformation(0.15)
    assert rel(qtaylor_sum(d, qtaylor(d, f, w, variant)), f) < 1e-10


def test_qtaylor_rejects_unknown_variant(d):
    with pytest.raises(ValueError):
        qtaylor(d, LaurentPoly.monomial(2), 1.0, "sideways")
