from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qsugawara.fields.contractions import ContractionFn, f_function, tail_bound
from qsugawara.fields.free import VACUUM, FreeFields, element, num, sym
from qsugawara.fields.operators import vertex_via_oscillators
from qsugawara.fields.vertex import VertexAlgebra, product_matrix, vertex_contraction
from qsugawara.fock import GramSpec, build_basis
from qsugawara.qcalc import Deformation, qnum

halves = st.integers(-8, 8).map(lambda k: Fraction(k, 2))
contraction_st = st.builds(
    lambda fac, qexp, zp, wp: ContractionFn.build(fac, qexp, zp, wp),
    st.dictionaries(halves, st.integers(-2, 2), max_size=4), halves, st.integers(-2, 2), st.integers(-2, 2))
D0 = Deformation(0.15)
Z, W = 1.3 * np.exp(0.7j), 0.6 * np.exp(-0.4j)


@given(contraction_st)
def test_inverse_and_swap(f):
    assert (f * f.inverse()).is_one()
    assert f.swapped().swapped().equals(f)
    assert f.swapped()(D0, Z, W) == pytest.approx(f(D0, W, Z), rel=1e-10)


@given(contraction_st, halves, halves)
def test_substitution(f, a, b):
    assert f.substituted(a, b)(D0, Z, W) == pytest.approx(f(D0, Z * D0.qpow(a), W * D0.qpow(b)), rel=1e-10)


@given(contraction_st)
def test_laurent_expansion_converges_outside(f):
    z, w = 2.0 * np.exp(0.3j), 0.5
    series = f.laurent_at_infinity(D0, w, 80)
    assert sum(c * z ** p for p, c in series.items()) == pytest.approx(f(D0, z, w), rel=1e-9)


def test_f_function_and_tail_bound():
    f = f_function()
    assert f.poles() == {Fraction(3): 1, Fraction(-3): 1}
    assert "(z - w q^(1))^1" in f.describe()
    assert tail_bound(D0, 0.5, 40) == pytest.approx(0.5 ** 41 / 0.5 / np.sin(0.15))


@pytest.mark.parametrize("gram", [GramSpec("su2"), GramSpec.su(2)])
def test_vertex_product_matches_exact_contraction(gram):
    d = Deformation(0.2)
    basis = build_basis(gram, D=5, M=1)
    rows = np.where(basis.guard_mask(2, 0))[0]
    alg = VertexAlgebra(d, gram, 40)
    X, Y = alg.E(1, Z, 0), alg.E(-1, W, 0)
    c = vertex_contraction(X.symbol, Y.symbol, gram)
    lhs = product_matrix([X, Y], basis, rows, rows)
    rhs = c(d, Z, W) * product_matrix([X.nop(Y)], basis, rows, rows)
    assert np.max(np.abs(lhs - rhs)) < 1e-10 * np.max(np.abs(lhs))
    assert c.equals(ContractionFn.ratio(poles=(1, -1)))


def test_abelian_pairing_has_no_vertex_contraction():
    alg = VertexAlgebra(D0, GramSpec.su(1), 40)
    E = alg.E(1, Z, 0)
    with pytest.raises(ValueError):
        vertex_contraction(E.symbol, E.symbol, GramSpec("abelian"))


def test_engine_matches_oscillator_exponential():
    basis = build_basis(GramSpec("su2"), D=4, M=1)
    alg = VertexAlgebra(D0, GramSpec("su2"), 40)
    for op in (alg.E(1, W, 0), alg.Psi(W, 0), alg.Phi(W, 0), alg.A(2, W, 0)):
        assert np.allclose(op.matrix(basis).toarray(), vertex_via_oscillators(basis, op).toarray(), atol=1e-12)


def test_psi_inverse_is_identity():
    basis = build_basis(GramSpec("su2"), D=4)
    alg = VertexAlgebra(D0, GramSpec("su2"), 40)
    rows = np.where(basis.guard_mask(2))[0]
    prod = product_matrix([alg.Psi(W, 0), alg.Psi(W, 0).inverse()], basis, rows, rows)
    assert np.allclose(prod, np.eye(len(rows)), atol=1e-12)


def test_free_two_point_functions():
    ff = FreeFields(D0, 10)
    w = 0.4
    psi2 = element(VACUUM, [ff.psi(sym()), ff.psi(num(w))], VACUUM)
    # 1/(z - w) = sum_k w^k z^(-k-1)
    for k in range(6):
        assert psi2.coefficient(-k - 1) == pytest.approx(w ** k)
    hh = element(VACUUM, [ff.H(sym()), ff.H(num(w))], VACUUM)
    ratios = [hh.coefficient(-n - 1) / (w ** (n - 1)) for n in range(1, 6)]
    assert np.allclose(np.array(ratios) / ratios[0], [qnum(D0, n) for n in range(1, 6)])
