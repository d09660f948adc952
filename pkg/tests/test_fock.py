from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qsugawara.fock import (BasisTooLarge, GramSpec, build_basis, cartan_matrix, commutator, component_bases,
                            fermion_mode, gram_factor, identity, momentum_diag, momentum_shift, oscillator,
                            partitions_upto, tensor)
from qsugawara.qcalc import Deformation

PARTITION_COUNTS = [1, 1, 2, 3, 5, 7, 11, 15, 22]


def test_partitions_counts():
    parts = partitions_upto(8)
    for n, count in enumerate(PARTITION_COUNTS):
        assert sum(1 for p in parts if sum(p) == n) == count
    assert all(list(p) == sorted(p, reverse=True) for p in parts)


def test_cartan_matrix():
    assert cartan_matrix(3).tolist() == [[2, -1, 0], [-1, 2, -1], [0, -1, 2]]


@pytest.mark.parametrize("gram", [GramSpec("abelian"), GramSpec("su2"), GramSpec.su(2), GramSpec.su(3)])
@given(eps=st.floats(0.02, 0.5), n=st.integers(1, 12))
def test_gram_factor_is_complex_cholesky(gram, eps, n):
    d = Deformation(eps)
    L = gram_factor(gram, d, n)
    assert np.allclose(L @ L.T, gram.matrix(d, n), atol=1e-13)
    assert np.allclose(L, np.tril(L))


def test_basis_dimension_and_estimate():
    basis = build_basis(GramSpec("abelian"), D=6)
    assert basis.dimension == sum(PARTITION_COUNTS[:7])
    su3 = build_basis(GramSpec.su(2), D=3, M=1)
    assert su3.estimated_dimension() >= su3.dimension
    assert len(set(su3.states)) == su3.dimension
    assert su3.states[su3.vacuum()] == ((0, 0), ((), ()), ())
    with pytest.raises(BasisTooLarge):
        build_basis(GramSpec.su(3), D=12, M=3, limit=10_000)


@pytest.mark.parametrize("gram", [GramSpec("abelian"), GramSpec("su2"), GramSpec.su(2)])
def test_oscillator_commutators_inside_guard(gram):
    d = Deformation(0.15)
    basis = build_basis(gram, D=6)
    cols = np.where(basis.guard_mask(3))[0]
    for n in range(1, 4):
        G = gram.matrix(d, n)
        for i in range(gram.copies):
            for j in range(gram.copies):
                c = commutator(oscillator(basis, d, i, n), oscillator(basis, d, j, -n)).toarray()
                assert np.allclose(c[:, cols], G[i, j] * np.eye(basis.dimension)[:, cols], atol=1e-12)
                same = commutator(oscillator(basis, d, i, n), oscillator(basis, d, j, n + 1)).toarray()
                assert np.max(np.abs(same[:, cols])) < 1e-12


def test_fermion_modes_anticommute():
    basis = build_basis(GramSpec("none"), D=3, fermion=True)
    cols = np.where(basis.guard_mask(1.5))[0]
    half = [Fraction(k, 2) for k in (-3, -1, 1, 3)]
    for r in half:
        for s in half:
            ac = commutator(fermion_mode(basis, r), fermion_mode(basis, s), anti=True).toarray()
            target = np.eye(basis.dimension) if r + s == 0 else 0 * np.eye(basis.dimension)
            assert np.allclose(ac[:, cols], target[:, cols])
    with pytest.raises(ValueError):
        fermion_mode(basis, 1)


def test_momentum_operators():
    basis = build_basis(GramSpec("su2"), D=2, M=2)
    up, down = momentum_shift(basis, 0, 1), momentum_shift(basis, 0, -1)
    inner = np.where(np.abs(basis.momenta()[:, 0]) <= 1)[0]
    assert np.allclose((down.entries @ up.entries).toarray()[np.ix_(inner, inner)], np.eye(len(inner)))
    z = 0.7 * np.exp(0.4j)
    diag = momentum_diag(basis, 0, z).toarray().diagonal()
    assert np.allclose(diag, z ** (2 * basis.momenta()[:, 0]))


def test_tensor_product_of_identities():
    basis = build_basis(GramSpec("su2"), D=2, M=1, fermion=True)
    bos, fer = component_bases(basis)
    prod = tensor(identity(bos), identity(fer), basis)
    assert np.allclose(prod.toarray(), np.eye(basis.dimension))
