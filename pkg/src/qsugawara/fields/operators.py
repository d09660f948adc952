"""Field evaluations as :class:`OperatorMatrix` on a truncated Fock basis.

Vertex-type fields come from :mod:`.vertex` (exact per-oscillator engine).
:func:`eval_normal_exponential` builds the same exponentials from the sparse
oscillator matrices of :mod:`..fock`; the two constructions are independent
and are compared in the test suite.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from ..fock import (FockBasis, GramSpec, OperatorMatrix, component_bases, fermion_mode, identity,
                    momentum_diag, momentum_shift, oscillator, tensor)
from ..qcalc import Deformation, qnum
from .contractions import ContractionFn, f_function
from .vertex import (SQRT2, VertexAlgebra, VertexOp, symbol_A, symbol_B, symbol_E, symbol_Phi, symbol_Psi,
                     vertex_contraction)


def _algebra(basis: FockBasis, d: Deformation, K: Optional[int]) -> VertexAlgebra:
    return VertexAlgebra(d, basis.gram, basis.D if K is None else K)


# ---------------------------------------------------------------------------
# currents


def eval_current_H(basis: FockBasis, d: Deformation, z: complex, K: Optional[int] = None, copy: int = 0,
                   zero_mode: float | str = 0.0) -> OperatorMatrix:
    """sum_{0<|n|<=min(K,D)} alpha^copy_n z^{-n-1} plus a zero mode.

    ``zero_mode`` is a scalar a_0 (abelian current) or ``"momentum"`` for the
    lattice zero mode P with eigenvalue sqrt2 m_copy.
    """
    if z == 0:
        raise ValueError("z must be non-zero")
    top = basis.D if K is None else min(K, basis.D)
    out = identity(basis) * 0
    for n in range(1, top + 1):
        out = out + oscillator(basis, d, copy, n) * z ** (-n - 1) + oscillator(basis, d, copy, -n) * z ** (n - 1)
    if zero_mode == "momentum":
        vals = [SQRT2 * s[0][copy] / z for s in basis.states]
        out = out + OperatorMatrix(sp.diags(np.asarray(vals, dtype=complex)).tocsr(), basis, basis,
                                   (0,) * basis.copies)
    elif zero_mode:
        out = out + identity(basis) * (zero_mode / z)
    return out


def current_parts(basis: FockBasis, d: Deformation, z: complex, copy: int = 0,
                  momentum: bool = True) -> Tuple[OperatorMatrix, OperatorMatrix]:
    """(creation part, zero mode + annihilation part) of the current at z."""
    cre = identity(basis) * 0
    ann = identity(basis) * 0
    for n in range(1, basis.D + 1):
        cre = cre + oscillator(basis, d, copy, -n) * z ** (n - 1)
        ann = ann + oscillator(basis, d, copy, n) * z ** (-n - 1)
    if momentum:
        vals = [SQRT2 * s[0][copy] / z for s in basis.states]
        ann = ann + OperatorMatrix(sp.diags(np.asarray(vals, dtype=complex)).tocsr(), basis, basis,
                                   (0,) * basis.copies)
    return cre, ann


def normal_square(parts_a: Tuple[OperatorMatrix, OperatorMatrix],
                  parts_b: Tuple[OperatorMatrix, OperatorMatrix]) -> OperatorMatrix:
    """:X Y: of two bosonic linear fields given as (creation, rest) parts.

    Creation parts go left, so the truncated matrix products never pass
    through states above the cutoff: exact on the whole basis.
    """
    ca, aa = parts_a
    cb, ab = parts_b
    return ca @ cb + ca @ ab + cb @ aa + aa @ ab


# ---------------------------------------------------------------------------
# normal-ordered exponentials from the sparse oscillators


def _nilpotent_exp(X: sp.csr_matrix, max_power: int) -> sp.csr_matrix:
    n = X.shape[0]
    out = sp.identity(n, dtype=complex, format="csr")
    term = out
    for k in range(1, max_power + 1):
        term = (term @ X) / k
        if term.nnz == 0:
            break
        out = out + term
    return out.tocsr()


def eval_normal_exponential(basis: FockBasis, d: Deformation, cminus: np.ndarray, cplus: np.ndarray,
                            shift: Sequence[int] = (), base: Sequence[complex] = (), pref: complex = 1.0
                            ) -> OperatorMatrix:
    """pref exp(sum cminus[n,i] alpha^i_{-n}) exp(sum cplus[n,i] alpha^i_n) e^{i sqrt2 Q.shift} prod base_i^{sqrt2 P^i}.

    ``cminus``/``cplus`` have shape (>= D+1, N); row 0 is ignored.  Both
    exponentials are finite sums on the graded space, so the result is exact.
    """
    N = basis.copies
    shift = tuple(shift) or (0,) * N
    base = tuple(base) or (1.0,) * N
    dim = basis.dimension
    X = sp.csr_matrix((dim, dim), dtype=complex)
    Y = sp.csr_matrix((dim, dim), dtype=complex)
    for n in range(1, basis.D + 1):
        for i in range(N):
            if n < len(cminus) and cminus[n, i]:
                X = X + oscillator(basis, d, i, -n).entries * cminus[n, i]
            if n < len(cplus) and cplus[n, i]:
                Y = Y + oscillator(basis, d, i, n).entries * cplus[n, i]
    mat = _nilpotent_exp(X, basis.D) @ _nilpotent_exp(Y, basis.D)
    op = OperatorMatrix(mat.tocsr() * pref, basis, basis, (0,) * N)
    zero = identity(basis)
    for i in range(N):
        zero = momentum_diag(basis, i, base[i]) @ zero
        for _ in range(abs(shift[i])):
            zero = momentum_shift(basis, i, 1 if shift[i] > 0 else -1) @ zero
    out = op @ zero
    out.momentum_shift = tuple(shift)
    return out


def vertex_via_oscillators(basis: FockBasis, op: VertexOp) -> OperatorMatrix:
    """Rebuild a :class:`VertexOp` with :func:`eval_normal_exponential`."""
    return eval_normal_exponential(basis, op.d, op.cm, op.cp, op.shift, op.base, op.pref)


# ---------------------------------------------------------------------------
# vertex fields


def eval_E(basis: FockBasis, d: Deformation, sign: int, z: complex, copy: int = 0,
           K: Optional[int] = None) -> OperatorMatrix:
    return _algebra(basis, d, K).E(sign, z, copy).matrix(basis)


def eval_D(basis: FockBasis, d: Deformation, z: complex, w: complex, copy: int = 0,
           K: Optional[int] = None) -> OperatorMatrix:
    return _algebra(basis, d, K).D(z, w, copy).matrix(basis)


def eval_Psi(basis: FockBasis, d: Deformation, z: complex, copy: int = 0, K: Optional[int] = None) -> OperatorMatrix:
    return _algebra(basis, d, K).Psi(z, copy).matrix(basis)


def eval_Phi(basis: FockBasis, d: Deformation, z: complex, copy: int = 0, K: Optional[int] = None) -> OperatorMatrix:
    return _algebra(basis, d, K).Phi(z, copy).matrix(basis)


def eval_A(basis: FockBasis, d: Deformation, alpha: int, z: complex, copy: int = 0,
           K: Optional[int] = None) -> OperatorMatrix:
    return _algebra(basis, d, K).A(alpha, z, copy).matrix(basis)


def eval_B(basis: FockBasis, d: Deformation, alpha: int, z: complex, copy: int = 0,
           K: Optional[int] = None) -> OperatorMatrix:
    return _algebra(basis, d, K).B(alpha, z, copy).matrix(basis)


def eval_A_multi(basis: FockBasis, d: Deformation, pairs: Sequence[Tuple[int, int]], z: complex, copy: int = 0,
                 K: Optional[int] = None) -> OperatorMatrix:
    return _algebra(basis, d, K).A_multi(pairs, z, copy).matrix(basis)


def eval_B_multi(basis: FockBasis, d: Deformation, pairs: Sequence[Tuple[int, int]], z: complex, copy: int = 0,
                 K: Optional[int] = None) -> OperatorMatrix:
    return _algebra(basis, d, K).B_multi(pairs, z, copy).matrix(basis)


def _sugawara_scale(d: Deformation, z: complex, n: int = 1) -> complex:
    if d.epsilon == 0:
        raise ValueError("the q-Sugawara tensors divide by (q - q^-1)^2; take the classical limit by "
                         "epsilon scaling instead of epsilon = 0")
    return 1.0 / (2 * n * n * qnum(d, 2) * z * z * d.kappa ** 2)


def eval_T_alpha_beta(basis: FockBasis, d: Deformation, alpha: int, beta: int, z: complex,
                      K: Optional[int] = None, copy: int = 0) -> OperatorMatrix:
    """(A^alpha(z q^beta) + B^alpha(z q^beta) - 2) / (2 [2] z^2 (q - q^-1)^2)."""
    return eval_T_multi(basis, d, [(alpha, beta)], z, K, copy)


def eval_T_multi(basis: FockBasis, d: Deformation, pairs: Sequence[Tuple[int, int]], z: complex,
                 K: Optional[int] = None, copy: int = 0) -> OperatorMatrix:
    """(A^{pairs}(z) + B^{pairs}(z) - 2) / (2 n^2 [2] z^2 (q - q^-1)^2)."""
    scale = _sugawara_scale(d, z, len(pairs))
    alg = _algebra(basis, d, K)
    s = alg.A_multi(pairs, z, copy).matrix(basis) + alg.B_multi(pairs, z, copy).matrix(basis)
    return (s - identity(basis) * 2) * scale


# ---------------------------------------------------------------------------
# fermion and supercharges


def eval_psi(basis: FockBasis, z: complex, K: Optional[int] = None) -> OperatorMatrix:
    """psi(z) = sum_r psi_r z^{-r-1/2}, |r| <= min(K, D) - 1/2."""
    top = basis.D if K is None else min(K, basis.D)
    out = None
    for r2 in range(1, 2 * top, 2):
        for m in (r2, -r2):
            term = fermion_mode(basis, Fraction(m, 2)) * complex(z) ** (-(m + 1) // 2)
            out = term if out is None else out + term
    return out


def eval_G_pm(basis: FockBasis, d: Deformation, sign: int, alpha: int, z: complex,
              K: Optional[int] = None) -> OperatorMatrix:
    """G^{+-}_alpha(z) = E^{+-}(z q^{+-alpha/2}) psi(z q^{-+alpha/2}) on a boson (x) fermion basis."""
    if not basis.fermion:
        raise ValueError("G needs a basis with the fermion")
    bos, fer = component_bases(basis)
    E = eval_E(bos, d, sign, z * d.qpow(sign * Fraction(alpha, 2)), K=K)
    psi = eval_psi(fer, z * d.qpow(-sign * Fraction(alpha, 2)), K)
    return tensor(E, psi, basis)


# ---------------------------------------------------------------------------
# su(N+1) composite roots


def zeta_normalizer(d: Deformation, start: int, length: int, z: complex, variant: str = "rederived") -> complex:
    """Normalizer multiplying E^+_beta(z) E^-_{-beta}(w) for beta = beta_start + ... (length simple roots).

    ``as_printed``: z^{2(s-1)} q^{i(2s-1)+s(s+1)}; ``rederived``:
    z^{2s} q^{2i(s+1)+s(s+1)}, which leaves exactly two unit simple poles.
    Here s = length - 1 and i = start.
    """
    s, i = length - 1, start
    if variant == "as_printed":
        return complex(z) ** (2 * (s - 1)) * d.qpow(i * (2 * s - 1) + s * (s + 1))
    return complex(z) ** (2 * s) * d.qpow(2 * i * (s + 1) + s * (s + 1))


def eval_T_kl(basis: FockBasis, d: Deformation, k: int, l: int, z: complex, K: Optional[int] = None,
              rows: Optional[np.ndarray] = None, cols: Optional[np.ndarray] = None) -> np.ndarray:
    """T^{k,l}(z) as a dense block (rows x cols) on an su(N+1) basis.

    1/(2(2+N)[2] z^2 (q-q^-1)^2) {sum_i [A^k_i + B^k_i - 2] + 2 sum_{beta>0} [A^k_beta + B^k_beta - 2]}
    with every field at z q^l.  The positive-root sum includes the simple roots.
    """
    from .vertex import product_matrix

    alg = _algebra(basis, d, K)
    N = alg.N
    scale = _sugawara_scale(d, z) / (2 + N)
    x = z * d.qpow(l)
    rows = np.arange(basis.dimension) if rows is None else rows
    cols = np.arange(basis.dimension) if cols is None else cols
    eye = (rows[:, None] == cols[None, :]).astype(complex)

    def block(op):
        return product_matrix([op], basis, rows, cols)

    acc = np.zeros((len(rows), len(cols)), dtype=complex)
    for i in range(N):
        acc += block(alg.A(k, x, i)) + block(alg.B(k, x, i)) - 2 * eye
    for start, length in alg.positive_roots():
        acc += 2 * (block(alg.A_root(k, start, length, x)) + block(alg.B_root(k, start, length, x)) - 2 * eye)
    return acc * scale


# ---------------------------------------------------------------------------
# contraction registry


def _sym(kind: str, N: int = 1, copy: int = 0, alpha: int = 1):
    return {
        "E+": lambda: symbol_E(N, 1, copy), "E-": lambda: symbol_E(N, -1, copy),
        "Psi": lambda: symbol_Psi(N, copy), "Phi": lambda: symbol_Phi(N, copy),
        "A": lambda: symbol_A(N, alpha, copy), "B": lambda: symbol_B(N, alpha, copy),
    }[kind]()


def contraction(kind_a: str, kind_b: str, gram: GramSpec = GramSpec("su2"), copy_a: int = 0, copy_b: int = 0,
                alpha: int = 1, beta: int = 1) -> ContractionFn:
    """c(z, w) with X(z) Y(w) = c(z, w) :X(z) Y(w): for |z| > |w|.

    Free fields: ("H", "H") -> 1/((z-qw)(z-w/q)), ("psi", "psi") -> 1/(z-w),
    ("f", "f") -> f(z;w).  Vertex kinds: E+, E-, Psi, Phi, A, B (alpha, beta
    are the A/B indices of the two factors).
    """
    if (kind_a, kind_b) == ("H", "H"):
        return ContractionFn.ratio(poles=(1, -1))
    if (kind_a, kind_b) == ("psi", "psi"):
        return ContractionFn.ratio(poles=(0,))
    if (kind_a, kind_b) == ("f", "f"):
        return f_function()
    vertex = {"E+", "E-", "Psi", "Phi", "A", "B"}
    if kind_a not in vertex or kind_b not in vertex:
        raise KeyError(f"no contraction registered for ({kind_a}, {kind_b})")
    N = gram.copies
    return vertex_contraction(_sym(kind_a, N, copy_a, alpha), _sym(kind_b, N, copy_b, beta), gram)
