"""Normal-ordered exponentials of q-oscillators (vertex operators and friends).

A :class:`VertexOp` is

    pref * exp(sum cm[n, i] alpha^i_{-n}) exp(sum cp[n, i] alpha^i_n) e^{i sqrt2 Q.shift} prod_i base_i^{sqrt2 P^i}

i.e. on a momentum state ``|m>`` the zero-mode part multiplies by
``prod_i base_i^(2 m_i)`` and then shifts ``m -> m + shift``.  E^{+-}, Psi,
Phi, their inverses, D(z, w), A, B and every normal-ordered string of those
are of this form.

Products of vertex operators are evaluated numerically, auxiliary oscillator
by auxiliary oscillator: ``alpha^i_{-n} = sum_j L_ij(n) c^dagger_{j,n}``
factorises every exponential over (n, j), so the product is a product of
small occupation-space matrices.  Intermediate occupations are kept until the
neglected weight is below ``1e-18``; the only truncation left is the mode
cutoff ``K``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from ..fock import FockBasis, GramSpec, OperatorMatrix, gram_factor
from ..qcalc import Deformation, qnum

SQRT2 = math.sqrt(2.0)
OCCUPATION_TAIL = 1e-18


@lru_cache(maxsize=256)
def _factors(gram: GramSpec, d: Deformation, K: int) -> np.ndarray:
    """L[n] for n = 0..K (row 0 unused), shape (K+1, N, N)."""
    N = gram.copies
    out = np.zeros((K + 1, N, N), dtype=complex)
    for n in range(1, K + 1):
        out[n] = gram_factor(gram, d, n)
    return out


@dataclass(frozen=True, eq=False)
class VertexOp:
    d: Deformation
    gram: GramSpec
    K: int
    pref: complex = 1.0
    shift: Tuple[int, ...] = ()
    base: Tuple[complex, ...] = ()
    cm: np.ndarray = None  # (K+1, N): coefficient of alpha^i_{-n}
    cp: np.ndarray = None  # (K+1, N): coefficient of alpha^i_{n}
    label: str = ""
    symbol: Optional["VertexSymbol"] = None
    point: Optional[complex] = None

    def __post_init__(self):
        N = self.gram.copies
        if not self.shift:
            object.__setattr__(self, "shift", (0,) * N)
        if not self.base:
            object.__setattr__(self, "base", (1.0 + 0j,) * N)
        if self.cm is None:
            object.__setattr__(self, "cm", np.zeros((self.K + 1, N), dtype=complex))
        if self.cp is None:
            object.__setattr__(self, "cp", np.zeros((self.K + 1, N), dtype=complex))

    @property
    def copies(self) -> int:
        return self.gram.copies

    @classmethod
    def identity(cls, d: Deformation, gram: GramSpec, K: int) -> "VertexOp":
        return cls(d, gram, K, label="1")

    # -- algebra -----------------------------------------------------------

    def nop(self, other: "VertexOp") -> "VertexOp":
        """Normal-ordered product :self other: (creation left, Q left of P)."""
        self._compatible(other)
        return VertexOp(
            self.d, self.gram, self.K, self.pref * other.pref,
            tuple(a + b for a, b in zip(self.shift, other.shift)),
            tuple(a * b for a, b in zip(self.base, other.base)),
            self.cm + other.cm, self.cp + other.cp,
            f":{self.label} {other.label}:",
        )

    def scaled(self, c: complex) -> "VertexOp":
        return replace(self, pref=self.pref * c)

    def inverse(self) -> "VertexOp":
        """Inverse of a one-sided exponential (pure creation or pure annihilation)."""
        if np.any(self.cm) and np.any(self.cp):
            raise ValueError("inverse is only normal-ordered for one-sided exponentials")
        return VertexOp(
            self.d, self.gram, self.K, 1.0 / self.pref,
            tuple(-s for s in self.shift), tuple(1.0 / b for b in self.base),
            -self.cm, -self.cp, f"{self.label}^-1",
            self.symbol.inverse() if self.symbol is not None else None, self.point,
        )

    def _compatible(self, other: "VertexOp"):
        if other.gram != self.gram or other.K != self.K or other.d != self.d:
            raise ValueError("vertex operators live on different oscillator algebras")

    def aux(self) -> Tuple[np.ndarray, np.ndarray]:
        """Creation/annihilation coefficients on the auxiliary oscillators, shape (K+1, N)."""
        L = _factors(self.gram, self.d, self.K)
        ucre = np.einsum("ni,nij->nj", self.cm, L)
        uann = np.einsum("ni,nij->nj", self.cp, L)
        return ucre, uann

    def zero_mode(self, m: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """(coefficient, new momentum) for momenta m of shape (S, N)."""
        base = np.asarray(self.base, dtype=complex)
        coef = np.prod(base[None, :] ** (2 * m), axis=1) if m.shape[1] else np.ones(len(m), complex)
        return coef * self.pref, m + np.asarray(self.shift, dtype=int)[None, :]

    # -- single operator on a truncated basis --------------------------------

    def matrix(self, basis: FockBasis) -> OperatorMatrix:
        """Exact matrix on ``basis`` (normal ordering makes truncation harmless)."""
        return OperatorMatrix(sp.csr_matrix(product_matrix([self], basis)), basis, basis,
                              tuple(self.shift), 0, meta={"label": self.label})


# ---------------------------------------------------------------------------
# per-oscillator matrices


def _creation_exp(u: complex, cap: int) -> np.ndarray:
    """<a|exp(u c^dagger)|k> for a, k <= cap (unit-normalised occupations)."""
    M = np.zeros((cap + 1, cap + 1), dtype=complex)
    for k in range(cap + 1):
        val = 1.0 + 0j
        M[k, k] = 1.0
        for a in range(k + 1, cap + 1):
            # u^{a-k}/(a-k)! sqrt(a!/k!)
            val = val * u * math.sqrt(a) / (a - k)
            M[a, k] = val
    return M


def _annihilation_exp(v: complex, cap: int) -> np.ndarray:
    return _creation_exp(v, cap).T


def _occupation_cap(strength: float, external: int) -> int:
    t = 1
    term = strength
    while term > OCCUPATION_TAIL and t < 80:
        t += 1
        term *= strength / t
    return external + t + 1


def product_matrix(ops: Sequence[VertexOp], basis: FockBasis, rows: Optional[np.ndarray] = None,
                   cols: Optional[np.ndarray] = None) -> np.ndarray:
    """Matrix of ops[0] @ ops[1] @ ... on ``basis`` (rows/cols optionally restricted).

    Numerical product: nothing about contractions is assumed.  Each auxiliary
    oscillator contributes a product of its (capped) occupation matrices.
    """
    if not ops:
        raise ValueError("empty product")
    first = ops[0]
    for op in ops[1:]:
        first._compatible(op)
    if basis.gram != first.gram:
        raise ValueError("basis and operators use different pairings")
    rows = np.arange(basis.dimension) if rows is None else np.asarray(rows)
    cols = np.arange(basis.dimension) if cols is None else np.asarray(cols)
    occ = basis.occupations()
    occ_f = occ[rows]
    occ_i = occ[cols]
    K, N, D = first.K, first.copies, basis.D
    aux = [op.aux() for op in ops]
    out = np.ones((len(rows), len(cols)), dtype=complex)
    for n in range(1, K + 1):
        external = D // n if n <= D else 0
        for j in range(N):
            ucs = [a[0][n, j] for a in aux]
            uas = [a[1][n, j] for a in aux]
            if not any(ucs) and not any(uas):
                if n <= D:  # untouched oscillator: occupation must be unchanged
                    out *= occ_f[:, j, n][:, None] == occ_i[:, j, n][None, :]
                continue
            strength = sum(abs(uas[a]) * abs(ucs[b]) for a in range(len(ops)) for b in range(a + 1, len(ops)))
            cap = _occupation_cap(strength, external)
            P = np.eye(cap + 1, dtype=complex)
            for uc, ua in zip(ucs, uas):
                P = P @ _creation_exp(uc, cap) @ _annihilation_exp(ua, cap)
            if n <= D:
                out *= P[np.ix_(occ_f[:, j, n], occ_i[:, j, n])]
            else:
                out *= P[0, 0]
    # zero modes: rightmost operator acts first
    moms = basis.momenta()
    m = moms[cols].copy()
    coef = np.ones(len(cols), dtype=complex)
    for op in reversed(ops):
        c, m = op.zero_mode(m)
        coef *= c
    target = moms[rows]
    match = np.all(target[:, None, :] == m[None, :, :], axis=2) if N else np.ones((len(rows), len(cols)), bool)
    # fermion content untouched by bosonic vertex operators
    if basis.fermion:
        ferm = [s[2] for s in basis.states]
        fr = [ferm[r] for r in rows]
        fc = [ferm[c] for c in cols]
        match &= np.array([[a == b for b in fc] for a in fr])
    return np.where(match, out * coef[None, :], 0.0)


def normal_ordered(*ops: VertexOp) -> VertexOp:
    out = ops[0]
    for op in ops[1:]:
        out = out.nop(op)
    return out


# ---------------------------------------------------------------------------
# the fields


def _qnums(d: Deformation, K: int) -> np.ndarray:
    out = np.ones(K + 1)
    out[1:] = [qnum(d, n) for n in range(1, K + 1)]
    return out


@dataclass(frozen=True)
class VertexAlgebra:
    """Factory for the vertex-type fields at a given deformation and mode cutoff.

    Every field is built from its :class:`VertexSymbol`, so the same object
    also yields exact contraction factors.
    """

    d: Deformation
    gram: GramSpec
    K: int

    @property
    def N(self) -> int:
        return self.gram.copies

    def identity(self) -> VertexOp:
        return VertexOp.identity(self.d, self.gram, self.K)

    def build(self, sym: "VertexSymbol", x: complex, label: str = "") -> VertexOp:
        return instantiate(sym, self.d, self.gram, self.K, x, label)

    def contraction(self, X: "VertexSymbol", Y: "VertexSymbol"):
        return vertex_contraction(X, Y, self.gram)

    # -- simple fields -------------------------------------------------------

    def E(self, sign: int, z: complex, copy: int = 0) -> VertexOp:
        """E^{+-}_copy(z): creation args z q^{-+1/2}, annihilation args z q^{+-1/2}."""
        return self.build(symbol_E(self.N, sign, copy), z, f"E{'+' if sign > 0 else '-'}{copy}")

    def Psi(self, z: complex, copy: int = 0) -> VertexOp:
        return self.build(symbol_Psi(self.N, copy), z, f"Psi{copy}")

    def Phi(self, z: complex, copy: int = 0) -> VertexOp:
        return self.build(symbol_Phi(self.N, copy), z, f"Phi{copy}")

    def A(self, alpha: int, z: complex, copy: int = 0) -> VertexOp:
        """Phi^-1(z q^{-alpha/2}) Psi(z q^{alpha/2})."""
        return self.build(symbol_A(self.N, alpha, copy), z, f"A{alpha}")

    def B(self, alpha: int, z: complex, copy: int = 0) -> VertexOp:
        """Phi(z q^{-alpha/2}) Psi^-1(z q^{alpha/2})."""
        return self.build(symbol_B(self.N, alpha, copy), z, f"B{alpha}")

    def D(self, z: complex, w: complex, copy: int = 0) -> VertexOp:
        """:E^+(z) E^-(w):, the numerator of the E^+ E^- product."""
        return self.E(1, z, copy).nop(self.E(-1, w, copy))

    def A_multi(self, pairs: Sequence[Tuple[int, int]], z: complex, copy: int = 0) -> VertexOp:
        """:A^{a1}(z q^{b1}) ... A^{an}(z q^{bn}):."""
        return self.build(symbol_string([symbol_A(self.N, a, copy, b) for a, b in pairs]), z, f"A{list(pairs)}")

    def B_multi(self, pairs: Sequence[Tuple[int, int]], z: complex, copy: int = 0) -> VertexOp:
        return self.build(symbol_string([symbol_B(self.N, a, copy, b) for a, b in pairs]), z, f"B{list(pairs)}")

    # -- su(N+1) composite roots -------------------------------------------

    def root_copies(self, start: int, length: int) -> List[int]:
        """0-based copies for beta_start + ... + beta_{start+length-1} (start is 1-based)."""
        if start < 1 or length < 1 or start + length - 1 > self.N:
            raise ValueError(f"no positive root starting at {start} of length {length} in su({self.N + 1})")
        return list(range(start - 1, start - 1 + length))

    def symbol_root(self, kind: str, start: int, length: int, k: int = 1, sign: int = 1) -> "VertexSymbol":
        """Composite-root symbol; factor on copy c (0-based) sits at x q^(c+1)."""
        copies = self.root_copies(start, length)
        build = {
            "E": lambda c: symbol_E(self.N, sign, c, c + 1),
            "Psi": lambda c: symbol_Psi(self.N, c, c + 1),
            "Phi": lambda c: symbol_Phi(self.N, c, c + 1),
            "A": lambda c: symbol_A(self.N, k, c, c + 1),
            "B": lambda c: symbol_B(self.N, k, c, c + 1),
        }[kind]
        return symbol_string([build(c) for c in copies])

    def E_root(self, sign: int, start: int, length: int, z: complex) -> VertexOp:
        return self.build(self.symbol_root("E", start, length, sign=sign), z, f"E{sign:+d}[{start},{length}]")

    def Psi_root(self, start: int, length: int, z: complex) -> VertexOp:
        return self.build(self.symbol_root("Psi", start, length), z, f"Psi[{start},{length}]")

    def Phi_root(self, start: int, length: int, z: complex) -> VertexOp:
        return self.build(self.symbol_root("Phi", start, length), z, f"Phi[{start},{length}]")

    def A_root(self, k: int, start: int, length: int, z: complex) -> VertexOp:
        return self.build(self.symbol_root("A", start, length, k=k), z, f"A{k}[{start},{length}]")

    def B_root(self, k: int, start: int, length: int, z: complex) -> VertexOp:
        return self.build(self.symbol_root("B", start, length, k=k), z, f"B{k}[{start},{length}]")

    def positive_roots(self) -> List[Tuple[int, int]]:
        """(start, length) for every positive root, simple ones included."""
        return [(i, s) for i in range(1, self.N + 1) for s in range(1, self.N - i + 2)]


# ---------------------------------------------------------------------------
# symbolic descriptors and exact contractions


@dataclass(frozen=True)
class Piece:
    """One exponent term: sign * sqrt2 * u(n) * (x q^shift)^(+-n) alpha^copy_(-+n).

    ``kind`` 'E' means u(n) = 1/[n], 'K' means u(n) = q - q^-1.
    """

    copy: int
    creation: bool
    sign: int
    kind: str
    shift: Fraction


@dataclass(frozen=True)
class VertexSymbol:
    """Exponent pieces plus zero-mode data, relative to the spectral parameter x.

    The zero-mode base on copy i is ``x^base_z[i] q^base_q[i]``.
    """

    pieces: Tuple[Piece, ...]
    momentum: Tuple[int, ...]
    base_z: Tuple[int, ...]
    base_q: Tuple[Fraction, ...]

    def nop(self, other: "VertexSymbol") -> "VertexSymbol":
        return VertexSymbol(self.pieces + other.pieces,
                            tuple(a + b for a, b in zip(self.momentum, other.momentum)),
                            tuple(a + b for a, b in zip(self.base_z, other.base_z)),
                            tuple(a + b for a, b in zip(self.base_q, other.base_q)))

    def shifted(self, a) -> "VertexSymbol":
        """Symbol of the field at x q^a."""
        a = Fraction(a)
        return VertexSymbol(tuple(replace(p, shift=p.shift + a) for p in self.pieces), self.momentum,
                            self.base_z, tuple(bq + a * bz for bq, bz in zip(self.base_q, self.base_z)))

    def inverse(self) -> "VertexSymbol":
        return VertexSymbol(tuple(replace(p, sign=-p.sign) for p in self.pieces),
                            tuple(-m for m in self.momentum), tuple(-b for b in self.base_z),
                            tuple(-b for b in self.base_q))


def _cartan(gram: GramSpec) -> np.ndarray:
    if gram.kind == "su2":
        return np.array([[2]])
    if gram.kind == "cartan":
        return np.array(gram.cartan)
    raise ValueError(f"no vertex contractions for pairing {gram.kind!r}")


def _qnum_ratio_terms(K: int) -> Dict[Fraction, int]:
    """[K n]/[n] as sum of q^(t n)."""
    if K == 0:
        return {}
    sgn = 1 if K > 0 else -1
    return {Fraction(abs(K) - 1 - 2 * j): sgn for j in range(abs(K))}


def _pair_terms(k1: str, k2: str, K: int) -> Dict[Fraction, int]:
    """u1(n) u2(n) [K n][n] as sum_t c_t q^(t n)."""
    if k1 == "E" and k2 == "E":
        return _qnum_ratio_terms(K)
    if k1 == "K" and k2 == "K":
        out: Dict[Fraction, int] = {}
        for t, c in ((K + 1, 1), (K - 1, -1), (1 - K, -1), (-(K + 1), 1)):
            out[Fraction(t)] = out.get(Fraction(t), 0) + c
        return {t: c for t, c in out.items() if c}
    out = {}
    for t, c in ((K, 1), (-K, -1)):
        out[Fraction(t)] = out.get(Fraction(t), 0) + c
    return {t: c for t, c in out.items() if c}


def vertex_contraction(X: VertexSymbol, Y: VertexSymbol, gram: GramSpec):
    """Exact c(z, w) with X(z) Y(w) = c(z, w) :X(z) Y(w): for |z| > |w|."""
    from .contractions import ContractionFn

    C = _cartan(gram)
    acc: Dict[Fraction, int] = {}
    for p in X.pieces:
        if p.creation:
            continue
        for r in Y.pieces:
            if not r.creation:
                continue
            K = int(C[p.copy, r.copy])
            for t0, c in _pair_terms(p.kind, r.kind, K).items():
                coeff = p.sign * r.sign * c
                t = t0 + r.shift - p.shift
                # exp(coeff * sum (q^t x)^n / n) = (1 - q^t w/z)^(-coeff) = z^coeff (z - w q^t)^(-coeff)
                acc[t] = acc.get(t, 0) - coeff
    zpow = -sum(acc.values())
    qexp = Fraction(0)
    for i, dm in enumerate(Y.momentum):
        if dm:
            zpow += 2 * X.base_z[i] * dm
            qexp += 2 * X.base_q[i] * dm
    return ContractionFn.build(acc, qexp=qexp, zpow=zpow)


def instantiate(sym: VertexSymbol, d: Deformation, gram: GramSpec, K: int, x: complex,
                label: str = "") -> VertexOp:
    N = gram.copies
    qn = _qnums(d, K)
    n = np.arange(K + 1)
    cm = np.zeros((K + 1, N), dtype=complex)
    cp = np.zeros((K + 1, N), dtype=complex)
    for p in sym.pieces:
        u = (1.0 / qn) if p.kind == "E" else np.full(K + 1, d.kappa)
        arg = complex(x) * d.qpow(p.shift)
        vals = p.sign * SQRT2 * u * arg ** (n if p.creation else -n)
        vals[0] = 0
        (cm if p.creation else cp)[:, p.copy] += vals
    base = tuple(complex(x) ** bz * d.qpow(bq) for bz, bq in zip(sym.base_z, sym.base_q))
    return VertexOp(d, gram, K, 1.0, tuple(sym.momentum), base, cm, cp, label, sym, x)


def symbol_E(N: int, sign: int, copy: int = 0, shift=0) -> VertexSymbol:
    h = Fraction(1, 2)
    mom = [0] * N
    mom[copy] = sign
    bz = [0] * N
    bz[copy] = sign
    bq = [Fraction(0)] * N
    pieces = (Piece(copy, True, sign, "E", -sign * h), Piece(copy, False, -sign, "E", sign * h))
    return VertexSymbol(pieces, tuple(mom), tuple(bz), tuple(bq)).shifted(shift)


def symbol_Psi(N: int, copy: int = 0, shift=0) -> VertexSymbol:
    bq = [Fraction(0)] * N
    bq[copy] = Fraction(1)
    return VertexSymbol((Piece(copy, False, 1, "K", Fraction(0)),), (0,) * N, (0,) * N, tuple(bq)).shifted(shift)


def symbol_Phi(N: int, copy: int = 0, shift=0) -> VertexSymbol:
    bq = [Fraction(0)] * N
    bq[copy] = Fraction(-1)
    return VertexSymbol((Piece(copy, True, -1, "K", Fraction(0)),), (0,) * N, (0,) * N, tuple(bq)).shifted(shift)


def symbol_A(N: int, alpha: int, copy: int = 0, shift=0) -> VertexSymbol:
    h = Fraction(alpha, 2)
    return symbol_Phi(N, copy, -h).inverse().nop(symbol_Psi(N, copy, h)).shifted(shift)


def symbol_B(N: int, alpha: int, copy: int = 0, shift=0) -> VertexSymbol:
    h = Fraction(alpha, 2)
    return symbol_Phi(N, copy, -h).nop(symbol_Psi(N, copy, h).inverse()).shifted(shift)


def symbol_string(parts: Sequence[VertexSymbol]) -> VertexSymbol:
    out = parts[0]
    for p in parts[1:]:
        out = out.nop(p)
    return out
