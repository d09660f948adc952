"""Truncated Fock spaces for q-deformed oscillators, lattice zero modes and an NS fermion.

Oscillators are realised through auxiliary unit oscillators ``c_{j,n}``:

    alpha^i_{-n} = sum_j L_ij(n) c^dagger_{j,n},   alpha^i_n = sum_j L_ij(n) c_{j,n}

with ``L(n) L(n)^T = G(n)`` the pairing matrix.  ``L`` may be complex (the
pairings change sign for phases), so the operators are not adjoint to each
other and only algebraic relations are meaningful.

A basis state is ``(momentum, partitions, fermions)``:

* ``momentum``: tuple of ints, one per oscillator copy (``|m_i| <= M``);
* ``partitions``: one non-increasing tuple of mode numbers per copy, the
  occupation of the auxiliary oscillators;
* ``fermions``: increasing tuple of ``2r`` (odd positive ints) for the
  occupied NS modes ``psi_{-r}``.

The total degree ``sum(partitions) + sum(r)`` never exceeds the cutoff ``D``.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from .qcalc import Deformation, qnum

log = logging.getLogger(__name__)

DEFAULT_DIMENSION_LIMIT = 200_000

State = Tuple[Tuple[int, ...], Tuple[Tuple[int, ...], ...], Tuple[int, ...]]


class BasisTooLarge(RuntimeError):
    pass


def cartan_matrix(rank: int) -> np.ndarray:
    """Cartan matrix of su(rank+1)."""
    K = 2 * np.eye(rank, dtype=int)
    for i in range(rank - 1):
        K[i, i + 1] = K[i + 1, i] = -1
    return K


@dataclass(frozen=True)
class GramSpec:
    """Which oscillator pairing is in play.

    ``abelian``  [a_n, a_m] = [n] delta
    ``su2``      [2n][n]/(2n) delta
    ``cartan``   [K_ij n][n]/(2n) delta, K the su(N+1) Cartan matrix
    ``none``     no bosons at all (pure fermion spaces)
    """

    kind: str
    cartan: Tuple[Tuple[int, ...], ...] = ()

    def __post_init__(self):
        if self.kind not in ("abelian", "su2", "cartan", "none"):
            raise ValueError(f"unknown Gram kind {self.kind!r}")
        if self.kind == "cartan" and not self.cartan:
            raise ValueError("cartan kind needs a matrix")

    @classmethod
    def su(cls, rank: int) -> "GramSpec":
        return cls("cartan", tuple(tuple(int(x) for x in row) for row in cartan_matrix(rank)))

    @property
    def copies(self) -> int:
        if self.kind == "none":
            return 0
        if self.kind == "cartan":
            return len(self.cartan)
        return 1

    def matrix(self, d: Deformation, n: int) -> np.ndarray:
        """G(n) for n >= 1."""
        n = abs(n)
        if self.kind == "abelian":
            return np.array([[qnum(d, n)]], dtype=complex)
        if self.kind == "su2":
            return np.array([[qnum(d, 2 * n) * qnum(d, n) / (2 * n)]], dtype=complex)
        if self.kind == "cartan":
            K = np.array(self.cartan)
            G = np.empty(K.shape, dtype=complex)
            for i, j in np.ndindex(K.shape):
                G[i, j] = qnum(d, int(K[i, j]) * n) * qnum(d, n) / (2 * n)
            return G
        return np.zeros((0, 0), dtype=complex)


def gram_factor(gram: GramSpec, d: Deformation, n: int) -> np.ndarray:
    """Lower-triangular complex L with L @ L.T == G(n) (no conjugation)."""
    G = gram.matrix(d, n)
    N = G.shape[0]
    L = np.zeros_like(G)
    for j in range(N):
        pivot = G[j, j] - np.sum(L[j, :j] ** 2)
        if abs(pivot) < 1e-14:
            raise np.linalg.LinAlgError(f"pairing matrix G({n}) is singular (pivot {j} vanishes)")
        L[j, j] = np.sqrt(pivot + 0j)
        for i in range(j + 1, N):
            L[i, j] = (G[i, j] - np.sum(L[i, :j] * L[j, :j])) / L[j, j]
    return L


def partitions_upto(D: int, max_part: Optional[int] = None) -> List[Tuple[int, ...]]:
    """All partitions (non-increasing tuples) of every integer 0..D."""
    max_part = D if max_part is None else max_part
    out: List[Tuple[int, ...]] = [()]

    def rec(prefix: Tuple[int, ...], remaining: int, largest: int):
        for part in range(min(largest, remaining), 0, -1):
            p = prefix + (part,)
            out.append(p)
            rec(p, remaining - part, part)

    rec((), D, max_part)
    return out


def fermion_subsets_upto(D2: int) -> List[Tuple[int, ...]]:
    """Subsets of odd positive ints (2r) with sum <= D2, increasing tuples."""
    odds = list(range(1, D2 + 1, 2))
    out: List[Tuple[int, ...]] = [()]

    def rec(prefix: Tuple[int, ...], start: int, remaining: int):
        for idx in range(start, len(odds)):
            o = odds[idx]
            if o > remaining:
                break
            p = prefix + (o,)
            out.append(p)
            rec(p, idx + 1, remaining - o)

    rec((), 0, D2)
    return out


def state_degree2(state: State) -> int:
    """Twice the total degree (fermion modes are half-integers)."""
    _, parts, ferm = state
    return 2 * sum(sum(p) for p in parts) + sum(ferm)


@dataclass(frozen=True)
class FockBasis:
    gram: GramSpec
    D: int
    M: int = 0
    fermion: bool = False
    limit: int = DEFAULT_DIMENSION_LIMIT

    def __post_init__(self):
        if self.D < 0 or self.M < 0:
            raise ValueError("cutoffs must be non-negative")
        if self.estimated_dimension() > self.limit:
            raise BasisTooLarge(
                f"basis would have ~{self.estimated_dimension()} states, above the limit {self.limit}; "
                "lower the degree cutoff D or momentum range M"
            )

    def estimated_dimension(self) -> int:
        copies = self.gram.copies
        bos = [len([p for p in partitions_upto(self.D) if sum(p) == d]) for d in range(self.D + 1)]
        # number of multi-partitions per total degree
        multi = [1] + [0] * self.D
        for _ in range(copies):
            multi = [sum(multi[a] * bos[t - a] for a in range(t + 1)) for t in range(self.D + 1)]
        ferm = [1] + [0] * self.D
        if self.fermion:
            ferm = [0] * (self.D + 1)
            for s in fermion_subsets_upto(2 * self.D):
                ferm[sum(s) // 2] += 1  # floor: a loose upper estimate
        total = sum(multi[a] * sum(ferm[: self.D - a + 1]) for a in range(self.D + 1))
        return total * (2 * self.M + 1) ** copies

    @cached_property
    def states(self) -> List[State]:
        copies = self.gram.copies
        parts = partitions_upto(self.D)
        multi = [
            combo for combo in itertools.product(parts, repeat=copies) if sum(sum(p) for p in combo) <= self.D
        ]
        ferms = fermion_subsets_upto(2 * self.D) if self.fermion else [()]
        moms = list(itertools.product(range(-self.M, self.M + 1), repeat=copies))
        out = []
        for m in moms:
            for b in multi:
                b2 = 2 * sum(sum(p) for p in b)
                for f in ferms:
                    if b2 + sum(f) <= 2 * self.D:
                        out.append((m, b, f))
        out.sort(key=lambda s: (state_degree2(s), tuple(abs(x) for x in s[0]), s[0], s[1], s[2]))
        return out

    @cached_property
    def index(self) -> Dict[State, int]:
        return {s: i for i, s in enumerate(self.states)}

    @property
    def dimension(self) -> int:
        return len(self.states)

    @property
    def copies(self) -> int:
        return self.gram.copies

    def vacuum(self, momentum: Optional[Sequence[int]] = None) -> int:
        m = tuple(momentum) if momentum is not None else (0,) * self.copies
        return self.index[(m, ((),) * self.copies, ())]

    def degrees(self) -> np.ndarray:
        return np.array([state_degree2(s) for s in self.states]) / 2.0

    def guard_mask(self, degree: float, momentum: Optional[int] = None) -> np.ndarray:
        """States of degree <= ``degree`` (and |m_i| <= ``momentum`` if given)."""
        mask = self.degrees() <= degree + 1e-9
        if momentum is not None:
            mask &= np.array([max((abs(x) for x in s[0]), default=0) <= momentum for s in self.states])
        return mask

    def occupations(self) -> np.ndarray:
        """Array occ[state, copy, n] of auxiliary-oscillator occupations (n = 0..D)."""
        occ = np.zeros((self.dimension, self.copies, self.D + 1), dtype=int)
        for s_idx, (_, parts, _) in enumerate(self.states):
            for j, p in enumerate(parts):
                for n in p:
                    occ[s_idx, j, n] += 1
        return occ

    def momenta(self) -> np.ndarray:
        return np.array([s[0] for s in self.states], dtype=int).reshape(self.dimension, self.copies)


def build_basis(gram: GramSpec, D: int, M: int = 0, fermion: bool = False, limit: int = DEFAULT_DIMENSION_LIMIT) -> FockBasis:
    basis = FockBasis(gram, D, M, fermion, limit)
    log.debug("basis %s D=%d M=%d fermion=%s: dimension %d", gram.kind, D, M, fermion, basis.dimension)
    return basis


@dataclass
class OperatorMatrix:
    """Sparse matrix between two bases, with momentum shift and parity tags."""

    entries: sp.csr_matrix
    domain: FockBasis
    codomain: FockBasis
    momentum_shift: Tuple[int, ...] = ()
    parity: int = 0
    truncated: bool = False
    meta: dict = field(default_factory=dict)

    def __matmul__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        if other.codomain is not self.domain and other.codomain != self.domain:
            raise ValueError("basis mismatch in operator product")
        shift = tuple(a + b for a, b in zip(self.momentum_shift or (0,) * self.domain.copies,
                                              other.momentum_shift or (0,) * self.domain.copies))
        return OperatorMatrix(
            (self.entries @ other.entries).tocsr(), other.domain, self.codomain, shift,
            (self.parity + other.parity) % 2, self.truncated or other.truncated,
        )

    def __add__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        return OperatorMatrix((self.entries + other.entries).tocsr(), self.domain, self.codomain,
                              self.momentum_shift, self.parity, self.truncated or other.truncated)

    def __sub__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        return self + other * (-1)

    def __mul__(self, c: complex) -> "OperatorMatrix":
        return OperatorMatrix((self.entries * c).tocsr(), self.domain, self.codomain,
                              self.momentum_shift, self.parity, self.truncated)

    __rmul__ = __mul__

    def toarray(self) -> np.ndarray:
        return self.entries.toarray()

    def element(self, f: int, i: int) -> complex:
        return complex(self.entries[f, i])


def identity(basis: FockBasis) -> OperatorMatrix:
    return OperatorMatrix(sp.identity(basis.dimension, dtype=complex, format="csr"), basis, basis,
                          (0,) * basis.copies, 0)


def _from_triples(basis: FockBasis, rows, cols, vals, shift=None, parity=0, truncated=False) -> OperatorMatrix:
    n = basis.dimension
    mat = sp.csr_matrix((np.asarray(vals, dtype=complex), (rows, cols)), shape=(n, n))
    return OperatorMatrix(mat, basis, basis, tuple(shift or (0,) * basis.copies), parity, truncated)


def _aux_ladder(parts: Tuple[int, ...], n: int, create: bool) -> Optional[Tuple[Tuple[int, ...], float]]:
    """c^dagger_n or c_n on a partition with unit-normalised occupations."""
    k = parts.count(n)
    if create:
        new = tuple(sorted(parts + (n,), reverse=True))
        return new, math.sqrt(k + 1)
    if k == 0:
        return None
    lst = list(parts)
    lst.remove(n)
    return tuple(lst), math.sqrt(k)


def aux_oscillator(basis: FockBasis, copy: int, n: int) -> OperatorMatrix:
    """Unit auxiliary oscillator c_{copy,|n|} (n > 0) or its creation partner (n < 0)."""
    rows, cols, vals = [], [], []
    for idx, (m, parts, ferm) in enumerate(basis.states):
        res = _aux_ladder(parts[copy], abs(n), create=n < 0)
        if res is None:
            continue
        new_p, amp = res
        new_parts = parts[:copy] + (new_p,) + parts[copy + 1:]
        target = basis.index.get((m, new_parts, ferm))
        if target is None:
            continue
        rows.append(target)
        cols.append(idx)
        vals.append(amp)
    return _from_triples(basis, rows, cols, vals, truncated=n < 0)


def oscillator(basis: FockBasis, d: Deformation, copy: int, n: int) -> OperatorMatrix:
    """alpha^copy_n on the truncated space; creation for n < 0."""
    if n == 0:
        raise ValueError("zero mode is carried by the momentum lattice, not an oscillator")
    if abs(n) > basis.D:
        log.warning("mode %d exceeds the degree cutoff %d; returning zero", n, basis.D)
        return _from_triples(basis, [], [], [])
    L = gram_factor(basis.gram, d, abs(n))
    out = None
    for j in range(basis.copies):
        if L[copy, j] == 0:
            continue
        term = aux_oscillator(basis, j, n) * L[copy, j]
        out = term if out is None else out + term
    out.meta["mode"] = n
    return out


def momentum_diag(basis: FockBasis, copy: int, z: complex) -> OperatorMatrix:
    """z^{sqrt2 P^copy}: eigenvalue z^{2 m_copy} on momentum sector m."""
    if z == 0:
        raise ValueError("base must be non-zero")
    vals = [complex(z) ** (2 * s[0][copy]) for s in basis.states]
    idx = np.arange(basis.dimension)
    return _from_triples(basis, idx, idx, vals)


def momentum_shift(basis: FockBasis, copy: int, sign: int) -> OperatorMatrix:
    """exp(+-i sqrt2 Q^copy): m_copy -> m_copy +- 1; states pushed past M are dropped."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    rows, cols, vals = [], [], []
    dropped = False
    for idx, (m, parts, ferm) in enumerate(basis.states):
        new_m = m[:copy] + (m[copy] + sign,) + m[copy + 1:]
        target = basis.index.get((new_m, parts, ferm))
        if target is None:
            dropped = True
            continue
        rows.append(target)
        cols.append(idx)
        vals.append(1.0)
    shift = [0] * basis.copies
    shift[copy] = sign
    return _from_triples(basis, rows, cols, vals, shift, truncated=dropped)


def fermion_sign_and_result(ferm: Tuple[int, ...], r2: int) -> Optional[Tuple[Tuple[int, ...], int]]:
    """psi_r (r = r2/2) on an occupied-mode tuple: (new tuple, sign) or None.

    Modes are kept increasing; the Koszul sign counts occupied modes below.
    """
    mode = abs(r2)
    below = sum(1 for x in ferm if x < mode)
    sign = -1 if below % 2 else 1
    if r2 < 0:
        if mode in ferm:
            return None
        return tuple(sorted(ferm + (mode,))), sign
    if mode not in ferm:
        return None
    return tuple(x for x in ferm if x != mode), sign


def fermion_mode(basis: FockBasis, r: Fraction | float) -> OperatorMatrix:
    """NS mode psi_r, r half-integer; {psi_r, psi_s} = delta_{r+s,0}."""
    r2 = int(round(2 * float(r)))
    if r2 % 2 == 0:
        raise ValueError(f"NS modes are half-integers, got {r}")
    if not basis.fermion:
        raise ValueError("basis has no fermion")
    rows, cols, vals = [], [], []
    for idx, (m, parts, ferm) in enumerate(basis.states):
        res = fermion_sign_and_result(ferm, r2)
        if res is None:
            continue
        new_f, sign = res
        target = basis.index.get((m, parts, new_f))
        if target is None:
            continue
        rows.append(target)
        cols.append(idx)
        vals.append(sign)
    return _from_triples(basis, rows, cols, vals, parity=1, truncated=r2 < 0)


def component_bases(basis: FockBasis) -> Tuple[FockBasis, FockBasis]:
    """The boson-only and fermion-only bases a tensor product draws from."""
    bos = build_basis(basis.gram, basis.D, basis.M, False, basis.limit)
    fer = build_basis(GramSpec("none"), basis.D, 0, True, basis.limit)
    return bos, fer


def tensor(op_boson: OperatorMatrix, op_fermion: OperatorMatrix, target: FockBasis) -> OperatorMatrix:
    """op_boson (x) op_fermion restricted to ``target``; bosons and fermions commute."""
    bb, fb = op_boson.domain, op_fermion.domain
    if not target.fermion or fb.gram.kind != "none" or bb.fermion:
        raise ValueError("tensor needs a boson-only and a fermion-only operator and a mixed target basis")
    if bb.gram != target.gram or bb.D < target.D or fb.D < target.D:
        raise ValueError("component bases do not cover the target basis")
    A = op_boson.entries.tocsc()
    B = op_fermion.entries.tocsc()
    rows, cols, vals = [], [], []
    for idx, (m, parts, ferm) in enumerate(target.states):
        ib = bb.index[(m, parts, ())]
        jf = fb.index[((), (), ferm)]
        colA = A.getcol(ib)
        colB = B.getcol(jf)
        for rb, va in zip(colA.indices, colA.data):
            mb, pb, _ = bb.states[rb]
            for rf, vb in zip(colB.indices, colB.data):
                _, _, ff = fb.states[rf]
                t = target.index.get((mb, pb, ff))
                if t is not None:
                    rows.append(t)
                    cols.append(idx)
                    vals.append(va * vb)
    return _from_triples(target, rows, cols, vals, op_boson.momentum_shift,
                         (op_boson.parity + op_fermion.parity) % 2)


def commutator(a: OperatorMatrix, b: OperatorMatrix, anti: bool = False) -> OperatorMatrix:
    ab = a @ b
    ba = b @ a
    return ab + ba if anti else ab - ba


def guard_band_max(op: OperatorMatrix, target: np.ndarray, degree: float) -> float:
    """max |op - target| over columns (input states) inside the guard band."""
    mask = op.domain.guard_mask(degree)
    diff = op.toarray() - target
    return float(np.max(np.abs(diff[:, mask]), initial=0.0))
