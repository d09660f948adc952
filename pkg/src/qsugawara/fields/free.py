"""Sparse engine for the abelian current H and the NS fermion psi.

States are ``(bosons, fermions)`` with ``bosons`` a non-increasing tuple of
auxiliary-oscillator modes and ``fermions`` an increasing tuple of doubled
half-integer modes ``2r``.  Vectors are dicts ``state -> {power: coeff}``:
the power tracks one symbolic spectral parameter ``z`` so that a bra
``<f| X(z)`` carries exact Laurent coefficients in ``z``.  Numeric points
contribute power 0 only.

Fields are sums of normal-ordered products of linear fields.  Mode sums stop
at the mode cutoff ``K``; nothing else is truncated, so for external states
of low degree the Laurent coefficients of a product are exact up to order
``K - degree``.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from itertools import product
from typing import Dict, List, NamedTuple, Sequence, Tuple

import numpy as np

from ..qcalc import Deformation, LaurentPoly, qnum

State = Tuple[Tuple[int, ...], Tuple[int, ...]]
Coeffs = Dict[int, complex]
Vector = Dict[State, Coeffs]

VACUUM: State = ((), ())


class Point(NamedTuple):
    """Spectral argument: ``scale * z`` when symbolic, the number ``scale`` otherwise."""

    scale: complex
    symbolic: bool = False

    def shifted(self, factor: complex) -> "Point":
        return Point(self.scale * factor, self.symbolic)

    def power(self, e: int) -> Tuple[complex, int]:
        """(coefficient, z-power) of argument**e."""
        return complex(self.scale) ** e, (e if self.symbolic else 0)


def sym(scale: complex = 1.0) -> Point:
    return Point(scale, True)


def num(value: complex) -> Point:
    return Point(value, False)


# ---------------------------------------------------------------------------
# elementary operators on basis states


def _boson_create(s: State, n: int) -> Tuple[float, State]:
    bos = s[0]
    k = bos.count(n)
    new = tuple(sorted(bos + (n,), reverse=True))
    return math.sqrt(k + 1), (new, s[1])


def _boson_annihilate(s: State, n: int) -> Tuple[float, State]:
    bos = s[0]
    k = bos.count(n)
    if k == 0:
        return 0.0, s
    lst = list(bos)
    lst.remove(n)
    return math.sqrt(k), (tuple(lst), s[1])


def _fermion_act(s: State, r2: int) -> Tuple[int, State]:
    """psi_{r2/2} on s: sign from occupied modes below |r|."""
    ferm = s[1]
    a = abs(r2)
    sign = -1 if sum(1 for x in ferm if x < a) % 2 else 1
    if r2 < 0:
        if a in ferm:
            return 0, s
        return sign, (s[0], tuple(sorted(ferm + (a,))))
    if a not in ferm:
        return 0, s
    return sign, (s[0], tuple(x for x in ferm if x != a))


def _fermion_act_bra(s: State, r2: int) -> Tuple[int, State]:
    """<s| psi_{r2/2} = sign <s'|; creation removes |r| from the bra."""
    return _fermion_act(s, -r2)


# ---------------------------------------------------------------------------
# linear fields


@dataclass(frozen=True)
class Linear:
    """sum over modes of coeff(mode) * mode operator; species 'b' or 'f'.

    ``terms`` maps a mode (int for bosons, doubled half-integer for fermions)
    to (coefficient, z-power).  Boson coefficients already include the
    auxiliary factor sqrt([n]).
    """

    species: str
    terms: Tuple[Tuple[int, complex, int], ...]

    @property
    def fermionic(self) -> bool:
        return self.species == "f"

    def creation(self):
        return [(m, c, p) for m, c, p in self.terms if m < 0]

    def annihilation(self):
        return [(m, c, p) for m, c, p in self.terms if m > 0]


def current_H(d: Deformation, pt: Point, K: int) -> Linear:
    """H(x) = sum_{0<|n|<=K} a_n x^{-n-1}; a_0 contributes nothing on neutral states."""
    terms = []
    for n in range(1, K + 1):
        root = np.sqrt(complex(qnum(d, n)))
        for m in (n, -n):
            c, p = pt.power(-m - 1)
            terms.append((m, c * root, p))
    return Linear("b", tuple(terms))


def fermion_psi(pt: Point, K: int) -> Linear:
    """psi(x) = sum_r psi_r x^{-r-1/2}, |r| <= K - 1/2."""
    terms = []
    for r2 in range(1, 2 * K, 2):
        for m in (r2, -r2):
            c, p = pt.power(-(m + 1) // 2)
            terms.append((m, c, p))
    return Linear("f", tuple(terms))


# ---------------------------------------------------------------------------
# composite fields


@dataclass(frozen=True)
class NOTerm:
    """coeff * z^power * :factor_1 ... factor_k:"""

    coeff: complex
    power: int
    factors: Tuple[Linear, ...]


@dataclass(frozen=True)
class FreeField:
    terms: Tuple[NOTerm, ...]
    label: str = ""

    @classmethod
    def linear(cls, lin: Linear, label: str = "") -> "FreeField":
        return cls((NOTerm(1.0, 0, (lin,)),), label)

    @classmethod
    def normal_ordered(cls, *factors: Linear, coeff: complex = 1.0, power: int = 0, label: str = "") -> "FreeField":
        return cls((NOTerm(coeff, power, tuple(factors)),), label)

    def __add__(self, other: "FreeField") -> "FreeField":
        return FreeField(self.terms + other.terms, f"{self.label}+{other.label}")

    def scaled(self, c: complex, power: int = 0) -> "FreeField":
        return FreeField(tuple(NOTerm(t.coeff * c, t.power + power, t.factors) for t in self.terms), self.label)

    @property
    def parity(self) -> int:
        pars = {sum(f.fermionic for f in t.factors) % 2 for t in self.terms}
        if len(pars) != 1:
            raise ValueError("mixed-parity field")
        return pars.pop()


def _words(factors: Sequence[Linear]):
    """Normal-ordered expansions: yields (sign, ordered list of (factor, part))."""
    k = len(factors)
    for choice in product((0, 1), repeat=k):  # 0 creation, 1 annihilation
        cre = [i for i in range(k) if choice[i] == 0]
        ann = [i for i in range(k) if choice[i] == 1]
        swaps = sum(1 for i in ann for j in cre if j > i and factors[i].fermionic and factors[j].fermionic)
        sign = -1 if swaps % 2 else 1
        yield sign, [(factors[i], 0) for i in cre] + [(factors[i], 1) for i in ann]


def _add(vec: Vector, s: State, coeffs: Coeffs, scale: complex, shift: int):
    tgt = vec.setdefault(s, {})
    for p, c in coeffs.items():
        tgt[p + shift] = tgt.get(p + shift, 0) + scale * c


def _apply_part_ket(lin: Linear, part: int, vec: Vector) -> Vector:
    out: Vector = {}
    modes = lin.annihilation() if part else lin.creation()
    for s, coeffs in vec.items():
        for m, c, p in modes:
            if lin.fermionic:
                amp, t = _fermion_act(s, m)
            elif m < 0:
                amp, t = _boson_create(s, -m)
            else:
                amp, t = _boson_annihilate(s, m)
            if amp:
                _add(out, t, coeffs, amp * c, p)
    return out


def _apply_part_bra(lin: Linear, part: int, vec: Vector) -> Vector:
    out: Vector = {}
    modes = lin.annihilation() if part else lin.creation()
    for s, coeffs in vec.items():
        for m, c, p in modes:
            if lin.fermionic:
                amp, t = _fermion_act_bra(s, m)
            elif m < 0:  # <s| c^dagger = sqrt(k_s) <s - e|
                amp, t = _boson_annihilate(s, -m)
            else:
                amp, t = _boson_create(s, m)
            if amp:
                _add(out, t, coeffs, amp * c, p)
    return out


def apply_ket(field: FreeField, vec: Vector) -> Vector:
    out: Vector = {}
    for term in field.terms:
        for sign, word in _words(term.factors):
            cur = vec
            for lin, part in reversed(word):
                cur = _apply_part_ket(lin, part, cur)
            for s, coeffs in cur.items():
                _add(out, s, coeffs, sign * term.coeff, term.power)
    return _clean(out)


def apply_bra(field: FreeField, vec: Vector) -> Vector:
    out: Vector = {}
    for term in field.terms:
        for sign, word in _words(term.factors):
            cur = vec
            for lin, part in word:
                cur = _apply_part_bra(lin, part, cur)
            for s, coeffs in cur.items():
                _add(out, s, coeffs, sign * term.coeff, term.power)
    return _clean(out)


def _clean(vec: Vector) -> Vector:
    out = {}
    for s, coeffs in vec.items():
        kept = {p: c for p, c in coeffs.items() if c != 0}
        if kept:
            out[s] = kept
    return out


def basis_vector(s: State) -> Vector:
    return {s: {0: 1.0 + 0j}}


def pairing(bra: Vector, ket: Vector) -> LaurentPoly:
    """sum_s bra[s] ket[s] as a Laurent polynomial in the symbolic parameter."""
    acc: Dict[int, complex] = defaultdict(complex)
    for s, bc in bra.items():
        kc = ket.get(s)
        if kc is None:
            continue
        for p1, c1 in bc.items():
            for p2, c2 in kc.items():
                acc[p1 + p2] += c1 * c2
    return LaurentPoly(dict(acc))


def element(bra_state: State, fields: Sequence[FreeField], ket_state: State) -> LaurentPoly:
    """<bra| fields[0] fields[1] ... |ket>; at most one field may be symbolic."""
    vec = basis_vector(ket_state)
    for f in reversed(fields):
        vec = apply_ket(f, vec)
    return pairing(basis_vector(bra_state), vec)


def split_element(bra_state: State, left: Sequence[FreeField], right: Sequence[FreeField],
                  ket_state: State) -> LaurentPoly:
    """Same as :func:`element` but applies ``left`` to the bra (cheaper for symbolic left fields)."""
    bra = basis_vector(bra_state)
    for f in left:
        bra = apply_bra(f, bra)
    ket = basis_vector(ket_state)
    for f in reversed(right):
        ket = apply_ket(f, ket)
    return pairing(bra, ket)


def states_upto(D: int, fermion: bool = True, bosons: bool = True) -> List[State]:
    """All free states of total degree <= D (fermion modes counted as r)."""
    from ..fock import fermion_subsets_upto, partitions_upto

    bos = partitions_upto(D) if bosons else [()]
    ferm = fermion_subsets_upto(2 * D) if fermion else [()]
    out = []
    for b in bos:
        for f in ferm:
            if 2 * sum(b) + sum(f) <= 2 * D:
                out.append((tuple(b), tuple(f)))
    return out


def state_degree(s: State) -> float:
    return sum(s[0]) + sum(s[1]) / 2


def fermion_dpsi(pt: Point, K: int) -> Linear:
    """d/dx psi(x) = sum_r (-r-1/2) psi_r x^{-r-3/2}."""
    terms = []
    for r2 in range(1, 2 * K, 2):
        for m in (r2, -r2):
            e = -(m + 1) // 2
            c, p = pt.power(e - 1)
            terms.append((m, c * e, p))
    return Linear("f", tuple(terms))


def current_dH(d: Deformation, pt: Point, K: int) -> Linear:
    """d/dx H(x)."""
    terms = []
    for n in range(1, K + 1):
        root = np.sqrt(complex(qnum(d, n)))
        for m in (n, -n):
            c, p = pt.power(-m - 2)
            terms.append((m, c * root * (-m - 1), p))
    return Linear("b", tuple(terms))


# ---------------------------------------------------------------------------
# the abelian / N=1 fields


class FreeFields:
    """Builders for H, psi, T^alpha, L^alpha, G^alpha and their undeformed counterparts."""

    def __init__(self, d: Deformation, K: int):
        self.d = d
        self.K = K

    def _at(self, pt: Point, a) -> Point:
        return pt.shifted(self.d.qpow(a))

    def H(self, pt: Point) -> FreeField:
        return FreeField.linear(current_H(self.d, pt, self.K), "H")

    def psi(self, pt: Point) -> FreeField:
        return FreeField.linear(fermion_psi(pt, self.K), "psi")

    def T(self, alpha: int, pt: Point) -> FreeField:
        """T^alpha(x) = 1/2 :H(x q^{alpha/2}) H(x q^{-alpha/2}):."""
        a = alpha / 2
        return FreeField.normal_ordered(current_H(self.d, self._at(pt, a), self.K),
                                        current_H(self.d, self._at(pt, -a), self.K), coeff=0.5, label=f"T{alpha}")

    def L(self, alpha: int, pt: Point) -> FreeField:
        """L^alpha(x) = :psi(x q^{alpha/2}) psi(x q^{-alpha/2}): / ([alpha] (q - q^-1) x)."""
        qa = qnum(self.d, alpha)
        if alpha == 0 or abs(qa * self.d.kappa) < 1e-300:
            raise ValueError("L^alpha needs [alpha](q - q^-1) != 0")
        c, p = pt.power(-1)
        a = alpha / 2
        return FreeField.normal_ordered(fermion_psi(self._at(pt, a), self.K), fermion_psi(self._at(pt, -a), self.K),
                                        coeff=c / (qa * self.d.kappa), power=p, label=f"L{alpha}")

    def L_unscaled(self, alpha: int, pt: Point) -> FreeField:
        """:psi psi: / ([alpha](q - q^-1)) without the 1/x factor."""
        return self.L(alpha, pt).scaled(pt.scale, 1 if pt.symbolic else 0)

    def G(self, alpha: int, pt: Point) -> FreeField:
        """G^alpha(x) = H(x q^{alpha/2}) psi(x q^{-alpha/2})."""
        a = alpha / 2
        return FreeField.normal_ordered(current_H(self.d, self._at(pt, a), self.K),
                                        fermion_psi(self._at(pt, -a), self.K), label=f"G{alpha}")

    # undeformed counterparts (use with an epsilon = 0 deformation)

    def T_classical(self, pt: Point) -> FreeField:
        h = current_H(self.d, pt, self.K)
        return FreeField.normal_ordered(h, h, coeff=0.5, label="T")

    def L_classical(self, pt: Point) -> FreeField:
        return FreeField.normal_ordered(fermion_dpsi(pt, self.K), fermion_psi(pt, self.K), coeff=0.5, label="L")

    def G_classical(self, pt: Point) -> FreeField:
        return FreeField.normal_ordered(current_H(self.d, pt, self.K), fermion_psi(pt, self.K), label="G")

    def dG_classical(self, pt: Point) -> FreeField:
        return (FreeField.normal_ordered(current_dH(self.d, pt, self.K), fermion_psi(pt, self.K))
                + FreeField.normal_ordered(current_H(self.d, pt, self.K), fermion_dpsi(pt, self.K)))

    def dT_classical(self, pt: Point) -> FreeField:
        h, dh = current_H(self.d, pt, self.K), current_dH(self.d, pt, self.K)
        dp, p = fermion_dpsi(pt, self.K), fermion_psi(pt, self.K)
        ddp = _fermion_d2psi(pt, self.K)
        return (FreeField.normal_ordered(dh, h)
                + FreeField.normal_ordered(ddp, p, coeff=0.5)
                + FreeField.normal_ordered(dp, dp, coeff=0.5))


def _fermion_d2psi(pt: Point, K: int) -> Linear:
    terms = []
    for r2 in range(1, 2 * K, 2):
        for m in (r2, -r2):
            e = -(m + 1) // 2
            c, p = pt.power(e - 2)
            terms.append((m, c * e * (e - 1), p))
    return Linear("f", tuple(terms))
