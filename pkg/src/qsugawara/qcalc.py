"""q-numbers, exact Laurent polynomials and the symmetric q-calculus.

Everything here is parameterised by a :class:`Deformation`, i.e. the phase
``epsilon`` with ``q = exp(i*epsilon)``.  At ``epsilon == 0`` the q-numbers
take their classical limit ``[n] -> n`` so the same code path serves the
undeformed checks.
"""

from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, NamedTuple, Tuple, Union

DEGENERACY_FLOOR = 1e-9

Exponent = Union[int, Tuple[int, ...]]


class DeformationError(ValueError):
    pass


@dataclass(frozen=True)
class Deformation:
    """The deformation parameter q = exp(i*epsilon), a pure phase.

    ``n_max`` is the largest mode index that will ever be divided by; the
    constructor refuses phases for which some ``[n]``, ``1 <= n <= n_max``,
    is within ``DEGENERACY_FLOOR`` of zero.
    """

    epsilon: float
    n_max: int = 64

    def __post_init__(self):
        if isinstance(self.epsilon, complex) or not math.isfinite(self.epsilon):
            raise DeformationError("epsilon must be a finite real phase; q is restricted to |q| = 1")
        if self.n_max < 1:
            raise DeformationError("n_max must be positive")
        for n in range(1, self.n_max + 1):
            if abs(qnum(self, n)) <= DEGENERACY_FLOOR:
                raise DeformationError(
                    f"[{n}] = {qnum(self, n):.3e} is degenerate at epsilon={self.epsilon} "
                    f"(root of unity within n_max={self.n_max})"
                )

    @property
    def q(self) -> complex:
        return cmath.exp(1j * self.epsilon)

    @property
    def kappa(self) -> complex:
        """q - q^{-1} = 2i sin(epsilon)."""
        return 2j * math.sin(self.epsilon)

    def qpow(self, a) -> complex:
        """q**a for real (possibly fractional) a, principal branch."""
        return cmath.exp(1j * self.epsilon * float(a))

    @classmethod
    def from_q(cls, q: complex, n_max: int = 64) -> "Deformation":
        if abs(abs(q) - 1.0) > 1e-12:
            raise DeformationError(f"q = {q} is not a pure phase")
        return cls(cmath.phase(q), n_max)


def qnum(d: Deformation, n: int) -> float:
    """[n] = (q^n - q^-n)/(q - q^-1) = sin(n eps)/sin(eps); n at eps = 0."""
    if d.epsilon == 0.0:
        return float(n)
    return math.sin(n * d.epsilon) / math.sin(d.epsilon)


def qfactorial(d: Deformation, n: int) -> float:
    if n < 0:
        raise ValueError("qfactorial needs n >= 0")
    out = 1.0
    for k in range(2, n + 1):
        out *= qnum(d, k)
    return out


def qbinomial_coefficient(d: Deformation, n: int, k: int) -> float:
    return qfactorial(d, n) / (qfactorial(d, k) * qfactorial(d, n - k))


# ---------------------------------------------------------------------------
# Laurent polynomials


def _key_add(a: Exponent, b: Exponent) -> Exponent:
    if isinstance(a, tuple):
        return tuple(x + y for x, y in zip(a, b))
    return a + b


class LaurentPoly:
    """Finite sum of monomials with complex coefficients.

    Exponents are ints (one variable) or tuples of ints (several variables).
    Zero coefficients are never stored, so equality of dicts is equality of
    polynomials up to floating error; use :meth:`close_to` for tolerances.
    """

    __slots__ = ("coeffs", "nvars")

    def __init__(self, coeffs: Dict[Exponent, complex] | None = None, nvars: int = 1):
        self.nvars = nvars
        self.coeffs: Dict[Exponent, complex] = {}
        for k, v in (coeffs or {}).items():
            if v != 0:
                self.coeffs[k] = complex(v)

    @classmethod
    def constant(cls, c: complex, nvars: int = 1) -> "LaurentPoly":
        key = 0 if nvars == 1 else (0,) * nvars
        return cls({key: c}, nvars)

    @classmethod
    def monomial(cls, exponent: Exponent, c: complex = 1.0) -> "LaurentPoly":
        nvars = len(exponent) if isinstance(exponent, tuple) else 1
        return cls({exponent: c}, nvars)

    def _coerce(self, other) -> "LaurentPoly":
        if isinstance(other, LaurentPoly):
            if other.nvars != self.nvars:
                raise ValueError("variable count mismatch")
            return other
        return LaurentPoly.constant(other, self.nvars)

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self.coeffs)
        for k, v in other.coeffs.items():
            out[k] = out.get(k, 0) + v
        return LaurentPoly(out, self.nvars)

    __radd__ = __add__

    def __neg__(self):
        return LaurentPoly({k: -v for k, v in self.coeffs.items()}, self.nvars)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, LaurentPoly):
            return LaurentPoly({k: v * other for k, v in self.coeffs.items()}, self.nvars)
        other = self._coerce(other)
        out: Dict[Exponent, complex] = {}
        for (ka, va), (kb, vb) in itertools.product(self.coeffs.items(), other.coeffs.items()):
            k = _key_add(ka, kb)
            out[k] = out.get(k, 0) + va * vb
        return LaurentPoly(out, self.nvars)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative powers only for monomials; use RationalFn")
        out = LaurentPoly.constant(1.0, self.nvars)
        for _ in range(n):
            out = out * self
        return out

    def __call__(self, *x) -> complex:
        total = 0j
        if self.nvars == 1:
            (z,) = x
            for k, v in self.coeffs.items():
                total += v * z**k
        else:
            for k, v in self.coeffs.items():
                term = v
                for xi, ki in zip(x, k):
                    term *= xi**ki
                total += term
        return total

    def __repr__(self):
        terms = sorted(self.coeffs.items())
        return f"LaurentPoly({dict(terms)!r})"

    def __eq__(self, other):
        return isinstance(other, LaurentPoly) and self.coeffs == other.coeffs

    def is_zero(self) -> bool:
        return not self.coeffs

    def exponents(self) -> List[Exponent]:
        return sorted(self.coeffs)

    def degree_range(self) -> Tuple[int, int]:
        if self.nvars != 1:
            raise ValueError("degree_range is for one variable")
        if not self.coeffs:
            return (0, 0)
        return min(self.coeffs), max(self.coeffs)

    def coefficient(self, exponent: Exponent) -> complex:
        return self.coeffs.get(exponent, 0j)

    def scale_argument(self, c: complex) -> "LaurentPoly":
        """p(c z), one variable."""
        return LaurentPoly({k: v * c**k for k, v in self.coeffs.items()}, 1)

    def max_abs_diff(self, other: "LaurentPoly") -> float:
        keys = set(self.coeffs) | set(other.coeffs)
        return max((abs(self.coefficient(k) - other.coefficient(k)) for k in keys), default=0.0)

    def close_to(self, other: "LaurentPoly", tol: float) -> bool:
        return self.max_abs_diff(other) <= tol

    def chop(self, tol: float = 0.0) -> "LaurentPoly":
        return LaurentPoly({k: v for k, v in self.coeffs.items() if abs(v) > tol}, self.nvars)

    def divide_linear(self, root: complex) -> Tuple["LaurentPoly", complex]:
        """Divide by (z - root): returns (quotient, remainder), remainder = p(root)."""
        if self.nvars != 1:
            raise ValueError("divide_linear is for one variable")
        if not self.coeffs:
            return LaurentPoly(), 0j
        lo, hi = self.degree_range()
        # p = z^lo P with P an ordinary polynomial; Horner on P.
        quot: Dict[int, complex] = {}
        acc = 0j
        for k in range(hi, lo - 1, -1):
            acc = acc * root + self.coefficient(k)
            if k > lo:
                quot[k - 1] = acc
        p_at_root = acc
        # z^lo (Q (z - root) + P(root)) and z^lo - root^lo = (z - root) S(z)
        out = LaurentPoly(quot, 1) + _monomial_difference_quotient(lo, root) * p_at_root
        return out, p_at_root * root**lo


def _monomial_difference_quotient(lo: int, root: complex) -> LaurentPoly:
    """(z^lo - root^lo)/(z - root) as an exact Laurent polynomial."""
    if lo == 0:
        return LaurentPoly()
    if lo > 0:
        return LaurentPoly({k: root ** (lo - 1 - k) for k in range(lo)}, 1)
    m = -lo
    return LaurentPoly({k - m: -(root ** (-1 - k)) for k in range(m)}, 1)


def exact_divide(p: LaurentPoly, roots: Iterable[complex], tol: float) -> LaurentPoly:
    """Divide by prod (z - r); every remainder must vanish to ``tol``."""
    out = p
    for r in roots:
        out, rem = out.divide_linear(r)
        if abs(rem) > tol:
            raise ArithmeticError(f"non-zero remainder {abs(rem):.3e} dividing by (z - {r})")
    return out


# ---------------------------------------------------------------------------
# q-binomial, q-derivatives, q-Taylor


def qbinomial_product(d: Deformation, n: int, w: complex) -> LaurentPoly:
    """(z - w)^n_q = prod_{k=1..n} (z - w q^{n-2k+1})."""
    if n < 0:
        raise ValueError("n must be >= 0")
    out = LaurentPoly.constant(1.0)
    for k in range(1, n + 1):
        out = out * LaurentPoly({1: 1.0, 0: -w * d.qpow(n - 2 * k + 1)})
    return out


def qbinomial_sum(d: Deformation, n: int, w: complex) -> LaurentPoly:
    """Sum form: sum_k [n]!/([k]![n-k]!) z^k (-w)^(n-k)."""
    return LaurentPoly({k: qbinomial_coefficient(d, n, k) * (-w) ** (n - k) for k in range(n + 1)})


def qderiv(d: Deformation, f: LaurentPoly) -> LaurentPoly:
    """Symmetric q-derivative, z^n -> [n] z^(n-1)."""
    return LaurentPoly({k - 1: qnum(d, k) * v for k, v in f.coeffs.items()})


def qderiv_iterated(d: Deformation, f: LaurentPoly, n: int) -> LaurentPoly:
    for _ in range(n):
        f = qderiv(d, f)
    return f


def _sigma_terms(n: int):
    """(weight exponent, shift) pairs of the closed n-th derivative formula.

    Each sign pattern sigma contributes prod(sigma_i) q^{-sum i sigma_i}
    times f(z q^{sum sigma_i}).
    """
    for sigmas in itertools.product((1, -1), repeat=n):
        sign = 1
        for s in sigmas:
            sign *= s
        yield sign, -sum(i * s for i, s in enumerate(sigmas)), sum(sigmas)


def qderiv_nth_closed(d: Deformation, f: LaurentPoly, n: int) -> LaurentPoly:
    """n-th q-derivative from the 2^n-term shifted-argument sum."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if n == 0:
        return LaurentPoly(dict(f.coeffs))
    if d.epsilon == 0.0:
        return qderiv_iterated(d, f, n)
    acc = LaurentPoly()
    for sign, wexp, shift in _sigma_terms(n):
        acc = acc + f.scale_argument(d.qpow(shift)) * (sign * d.qpow(wexp))
    # divide by z^n (q - q^-1)^n
    scale = 1.0 / d.kappa**n
    return LaurentPoly({k - n: v * scale for k, v in acc.coeffs.items()})


def qderiv_nth_points(n: int) -> List[int]:
    """q-exponents at which the closed formula samples f (argument z q^s)."""
    return sorted({shift for _, _, shift in _sigma_terms(n)})


def qderiv_at(d: Deformation, f: LaurentPoly, n: int, z: complex) -> complex:
    """n-th q-derivative evaluated at a point."""
    return qderiv_iterated(d, f, n)(z)


class TaylorTerm(NamedTuple):
    order: int
    center: complex  # where the derivative is evaluated
    coefficient: complex  # derivative value / [order]!
    binomial_base: complex  # b in (z - b)^order_q
    sample_exponents: Tuple[int, ...]  # f is sampled at w q^s for these s

    def poly(self, d: Deformation) -> LaurentPoly:
        return qbinomial_product(d, self.order, self.binomial_base) * self.coefficient


def qtaylor(d: Deformation, f: LaurentPoly, w: complex, variant: str = "plus", K: int | None = None) -> List[TaylorTerm]:
    """Split-parity q-Taylor expansion of a polynomial around w.

    Even orders are evaluated at w q^{+-1} against (z - w)^{2k}_q and odd
    orders at w against (z - w q^{+-1})^{2k+1}_q.  For a polynomial the
    series stops at its degree; negative powers never terminate and are
    rejected.
    """
    if w == 0:
        raise ValueError("q-Taylor expansion point must be non-zero")
    if variant not in ("plus", "minus"):
        raise ValueError("variant must be 'plus' or 'minus'")
    if f.coeffs and min(f.coeffs) < 0:
        raise ValueError("q-Taylor series terminates only for polynomials (no negative powers)")
    s = 1 if variant == "plus" else -1
    degree = max(f.coeffs) if f.coeffs else 0
    K = degree if K is None else K
    if K < degree:
        raise ValueError(f"K={K} below the polynomial degree {degree}")
    terms = []
    for order in range(K + 1):
        deriv = qderiv_iterated(d, f, order)
        if order % 2 == 0:
            center, base, offset = w * d.qpow(s), w, s
        else:
            center, base, offset = w, w * d.qpow(s), 0
        coeff = deriv(center) / qfactorial(d, order)
        samples = tuple(sorted({offset + p for p in qderiv_nth_points(order)}))
        terms.append(TaylorTerm(order, center, coeff, base, samples))
    return terms


def qtaylor_sum(d: Deformation, terms: Iterable[TaylorTerm]) -> LaurentPoly:
    out = LaurentPoly()
    for t in terms:
        out = out + t.poly(d)
    return out
