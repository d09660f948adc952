"""Exact rational contraction and exchange factors.

A :class:`ContractionFn` is

    scale * q^qexp * z^zpow * w^wpow * prod_t (z - w q^t)^mult_t

with rational ``t`` and integer multiplicities.  Products, inverses,
argument swaps and q-shifts of the arguments stay in this class, so the
exchange factors can be compared exactly (no sampling).  The series
expansion for ``|z| > |w|`` is what radially ordered products produce.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, Mapping, Tuple

import numpy as np

from ..qcalc import Deformation


def _frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x).limit_denominator(1 << 20)


@dataclass(frozen=True)
class ContractionFn:
    factors: Tuple[Tuple[Fraction, int], ...] = ()
    qexp: Fraction = Fraction(0)
    zpow: int = 0
    wpow: int = 0
    scale: complex = 1.0

    @classmethod
    def build(cls, factors: Mapping = None, qexp=0, zpow=0, wpow=0, scale=1.0) -> "ContractionFn":
        acc: Dict[Fraction, int] = {}
        for t, m in (factors or {}).items():
            t = _frac(t)
            acc[t] = acc.get(t, 0) + int(m)
        canon = tuple(sorted((t, m) for t, m in acc.items() if m != 0))
        return cls(canon, _frac(qexp), int(zpow), int(wpow), complex(scale))

    @classmethod
    def ratio(cls, zeros: Iterable = (), poles: Iterable = (), **kw) -> "ContractionFn":
        """prod (z - w q^zero) / prod (z - w q^pole)."""
        acc: Dict[Fraction, int] = {}
        for t in zeros:
            acc[_frac(t)] = acc.get(_frac(t), 0) + 1
        for t in poles:
            acc[_frac(t)] = acc.get(_frac(t), 0) - 1
        return cls.build(acc, **kw)

    # -- algebra -----------------------------------------------------------

    @property
    def factor_map(self) -> Dict[Fraction, int]:
        return dict(self.factors)

    def __mul__(self, other: "ContractionFn") -> "ContractionFn":
        acc = self.factor_map
        for t, m in other.factors:
            acc[t] = acc.get(t, 0) + m
        return ContractionFn.build(acc, self.qexp + other.qexp, self.zpow + other.zpow,
                                   self.wpow + other.wpow, self.scale * other.scale)

    def inverse(self) -> "ContractionFn":
        return ContractionFn.build({t: -m for t, m in self.factors}, -self.qexp, -self.zpow,
                                   -self.wpow, 1.0 / self.scale)

    def __truediv__(self, other: "ContractionFn") -> "ContractionFn":
        return self * other.inverse()

    def swapped(self) -> "ContractionFn":
        """g(z, w) := f(w, z), rewritten in canonical form."""
        # (w - z q^t) = -q^t (z - w q^-t)
        acc: Dict[Fraction, int] = {}
        qexp = self.qexp
        sign = 1
        for t, m in self.factors:
            acc[-t] = acc.get(-t, 0) + m
            qexp += t * m
            sign *= (-1) ** (m % 2)
        return ContractionFn.build(acc, qexp, self.wpow, self.zpow, self.scale * sign)

    def substituted(self, a, b) -> "ContractionFn":
        """f(z q^a, w q^b)."""
        a, b = _frac(a), _frac(b)
        acc: Dict[Fraction, int] = {}
        qexp = self.qexp + a * self.zpow + b * self.wpow
        for t, m in self.factors:
            # (z q^a - w q^{b+t}) = q^a (z - w q^{b+t-a})
            acc[b + t - a] = acc.get(b + t - a, 0) + m
            qexp += a * m
        return ContractionFn.build(acc, qexp, self.zpow, self.wpow, self.scale)

    def equals(self, other: "ContractionFn", tol: float = 1e-12) -> bool:
        return (self.factors == other.factors and self.qexp == other.qexp and self.zpow == other.zpow
                and self.wpow == other.wpow and abs(self.scale - other.scale) <= tol * max(1.0, abs(other.scale)))

    def is_one(self, tol: float = 1e-12) -> bool:
        return self.equals(ContractionFn(), tol)

    # -- numerics ----------------------------------------------------------

    def __call__(self, d: Deformation, z: complex, w: complex) -> complex:
        val = self.scale * d.qpow(self.qexp) * complex(z) ** self.zpow * complex(w) ** self.wpow
        for t, m in self.factors:
            val *= (z - w * d.qpow(t)) ** m
        return val

    def poles(self) -> Dict[Fraction, int]:
        return {t: -m for t, m in self.factors if m < 0}

    def laurent_at_infinity(self, d: Deformation, w: complex, kmax: int) -> Dict[int, complex]:
        """Coefficients c_p of z^p for the |z| > |w| expansion, down to p >= top - kmax."""
        total = sum(m for _, m in self.factors)
        series = np.zeros(kmax + 1, dtype=complex)
        series[0] = 1.0
        for t, m in self.factors:
            a = w * d.qpow(t)
            # (1 - a x)^m, x = 1/z, binomial series
            coef = np.zeros(kmax + 1, dtype=complex)
            c = 1.0 + 0j
            for k in range(kmax + 1):
                coef[k] = c * (-a) ** k
                c = c * (m - k) / (k + 1)
            series = np.convolve(series, coef)[: kmax + 1]
        pref = self.scale * d.qpow(self.qexp) * complex(w) ** self.wpow
        top = total + self.zpow
        return {top - k: pref * series[k] for k in range(kmax + 1)}

    def describe(self) -> str:
        parts = []
        if self.scale != 1:
            parts.append(f"{self.scale:g}")
        if self.qexp:
            parts.append(f"q^({self.qexp})")
        if self.zpow:
            parts.append(f"z^{self.zpow}")
        if self.wpow:
            parts.append(f"w^{self.wpow}")
        for t, m in self.factors:
            parts.append(f"(z - w q^({t}))^{m}")
        return " * ".join(parts) or "1"


def f_function() -> ContractionFn:
    """(z - wq)(z - wq^-1) / ((z - wq^3)(z - wq^-3))."""
    return ContractionFn.ratio(zeros=(1, -1), poles=(3, -3))


def tail_bound(d: Deformation, ratio: float, K: int) -> float:
    """(1/|sin eps|) r^(K+1) / (1 - r): the neglected-mode estimate."""
    s = abs(math.sin(d.epsilon)) or 1.0
    return ratio ** (K + 1) / (1 - ratio) / s
