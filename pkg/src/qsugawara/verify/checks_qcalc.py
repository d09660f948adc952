"""q-number and q-calculus identities (exact on Laurent polynomials)."""

from __future__ import annotations

from ..qcalc import (Deformation, LaurentPoly, qbinomial_product, qbinomial_sum, qderiv, qderiv_iterated,
                     qderiv_nth_closed, qnum, qtaylor, qtaylor_sum)
from .core import Outcome, Settings, register
from .numerics import scaling, scaling_deviation


def _random_laurent(rng, lo: int, hi: int) -> LaurentPoly:
    return LaurentPoly({k: complex(*rng.normal(size=2)) for k in range(lo, hi + 1)})


def _poly_rel(a: LaurentPoly, b: LaurentPoly) -> float:
    size = max([abs(v) for v in b.coeffs.values()] + [1.0])
    return a.max_abs_diff(b) / size


@register("qnum", "[n] = (q^n - q^-n)/(q - q^-1)", "q-numbers are real, odd in n, equal sin(n eps)/sin eps",
          "exact", 1e-12, deformed=False, n_max=50)
def _qnum(s: Settings, variant: str) -> Outcome:
    d = s.deformation()
    err = 0.0
    for n in range(-50, 51):
        closed = (d.q ** n - d.q ** -n) / d.kappa if d.epsilon else n
        err = max(err, abs(closed - qnum(d, n)), abs(qnum(d, -n) + qnum(d, n)))
    return Outcome(err, notes="complex (q^n - q^-n)/(q - q^-1) against the real closed form, |n| <= 50")


@register("qnum_limit", "[n] -> n as q -> 1", "q-numbers converge to n, second order in epsilon",
          "limit", 0.0, n_max=10, eps0=1e-3)
def _qnum_limit(s: Settings, variant: str) -> Outcome:
    errs = []
    for eps in (1e-3, 5e-4):
        d = Deformation(eps, 16)
        errs.append(max(abs(qnum(d, n) - n) for n in range(1, 11)))
    sc = scaling(*errs, orders=(2,))
    return Outcome(scaling_deviation(sc, (2,)), [{"errors": errs, "ratio": sc.ratio, "order": sc.order}],
                   notes=f"error ratio {sc.ratio:.3f} between eps and eps/2 (second order expected)",
                   params={"observed_order": sc.order})


@register("apqderivada", "q-derivative (f(zq) - f(z/q))/(z(q - q^-1))",
          "coefficient rule z^n -> [n] z^(n-1) equals the difference quotient", "exact", 1e-12)
def _qderiv(s: Settings, variant: str) -> Outcome:
    d = s.deformation()
    rng = s.rng("apqderivada")
    err = 0.0
    for _ in range(10):
        f = _random_laurent(rng, -5, 5)
        g = qderiv(d, f)
        for z in s.spectral_points("apqderivada"):
            quotient = (f(z * d.q) - f(z / d.q)) / (z * d.kappa)
            err = max(err, abs(quotient - g(z)) / max(1.0, abs(quotient)))
    return Outcome(err, notes="10 random Laurent polynomials, exponents in [-5, 5]")


@register("apnqderivada", "closed n-th q-derivative (sum over sigma_i = +-1)",
          "closed form equals n-fold q-derivative for n <= 6", "exact", 1e-12, n_max=6)
def _qderiv_closed(s: Settings, variant: str) -> Outcome:
    d = s.deformation()
    rng = s.rng("apnqderivada")
    err = 0.0
    for n in range(7):
        for _ in range(5):
            f = _random_laurent(rng, -5, 5)
            err = max(err, _poly_rel(qderiv_nth_closed(d, f, n), qderiv_iterated(d, f, n)))
    return Outcome(err, notes="5 random Laurent polynomials per n, exponents in [-5, 5]")


@register("apqbinomio", "q-binomial product = sum form", "prod (z - w q^{n-2k+1}) equals the [n]! sum",
          "exact", 1e-12, n_max=8)
def _qbinomial(s: Settings, variant: str) -> Outcome:
    d = s.deformation()
    err = 0.0
    for w in s.spectral_points("apqbinomio"):
        for n in range(9):
            err = max(err, _poly_rel(qbinomial_product(d, n, w), qbinomial_sum(d, n, w)))
    return Outcome(err)


def _taylor(s: Settings, variant: str, check_id: str) -> Outcome:
    d = s.deformation()
    rng = s.rng(check_id)
    err = 0.0
    for degree in range(11):
        f = _random_laurent(rng, 0, degree)
        for w in s.spectral_points(check_id):
            g = qtaylor_sum(d, qtaylor(d, f, w, variant))
            err = max(err, _poly_rel(g, f))
    return Outcome(err, notes="random polynomials of degree <= 10; the series terminates at the degree")


@register("apqtaylor1", "q-Taylor expansion, even orders at w q", "reconstructs polynomials exactly",
          "exact", 1e-10)
def _taylor_plus(s: Settings, variant: str) -> Outcome:
    return _taylor(s, "plus", "apqtaylor1")


@register("apqtaylor2", "q-Taylor expansion, even orders at w/q", "reconstructs polynomials exactly",
          "exact", 1e-10)
def _taylor_minus(s: Settings, variant: str) -> Outcome:
    return _taylor(s, "minus", "apqtaylor2")


@register("apqtaylor_parity", "q-Taylor parity of sample points", "every term samples f at w q^(odd power)",
          "exact", 0.0)
def _taylor_parity(s: Settings, variant: str) -> Outcome:
    d = s.deformation()
    f = LaurentPoly({k: 1.0 for k in range(9)})
    bad = 0
    for v in ("plus", "minus"):
        for t in qtaylor(d, f, 0.7, v):
            # even orders: derivative shifts are even, centre adds +-1; odd orders: odd shifts at w
            bad += sum(1 for e in t.sample_exponents if e % 2 == 0)
    return Outcome(float(bad), notes="every q-Taylor term samples f at w q^(odd power)")
