"""Abelian current, NS fermion and the q-deformed N=1 family (free engine).

Pole identities compare exact Laurent-tail coefficients of the left-hand
side (symbolic in z) with the tails of the claimed pole terms.  States have
degree <= 2, so the window k >= 10 lies beyond every regular contribution.
"""

from __future__ import annotations

from typing import Callable, List, Optional, Sequence

import numpy as np

from ..fock import GramSpec, build_basis, fermion_mode, guard_band_max, identity, oscillator
from ..fields.contractions import ContractionFn, tail_bound
from ..fields.free import (FreeField, FreeFields, apply_bra, apply_ket, basis_vector, element, num, pairing,
                           state_degree, states_upto, sym)
from ..qcalc import Deformation, qnum
from .core import EXPECTED_CONSTANTS, Outcome, Settings, register
from .numerics import FreeTerm, free_rhs, poly_coeffs, relative_error, scaling, scaling_deviation

GRID = (-2, -1, 0, 1, 2)
WINDOW = 8


def _window(s: Settings, degree: float):
    """Tail window k0..k0+W-1 and the mode cutoff that keeps it exact."""
    k0 = int(2 * degree) + 6
    ks = list(range(k0, k0 + WINDOW))
    need = ks[-1] + int(degree) + 4
    if s.K < need:
        raise ValueError(f"mode cutoff {s.K} too small for the tail window (needs >= {need})")
    return ks, need


def _pole(*poles, qexp=0, wpow=0, zpow=0, scale=1.0) -> ContractionFn:
    return ContractionFn.ratio(poles=poles, qexp=qexp, wpow=wpow, zpow=zpow, scale=scale)


class PoleRunner:
    """LHS tails of left(z) right(w) between fixed states, reused across sample points."""

    def __init__(self, d: Deformation, left: FreeField, bras, kets, ks):
        self.d, self.bras_states, self.kets_states, self.ks = d, bras, kets, ks
        self.bras = [apply_bra(left, basis_vector(b)) for b in bras]
        self.norm = None

    def lhs(self, right: Sequence[FreeField], w: complex) -> np.ndarray:
        out = np.zeros((len(self.ks), len(self.bras), len(self.kets_states)), dtype=complex)
        for j, k in enumerate(self.kets_states):
            vec = basis_vector(k)
            for f in reversed(right):
                vec = apply_ket(f, vec)
            for i, bv in enumerate(self.bras):
                out[:, i, j] = poly_coeffs(pairing(bv, vec), self.ks)
        return out

    def compare(self, right, terms: Sequence[FreeTerm], w: complex) -> float:
        lhs = self.lhs(right, w)
        rhs = free_rhs(self.d, self.bras_states, self.kets_states, terms, w, self.ks)
        scale = np.array([abs(w) ** -k for k in self.ks])[:, None, None]
        return relative_error(lhs * scale, rhs * scale)[0]


def _pole_family(s: Settings, check_id: str, fermion: bool, pairs, build) -> Outcome:
    """Run ``build(FF, a, b, w) -> (left, right, terms)`` over the (a, b) grid."""
    d = s.deformation()
    states = [st for st in states_upto(2, fermion=fermion) if state_degree(st) <= 2]
    ks, K = _window(s, 2)
    FF = FreeFields(d, K)
    worst, diags = 0.0, []
    for a, b in pairs:
        runner = None
        pair_err = 0.0
        for w in s.spectral_points(check_id):
            left, right, terms = build(FF, a, b, w)
            if runner is None:
                runner = PoleRunner(d, left, states, states, ks)
            pair_err = max(pair_err, runner.compare(right, terms, w))
        worst = max(worst, pair_err)
        diags.append({"alpha": a, "beta": b, "error": pair_err})
    return Outcome(worst, diags, guard_band=f"states of degree <= 2, tail window k = {ks[0]}..{ks[-1]}",
                   params={"tail_window": [ks[0], ks[-1]], "mode_cutoff_used": K})


def _at(d: Deformation, w: complex, a) -> object:
    return num(w * d.qpow(a))


# ---------------------------------------------------------------------------
# oscillators and two-point functions


def _osc_suite(s: Settings, gram: GramSpec, copies: int) -> Outcome:
    d = s.deformation()
    D = 10
    basis = build_basis(gram, D=D, M=0)
    degrees = basis.degrees()
    modes = [n for n in range(-4, 5) if n]
    osc = {(i, n): oscillator(basis, d, i, n).entries for i in range(copies) for n in modes}
    I = identity(basis).entries
    worst = 0.0
    for i in range(copies):
        for j in range(copies):
            for n in modes:
                for m in modes:
                    A, B = osc[(i, n)], osc[(j, m)]
                    C = A @ B - B @ A
                    if n + m == 0:
                        C = C - I * (gram.matrix(d, abs(n))[i, j] * np.sign(n))
                    # guard band: kets of degree <= D - |n| - |m|
                    cols = np.where(degrees <= D - abs(n) - abs(m) + 1e-9)[0]
                    block = C.tocsc()[:, cols]
                    worst = max(worst, float(np.max(np.abs(block.data), initial=0.0)))
    diags = [{"D": D, "modes": "0 < |n|, |m| <= 4", "copies": copies}]
    return Outcome(worst, diags, guard_band="kets of degree <= D - |n| - |m|")


@register("umosc", "[a_n, a_m] = [n] delta_{n+m}", "abelian oscillator algebra on the truncated Fock space",
          "matrix", 1e-12, D=10)
def _umosc(s: Settings, variant: str) -> Outcome:
    return _osc_suite(s, GramSpec("abelian"), 1)


def _radial_twopoint(s: Settings, check_id: str, left, right, contraction: ContractionFn, states) -> Outcome:
    d = s.deformation()
    FF = FreeFields(d, s.K)
    worst, diags = 0.0, []
    tail = 0.0
    for idx, w in enumerate(s.spectral_points(check_id)):
        z = s.outer_point(w, check_id, idx)
        exact = contraction(d, z, w)
        for st in states:
            full = element(st, [left(FF, num(z)), right(FF, num(w))], st).coefficient(0)
            normal = element(st, [FreeField.normal_ordered(left(FF, num(z)).terms[0].factors[0],
                                                           right(FF, num(w)).terms[0].factors[0])], st).coefficient(0)
            err = abs(full - normal - exact)
            worst = max(worst, err)
            diags.append({"w": [w.real, w.imag], "state": str(st), "error": err})
        tail = max(tail, tail_bound(d, s.ratio, s.K) / abs(z) ** 2)
    return Outcome(worst, diags, notes=f"radial ratio {s.ratio}; truncation estimate {tail:.2e}",
                   tolerance=max(1e-8, 10 * tail), guard_band="vacuum and first-excited states")


@register("umope", "H(z) H(w) = :H H: + 1/((z - wq)(z - w/q))", "abelian two-point function",
          "pole", 1e-8, ratio=0.5)
def _umope(s: Settings, variant: str) -> Outcome:
    states = [((), ()), ((1,), ())]
    return _radial_twopoint(s, "umope", lambda F, p: F.H(p), lambda F, p: F.H(p), _pole(1, -1), states)


@register("umfermiope", "psi(z) psi(w) = :psi psi: + 1/(z - w)", "NS fermion two-point function",
          "pole", 1e-8, ratio=0.5)
def _umfermiope(s: Settings, variant: str) -> Outcome:
    states = [((), ()), ((), (1,))]
    return _radial_twopoint(s, "umfermiope", lambda F, p: F.psi(p), lambda F, p: F.psi(p), _pole(0), states)


@register("fermion_modes", "{psi_r, psi_s} = delta_{r+s}", "NS fermion anticommutators on the truncated space",
          "matrix", 1e-12, deformed=False)
def _fermion_modes(s: Settings, variant: str) -> Outcome:
    basis = build_basis(GramSpec("none"), D=6, M=0, fermion=True)
    I = identity(basis)
    worst = 0.0
    for r in range(-7, 8, 2):
        for t in range(-7, 8, 2):
            a, b = fermion_mode(basis, r / 2), fermion_mode(basis, t / 2)
            C = a @ b + b @ a
            if r + t == 0:
                C = C - I
            worst = max(worst, guard_band_max(C, 0.0, 6 - (abs(r) + abs(t)) / 2))
    return Outcome(worst, guard_band="kets of degree <= D - |r| - |s|")


# ---------------------------------------------------------------------------
# N=1 pole identities


@register("ht", "T(z) H(w)", "H is primary: poles at wq and w/q carrying H(wq), H(w/q)", "pole", 1e-6)
def _ht(s: Settings, variant: str) -> Outcome:
    def build(FF, a, b, w):
        d = FF.d
        k = d.kappa
        terms = [FreeTerm(_pole(1, wpow=-1, scale=1 / k), [FF.H(_at(d, w, 1))]),
                 FreeTerm(_pole(-1, wpow=-1, scale=-1 / k), [FF.H(_at(d, w, -1))])]
        return FF.T(0, sym()), [FF.H(num(w))], terms

    return _pole_family(s, "ht", False, [(0, 0)], build)


def _tt_terms(FF: FreeFields, a: int, b: int, w: complex, variant: str) -> List[FreeTerm]:
    d = FF.d
    half = 1.0 if variant == "as_printed" else 0.5
    terms = []
    # (prefactor exponent e, index g, argument shift, pole centre c)
    brackets = [((b + a) / 2, b - a, -a, (b - a) / 2), ((a - b) / 2, -b - a, -a, (-b - a) / 2),
                ((b - a) / 2, b + a, a, (b + a) / 2), ((-b - a) / 2, a - b, a, (a - b) / 2)]
    for e, g, shift, c in brackets:
        for sgn in (1, -1):
            fn = _pole(c + sgn, qexp=-e, wpow=-1, scale=sgn * half / d.kappa)
            terms.append(FreeTerm(fn, [FF.T(g + sgn, _at(d, w, (shift + sgn) / 2))]))
    for c in ((b - a) / 2, (b + a) / 2):
        terms.append(FreeTerm(_pole(c + 1, c - 1, -c + 1, -c - 1, scale=0.25)))
    return terms


@register("umviraboson", "T^alpha(z) T^beta(w)", "q-Virasoro closure of the bosonic tensors",
          "pole", 1e-6, differs=True)
def _umviraboson(s: Settings, variant: str) -> Outcome:
    def build(FF, a, b, w):
        return FF.T(a, sym()), [FF.T(b, num(w))], _tt_terms(FF, a, b, w, variant)

    pairs = [(a, b) for a in GRID for b in GRID]
    return _pole_family(s, "umviraboson", False, pairs, build)


def _qL(FF: FreeFields, g: int, pt, printed: bool) -> Optional[FreeField]:
    """[g] L^g(x); None when g = 0 (the normal-ordered square of psi vanishes)."""
    if g == 0:
        return None
    f = FF.L_unscaled(g, pt) if printed else FF.L(g, pt)
    return f.scaled(qnum(FF.d, g))


def _L(FF: FreeFields, g: int, pt, printed: bool) -> FreeField:
    return FF.L_unscaled(g, pt) if printed else FF.L(g, pt)


@register("umsuperesuper", "G^alpha(z) G^beta(w)", "supercharge product closes on T and L",
          "pole", 1e-6, differs=True)
def _umsuperesuper(s: Settings, variant: str) -> Outcome:
    printed = variant == "as_printed"

    def build(FF, a, b, w):
        d = FF.d
        c = (b - a) / 2
        g_t = b + a if printed else a - b
        terms = [FreeTerm(_pole(-c, qexp=a / 2, scale=2.0), [FF.T(g_t, _at(d, w, a / 2))])]
        for sgn in (1, -1):
            f = _qL(FF, b - a + sgn, _at(d, w, (-a + sgn) / 2), printed)
            if f is not None:
                terms.append(FreeTerm(_pole(c + sgn, qexp=-((b - sgn) / 2 + a), scale=sgn), [f]))
        last = c + 1 if printed else c - 1
        terms.append(FreeTerm(_pole(-c, c + 1, last, qexp=-a / 2)))
        return FF.G(a, sym()), [FF.G(b, num(w))], terms

    pairs = [(a, b) for a in GRID for b in GRID]
    return _pole_family(s, "umsuperesuper", True, pairs, build)


@register("umvirafermi", "L^alpha(z) L^beta(w)", "fermionic tensors close on L with a central term",
          "pole", 1e-6, differs=True)
def _umvirafermi(s: Settings, variant: str) -> Outcome:
    printed = variant == "as_printed"

    def build(FF, a, b, w):
        d = FF.d
        pref = 1 / (qnum(d, a) * qnum(d, b) * d.kappa)
        terms = []
        # (sign, index, argument shift, pole, q power in the denominator)
        for sgn, g, sh, p, e in ((1, a + b, a / 2, (a + b) / 2, (b - a) / 2),
                                 (1, -a - b, -a / 2, -(a + b) / 2, (a - b) / 2),
                                 (-1, a - b, a / 2, (a - b) / 2, -(a + b) / 2),
                                 (-1, b - a, -a / 2, (b - a) / 2, (a + b) / 2)):
            f = _qL(FF, g, _at(d, w, sh), printed)
            if f is not None:
                terms.append(FreeTerm(_pole(p, qexp=-e, wpow=-1, scale=sgn * pref), [f]))
        if printed:
            cpref = dict(wpow=-1, scale=pref)
        else:
            cpref = dict(wpow=-1, zpow=-1, scale=pref / d.kappa)
        u, v = (a + b) / 2, (a - b) / 2
        terms.append(FreeTerm(_pole(-u, u, **cpref)))
        terms.append(FreeTerm(ContractionFn.ratio(poles=(-v, v), **{**cpref, "scale": -cpref["scale"]})))
        return _L(FF, a, sym(), printed), [_L(FF, b, num(w), printed)], terms

    pairs = [(a, b) for a in GRID for b in GRID if a and b]
    return _pole_family(s, "umvirafermi", True, pairs, build)


@register("umbosonesuper", "T^alpha(z) G^beta(w)", "supercharges transform under the bosonic tensors",
          "pole", 1e-6)
def _umbosonesuper(s: Settings, variant: str) -> Outcome:
    def build(FF, a, b, w):
        d = FF.d
        terms = []
        for sa in (-1, 1):  # q^{-alpha/2} block and q^{alpha/2} block
            for sgn in (1, -1):
                g = b + sa * a + sgn
                fn = _pole((b + sa * a) / 2 + sgn, qexp=sa * a / 2 - b / 2, wpow=-1, scale=sgn / (2 * d.kappa))
                terms.append(FreeTerm(fn, [FF.G(g, _at(d, w, (sa * a + sgn) / 2))]))
        return FF.T(a, sym()), [FF.G(b, num(w))], terms

    pairs = [(a, b) for a in GRID for b in GRID]
    return _pole_family(s, "umbosonesuper", True, pairs, build)


@register("umfermiesuper", "L^alpha(z) G^beta(w)", "supercharges transform under the fermionic tensors",
          "pole", 1e-6, differs=True)
def _umfermiesuper(s: Settings, variant: str) -> Outcome:
    printed = variant == "as_printed"

    def build(FF, a, b, w):
        d = FF.d
        pref = 1 / (qnum(d, a) * d.kappa)
        terms = [FreeTerm(_pole((a - b) / 2, qexp=b / 2, wpow=-1, scale=pref), [FF.G(b - a, _at(d, w, a / 2))]),
                 FreeTerm(_pole((-a - b) / 2, qexp=b / 2, wpow=-1, scale=-pref), [FF.G(b + a, _at(d, w, -a / 2))])]
        return _L(FF, a, sym(), printed), [FF.G(b, num(w))], terms

    pairs = [(a, b) for a in GRID for b in GRID if a]
    return _pole_family(s, "umfermiesuper", True, pairs, build)


# ---------------------------------------------------------------------------
# symmetries and classical limits


@register("umem_symmetry", "T^{-alpha} = T^alpha, L^{-alpha} = L^alpha", "index reflection symmetry",
          "exact", 1e-12)
def _symmetry(s: Settings, variant: str) -> Outcome:
    d = s.deformation()
    FF = FreeFields(d, 12)
    states = states_upto(2)
    worst = 0.0
    for a in (1, 2, 3):
        for make in (FF.T, FF.L):
            for b in states:
                for k in states:
                    x = element(b, [make(a, sym())], k)
                    y = element(b, [make(-a, sym())], k)
                    worst = max(worst, x.max_abs_diff(y))
    return Outcome(worst, guard_band="states of degree <= 2")


def _limit_error(eps: float, deformed: Callable, classical: Callable, states, K: int = 12) -> float:
    d = Deformation(eps, 64)
    d0 = Deformation(0.0, 64)
    F, F0 = FreeFields(d, K), FreeFields(d0, K)
    err = 0.0
    for b in states:
        for k in states:
            x = element(b, [deformed(F)], k)
            y = element(b, [classical(F0)], k)
            err = max(err, x.max_abs_diff(y))
    return err


def _limit_outcome(errs, orders, what: str) -> Outcome:
    sc = scaling(*errs, orders=orders)
    return Outcome(scaling_deviation(sc, orders), [{"errors": list(errs), "ratio": sc.ratio, "order": sc.order}],
                   params={"observed_order": sc.order, "ratio": sc.ratio},
                   notes=f"{what}: error ratio {sc.ratio:.3f} between eps and eps/2")


LIMIT_EPS = (1e-3, 5e-4)


@register("T_limit", "T^alpha -> 1/2 :H^2:", "bosonic tensor classical limit", "limit", 0.0, deformed=False,
          eps0=1e-3)
def _t_limit(s: Settings, variant: str) -> Outcome:
    states = states_upto(2, fermion=False)
    errs = [_limit_error(e, lambda F: F.T(1, sym()), lambda F: F.T_classical(sym()), states) for e in LIMIT_EPS]
    return _limit_outcome(errs, (1, 2), "T^1 against 1/2 :H^2:")


@register("L_limit", "L^alpha -> 1/2 :dpsi psi:", "fermionic tensor classical limit", "limit", 0.0,
          deformed=False, eps0=1e-3)
def _l_limit(s: Settings, variant: str) -> Outcome:
    states = states_upto(2, bosons=False)
    errs = [_limit_error(e, lambda F: F.L(1, sym()), lambda F: F.L_classical(sym()), states) for e in LIMIT_EPS]
    return _limit_outcome(errs, (1, 2), "L^1 against 1/2 :dpsi psi:")


@register("G_limit", "G^alpha -> :H psi:", "supercharge classical limit", "limit", 0.0, deformed=False,
          eps0=1e-3)
def _g_limit(s: Settings, variant: str) -> Outcome:
    states = states_upto(2)
    errs = [_limit_error(e, lambda F: F.G(1, sym()), lambda F: F.G_classical(sym()), states) for e in LIMIT_EPS]
    return _limit_outcome(errs, (1, 2), "G^1 against :H psi:")


def _n1_classical_terms(F0: FreeFields, which: str, w: complex, variant: str):
    """Classical N=1 products as (coefficient, fields) terms; T = T_b + L_f."""
    p = num(w)
    T = F0.T_classical(p) + F0.L_classical(p)
    dT = F0.dT_classical(p)
    c, h = EXPECTED_CONSTANTS["c_N1"], EXPECTED_CONSTANTS["h_G"]
    if which == "GG":
        return [FreeTerm(_pole(0, 0, 0, scale=2 * c / 3)), FreeTerm(_pole(0, scale=2.0), [T])]
    if which == "TG":
        return [FreeTerm(_pole(0, 0, scale=h), [F0.G_classical(p)]), FreeTerm(_pole(0), [F0.dG_classical(p)])]
    return [FreeTerm(_pole(0, 0, 0, 0, scale=c / 2)), FreeTerm(_pole(0, 0, scale=2.0), [T]),
            FreeTerm(_pole(0), [dT])]


def _n1_tail(d: Deformation, which: str, w: complex, states, ks, K: int, alpha: int = 1) -> np.ndarray:
    F = FreeFields(d, K)
    if d.epsilon == 0:
        T = lambda p: F.T_classical(p) + F.L_classical(p)  # noqa: E731
        G = F.G_classical
    else:
        T = lambda p: F.T(alpha, p) + F.L(alpha, p)  # noqa: E731
        G = lambda p: F.G(alpha, p)  # noqa: E731
    left = {"GG": G, "TG": T, "TT": T}[which](sym())
    right = {"GG": G, "TG": G, "TT": T}[which](num(w))
    return PoleRunner(d, left, states, states, ks).lhs([right], w)


@register("n1_classical", "undeformed N=1 superconformal OPEs", "GG, TG, TT at q = 1 and their q -> 1 recovery",
          "limit", 1e-10, deformed=False, eps0=1e-3)
def _n1_classical(s: Settings, variant: str) -> Outcome:
    d0 = Deformation(0.0, 64)
    states = [st for st in states_upto(2) if state_degree(st) <= 1.5]
    ks, K = _window(s, 2)
    F0 = FreeFields(d0, K)
    w = s.spectral_points("n1_classical", 1)[0]
    scale = np.array([abs(w) ** -k for k in ks])[:, None, None]
    exact_err, diags = 0.0, []
    tails0 = {}
    for which in ("GG", "TG", "TT"):
        lhs = _n1_tail(d0, which, w, states, ks, K)
        tails0[which] = lhs
        rhs = free_rhs(d0, states, states, _n1_classical_terms(F0, which, w, variant), w, ks)
        e = relative_error(lhs * scale, rhs * scale)[0]
        exact_err = max(exact_err, e)
        diags.append({"product": which, "classical_error": e})
    # recovery: deformed tails converge to the classical ones
    dev = 0.0
    for which in ("GG", "TG", "TT"):
        errs = []
        for eps in LIMIT_EPS:
            lhs = _n1_tail(Deformation(eps, 64), which, w, states, ks, K)
            errs.append(float(np.max(np.abs((lhs - tails0[which]) * scale))))
        sc = scaling(*errs)
        dev = max(dev, scaling_deviation(sc))
        diags.append({"product": which, "limit_errors": errs, "ratio": sc.ratio, "order": sc.order})
    return Outcome(max(exact_err, dev), diags, guard_band="states of degree <= 3/2",
                   notes="exact classical OPE tails at q = 1, then eps-scaling of the deformed tails")
