"""U_q(su(2)) level one: oscillators, vertex operators, exchange relations, E+E- regular part."""

from __future__ import annotations

from typing import Dict, List, Tuple

import numpy as np

from ..fock import GramSpec, build_basis
from ..fields.contractions import ContractionFn
from ..fields.operators import eval_current_H, eval_Phi, eval_Psi, vertex_via_oscillators
from ..fields.vertex import VertexAlgebra, VertexOp, product_matrix
from ..qcalc import Deformation, qnum
from .checks_abelian import _osc_suite
from .core import Outcome, Settings, register
from .numerics import (exchange_errors, fft_coeffs, radial_product, regular_part_laurent, regular_part_matrix,
                       relative_error, scaling, scaling_deviation, series_coeffs, vertex_tail)

SU2 = GramSpec("su2")
GUARD_DEGREE = 3
GUARD_MOMENTUM = 1
LIMIT_EPS = (1e-3, 5e-4)


def guard_block(basis, degree: float = GUARD_DEGREE, momentum: int = GUARD_MOMENTUM) -> np.ndarray:
    return np.where(basis.guard_mask(degree, momentum))[0]


def _setup(s: Settings, epsilon=None, D=None, M=None):
    d = s.deformation(epsilon)
    basis = build_basis(SU2, D=s.D if D is None else D, M=s.M if M is None else M)
    return d, basis, VertexAlgebra(d, SU2, s.K)


def _mat(ops: List[VertexOp], basis, rows=None, cols=None) -> np.ndarray:
    return product_matrix(ops, basis, rows, cols)


# ---------------------------------------------------------------------------
# oscillators and vertex operators


@register("2osc", "[alpha_n, alpha_m] = [2n][n]/(2n) delta_{n+m}", "su(2) q-oscillators on the truncated space",
          "matrix", 1e-12, D=10)
def _osc(s: Settings, variant: str) -> Outcome:
    return _osc_suite(s, SU2, 1)


@register("2vertex", "E^{+-}(z) = :exp(+-sqrt2 xi^{+-}(z)):",
          "per-oscillator engine equals the sparse-oscillator exponential; momentum selection rules",
          "matrix", 1e-12)
def _vertex(s: Settings, variant: str) -> Outcome:
    d, basis, alg = _setup(s, D=6)
    moms = basis.momenta()[:, 0]
    worst, diags = 0.0, []
    for idx, z in enumerate(s.spectral_points("2vertex", 3)):
        ops = {"E+": (alg.E(1, z), 1), "E-": (alg.E(-1, z), -1), "Psi": (alg.Psi(z), 0), "Phi": (alg.Phi(z), 0),
               "A1": (alg.A(1, z), 0), "B2": (alg.B(2, z), 0), "D": (alg.D(z, 0.6 * z), 0)}
        for name, (op, shift) in ops.items():
            engine = op.matrix(basis).toarray()
            oracle = vertex_via_oscillators(basis, op).toarray()
            err = relative_error(engine, oracle)[0]
            # entries outside the momentum selection rule must vanish exactly
            wrong = moms[:, None] != moms[None, :] + shift
            leak = float(np.max(np.abs(engine[wrong]), initial=0.0))
            worst = max(worst, err, leak)
            diags.append({"field": name, "sample": idx, "engine_vs_oscillators": err, "selection_leak": leak})
    return Outcome(worst, diags, notes="D=6 basis; oracle uses the sparse oscillator matrices")


@register("2psi", "Psi Psi^-1 = Phi Phi^-1 = 1", "Drinfeld currents are invertible exponentials", "matrix", 1e-12)
def _psi_inverse(s: Settings, variant: str) -> Outcome:
    d, basis, alg = _setup(s, D=6)
    I = np.eye(basis.dimension)
    worst = 0.0
    for z in s.spectral_points("2psi", 3):
        for op in (alg.Psi(z), alg.Phi(z)):
            worst = max(worst, relative_error(_mat([op, op.inverse()], basis), I)[0],
                        relative_error(_mat([op.inverse(), op], basis), I)[0])
    return Outcome(worst)


@register("2baker", "E+(z) E-(w) = D(z,w)/((z - wq)(z - w/q))", "full-matrix product against the numerator",
          "matrix", 1e-8, D=6, M=2)
def _baker(s: Settings, variant: str) -> Outcome:
    d, basis, alg = _setup(s, D=6, M=2)
    worst, diags = 0.0, []
    tail = 0.0
    for idx, w in enumerate(s.spectral_points("2baker")):
        z = s.outer_point(w, "2baker", idx)
        lhs, t = radial_product([alg.E(1, z), alg.E(-1, w)], basis)
        rhs = alg.D(z, w).matrix(basis).toarray() / ((z - w * d.q) * (z - w / d.q))
        err = relative_error(lhs, rhs)[0]
        worst, tail = max(worst, err), max(tail, t)
        diags.append({"sample": idx, "error": err})
    return Outcome(worst, diags, notes=f"full {basis.dimension}x{basis.dimension} matrix; tail estimate {tail:.1e}")


# ---------------------------------------------------------------------------
# pole part and exchange relations


def tail_window(degree: float, momentum: int, width: int = 8) -> List[int]:
    k0 = int(degree) + 2 * momentum + 4
    return list(range(k0, k0 + width))


@register("ee", "E+(z) E-(w) ~ (Psi(wq^1/2)/(z - wq) - Phi(wq^-1/2)/(z - w/q))/(w(q - q^-1))",
          "pole part of the current product", "pole", 1e-8)
def _ee(s: Settings, variant: str) -> Outcome:
    d, basis, alg = _setup(s)
    rows = cols = guard_block(basis)
    ks = tail_window(GUARD_DEGREE, GUARD_MOMENTUM)
    worst, diags = 0.0, []
    for w in s.spectral_points("ee"):
        lhs = vertex_tail(lambda z: [alg.E(1, z), alg.E(-1, w)], basis, rows, cols, w, ks)
        psi = _mat([alg.Psi(w * d.qpow(0.5))], basis, rows, cols)
        phi = _mat([alg.Phi(w * d.qpow(-0.5))], basis, rows, cols)
        cp = series_coeffs(ContractionFn.ratio(poles=(1,), wpow=-1, scale=1 / d.kappa), d, w, ks)
        cm = series_coeffs(ContractionFn.ratio(poles=(-1,), wpow=-1, scale=-1 / d.kappa), d, w, ks)
        rhs = cp[:, None, None] * psi + cm[:, None, None] * phi
        norm = np.array([abs(w) ** -k for k in ks])[:, None, None]
        err = relative_error(lhs * norm, rhs * norm)[0]
        worst = max(worst, err)
        diags.append({"w": [w.real, w.imag], "error": err})
    return Outcome(worst, diags, guard_band=f"degree <= {GUARD_DEGREE}, |m| <= {GUARD_MOMENTUM}",
                   params={"tail_window": [ks[0], ks[-1]]})


def su2_exchange_lines() -> Dict[str, Tuple[str, str, ContractionFn]]:
    """Printed exchange factors F with X(z) Y(w) = F(z, w) Y(w) X(z)."""
    lines = {"PsiPhi": ("Psi", "Phi", ContractionFn.ratio(zeros=(3, -3), poles=(1, -1)))}
    for sgn, tag in ((1, "+"), (-1, "-")):
        f = ContractionFn.ratio(zeros=(-sgn * 2.5,), poles=(sgn * 1.5,), qexp=2 * sgn)
        lines[f"PsiE{tag}"] = ("Psi", f"E{tag}", f)
        lines[f"E{tag}Phi"] = (f"E{tag}", "Phi", f)
        lines[f"E{tag}E{tag}"] = (f"E{tag}", f"E{tag}",
                                  ContractionFn.ratio(zeros=(-2 * sgn,), poles=(2 * sgn,), qexp=2 * sgn))
    return lines


def _su2_field(alg: VertexAlgebra, kind: str, x: complex) -> VertexOp:
    return {"Psi": lambda: alg.Psi(x), "Phi": lambda: alg.Phi(x), "E+": lambda: alg.E(1, x),
            "E-": lambda: alg.E(-1, x)}[kind]()


def _exchange(line: str):
    X, Y, factor = su2_exchange_lines()[line]

    def body(s: Settings, variant: str) -> Outcome:
        d, basis, alg = _setup(s)
        rows = cols = guard_block(basis)
        worst, diags = 0.0, []
        cid = f"exchange:{line}"
        for idx, w in enumerate(s.spectral_points(cid)):
            z = s.outer_point(w, cid, idx)
            errs = exchange_errors(d, _su2_field(alg, X, z), _su2_field(alg, Y, w), _su2_field(alg, X, w),
                                   _su2_field(alg, Y, z), factor, basis, rows, cols)
            worst = max(worst, *errs.values())
            diags.append({"sample": idx, **errs})
        return Outcome(worst, diags, guard_band=f"degree <= {GUARD_DEGREE}, |m| <= {GUARD_MOMENTUM}",
                       notes=f"factor {factor.describe()}")

    register(f"exchange:{line}", f"{X}(z) {Y}(w) = F(z,w) {Y}(w) {X}(z)", "su(2) exchange relation",
             "exchange", 1e-8)(body)


for _line in su2_exchange_lines():
    _exchange(_line)


# ---------------------------------------------------------------------------
# Cartan current, A and B


@register("cartan_current", "(Psi(z) - Phi(z))/(sqrt2 z (q - q^-1)) -> H(z)",
          "the Drinfeld combination tends to the undeformed Cartan current", "limit", 0.0, deformed=False,
          eps0=1e-3)
def _cartan_current(s: Settings, variant: str) -> Outcome:
    z = s.spectral_points("cartan_current", 1)[0]
    basis = build_basis(SU2, D=6, M=1)
    rows = guard_block(basis, 4, 1)
    d0 = Deformation(0.0, 64)
    H = eval_current_H(basis, d0, z, zero_mode="momentum").toarray()[np.ix_(rows, rows)]
    errs = []
    for eps in LIMIT_EPS:
        d = Deformation(eps, 64)
        val = (eval_Psi(basis, d, z, K=s.K) - eval_Phi(basis, d, z, K=s.K)) * (1 / (np.sqrt(2) * z * d.kappa))
        errs.append(float(np.max(np.abs(val.toarray()[np.ix_(rows, rows)] - H))))
    sc = scaling(*errs)
    return Outcome(scaling_deviation(sc), [{"errors": errs, "ratio": sc.ratio, "order": sc.order}],
                   params={"observed_order": sc.order, "ratio": sc.ratio},
                   notes=f"error ratio {sc.ratio:.3f} between eps and eps/2")


def _composite_check(s: Settings, cid: str, kind: str) -> Outcome:
    d, basis, alg = _setup(s, D=6)
    worst = 0.0
    for w in s.spectral_points(cid, 3):
        for a in (-2, -1, 1, 2):
            lo, hi = w * d.qpow(-a / 2), w * d.qpow(a / 2)
            if kind == "A":
                op, ref = alg.A(a, w), [alg.Phi(lo).inverse(), alg.Psi(hi)]
            else:
                op, ref = alg.B(a, w), [alg.Phi(lo), alg.Psi(hi).inverse()]
            worst = max(worst, relative_error(op.matrix(basis).toarray(), _mat(ref, basis))[0])
    return Outcome(worst, notes="composite against the product of its two exponentials, alpha in {-2,-1,1,2}")


@register("azao", "A^alpha(w) = Phi^-1(wq^{-alpha/2}) Psi(wq^{alpha/2})", "A as a product", "matrix", 1e-12)
def _azao(s: Settings, variant: str) -> Outcome:
    return _composite_check(s, "azao", "A")


@register("bezao", "B^alpha(w) = Phi(wq^{-alpha/2}) Psi^-1(wq^{alpha/2})", "B as a product", "matrix", 1e-12)
def _bezao(s: Settings, variant: str) -> Outcome:
    return _composite_check(s, "bezao", "B")


@register("azao_limit", "A^alpha, B^alpha -> 1", "composites tend to the identity as q -> 1", "limit", 0.0,
          deformed=False, eps0=1e-3)
def _azao_limit(s: Settings, variant: str) -> Outcome:
    w = s.spectral_points("azao_limit", 1)[0]
    errs = []
    for eps in LIMIT_EPS:
        d = Deformation(eps, 64)
        basis = build_basis(SU2, D=4, M=1)
        alg = VertexAlgebra(d, SU2, s.K)
        I = np.eye(basis.dimension)
        errs.append(max(float(np.max(np.abs(alg.A(1, w).matrix(basis).toarray() - I))),
                        float(np.max(np.abs(alg.B(1, w).matrix(basis).toarray() - I)))))
    sc = scaling(*errs)
    return Outcome(scaling_deviation(sc), [{"errors": errs, "ratio": sc.ratio, "order": sc.order}],
                   params={"observed_order": sc.order, "ratio": sc.ratio})


# ---------------------------------------------------------------------------
# D at odd q-shifts


def _d_shift_check(s: Settings, cid: str, sign: int, form: str, variant: str = "rederived") -> Outcome:
    d, basis, alg = _setup(s, D=6)
    worst, diags = 0.0, []
    for w in s.spectral_points(cid, 3):
        for k in range(4):
            lhs = alg.D(w * d.qpow(sign * (2 * k + 1)), w).matrix(basis).toarray()
            if form == "product":
                if sign > 0:
                    ops = [alg.Phi(w * d.qpow(-0.5 + 2 * (k - i))).inverse() for i in range(k)]
                    ops += [alg.Psi(w * d.qpow(0.5 + 2 * (k - j))) for j in range(k + 1)]
                else:
                    ops = [alg.Phi(w * d.qpow(-0.5 - 2 * i)) for i in range(k + 1)]
                    first = 0.5 if variant == "as_printed" else -1.5
                    ops += [alg.Psi(w * d.qpow(first - 2 * j)).inverse() for j in range(k)]
            else:
                pairs = [(1, 2 * sign * j) for j in range(1, k + 1)]
                if sign > 0:
                    ops = ([alg.A_multi(pairs, w)] if k else []) + [alg.Psi(w * d.qpow(0.5))]
                else:
                    ops = [alg.Phi(w * d.qpow(-0.5))] + ([alg.B_multi(pairs, w)] if k else [])
            err = relative_error(lhs, _mat(ops, basis))[0]
            worst = max(worst, err)
            diags.append({"k": k, "error": err})
    return Outcome(worst, diags, notes="k = 0..3, full D=6 basis")


@register("appositiva", "D(wq^{2k+1}, w) = prod Phi^-1 prod Psi", "positive odd shifts as a Psi/Phi product",
          "matrix", 1e-10)
def _appositiva(s: Settings, variant: str) -> Outcome:
    return _d_shift_check(s, "appositiva", 1, "product")


@register("apnegativa", "D(wq^{-2k-1}, w) = prod Phi prod Psi^-1", "negative odd shifts as a Psi/Phi product",
          "matrix", 1e-10, differs=True)
def _apnegativa(s: Settings, variant: str) -> Outcome:
    # the Psi^-1 factors sit at w q^{-3/2-2j}, matching the B^1 string; printed: w q^{1/2-2j}
    return _d_shift_check(s, "apnegativa", -1, "product", variant)


@register("dezao", "D(wq^{+-(2k+1)}, w) = :A^1 ... A^1: Psi, Phi :B^1 ... B^1:",
          "odd shifts as strings of A^1 or B^1", "matrix", 1e-10)
def _dezao(s: Settings, variant: str) -> Outcome:
    a = _d_shift_check(s, "dezao", 1, "string")
    b = _d_shift_check(s, "dezao", -1, "string")
    return Outcome(max(a.error, b.error), a.diagnostics + b.diagnostics, notes=a.notes)


# ---------------------------------------------------------------------------
# regular part of E+(z) E-(w)


def regular_oracle(d: Deformation, alg: VertexAlgebra, basis, rows, cols, w: complex) -> np.ndarray:
    N = lambda z: _mat([alg.D(z, w)], basis, rows, cols)  # noqa: E731
    return regular_part_matrix(d, N(w), N(w * d.q), N(w / d.q), w)


def first_order_display(d: Deformation, alg: VertexAlgebra, basis, rows, cols, w: complex) -> np.ndarray:
    """Printed first-order regular part with the A^1, B^1 terms."""
    k = d.kappa
    psi = alg.Psi(w * d.qpow(0.5))
    phi = alg.Phi(w * d.qpow(-0.5))
    left = d.qpow(-3) * (_mat([alg.A(1, w * d.q ** 2), psi], basis, rows, cols) - _mat([psi], basis, rows, cols))
    left += k * _mat([psi], basis, rows, cols)
    right = d.qpow(3) * (_mat([phi, alg.B(1, w / d.q ** 2)], basis, rows, cols) - _mat([phi], basis, rows, cols))
    right -= k * _mat([phi], basis, rows, cols)
    return (left + right) / (2 * qnum(d, 2) * w * w * k * k)


@register("regular_first_order", "first-order regular part of E+(w) E-(w)",
          "exact oracle against the printed A^1/B^1 display: remainder vanishes with q - q^-1",
          "limit", 0.0, eps=[0.1, 0.05])
def _regular_first_order(s: Settings, variant: str) -> Outcome:
    w = s.spectral_points("regular_first_order", 1)[0]
    errs, diags, route = [], [], 0.0
    for eps in (0.1, 0.05):
        d, basis, alg = _setup(s, epsilon=eps)
        rows = cols = guard_block(basis)
        oracle = regular_oracle(d, alg, basis, rows, cols, w)
        display = first_order_display(d, alg, basis, rows, cols, w)
        errs.append(float(np.max(np.abs(oracle - display))))
        # independent route: exact Laurent interpolation of D(z, w) per element
        lau = regular_part_laurent(d, lambda zs: np.stack([_mat([alg.D(z, w)], basis, rows, cols) for z in zs]), w,
                                   (-12, 12))
        route = max(route, relative_error(lau, oracle)[0])
        diags.append({"epsilon": eps, "remainder": errs[-1], "laurent_vs_matrix": route})
    sc = scaling(*errs)
    dev = scaling_deviation(sc)
    return Outcome(dev + (route if route > 1e-8 else 0.0), diags,
                   params={"observed_order": sc.order, "ratio": sc.ratio, "laurent_route_error": route},
                   guard_band=f"degree <= {GUARD_DEGREE}, |m| <= {GUARD_MOMENTUM}",
                   notes=f"remainder ratio {sc.ratio:.3f} between eps = 0.1 and 0.05; matrix and Laurent "
                         f"routes agree to {route:.1e}")


@register("regular_parity", "regular part from D(wq^(odd), w) only",
          "the regular part is a combination of D at w q^{+-1}, w q^{+-3}, ... ", "exact", 1e-8)
def _regular_parity(s: Settings, variant: str) -> Outcome:
    d, basis, alg = _setup(s)
    rows = cols = guard_block(basis)
    worst = 0.0
    exps = [t for j in range(4) for t in (2 * j + 1, -2 * j - 1)]
    for w in s.spectral_points("regular_parity", 2):
        oracle = regular_oracle(d, alg, basis, rows, cols, w)
        samples = np.stack([_mat([alg.D(w * d.qpow(t), w)], basis, rows, cols) for t in exps])
        # support of each element from exact Laurent coefficients on |z| = |w|
        powers = list(range(-12, 13))
        coeffs = fft_coeffs(lambda zs: np.stack([_mat([alg.D(z, w)], basis, rows, cols) for z in zs]), abs(w),
                            powers, 64)
        pts = np.array([w * d.qpow(t) for t in exps])
        out = np.zeros_like(oracle)
        for i in range(len(rows)):
            for j in range(len(cols)):
                live = [p for p, c in zip(powers, coeffs[:, i, j]) if abs(c) > 1e-12]
                if not live:
                    continue
                lo = min(live)
                if max(live) - lo > 7:
                    raise ValueError("element spans more than eight powers; lower the guard degree")
                V = np.array([[x ** (lo + m) for m in range(8)] for x in pts])
                c = np.linalg.solve(V, samples[:, i, j])
                poly = lambda x: sum(c[m] * x ** (lo + m) for m in range(8))  # noqa: E731
                a, b = w * d.q, w / d.q
                n_a, n_b = poly(a), poly(b)
                out[i, j] = (poly(w) - (n_a * (w - b) - n_b * (w - a)) / (a - b)) / ((w - a) * (w - b))
        worst = max(worst, relative_error(out, oracle)[0])
    return Outcome(worst, guard_band=f"degree <= {GUARD_DEGREE}, |m| <= {GUARD_MOMENTUM}",
                   notes="each element rebuilt from its values at w q^{+-1, +-3, +-5, +-7}")
