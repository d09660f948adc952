"""Numerical machinery shared by the checks.

Pole identities are compared through the Laurent tail of the left-hand side:
the coefficient of ``z^{-k-1}`` for ``k`` beyond the reach of the regular
terms is fixed by the poles alone, so the unknown regular data never has to be
modelled.  Coefficients are normalised by ``|w|^k``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..fock import FockBasis
from ..fields.contractions import ContractionFn, tail_bound
from ..fields.free import FreeField, apply_bra, apply_ket, basis_vector, pairing
from ..fields.vertex import VertexOp, product_matrix, vertex_contraction
from ..qcalc import Deformation, LaurentPoly, exact_divide

FFT_POINTS = 256
FACTOR_MISMATCH = 1.0  # error reported when two rational factors differ symbolically
FFT_RADIUS = 1.5  # |z| / |w| on the extraction circle
RATIO_FIRST = (1.7, 2.3)
RATIO_SECOND = (3.5, 4.5)


class RadialOrderError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Laurent tails


def series_coeffs(fn: ContractionFn, d: Deformation, w: complex, ks: Sequence[int]) -> np.ndarray:
    """Coefficients of z^{-k-1} in the |z| > |w| expansion of fn(z, w)."""
    ks = list(ks)
    top = sum(m for _, m in fn.factors) + fn.zpow
    need = top + max(ks) + 1
    ser = fn.laurent_at_infinity(d, w, max(need, 0))
    return np.array([ser.get(-k - 1, 0j) for k in ks])


def poly_coeffs(p: LaurentPoly, ks: Sequence[int]) -> np.ndarray:
    return np.array([p.coefficient(-k - 1) for k in ks])


def fft_coeffs(values: Callable[[np.ndarray], np.ndarray], radius: float, powers: Sequence[int],
               points: int = FFT_POINTS) -> np.ndarray:
    """Laurent coefficients c_p (p in ``powers``) of a function sampled on |z| = radius.

    ``values(zs)`` returns an array whose first axis runs over the sample points.
    """
    theta = 2 * np.pi * np.arange(points) / points
    zs = radius * np.exp(1j * theta)
    vals = np.asarray(values(zs))
    spec = np.fft.fft(vals, axis=0) / points  # spec[j] = sum_p c_p R^p [p = j mod N]
    out = []
    for p in powers:
        out.append(spec[p % points] / radius ** p)
    return np.array(out)


def tail_powers(ks: Sequence[int]) -> List[int]:
    return [-k - 1 for k in ks]


def pole_design(poles: Sequence[Tuple[complex, int]], ks: Sequence[int], scale: float) -> np.ndarray:
    """Columns: z^{-k-1} coefficients of 1/(z - p)^m, normalised by scale^k."""
    cols = []
    for p, mult in poles:
        for m in range(1, mult + 1):
            cols.append([math.comb(k, m - 1) * p ** (k - m + 1) / scale ** k if k >= m - 1 else 0.0 for k in ks])
    return np.array(cols, dtype=complex).T


def fit_residues(mismatch: np.ndarray, poles: Sequence[Tuple[complex, int]], ks: Sequence[int],
                 scale: float) -> np.ndarray:
    """Least-squares pole strengths reproducing ``mismatch`` (rows: k, normalised by scale^k).

    Extra columns of ``mismatch`` are fitted independently.  Returns shape
    (number of pole terms, columns).
    """
    A = pole_design(poles, ks, scale)
    sol, *_ = np.linalg.lstsq(A, mismatch, rcond=None)
    return sol


def normalise(coeffs: np.ndarray, ks: Sequence[int], scale: float) -> np.ndarray:
    factors = np.array([scale ** -k for k in ks])
    return coeffs * factors.reshape((-1,) + (1,) * (coeffs.ndim - 1))


def relative_error(lhs: np.ndarray, rhs: np.ndarray) -> Tuple[float, float]:
    """(max |lhs - rhs| / max(1, max|rhs|), max|rhs|)."""
    size = float(np.max(np.abs(rhs), initial=0.0))
    return float(np.max(np.abs(lhs - rhs), initial=0.0)) / max(1.0, size), size


# ---------------------------------------------------------------------------
# free-field pole checks


@dataclass
class FreeTerm:
    """coefficient(z, w) * <bra| fields |ket> with the fields at numeric points."""

    coeff: ContractionFn
    fields: Sequence[FreeField] = ()


def free_tail(d: Deformation, bra_states, ket_states, left: FreeField, right: Sequence[FreeField],
              ks: Sequence[int]) -> np.ndarray:
    """LHS tail coefficients, shape (len(ks), bras, kets); ``left`` is symbolic in z."""
    bras = [apply_bra(left, basis_vector(b)) for b in bra_states]
    kets = []
    for k in ket_states:
        vec = basis_vector(k)
        for f in reversed(right):
            vec = apply_ket(f, vec)
        kets.append(vec)
    out = np.zeros((len(ks), len(bras), len(kets)), dtype=complex)
    for i, bv in enumerate(bras):
        for j, kv in enumerate(kets):
            out[:, i, j] = poly_coeffs(pairing(bv, kv), ks)
    return out


def free_rhs(d: Deformation, bra_states, ket_states, terms: Sequence[FreeTerm], w: complex,
             ks: Sequence[int]) -> np.ndarray:
    out = np.zeros((len(ks), len(bra_states), len(ket_states)), dtype=complex)
    kets = [basis_vector(k) for k in ket_states]
    for term in terms:
        c = series_coeffs(term.coeff, d, w, ks)
        if not np.any(c):
            continue
        for i, b in enumerate(bra_states):
            # fields act on the bra: lowering keeps the vectors small
            bra = basis_vector(b)
            for f in term.fields:
                bra = apply_bra(f, bra)
            for j, k in enumerate(ket_states):
                val = pairing(bra, kets[j]).coefficient(0)
                if val:
                    out[:, i, j] += c * val
    return out


# ---------------------------------------------------------------------------
# vertex-engine tails


def vertex_tail(ops_at: Callable[[complex], Sequence[VertexOp]], basis: FockBasis, rows, cols, w: complex,
                ks: Sequence[int], extra: Optional[Callable[[np.ndarray], np.ndarray]] = None) -> np.ndarray:
    """Tail coefficients of <rows| ops_at(z) |cols> extracted by FFT on |z| = FFT_RADIUS |w|.

    ``extra(zs)`` optionally multiplies each sample (shape broadcastable to
    (points, rows, cols)), e.g. a fermion matrix element or a normalizer.
    """
    def values(zs):
        out = np.stack([product_matrix(ops_at(z), basis, rows, cols) for z in zs])
        if extra is not None:
            out = out * extra(zs)
        return out

    return fft_coeffs(values, FFT_RADIUS * abs(w), tail_powers(ks))


# ---------------------------------------------------------------------------
# epsilon scaling


@dataclass
class Scaling:
    errors: Tuple[float, float]
    ratio: float
    order: Optional[int]

    @property
    def ok(self) -> bool:
        return self.order is not None


def scaling(err_coarse: float, err_fine: float, orders: Sequence[int] = (1, 2)) -> Scaling:
    """Classify err(eps)/err(eps/2) as first order (ratio ~2) or second order (~4)."""
    ratio = err_coarse / err_fine if err_fine > 0 else math.inf
    order = None
    if 1 in orders and RATIO_FIRST[0] <= ratio <= RATIO_FIRST[1]:
        order = 1
    elif 2 in orders and RATIO_SECOND[0] <= ratio <= RATIO_SECOND[1]:
        order = 2
    return Scaling((err_coarse, err_fine), ratio, order)


def scaling_deviation(s: Scaling, orders: Sequence[int] = (1, 2)) -> float:
    """Distance of the observed ratio from the nearest accepted window (0 inside)."""
    best = math.inf
    for o in orders:
        lo, hi = RATIO_FIRST if o == 1 else RATIO_SECOND
        best = min(best, max(lo - s.ratio, s.ratio - hi, 0.0))
    return best


# ---------------------------------------------------------------------------
# radial products


def radial_product(ops: Sequence[VertexOp], basis: FockBasis, rows=None, cols=None,
                   max_ratio: float = 0.7) -> Tuple[np.ndarray, float]:
    """Matrix of ops[0] ops[1] ... (points strictly decreasing in modulus) and the tail estimate."""
    pts = [op.point for op in ops]
    if any(p is None for p in pts):
        raise ValueError("radial_product needs operators built at a spectral point")
    tail = 0.0
    for a, b in zip(pts, pts[1:]):
        r = abs(b) / abs(a)
        if r > max_ratio:
            raise RadialOrderError(f"|{b:.3g}| / |{a:.3g}| = {r:.3f} exceeds the radial ratio {max_ratio}")
        tail += tail_bound(ops[0].d, r, ops[0].K)
    return product_matrix(ops, basis, rows, cols), tail


# ---------------------------------------------------------------------------
# exact regular part of E^+(z) E^-(w)


def regular_part_matrix(d: Deformation, N_ww: np.ndarray, N_plus: np.ndarray, N_minus: np.ndarray,
                        w: complex) -> np.ndarray:
    """lim_{z->w} [N(z,w)/((z-wq)(z-w/q)) - (N(wq,w)/(z-wq) - N(w/q,w)/(z-w/q))/(w kappa)].

    N is the normal-ordered numerator (a Laurent polynomial in z), so the
    limit is the exact quotient evaluated at z = w.
    """
    q = d.q
    a, b = w - w * q, w - w / q
    return (N_ww - (N_plus * b - N_minus * a) / (w * d.kappa)) / (a * b)


def regular_part_laurent(d: Deformation, numerator: Callable[[np.ndarray], np.ndarray], w: complex,
                         span: Tuple[int, int], points: int = 64) -> np.ndarray:
    """Same limit via exact Laurent polynomials, one element at a time.

    ``numerator(zs)`` gives N(z, w) elements, shape (points, ...); ``span``
    bounds the z-powers present.  Each element is interpolated exactly, the
    two pole terms are subtracted, the remainder is divided exactly by
    (z - wq)(z - w/q) and evaluated at w.
    """
    q = d.q
    lo, hi = span
    powers = list(range(lo, hi + 1))
    coeffs = fft_coeffs(numerator, abs(w), powers, points)
    flat = coeffs.reshape(len(powers), -1)
    out = np.zeros(flat.shape[1], dtype=complex)
    a, b = w * q, w / q
    for e in range(flat.shape[1]):
        poly = LaurentPoly({p: c for p, c in zip(powers, flat[:, e])})
        n_plus, n_minus = poly(a), poly(b)
        # N(z) - [N(a)(z - b) - N(b)(z - a)]/(a - b) vanishes at a and b
        interp = LaurentPoly({1: (n_plus - n_minus) / (a - b), 0: (-n_plus * b + n_minus * a) / (a - b)})
        quot = exact_divide(poly - interp, [a, b], tol=1e-8 * max(1.0, max(abs(c) for c in flat[:, e])))
        # poles: (N(a)/(z-a) - N(b)/(z-b))/(w kappa) and w kappa = a - b
        out[e] = quot(w)
    return out.reshape(coeffs.shape[1:])


# ---------------------------------------------------------------------------
# exchange relations


def exchange_errors(d: Deformation, X: VertexOp, Y: VertexOp, Xs: VertexOp, Ys: VertexOp, factor: ContractionFn,
                    basis: FockBasis, rows, cols) -> Dict[str, float]:
    """Three-part check of X(z) Y(w) = factor(z, w) Y(w) X(z).

    ``X, Y`` sit at (z, w) with |z| > |w|; ``Xs, Ys`` at swapped radii.
    1. X(z) Y(w) equals c_XY(z, w) :X Y: numerically;
    2. Y(w') X(z') equals c_YX(w', z') :X Y: at |w'| > |z'|;
    3. factor equals c_XY(z, w) / c_YX(w, z) as a rational function (exact
       descriptor comparison, plus values at the sample point).
    """
    c_xy = vertex_contraction(X.symbol, Y.symbol, X.gram)
    c_yx = vertex_contraction(Y.symbol, X.symbol, X.gram)
    z, w = X.point, Y.point
    zs, ws = Xs.point, Ys.point
    lhs = product_matrix([X, Y], basis, rows, cols)
    rhs = c_xy(d, z, w) * product_matrix([X.nop(Y)], basis, rows, cols)
    e1 = relative_error(lhs, rhs)[0]
    lhs2 = product_matrix([Ys, Xs], basis, rows, cols)
    rhs2 = c_yx(d, ws, zs) * product_matrix([Xs.nop(Ys)], basis, rows, cols)
    e2 = relative_error(lhs2, rhs2)[0]
    derived = c_xy / c_yx.swapped()
    e3 = 0.0 if derived.equals(factor) else FACTOR_MISMATCH
    for a, b in ((z, w), (zs, ws)):
        val = factor(d, a, b)
        e3 = max(e3, abs(derived(d, a, b) - val) / max(1.0, abs(val)))
    return {"product": e1, "swapped_product": e2, "factor": e3}
