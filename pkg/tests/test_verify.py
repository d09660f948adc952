import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qsugawara.fields.contractions import ContractionFn
from qsugawara.qcalc import Deformation
from qsugawara.verify.core import UnknownCheck, Settings, registry, run_check, select
from qsugawara.verify.numerics import (fft_coeffs, fit_residues, normalise, pole_design, relative_error, scaling,
                                       scaling_deviation, series_coeffs, tail_powers)

KINDS = {"pole", "exchange", "matrix", "limit", "exact"}


def test_registry_integrity():
    reg = registry()
    assert len(reg) >= 30
    for cid, spec in reg.items():
        assert spec.id == cid and spec.kind in KINDS and spec.anchor
        assert spec.tolerance >= 0


def test_run_check_guards():
    with pytest.raises(UnknownCheck):
        run_check("no-such-check")
    with pytest.raises(ValueError):
        run_check("qnum", "guessed")
    with pytest.raises(ValueError):
        run_check("umosc", settings=Settings(epsilon=0.0))
    assert run_check("qnum", settings=Settings(epsilon=0.0)).passed


@given(st.integers(0, 10_000), st.sampled_from(["ee", "umope", "3superalgebra:AA"]))
def test_samples_stay_outside_the_poles(seed, cid):
    s = Settings(seed=seed)
    for k, w in enumerate(s.spectral_points(cid)):
        assert 0.6 <= abs(w) <= 1.0
        assert abs(s.outer_point(w, cid, k)) / abs(w) >= 1.4


def test_sampling_is_reproducible():
    a, b = Settings(seed=3), Settings(seed=3)
    assert a.spectral_points("x") == b.spectral_points("x")
    assert a.spectral_points("x") != Settings(seed=4).spectral_points("x")


@pytest.mark.parametrize("cid", ["exchange:PsiE+", "4operelations:Psi_i Phi_j", "3superalgebra:AB"])
def test_guard_band_errors_stable_under_doubling_D(cid):
    small = run_check(cid, settings=Settings(D=4, M=1, samples=2))
    large = run_check(cid, settings=Settings(D=8, M=1, samples=2))
    assert small.passed and large.passed
    assert abs(small.max_error - large.max_error) < 1e-10


def test_non_differing_checks_agree_across_variants():
    for cid in ["apqbinomio", "4operelations:E+_i E-_j", "pole_cancellation"]:
        assert not registry()[cid].differs
        a, b = run_check(cid, "rederived"), run_check(cid, "as_printed")
        assert a.max_error == b.max_error and a.passed


def test_scaling_windows():
    assert scaling(2.0, 1.0).order == 1
    assert scaling(4.0, 1.0).order == 2
    bad = scaling(3.0, 1.0)
    assert bad.order is None and scaling_deviation(bad) > 0
    assert scaling_deviation(scaling(2.0, 1.0)) == 0


def test_fft_tail_matches_exact_series():
    d = Deformation(0.15)
    f = ContractionFn.ratio(poles=(1, -1))
    w = 0.8 * np.exp(0.2j)
    ks = list(range(2, 14))
    exact = series_coeffs(f, d, w, ks)
    numeric = fft_coeffs(lambda zs: np.array([f(d, z, w) for z in zs]), 1.5 * abs(w), tail_powers(ks))
    assert relative_error(numeric, exact)[0] < 1e-10


def test_residue_fit_recovers_simple_poles():
    d = Deformation(0.15)
    w = 0.9
    ks = list(range(6, 18))
    poles = [(w * d.q, 1), (w / d.q, 1)]
    res = np.array([0.3 - 0.1j, -1.2 + 0.4j])
    fn = lambda z: res[0] / (z - poles[0][0]) + res[1] / (z - poles[1][0])  # noqa: E731
    coeffs = fft_coeffs(lambda zs: np.array([fn(z) for z in zs]), 1.5 * w, tail_powers(ks))
    fitted = fit_residues(normalise(coeffs, ks, w), poles, ks, w)
    assert np.allclose(np.ravel(fitted)[:2], res, atol=1e-10)
    assert pole_design(poles, ks, w).shape[0] == len(ks)
