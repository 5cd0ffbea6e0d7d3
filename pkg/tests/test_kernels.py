import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad
from scipy.special import ive

from electrolyte_casimir import kernels as k
from electrolyte_casimir.kernels import KernelVariant

DIEL, METAL = KernelVariant.DIELECTRIC, KernelVariant.METAL


def test_variant_weights_and_aliases():
    assert KernelVariant.parse("metal") is METAL
    assert KernelVariant.parse("dielectric-in-electrolyte") is DIEL
    assert DIEL.weight(3) == pytest.approx(0.75)
    assert METAL.weight(3) == 1.0
    with pytest.raises(ValueError):
        KernelVariant.parse("plasma")


def test_backscattering_vanishes():
    assert k.reflection_kernel_angular(1.0, 2.0, math.pi, 1.5) == 0.0


def test_leading_term_small_argument():
    kk, kp, R, phi = 1e-4, 2e-4, 1.0, 0.3
    x = 2 * R * R * kk * kp * (1 + math.cos(phi))
    lead = -(2 * math.pi * R / kp) * 0.5 * x / 2 * math.exp(-R * (kk + kp))
    assert k.reflection_kernel_angular(kk, kp, phi, R) == pytest.approx(lead, rel=1e-7)


@pytest.mark.parametrize("variant", [DIEL, METAL])
@pytest.mark.parametrize("rho", [0.0, 0.5, 1.99, 2.01, 10.0, 300.0])
def test_closed_form_matches_series(variant, rho):
    s = rho + 0.7
    ref = 0.0
    if rho > 0:
        ref = k._series(2 * math.log(rho), 0, s, variant, 1e-17, twol=True)
    assert k.angular_sum_scaled(np.array([rho]), s, variant)[0] == pytest.approx(ref, rel=1e-13,
                                                                                   abs=1e-300)


@pytest.mark.parametrize("variant", [DIEL, METAL])
@pytest.mark.parametrize("kk,kp,R", [(0.1, 0.3, 1.3), (2.0, 3.0, 1.3), (50.0, 60.0, 1.3)])
def test_mode_equals_angular_average(variant, kk, kp, R):
    # m-th Fourier coefficient by adaptive quadrature of the angular kernel
    for m in (0, 1, 4):
        ref = quad(lambda p: k.reflection_kernel_angular(kk, kp, p, R, variant)
                   * math.cos(m * p), 0, math.pi, epsabs=0, epsrel=1e-11, limit=200)[0] / math.pi
        assert k.reflection_kernel_mode(m, kk, kp, R, variant) == pytest.approx(ref, rel=1e-10)


@pytest.mark.parametrize("kk,kp,R", [(0.3, 0.7, 1.0), (5.0, 6.0, 2.0), (40.0, 45.0, 1.5),
                                     (400.0, 420.0, 1.3)])
def test_metal_mode_is_scaled_bessel(kk, kp, R):
    g = 2 * R * math.sqrt(kk * kp)
    scale = math.exp(g - R * (kk + kp))
    for m in range(4):
        ref = ive(2 * m, g) * scale - (math.exp(-R * (kk + kp)) if m == 0 else 0.0)
        got = k.mode_sum_series(m, kk, kp, R, METAL)
        assert got == pytest.approx(ref, rel=1e-8)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.01, 300.0), st.floats(0.01, 300.0), st.floats(0.2, 30.0),
       st.sampled_from([DIEL, METAL]))
def test_fast_mode_sums_match_series(kk, kp, R, variant):
    g = np.array([2 * R * math.sqrt(kk * kp)])
    s = np.array([R * (kk + kp)])
    fast = k.mode_sums(g, s, 0, 12, variant)[0]
    ref = np.array([k.mode_sum_series(m, kk, kp, R, variant) for m in range(12)])
    tol = 1e-12 * ref.max() + 1e-300
    assert np.all(np.abs(fast - ref) <= np.maximum(1e-10 * np.abs(ref), tol))


def test_mode_sums_bounded_and_shape():
    g = np.linspace(0.0, 2000.0, 50)
    out = k.mode_sums(g, g + 1e-3, 3, 20)
    assert out.shape == (50, 17)
    assert np.all(np.abs(out) <= 1.0)


def test_high_mode_negligible():
    assert k.mode_sum_series(60, 0.01, 0.02, 1.0) < 1e-100


def test_invalid_arguments():
    with pytest.raises(ValueError):
        k.reflection_kernel_angular(0.0, 1.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        k.reflection_kernel_mode(0, 1.0, 1.0, -1.0)


def test_series_cap(monkeypatch):
    monkeypatch.setattr(k, "SERIES_CAP", 5)
    with pytest.raises(k.AccuracyError):
        k.mode_sum_series(0, 50.0, 50.0, 1.0)
