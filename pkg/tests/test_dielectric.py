import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coopsurf.dielectric import (
    SAPPHIRE,
    VACUUM,
    ConstantPermittivity,
    LorentzPermittivity,
    Oscillator,
    TabulatedPermittivity,
    branch_sqrt,
    fresnel,
    fresnel_coefficients,
    image_coefficient,
    lorentz_from_wavelengths,
    omega_from_wavelength,
    permittivity,
    permittivity_imag_axis,
    polariton_pole,
    surface_response,
    surface_response_from_eps,
)
from coopsurf.errors import SingularityError, UnsupportedOperationError, WavelengthRangeError


def test_sapphire_samples_reproduced():
    for lam, eps in zip(SAPPHIRE.wavelengths, SAPPHIRE.values):
        assert permittivity(SAPPHIRE, lam) == pytest.approx(eps, abs=1e-12)


def test_sapphire_resonant_point():
    eps = permittivity(SAPPHIRE, 12.15)
    assert eps == pytest.approx(-0.95 + 0.11j)


def test_out_of_table_range():
    with pytest.raises(WavelengthRangeError):
        permittivity(SAPPHIRE, 20.0)
    with pytest.raises(WavelengthRangeError):
        permittivity(SAPPHIRE, 5.0)


def test_pchip_is_monotone_between_samples():
    lam = np.linspace(8.15, 16.15, 400)
    re = np.array([permittivity(SAPPHIRE, x).real for x in lam])
    assert np.all(np.diff(re) <= 1e-12)


def test_table_validation():
    with pytest.raises(ValueError):
        TabulatedPermittivity((1.0, 1.0), (1, 2))
    with pytest.raises(ValueError):
        TabulatedPermittivity((1.0, 2.0), (1 - 0.1j, 2))
    with pytest.raises(ValueError):
        ConstantPermittivity(2 - 1j)


def test_surface_response_values():
    assert surface_response(VACUUM, 1.0) == 0
    assert surface_response_from_eps(3.0) == pytest.approx(0.5)
    with pytest.raises(SingularityError):
        surface_response_from_eps(-1.0)


def test_lorentz_static_and_high_frequency_limits():
    m = lorentz_from_wavelengths(2.0, [(3.0, 10.0, 0.01)])
    w0 = omega_from_wavelength(10.0)
    assert permittivity_imag_axis(m, 0.0) == pytest.approx(5.0)
    assert permittivity_imag_axis(m, 1e6 * w0) == pytest.approx(2.0, rel=1e-6)
    assert permittivity(m, 1e-4).real == pytest.approx(2.0, rel=1e-6)


def test_imag_axis_rejects_tables_and_lossy_constants():
    with pytest.raises(UnsupportedOperationError):
        permittivity_imag_axis(SAPPHIRE, 1.0)
    with pytest.raises(UnsupportedOperationError):
        permittivity_imag_axis(ConstantPermittivity(2 + 0.1j), 1.0)


def test_image_coefficient_constant_medium():
    # S constant: (2/π)∫dξ ω/(ω²+ξ²) S = S, minus 2 Re S for emission
    m = ConstantPermittivity(3.0)
    assert image_coefficient(m, 1.0) == pytest.approx(0.5 - 1.0, abs=1e-9)
    assert image_coefficient(m, -1.0) == pytest.approx(0.5, abs=1e-9)


def test_image_coefficient_lorentz_vs_midpoint_oracle():
    m = lorentz_from_wavelengths(1.5, [(4.0, 10.0, 0.05)])
    w = float(omega_from_wavelength(12.0))
    got = image_coefficient(m, -w)
    # oracle integrates S(iξ) ω/(ω²+ξ²) directly
    n = 400_000
    t = (np.arange(n) + 0.5) / n
    xi = w * t / (1 - t)
    e = np.array([permittivity_imag_axis(m, x) for x in xi])
    s = (e - 1) / (e + 1)
    ref = 2 / np.pi * np.sum(s * w / (w**2 + xi**2) * w / (1 - t) ** 2) / n
    assert got == pytest.approx(ref, abs=1e-6)


def test_branch_sqrt_branch():
    z = branch_sqrt(np.array([-1.0 + 0j, -4 - 1e-30j, 1 + 0j, 1 - 2j]))
    assert np.all(z.imag >= 0)
    assert z[0] == pytest.approx(1j)


def test_fresnel_normal_incidence():
    eps = 2.25
    rs, rp = fresnel_coefficients(eps, 0.0)
    assert rs == pytest.approx((1 - 1.5) / (1 + 1.5))
    assert rp == pytest.approx(-rs)


def test_fresnel_vacuum_and_conductor():
    pair = fresnel(VACUUM, 1.0, 0.3)
    assert abs(pair.r_s) < 1e-15 and abs(pair.r_p) < 1e-15
    rs, rp = fresnel_coefficients(1e12, 0.5)
    assert rs == pytest.approx(-1, abs=1e-5) and rp == pytest.approx(1, abs=1e-5)


def test_polariton_pole():
    assert polariton_pole(SAPPHIRE, 8.15) is None
    p = polariton_pole(SAPPHIRE, 16.15)
    eps = -12 + 4j
    assert p**2 == pytest.approx(eps / (eps + 1))
    assert p.real > 1


@settings(max_examples=60, deadline=None)
@given(st.floats(0.1, 50), st.floats(0, 20), st.floats(0, 10))
def test_fresnel_passive(re, im, s):
    """|r| <= 1 for propagating waves on a passive medium."""
    rs, rp = fresnel_coefficients(complex(re, im), min(s, 0.999))
    assert abs(rs) <= 1 + 1e-12 and abs(rp) <= 1 + 1e-12


@settings(max_examples=60, deadline=None)
@given(st.floats(-20, 20), st.floats(1e-3, 20))
def test_rp_equals_minus_rs_at_normal_incidence(re, im):
    rs, rp = fresnel_coefficients(complex(re, im), 0.0)
    assert rp == pytest.approx(-rs, abs=1e-12)


def test_oscillator_validation():
    with pytest.raises(ValueError):
        LorentzPermittivity(1.0, (Oscillator(-1.0, 1.0),))
