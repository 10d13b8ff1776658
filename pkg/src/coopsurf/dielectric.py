"""Dielectric response of the half-space below the atoms.

Wavelengths are in micrometres, angular frequencies in rad/s.  Transverse
wavenumbers passed to :func:`fresnel` are in units of the vacuum wavenumber
``k = 2*pi/wavelength``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import PchipInterpolator

from .errors import (
    IntegrationError,
    SingularityError,
    UnsupportedOperationError,
    WavelengthRangeError,
)

C_LIGHT = 299_792_458.0  # m/s


def omega_from_wavelength(wavelength):
    """Angular frequency (rad/s) for a vacuum wavelength in µm."""
    return 2.0 * np.pi * C_LIGHT / (np.asarray(wavelength) * 1e-6)


def wavelength_from_omega(omega):
    return 2.0 * np.pi * C_LIGHT / np.asarray(omega) * 1e6


@dataclass(frozen=True)
class ConstantPermittivity:
    value: complex = 1.0 + 0j

    def __post_init__(self):
        object.__setattr__(self, "value", complex(self.value))
        if self.value.imag < 0:
            raise ValueError("passive medium requires Im(eps) >= 0")


@dataclass(frozen=True)
class Oscillator:
    """One Lorentz term ``strength / (resonance**2 - w**2 - 1j*damping*w)``.

    ``strength`` is in (rad/s)**2, the other two in rad/s.
    """

    strength: float
    resonance: float
    damping: float = 0.0


@dataclass(frozen=True)
class LorentzPermittivity:
    eps_inf: float = 1.0
    oscillators: Tuple[Oscillator, ...] = ()

    def __post_init__(self):
        oscs = tuple(o if isinstance(o, Oscillator) else Oscillator(*o) for o in self.oscillators)
        for o in oscs:
            if o.strength < 0 or o.resonance <= 0 or o.damping < 0:
                raise ValueError(f"unphysical oscillator {o}")
        object.__setattr__(self, "oscillators", oscs)


@dataclass(frozen=True)
class TabulatedPermittivity:
    """Sampled ε(λ); Re and Im are interpolated separately with PCHIP."""

    wavelengths: Tuple[float, ...]
    values: Tuple[complex, ...]
    name: str = "table"
    _re: PchipInterpolator = field(init=False, repr=False, compare=False)
    _im: PchipInterpolator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        lam = np.asarray(self.wavelengths, dtype=float)
        eps = np.asarray(self.values, dtype=complex)
        if lam.ndim != 1 or lam.size != eps.size or lam.size < 2:
            raise ValueError("need at least two (wavelength, eps) samples")
        if np.any(np.diff(lam) <= 0):
            raise ValueError("tabulated wavelengths must be strictly increasing")
        if np.any(eps.imag < 0):
            raise ValueError("tabulated Im(eps) must be >= 0 (passive medium)")
        object.__setattr__(self, "wavelengths", tuple(lam.tolist()))
        object.__setattr__(self, "values", tuple(eps.tolist()))
        object.__setattr__(self, "_re", PchipInterpolator(lam, eps.real))
        object.__setattr__(self, "_im", PchipInterpolator(lam, eps.imag))

    @property
    def bounds(self):
        return self.wavelengths[0], self.wavelengths[-1]


PermittivityModel = Union[ConstantPermittivity, LorentzPermittivity, TabulatedPermittivity]

VACUUM = ConstantPermittivity(1.0)

# Sapphire samples around the Cs 12.15 µm line; the 12.15 µm entry sits at
# the surface resonance, Re(eps) ~ -1.
SAPPHIRE = TabulatedPermittivity(
    wavelengths=(8.15, 10.15, 12.15, 14.15, 16.15),
    values=(1.8 + 0.015j, 0.78 + 0.040j, -0.95 + 0.11j, -4.6 + 0.43j, -12.0 + 4.0j),
    name="sapphire",
)


def permittivity(model: PermittivityModel, wavelength: float) -> complex:
    """ε at a vacuum wavelength (µm)."""
    if not wavelength > 0:
        raise WavelengthRangeError(f"wavelength must be positive, got {wavelength}")
    if isinstance(model, ConstantPermittivity):
        return model.value
    if isinstance(model, LorentzPermittivity):
        return permittivity_at_omega(model, float(omega_from_wavelength(wavelength)))
    if isinstance(model, TabulatedPermittivity):
        lo, hi = model.bounds
        if not lo <= wavelength <= hi:
            raise WavelengthRangeError(
                f"{model.name}: wavelength {wavelength} µm outside table range [{lo}, {hi}]"
            )
        eps = complex(float(model._re(wavelength)), float(model._im(wavelength)))
        # PCHIP preserves the sign of the data, but guard against -0 round-off
        return complex(eps.real, max(eps.imag, 0.0))
    raise TypeError(f"unknown permittivity model {type(model).__name__}")


def permittivity_at_omega(model: PermittivityModel, omega: float) -> complex:
    if isinstance(model, LorentzPermittivity):
        eps = complex(model.eps_inf)
        for o in model.oscillators:
            eps += o.strength / (o.resonance**2 - omega**2 - 1j * o.damping * omega)
        return eps
    return permittivity(model, float(wavelength_from_omega(omega)))


def surface_response_from_eps(eps: complex) -> complex:
    eps = complex(eps)
    if eps == -1:
        raise SingularityError("surface response diverges: eps = -1 exactly (lossless polariton)")
    return (eps - 1.0) / (eps + 1.0)


def surface_response(model: PermittivityModel, wavelength: float) -> complex:
    """S = (ε-1)/(ε+1)."""
    eps = permittivity(model, wavelength)
    try:
        return surface_response_from_eps(eps)
    except SingularityError as exc:
        raise SingularityError(f"{exc} at wavelength {wavelength} µm") from None


def permittivity_imag_axis(model: PermittivityModel, xi: float) -> float:
    """ε(iξ) for analytic models; ξ in rad/s."""
    if xi < 0:
        raise ValueError("xi must be >= 0")
    if isinstance(model, ConstantPermittivity):
        if model.value.imag != 0:
            raise UnsupportedOperationError(
                "a complex constant permittivity has no causal continuation to imaginary frequency"
            )
        return model.value.real
    if isinstance(model, LorentzPermittivity):
        eps = model.eps_inf
        for o in model.oscillators:
            eps += o.strength / (o.resonance**2 + xi**2 + o.damping * xi)
        return eps
    raise UnsupportedOperationError(
        f"{type(model).__name__} has no analytic continuation to imaginary frequency"
    )


def image_coefficient(model: PermittivityModel, omega_ij: float, tol: float = 1e-9) -> float:
    """Zero-temperature image coefficient r(ω_ij).

    The vacuum-renormalisation integral over imaginary frequency is mapped to
    a finite interval with ξ = |ω| tan(u).  The resonant term -2 Re S(ω) only
    applies to emission (ω_ij > 0).
    """
    if omega_ij == 0:
        raise ValueError("omega_ij must be nonzero")
    w = abs(omega_ij)

    def integrand(u):
        e = permittivity_imag_axis(model, w * np.tan(u))
        return (e - 1.0) / (e + 1.0)

    val, err = quad(integrand, 0.0, np.pi / 2, epsabs=tol, epsrel=tol, limit=200)
    if err > tol * max(1.0, abs(val)):
        raise IntegrationError(f"image coefficient integral not converged (err={err:.3g})", error=err)
    r = (2.0 / np.pi) * val
    if omega_ij > 0:
        r -= 2.0 * surface_response_from_eps(permittivity_at_omega(model, w)).real
    return r


def branch_sqrt(z):
    """Square root with Im >= 0 (decaying/outgoing branch); Re >= 0 otherwise."""
    w = np.sqrt(np.asarray(z, dtype=complex))
    return np.where(w.imag < 0, -w, w)


def fresnel_coefficients(eps: complex, s):
    """Vectorised (r_s, r_p) for transverse wavenumber ``s = k_rho/k``."""
    s = np.asarray(s, dtype=complex)
    kz = branch_sqrt(1.0 - s * s)
    k2z = branch_sqrt(eps - s * s)
    rs = (kz - k2z) / (kz + k2z)
    rp = (eps * kz - k2z) / (eps * kz + k2z)
    return rs, rp


@dataclass(frozen=True)
class FresnelPair:
    r_s: complex
    r_p: complex


def fresnel(model: PermittivityModel, wavelength: float, k_rho: float) -> FresnelPair:
    if k_rho < 0:
        raise ValueError("k_rho must be >= 0")
    rs, rp = fresnel_coefficients(permittivity(model, wavelength), k_rho)
    return FresnelPair(complex(rs), complex(rp))


def polariton_pole_from_eps(eps: complex) -> Optional[complex]:
    """Pole of r_p in units of k: s = sqrt(ε/(ε+1)), when a bound mode can exist.

    Returns None when Re ε >= 0 (no surface mode).  Near resonance
    (-1 < Re ε < 0 with losses) the pole is kept: it is a broad feature at
    large |s| that still benefits from extra breakpoints.
    """
    eps = complex(eps)
    if eps.real >= 0 or eps == -1:
        return None
    s = np.sqrt(eps / (eps + 1.0))
    if s.real < 0:
        s = -s
    if not np.isfinite(s):
        return None
    return complex(s)


def polariton_pole(model: PermittivityModel, wavelength: float) -> Optional[complex]:
    return polariton_pole_from_eps(permittivity(model, wavelength))


def lorentz_from_wavelengths(
    eps_inf: float, terms: Sequence[Tuple[float, float, float]]
) -> LorentzPermittivity:
    """Build a Lorentz model from (delta_eps, resonance wavelength µm, damping/resonance) triples."""
    oscs = []
    for d_eps, lam, rel_damp in terms:
        w0 = float(omega_from_wavelength(lam))
        oscs.append(Oscillator(d_eps * w0**2, w0, rel_damp * w0))
    return LorentzPermittivity(eps_inf, tuple(oscs))
