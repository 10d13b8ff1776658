"""Reflected (scattering) Green tensor of a vacuum/half-space interface.

Both atoms sit at height ``kh`` above the surface and are separated by
``ky`` along the y axis (all lengths in units of 1/k).  The tensor is the
Sommerfeld integral over the transverse wavenumber ``s = k_rho/k``::

    g_R = i ∫_0^∞ ds (s/s_z) [G_s - s_z² G_p],   s_z = sqrt(1 - s²)

split at s = 1.  The propagating part uses s = sin θ, the evanescent part
s_z = i q, which leaves smooth integrands on both pieces.  Normalisation is
the one of :mod:`coopsurf.green_free`, so ``3/4 Re`` and ``3/2 Im`` of the
contracted tensor are the shift and rate in units of Γ.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import quad_vec
from scipy.special import jv

from .dielectric import (
    PermittivityModel,
    branch_sqrt,
    fresnel_coefficients,
    permittivity,
    polariton_pole_from_eps,
)
from .errors import DomainError, IntegrationError, WavelengthRangeError
from .green_free import RATE_PREFACTOR, SHIFT_PREFACTOR, free_green_tensor, unit

# Overall scale applied to Green-tensor couplings.  PHYSICAL keeps the
# normalisation in which the pair rate tends to Γ at zero separation;
# REDUCED is 2/3 of it, the normalisation behind the reference single-atom
# table and the decay-time presets.
PHYSICAL_SCALE = 1.0
REDUCED_SCALE = 2.0 / 3.0

_Q_MAX_GUARD = 1e9


@dataclass(frozen=True)
class SommerfeldConfig:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-12
    max_subdivisions: int = 4000
    tail_cutoff_tol: float = 1e-15
    debug_csv: Optional[str] = field(default=None, compare=False)

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol", "tail_cutoff_tol"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise ValueError(f"{name} must lie in (0, 1), got {v}")
        if self.max_subdivisions < 8:
            raise ValueError("max_subdivisions must be >= 8")


@dataclass(frozen=True)
class SurfacePairInput:
    wavelength: float
    kh: float
    ky: float = 0.0
    model: PermittivityModel = None

    def __post_init__(self):
        if not self.kh > 0:
            raise DomainError(f"atom height must be positive, got kh={self.kh}")


@dataclass
class SurfaceGreenResult:
    tensor: np.ndarray
    err_estimate: float
    segments_used: int
    propagating: np.ndarray = None
    evanescent: np.ndarray = None


def _kernel(eps, kh, ky, s, sz):
    """G_s - s_z² G_p for every separation in ``ky``; shape (len(ky), 3, 3).

    The 1/s_z Jacobian is absorbed by the caller.  ``ky`` carries the sign
    y_a - y_b, which enters through sin φ in the yz/zy elements.
    """
    rs, rp = fresnel_coefficients(eps, s)
    e = np.exp(2j * kh * sz)
    x = np.abs(ky) * s.real
    j0, j1, j2 = jv(0, x), jv(1, x), jv(2, x)
    sgn = np.sign(ky)
    out = np.zeros((ky.size, 3, 3), dtype=complex)
    sz2 = sz * sz
    out[:, 0, 0] = 0.5 * e * (rs * (j0 - j2) - sz2 * rp * (j0 + j2))
    out[:, 1, 1] = 0.5 * e * (rs * (j0 + j2) - sz2 * rp * (j0 - j2))
    cross = -1j * e * rp * s * sz * j1 * sgn
    out[:, 1, 2] = cross
    out[:, 2, 1] = -cross
    out[:, 2, 2] = e * rp * s * s * j0
    return out


def _breakpoints_q(eps, kh, q_max):
    pts = []
    for c in (0.25, 1.0, 4.0, 16.0):
        q = c / kh
        if q < q_max:
            pts.append(q)
    pole = polariton_pole_from_eps(eps)
    if pole is not None and pole.real > 1 and abs(pole.imag) < 0.1 * pole.real:
        for f in (0.9, 1.0, 1.1):
            s = f * pole.real
            if s > 1:
                q = np.sqrt(s * s - 1.0)
                if q < q_max:
                    pts.append(q)
    return sorted(set(pts))


def scattering_green_eps(eps: complex, kh: float, ky, cfg: SommerfeldConfig = SommerfeldConfig()):
    """Reflected tensor(s) for a given permittivity.  ``ky`` may be an array."""
    if not kh > 0:
        raise DomainError(f"atom height must be positive, got kh={kh}")
    ky = np.atleast_1d(np.asarray(ky, dtype=float))
    eps = complex(eps)
    q_max = -np.log(cfg.tail_cutoff_tol) / (2.0 * kh)
    if q_max > _Q_MAX_GUARD:
        raise WavelengthRangeError(
            f"kh={kh:g} needs q_max={q_max:.3g}; increase tail_cutoff_tol or the height"
        )

    def f_prop(theta):
        s, sz = np.sin(theta), np.cos(theta)
        return 1j * s * _kernel(eps, kh, ky, np.array(s, dtype=complex), np.array(sz, dtype=complex))

    def f_evan(q):
        s = np.sqrt(1.0 + q * q)
        return _kernel(eps, kh, ky, np.array(s, dtype=complex), np.array(1j * q))

    kw = dict(epsabs=cfg.abs_tol, epsrel=cfg.rel_tol, limit=cfg.max_subdivisions, norm="max", full_output=True)
    prop, err_p, info_p = quad_vec(f_prop, 0.0, np.pi / 2, **kw)
    evan, err_e, info_e = quad_vec(f_evan, 0.0, q_max, points=_breakpoints_q(eps, kh, q_max) or None, **kw)
    for name, info, err, val in (("propagating", info_p, err_p, prop), ("evanescent", info_e, err_e, evan)):
        allowed = max(cfg.abs_tol, cfg.rel_tol * float(np.abs(val).max()))
        if not info.success and err > allowed:
            worst = info.intervals[np.argmax(info.errors)] if len(info.errors) else None
            raise IntegrationError(
                f"{name} Sommerfeld integral did not converge (kh={kh:g}, err={err:.3g})",
                worst_segment=None if worst is None else tuple(worst),
                error=err,
            )
    if cfg.debug_csv:
        dump_integrand_csv(cfg.debug_csv, eps, kh, float(ky[0]))
    segments = len(info_p.intervals) + len(info_e.intervals)
    return prop + evan, float(err_p + err_e), segments, prop, evan


def scattering_green(inp: SurfacePairInput, cfg: SommerfeldConfig = SommerfeldConfig()) -> SurfaceGreenResult:
    eps = permittivity(inp.model, inp.wavelength)
    tot, err, seg, prop, evan = scattering_green_eps(eps, inp.kh, inp.ky, cfg)
    return SurfaceGreenResult(tot[0], err, seg, prop[0], evan[0])


def contract(tensor, d_hat) -> complex:
    d = np.asarray(d_hat)
    return complex(np.conj(d) @ tensor @ d)


def couplings_from_tensor(tensor, d_hat, scale: float = 1.0):
    """(V/Γ, Γ/Γ) from a dimensionless tensor; vectorised over leading axes."""
    d = np.asarray(d_hat)
    val = np.einsum("i,...ij,j->...", np.conj(d), tensor, d)
    return scale * SHIFT_PREFACTOR * val.real, scale * RATE_PREFACTOR * val.imag


def surface_couplings(inp: SurfacePairInput, d_hat, cfg: SommerfeldConfig = SommerfeldConfig(), scale: float = 1.0):
    """Surface parts (V^R/Γ, Γ^R/Γ).  For ky = 0 these are the single-atom terms."""
    d_hat = unit(d_hat)
    res = scattering_green(inp, cfg)
    v, g = couplings_from_tensor(res.tensor, d_hat, scale)
    return float(v), float(g)


_MIRROR = np.diag([-1.0, -1.0, 1.0])


def image_tensor(kh: float, ky: float) -> np.ndarray:
    """Reflected tensor of a perfect mirror: free tensor to the image source."""
    if not kh > 0:
        raise DomainError("kh must be positive")
    return free_green_tensor((0.0, ky, 2.0 * kh)) @ _MIRROR


def image_oracle(kh: float, ky: float, d_hat):
    """Perfect-mirror couplings (V/Γ, Γ/Γ) between atom a and the image of atom b."""
    d = unit(d_hat)
    val = d @ image_tensor(kh, ky) @ d
    return float(SHIFT_PREFACTOR * val.real), float(RATE_PREFACTOR * val.imag)


# reference heights for the quasi-static extrapolation
_NF_HEIGHTS = (0.004, 0.002)


def near_field_coefficient(eps: complex, cfg: SommerfeldConfig = SommerfeldConfig()) -> np.ndarray:
    """lim kh→0 of kh³·g_R at ky = 0, by Richardson extrapolation (O(kh²) error)."""
    h1, h2 = _NF_HEIGHTS
    t1 = h1**3 * scattering_green_eps(eps, h1, 0.0, cfg)[0][0]
    t2 = h2**3 * scattering_green_eps(eps, h2, 0.0, cfg)[0][0]
    return (4.0 * t2 - t1) / 3.0


def near_field_asymptote(model: PermittivityModel, wavelength: float, kh: float,
                         cfg: SommerfeldConfig = SommerfeldConfig()) -> np.ndarray:
    """Quasi-static reflected tensor ∝ S(ω)/h³ at a single atom position."""
    if not 0 < kh < 0.05:
        raise DomainError(f"near-field asymptote requires 0 < kh < 0.05, got {kh}")
    eps = permittivity(model, wavelength)
    if eps == 1:
        return np.zeros((3, 3), dtype=complex)
    return near_field_coefficient(eps, cfg) / kh**3


def quasi_static_tensor(eps: complex, kh: float) -> np.ndarray:
    """Closed-form kh → 0 limit of the reflected tensor at ky = 0."""
    S = (eps - 1.0) / (eps + 1.0)
    return np.diag([S / 8.0, S / 8.0, S / 4.0]) / kh**3


def dump_integrand_csv(path: str, eps: complex, kh: float, ky: float, s_values=None) -> None:
    """Write integrand samples (per unit s) of every tensor element to CSV."""
    if s_values is None:
        s_values = np.concatenate([np.linspace(0.0, 0.999, 200), 1.0 + np.geomspace(1e-3, 20.0 / kh, 400)])
    s = np.asarray(s_values, dtype=complex)
    sz = branch_sqrt(1.0 - s * s)
    rows = []
    for si, szi in zip(s, sz):
        with np.errstate(divide="ignore", invalid="ignore"):
            k = 1j * (si / szi) * _kernel(eps, kh, np.array([ky]), np.array(si), np.array(szi))[0]
        rows.append([si.real] + [x for v in k.ravel() for x in (v.real, v.imag)])
    names = ["x", "y", "z"]
    header = ["k_rho_over_k"] + [f"{p}_{a}{b}" for a in names for b in names for p in ("re", "im")]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([f"{x:.17g}" for x in r])
