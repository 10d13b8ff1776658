"""Collective shift and decay matrices for a line of atoms above a surface."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import toeplitz

from .dielectric import PermittivityModel, permittivity
from .errors import DomainError, ModelMismatchError, NumericError
from .green_free import diagonal_free, free_pair, unit
from .green_surface import (
    PHYSICAL_SCALE,
    SommerfeldConfig,
    couplings_from_tensor,
    scattering_green_eps,
)

FROM_SHIFTED = "from_shifted"
FROM_BARE = "from_bare"

CS_WAVELENGTH_UM = 12.15
CS_GAMMA_KHZ = 14.32  # Γ/2π

Surface = Tuple[PermittivityModel, float]  # (model, atomic wavelength in µm)


@dataclass(frozen=True)
class AtomArray:
    """Atoms at (0, a*kd, kh), a = 0..n-1, lengths in units of 1/k."""

    n: int
    kd: float = 1.0
    kh: float = 1.0
    d_hat: tuple = (0.0, 0.0, 1.0)

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"n must be a positive integer, got {self.n}")
        if self.n > 1 and not self.kd > 0:
            raise DomainError(f"kd must be positive for n > 1, got {self.kd}")
        if not self.kh > 0:
            raise DomainError(f"kh must be positive, got {self.kh}")
        object.__setattr__(self, "d_hat", tuple(unit(self.d_hat).tolist()))

    def positions(self) -> np.ndarray:
        pos = np.zeros((self.n, 3))
        pos[:, 1] = np.arange(self.n) * self.kd
        pos[:, 2] = self.kh
        return pos


@dataclass
class CouplingMatrices:
    V: np.ndarray
    Gamma: np.ndarray
    V_free: np.ndarray
    Gamma_free: np.ndarray
    V_surf: np.ndarray
    Gamma_surf: np.ndarray
    err_estimate: float = 0.0
    segments_used: int = 0

    def to_json(self) -> dict:
        return {
            "n": int(self.V.shape[0]),
            "V": self.V.tolist(),
            "Gamma": self.Gamma.tolist(),
            "V_free": self.V_free.tolist(),
            "Gamma_free": self.Gamma_free.tolist(),
            "V_surface": self.V_surf.tolist(),
            "Gamma_surface": self.Gamma_surf.tolist(),
            "integration_error": self.err_estimate,
        }


@dataclass
class EvolutionMatrix:
    M: np.ndarray
    detuning_convention: str = FROM_SHIFTED

    def to_json(self) -> dict:
        return {"re": self.M.real.tolist(), "im": self.M.imag.tolist(),
                "detuning_convention": self.detuning_convention}


def separation_couplings(array: AtomArray, surface: Optional[Surface] = None,
                         cfg: SommerfeldConfig = SommerfeldConfig(),
                         scale: float = PHYSICAL_SCALE):
    """Pair values for separations m = 0..n-1 (free, surface, error, segments).

    ``scale`` multiplies every Green-tensor coupling (free off-diagonal and
    surface); the free diagonal stays (0, 1).
    """
    d = np.asarray(array.d_hat)
    m = np.arange(array.n)
    v_free = np.zeros(array.n)
    g_free = np.zeros(array.n)
    v_free[0], g_free[0] = diagonal_free()
    if array.n > 1:
        # line along y: r_hat = y_hat for every pair
        v, g = free_pair(m[1:] * array.kd, d[1])
        v_free[1:], g_free[1:] = scale * v, scale * g
    v_surf = np.zeros(array.n)
    g_surf = np.zeros(array.n)
    err, segs = 0.0, 0
    if surface is not None:
        model, wavelength = surface
        eps = permittivity(model, wavelength)
        if eps != 1:
            tensors, err, segs, _, _ = scattering_green_eps(eps, array.kh, m * array.kd, cfg)
            v_surf, g_surf = couplings_from_tensor(tensors, d, scale)
    return (v_free, g_free), (v_surf, g_surf), err, segs


def build_matrices(array: AtomArray, surface: Optional[Surface] = None,
                   cfg: SommerfeldConfig = SommerfeldConfig(),
                   scale: float = PHYSICAL_SCALE) -> CouplingMatrices:
    """Assemble V and Γ (units of Γ).  Couplings depend on |a-b| only, so
    n pair integrals give the full symmetric Toeplitz matrices."""
    (vf, gf), (vs, gs), err, segs = separation_couplings(array, surface, cfg, scale)
    Vf, Gf, Vs, Gs = (toeplitz(x) for x in (vf, gf, vs, gs))
    return CouplingMatrices(Vf + Vs, Gf + Gs, Vf, Gf, Vs, Gs, err, segs)


def casimir_shift_and_rate(surface: Surface, kh: float, d_hat=(0, 0, 1),
                           cfg: SommerfeldConfig = SommerfeldConfig(),
                           scale: float = PHYSICAL_SCALE):
    """Single-atom surface shift δ/Γ and added rate Γ_z/Γ.

    δ is the shift of the excited level (positive = upward), which is
    -V_aa^R in the sign convention of the coupling matrix.
    """
    m = build_matrices(AtomArray(1, 1.0, kh, d_hat), surface, cfg, scale)
    return float(-m.V_surf[0, 0]), float(m.Gamma_surf[0, 0])


@dataclass
class C3Fit:
    c3: float  # kHz·µm³, with δ = -C3/h³
    residual: float
    heights: np.ndarray
    shifts_khz: np.ndarray


def default_c3_heights(wavelength: float = CS_WAVELENGTH_UM, n: int = 5) -> np.ndarray:
    k = 2 * np.pi / wavelength
    return np.linspace(0.002, 0.01, n) / k


def extract_c3(surface: Surface, physical_gamma_khz: float = CS_GAMMA_KHZ,
               heights_um: Optional[Sequence[float]] = None, d_hat=(0, 0, 1),
               cfg: SommerfeldConfig = SommerfeldConfig(),
               scale: float = PHYSICAL_SCALE, max_residual: float = 0.01) -> C3Fit:
    """Least-squares fit of δ(h) = -C3/h³ over near-field heights."""
    model, wavelength = surface
    k = 2 * np.pi / wavelength
    h = np.asarray(default_c3_heights(wavelength) if heights_um is None else heights_um, dtype=float)
    if np.any(k * h >= 0.05) or np.any(h <= 0):
        raise DomainError("C3 scan heights must satisfy 0 < kh < 0.05")
    delta = np.array([casimir_shift_and_rate(surface, k * hi, d_hat, cfg, scale)[0] for hi in h])
    delta_khz = delta * physical_gamma_khz
    x = -1.0 / h**3
    norm = np.linalg.norm(delta_khz)
    if norm == 0:
        return C3Fit(0.0, 0.0, h, delta_khz)
    c3 = float(x @ delta_khz / (x @ x))
    residual = float(np.linalg.norm(delta_khz - c3 * x) / norm)
    if residual > max_residual:
        raise ModelMismatchError(f"δ(h) is not ∝ 1/h³ over the scan (relative residual {residual:.3g})")
    return C3Fit(c3, residual, h, delta_khz)


def evolution_matrix(m: CouplingMatrices, delta_eff: float = 0.0,
                     convention: str = FROM_SHIFTED) -> EvolutionMatrix:
    """Linear single-excitation dynamics d/dt β = M β (drive omitted).

    Off-diagonal entries are iV_ab - Γ_ab/2.  ``from_shifted`` measures the
    detuning from the surface-shifted level; ``from_bare`` adds the diagonal
    coupling V_aa to the bare detuning.
    """
    M = 1j * m.V - 0.5 * m.Gamma
    diag = -0.5 * np.diag(m.Gamma).astype(complex)
    if convention == FROM_SHIFTED:
        diag = diag + 1j * delta_eff
    elif convention == FROM_BARE:
        diag = diag + 1j * (delta_eff + np.diag(m.V))
    else:
        raise ValueError(f"unknown detuning convention {convention!r}")
    M = M.astype(complex)
    np.fill_diagonal(M, diag)
    return EvolutionMatrix(M, convention)


def mode_spectrum(M) -> np.ndarray:
    """Eigenvalues of M; decay rates of the collective modes are -2 Re λ."""
    M = M.M if isinstance(M, EvolutionMatrix) else np.asarray(M)
    try:
        return np.linalg.eigvals(M)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigenvalue computation failed: {exc}") from exc
