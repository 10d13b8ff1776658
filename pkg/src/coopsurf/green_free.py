"""Free-space dipole-dipole couplings between two identical atoms.

Couplings are returned in units of the single-atom rate Γ.  The prefactors
3/4 (shift) and 3/2 (rate) make the pair rate tend to Γ as the separation
goes to zero, so the diagonal convention ``(V_aa, Γ_aa) = (0, Γ)`` is the
continuous limit of the off-diagonal formula.

The dimensionless Green tensor ``g`` used throughout the package is related
to the SI tensor by ``G = k/(4π) g``; with this scaling
``V/Γ = 3/4 Re(d·g·d)`` and ``Γ_ab/Γ = 3/2 Im(d·g·d)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

SHIFT_PREFACTOR = 0.75
RATE_PREFACTOR = 1.5

# below this separation the rate bracket is evaluated from its Taylor series
_SERIES_KAPPA = 1e-2


def unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n == 0:
        raise DomainError("zero vector has no direction")
    return v / n


@dataclass(frozen=True)
class PairGeometry:
    kappa: float
    d_hat: tuple = (0.0, 0.0, 1.0)
    r_hat: tuple = (0.0, 1.0, 0.0)

    def __post_init__(self):
        for name in ("d_hat", "r_hat"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.shape != (3,) or abs(np.linalg.norm(v) - 1.0) > 1e-12:
                raise DomainError(f"{name} must be a unit 3-vector, got {v}")
            object.__setattr__(self, name, tuple(v.tolist()))

    @property
    def cos_angle(self) -> float:
        return float(np.dot(self.d_hat, self.r_hat))


def _brackets(kappa, cos2):
    """Shift and rate brackets (before prefactors), vectorised over kappa."""
    kappa = np.asarray(kappa, dtype=float)
    cos2 = np.asarray(cos2, dtype=float)
    transverse = 1.0 - cos2
    longitudinal = 1.0 - 3.0 * cos2
    c, s = np.cos(kappa), np.sin(kappa)
    shift = transverse * c / kappa - longitudinal * (s / kappa**2 + c / kappa**3)
    k2 = kappa * kappa
    small = kappa < _SERIES_KAPPA
    with np.errstate(invalid="ignore", divide="ignore"):
        sinc = np.where(small, 1.0 - k2 / 6.0 + k2 * k2 / 120.0, s / kappa)
        # (kappa cos - sin)/kappa^3, which cancels catastrophically near 0
        near = np.where(small, -1.0 / 3.0 + k2 / 30.0 - k2 * k2 / 840.0, (kappa * c - s) / kappa**3)
    rate = transverse * sinc + longitudinal * near
    return shift, rate


def free_pair(kappa, cos_angle):
    """(V/Γ, Γ_ab/Γ) for separations ``kappa`` and d·r̂ = ``cos_angle``."""
    kappa = np.asarray(kappa, dtype=float)
    if np.any(kappa <= 0):
        raise DomainError("free coupling needs kappa > 0; use diagonal_free() for a == b")
    shift, rate = _brackets(kappa, np.asarray(cos_angle, dtype=float) ** 2)
    return SHIFT_PREFACTOR * shift, RATE_PREFACTOR * rate


def free_couplings(geom: PairGeometry):
    v, g = free_pair(geom.kappa, geom.cos_angle)
    return float(v), float(g)


def diagonal_free():
    return 0.0, 1.0


def free_green_tensor(r_vec) -> np.ndarray:
    """Dimensionless free-space tensor g0 for separation ``r_vec`` (units of 1/k)."""
    r_vec = np.asarray(r_vec, dtype=float)
    kappa = np.linalg.norm(r_vec)
    if kappa == 0:
        raise DomainError("free Green tensor is singular at zero separation")
    rr = np.outer(r_vec, r_vec) / kappa**2
    phase = np.exp(1j * kappa) / kappa
    a = 1.0 + 1j / kappa - 1.0 / kappa**2
    b = -1.0 - 3j / kappa + 3.0 / kappa**2
    return phase * (a * np.eye(3) + b * rr)
