"""Driven steady state, free decay and fluorescence of the coupled dipoles.

Times are in units of τ0 = 1/Γ, rates and detunings in units of Γ.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import expm

from .coupling import (
    FROM_SHIFTED,
    AtomArray,
    CouplingMatrices,
    EvolutionMatrix,
    Surface,
    build_matrices,
    evolution_matrix,
)
from .errors import DomainError, NumericError
from .green_free import unit
from .green_surface import PHYSICAL_SCALE, SommerfeldConfig

DEFAULT_T_MAX = 30.0
DEFAULT_POINTS = 2000
DEFAULT_WINDOW = (0.0, 1.0)
LATE_WINDOW = (4.0, 10.0)
_COND_LIMIT = 1e8


@dataclass(frozen=True)
class DriveField:
    direction: tuple = (0.0, 0.0, -1.0)
    omega0: float = 1e-3
    delta_eff: float = 10.0

    def __post_init__(self):
        object.__setattr__(self, "direction", tuple(unit(self.direction).tolist()))
        if not self.omega0 > 0:
            raise DomainError("Rabi amplitude must be positive")

    def rabi(self, positions) -> np.ndarray:
        """Ω_a = Ω0 exp(i k̂·r_a), positions in units of 1/k."""
        return self.omega0 * np.exp(1j * np.asarray(positions) @ np.asarray(self.direction))


@dataclass
class FluorescenceTrace:
    t: np.ndarray
    p_norm: np.ndarray
    beta0: np.ndarray
    p0: float = 1.0


@dataclass
class DecayFit:
    tau_over_tau0: float
    window: Tuple[float, float]
    residual: float


def _matrix(M) -> np.ndarray:
    return M.M if isinstance(M, EvolutionMatrix) else np.asarray(M, dtype=complex)


def steady_state(M, drive: DriveField, positions) -> np.ndarray:
    """Solve M β = (i/2) Ω for the driven steady state."""
    A = _matrix(M)
    rhs = 0.5j * drive.rabi(positions)
    try:
        return np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"evolution matrix is singular: {exc}") from exc


def free_decay(M, beta_ss, t_grid) -> np.ndarray:
    """β(t) = exp(M t) β_ss on ``t_grid``; rows are times.

    Uses the eigenbasis of M; falls back to Padé scaling-and-squaring when
    the eigenvectors are ill-conditioned (non-normal, near-defective M).
    """
    A = _matrix(M)
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size == 0 or t[0] != 0 or np.any(np.diff(t) <= 0):
        raise DomainError("time grid must start at 0 and increase strictly")
    beta_ss = np.asarray(beta_ss, dtype=complex)
    try:
        w, U = np.linalg.eig(A)
        cond = np.linalg.cond(U)
    except np.linalg.LinAlgError:
        cond = np.inf
    if np.isfinite(cond) and cond <= _COND_LIMIT:
        c = np.linalg.solve(U, beta_ss)
        out = (np.exp(np.outer(t, w)) * c) @ U.T
        out[0] = beta_ss
        return out
    try:
        return np.array([expm(A * ti) @ beta_ss for ti in t])
    except Exception as exc:  # scipy raises assorted LinAlg/Value errors
        raise NumericError(f"matrix exponential fallback (scaling-and-squaring) failed: {exc}") from exc


def emitted_power(M, beta_t) -> np.ndarray:
    """P = -d/dt Σ|β|² = -2 Re(β† M β), evaluated analytically."""
    A = _matrix(M)
    b = np.atleast_2d(beta_t)
    return -2.0 * np.real(np.einsum("ti,ij,tj->t", b.conj(), A, b))


def fluorescence(M, beta_t, t_grid) -> FluorescenceTrace:
    p = emitted_power(M, beta_t)
    if not p[0] > 0:
        raise NumericError("emitted power at switch-off is not positive (no excitation)")
    return FluorescenceTrace(np.asarray(t_grid, dtype=float), p / p[0], np.asarray(beta_t)[0], float(p[0]))


def fit_decay(trace: FluorescenceTrace, window: Tuple[float, float] = DEFAULT_WINDOW) -> DecayFit:
    """Exponential fit P/P0 ∝ exp(-t/τ) by least squares on ln P over ``window``."""
    t0, t1 = window
    sel = (trace.t >= t0 - 1e-12) & (trace.t <= t1 + 1e-12)
    if sel.sum() < 10:
        raise DomainError(f"fit window {window} holds {int(sel.sum())} samples; need >= 10")
    t = trace.t[sel]
    p = trace.p_norm[sel]
    if np.any(p <= 0):
        raise DomainError("fit window contains non-positive power samples")
    slope, icpt = np.polyfit(t, np.log(p), 1)
    if slope >= 0:
        raise DomainError("fitted power does not decay in the window")
    resid = float(np.sqrt(np.mean((np.log(p) - (slope * t + icpt)) ** 2)))
    return DecayFit(float(-1.0 / slope), (float(t0), float(t1)), resid)


def auto_window(matrices: CouplingMatrices, window=DEFAULT_WINDOW) -> Tuple[float, float]:
    """Shorten the fit window to 3/(largest diagonal rate) when decay is fast."""
    rate = float(np.max(np.diag(matrices.Gamma)))
    t0, t1 = window
    if rate > 0 and 3.0 / rate < t1:
        return (t0, 3.0 / rate) if t0 < 3.0 / rate else (0.0, 3.0 / rate)
    return (t0, t1)


@dataclass
class DecayResult:
    array: AtomArray
    matrices: CouplingMatrices
    evolution: EvolutionMatrix
    trace: FluorescenceTrace
    fit: DecayFit
    late_fit: Optional[DecayFit] = None
    extra: dict = field(default_factory=dict)


def simulate_decay(array: AtomArray, surface: Optional[Surface] = None,
                   drive: DriveField = DriveField(),
                   t_grid=None,
                   cfg: SommerfeldConfig = SommerfeldConfig(),
                   scale: float = PHYSICAL_SCALE,
                   convention: str = FROM_SHIFTED,
                   window: Tuple[float, float] = DEFAULT_WINDOW,
                   fit_points: int = 201) -> DecayResult:
    """Full pipeline: couplings, steady state, switch-off, decay trace and fit.

    The fit uses its own uniform grid of ``fit_points`` samples across the
    (possibly shortened) window, so it does not depend on ``t_grid``.
    """
    if t_grid is None:
        t_grid = np.linspace(0.0, DEFAULT_T_MAX, DEFAULT_POINTS)
    mats = build_matrices(array, surface, cfg, scale)
    evo = evolution_matrix(mats, drive.delta_eff, convention)
    beta_ss = steady_state(evo, drive, array.positions())
    trace = fluorescence(evo, free_decay(evo, beta_ss, t_grid), t_grid)

    win = auto_window(mats, window)
    t_fit = np.linspace(win[0], win[1], fit_points) if win[0] == 0 else \
        np.concatenate([[0.0], np.linspace(win[0], win[1], fit_points)])
    fit_trace = fluorescence(evo, free_decay(evo, beta_ss, t_fit), t_fit)
    fit = fit_decay(fit_trace, win)

    late = None
    sel = (trace.t >= LATE_WINDOW[0]) & (trace.t <= LATE_WINDOW[1])
    if sel.sum() >= 10 and np.all(trace.p_norm[sel] > 0):
        try:
            late = fit_decay(trace, LATE_WINDOW)
        except DomainError:
            late = None
    return DecayResult(array, mats, evo, trace, fit, late)


def decay_time(n: int, kd: float, kh: float, surface: Optional[Surface], d_hat=(0, 0, 1),
               drive: DriveField = DriveField(), cfg: SommerfeldConfig = SommerfeldConfig(),
               scale: float = PHYSICAL_SCALE, window=DEFAULT_WINDOW,
               convention: str = FROM_SHIFTED) -> float:
    """Fitted τ/τ0 for one configuration (no long trace is computed)."""
    array = AtomArray(n, kd, kh, d_hat)
    mats = build_matrices(array, surface, cfg, scale)
    evo = evolution_matrix(mats, drive.delta_eff, convention)
    beta_ss = steady_state(evo, drive, array.positions())
    win = auto_window(mats, window)
    t_fit = np.linspace(0.0, win[1], 201)
    tr = fluorescence(evo, free_decay(evo, beta_ss, t_fit), t_fit)
    return fit_decay(tr, (0.0, win[1])).tau_over_tau0


@dataclass
class SweepRow:
    kh: float
    tau_single: float
    tau_multi: float

    @property
    def difference(self) -> float:
        # single-atom curve minus the multi-atom curve
        return self.tau_single - self.tau_multi


def sweep_point(kh: float, n: int, kd: float, surface: Optional[Surface], d_hat=(0, 0, 1),
                drive: DriveField = DriveField(), cfg: SommerfeldConfig = SommerfeldConfig(),
                scale: float = PHYSICAL_SCALE, window=DEFAULT_WINDOW) -> SweepRow:
    single = decay_time(1, kd, kh, surface, d_hat, drive, cfg, scale, window)
    multi = decay_time(n, kd, kh, surface, d_hat, drive, cfg, scale, window)
    return SweepRow(float(kh), single, multi)


def sweep_decay_vs_height(kh_list: Sequence[float], n: int = 5, kd: float = 1.0,
                          surface: Optional[Surface] = None, d_hat=(0, 0, 1),
                          drive: DriveField = DriveField(), cfg: SommerfeldConfig = SommerfeldConfig(),
                          scale: float = PHYSICAL_SCALE, window=DEFAULT_WINDOW,
                          executor=None):
    """τ/τ0 against height for one atom and for ``n`` atoms.

    ``executor`` may be any concurrent.futures executor; results keep the
    order of ``kh_list`` regardless of scheduling.
    """
    args = [(float(kh), n, kd, surface, d_hat, drive, cfg, scale, window) for kh in kh_list]
    if executor is None:
        return [sweep_point(*a) for a in args]
    return list(executor.map(_sweep_star, args))


def _sweep_star(a):
    return sweep_point(*a)
