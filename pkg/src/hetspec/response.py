"""Susceptibilities and mechanical position noise spectra.

Frequencies and rates are in units of ``gamma_m`` unless a caller passes
``gamma_m`` explicitly. Position ``x`` and momentum ``p`` are dimensionless
(measured in zero-point units), so ``<x^2> = 2 n + 1`` in a quantum thermal state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AsymmetricGrid

VARIANTS = ("thermal", "with_backaction", "symmetrized", "moments")


def chi_m(omega, omega_m, gamma_m=1.0):
    """Mechanical susceptibility ``1 / (gamma_m/2 - i (omega - omega_m))``."""
    return 1.0 / (gamma_m / 2 - 1j * (np.asarray(omega) - omega_m))


def chi_c(omega, kappa, Delta=0.0):
    """Cavity susceptibility ``1 / (kappa/2 - i (omega + Delta))``."""
    return 1.0 / (kappa / 2 - 1j * (np.asarray(omega) + Delta))


def lorentzian(omega_tilde, omega_m, gamma_m=1.0):
    """Unit-peak Lorentzian of full width ``gamma_m`` centred on ``omega_m``."""
    h2 = (gamma_m / 2) ** 2
    return h2 / (h2 + (np.asarray(omega_tilde) - omega_m) ** 2)


def default_grid(omega_m, gamma_m=1.0, span=25.0, points=4001):
    """Symmetric grid covering ``+-(omega_m + span*gamma_m)``."""
    w = omega_m + span * gamma_m
    return np.linspace(-w, w, points)


def is_symmetric_grid(grid, rtol=1e-12):
    grid = np.asarray(grid, dtype=float)
    scale = max(np.max(np.abs(grid)), 1.0)
    return np.allclose(grid, -grid[::-1], rtol=0, atol=rtol * scale)


@dataclass(frozen=True)
class MechMoments:
    """Equal-time moments of the dimensionless position and momentum.

    ``xp_anti`` is ``<{x,p}>`` (real), ``xp_comm`` is ``<[x,p]>`` (``2i`` in
    quantum theory, 0 for a classical oscillator).
    """

    x2: float
    xp_anti: float = 0.0
    xp_comm: complex = 0.0

    def __post_init__(self):
        if self.x2 < 0:
            raise ValueError("<x^2> must be >= 0")

    @classmethod
    def thermal(cls, n_th, quantum=True):
        if quantum:
            return cls(2 * n_th + 1, 0.0, 2j)
        return cls(2 * n_th, 0.0, 0.0)

    @property
    def px(self):
        return (self.xp_anti - self.xp_comm) / 2

    @property
    def xp(self):
        return (self.xp_anti + self.xp_comm) / 2


@dataclass(frozen=True)
class SxxCurve:
    grid: np.ndarray
    values: np.ndarray
    variant: str
    n_eff: float | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if np.shape(self.grid) != np.shape(self.values):
            raise ValueError("grid and values must have the same shape")


def _two_lorentzian(grid, omega_m, gamma_m, w_pos, w_neg):
    grid = np.asarray(grid, dtype=float)
    return gamma_m * (w_pos * np.abs(chi_m(grid, omega_m, gamma_m)) ** 2
                      + w_neg * np.abs(chi_m(-grid, omega_m, gamma_m)) ** 2)


def sxx_thermal(grid, n_th, beta=1.0, *, omega_m, gamma_m=1.0):
    """``gamma_m [(n_th + beta)|chi_m[w]|^2 + n_th |chi_m[-w]|^2]``."""
    vals = _two_lorentzian(grid, omega_m, gamma_m, n_th + beta, n_th)
    return SxxCurve(np.asarray(grid, dtype=float), vals, "thermal", n_th)


def sxx_with_backaction(grid, params, noise=None):
    """Thermal spectrum at the backaction-heated occupancy.

    ``n_eff = n_th + p (alpha + r C_xx)``; returned as ``curve.n_eff``.
    """
    noise = params.noise if noise is None else noise
    n_eff = params.n_th + params.p * (noise.alpha + noise.laser_backaction)
    vals = _two_lorentzian(grid, params.omega_m, params.gamma_m, n_eff + params.beta, n_eff)
    return SxxCurve(np.asarray(grid, dtype=float), vals, "with_backaction", n_eff)


def sxx_symmetrized(curve):
    """``(S[w] + S[-w]) / 2`` on a grid symmetric about zero."""
    if not is_symmetric_grid(curve.grid):
        raise AsymmetricGrid("symmetrization needs a grid symmetric about zero")
    vals = (curve.values + curve.values[::-1]) / 2
    return SxxCurve(curve.grid, vals, "symmetrized", curve.n_eff)


def spectrum_from_moments(grid, moments, *, omega_m, gamma_m=1.0):
    """Two-Lorentzian spectrum determined by equal-time moments alone.

    Valid for ``omega_m >> gamma_m``; reproduces :func:`sxx_thermal` exactly
    for thermal moments.
    """
    w = np.asarray(grid, dtype=float)
    m = moments
    pos = gamma_m * (m.x2 - 0.5j * m.xp_comm) - (w - omega_m) * m.xp_anti
    neg = gamma_m * (m.x2 + 0.5j * m.xp_comm) + (w + omega_m) * m.xp_anti
    vals = (np.abs(chi_m(w, omega_m, gamma_m)) ** 2 * pos
            + np.abs(chi_m(-w, omega_m, gamma_m)) ** 2 * neg) / 2
    return SxxCurve(w, np.real(vals), "moments")


def autocorrelation_x(tau, moments, *, omega_m, gamma_m=1.0):
    """``<x(tau) x(0)>`` of a damped oscillator from its equal-time moments."""
    tau = np.asarray(tau, dtype=float)
    env = np.exp(-gamma_m * np.abs(tau) / 2)
    cross = np.where(tau >= 0, moments.px, -moments.xp)
    return env * (np.cos(omega_m * tau) * moments.x2 + np.sin(omega_m * tau) * cross)
