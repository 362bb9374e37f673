"""Cavity laser cooling of the mechanical mode by a second, red-detuned beam.

Rates may be in any common unit; results come back in the same unit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AntiDamping, NoConvergence, NonPositiveRate
from .response import chi_c

MODELS = ("classical", "quantum")


@dataclass(frozen=True)
class CoolingParams:
    """Cooling beam and bare mechanics.

    ``p`` is the backaction number of the (separate) probe beam, used only to
    express the occupancy a quantum analysis would infer.
    """

    Delta_2: float
    G_2: float
    kappa: float
    omega_m0: float
    gamma_m0: float = 1.0
    n_th0: float = 0.0
    alpha: float = 1.0
    beta: float = 1.0
    p: float = 0.0

    def __post_init__(self):
        for name in ("kappa", "omega_m0", "gamma_m0"):
            if not getattr(self, name) > 0:
                raise NonPositiveRate(f"{name} must be positive")
        if self.n_th0 < 0 or self.alpha < 0:
            raise ValueError("n_th0 and alpha must be >= 0")

    def chi(self, omega):
        return chi_c(omega, self.kappa, self.Delta_2)


@dataclass(frozen=True)
class CoolingReport:
    gamma_m_eff: float
    omega_m_eff: float
    n_th_eff: float
    n_inf: float
    limit_ok: bool
    model: str


def _shift(cp, omega):
    return cp.chi(omega) - np.conj(cp.chi(-omega))


def effective_dynamics(cp, tol=1e-10, max_iter=100):
    """Optically damped linewidth and spring-shifted frequency.

    The frequency enters the cavity response, so it is found by fixed-point
    iteration from ``omega_m0``.
    """
    G2 = abs(cp.G_2) ** 2
    omega = cp.omega_m0
    for _ in range(max_iter):
        new = cp.omega_m0 + G2 * np.imag(_shift(cp, omega))
        if abs(new - omega) <= tol * cp.omega_m0:
            omega = new
            break
        omega = new
    else:
        raise NoConvergence(f"spring shift did not converge in {max_iter} iterations")
    if not omega > 0:
        raise NoConvergence(f"spring shift drove the frequency to {omega}")
    gamma = cp.gamma_m0 + 2 * G2 * np.real(_shift(cp, omega))
    if gamma <= 0:
        raise AntiDamping(f"effective damping {gamma:.6g} <= 0 (Delta_2 = {cp.Delta_2})")
    return float(gamma), float(omega)


def _inferred(n, cp, model):
    # occupancy a quantum analysis of the probe sidebands would report
    if model == "quantum":
        return n + cp.p
    return n / cp.alpha + cp.p - 0.5 if cp.alpha > 0 else np.nan


def cooled_occupancy(cp, model="classical"):
    """Occupancy of the cooled mode for a classical or quantum field.

    Classical: ``g0 n0/g + alpha kappa G^2 (|chi[w]|^2 + |chi[-w]|^2) / (2 g)``.
    Quantum: ``g0 n0/g + kappa G^2 |chi[-w]|^2 / g``, the off-resonant
    Stokes heating over the net damping; both are valid at any detuning.
    """
    if model not in MODELS:
        raise ValueError(f"model must be one of {MODELS}")
    gamma, omega = effective_dynamics(cp)
    G2 = abs(cp.G_2) ** 2
    chi_p = abs(cp.chi(omega)) ** 2
    chi_n = abs(cp.chi(-omega)) ** 2
    n = cp.gamma_m0 * cp.n_th0 / gamma
    if model == "classical":
        n += cp.alpha * cp.kappa * G2 * (chi_p + chi_n) / (2 * gamma)
    else:
        n += cp.kappa * G2 * chi_n / gamma
    return CoolingReport(gamma, omega, float(n), float(_inferred(n, cp, model)),
                         bool(n > cp.alpha / 2), model)


def strong_cooling_occupancy(cp, model="classical"):
    """Approximate occupancy for ``gamma_m >> gamma_m0`` at any detuning.

    The bath term drops out and the result depends only on the cavity
    response: ``alpha (A+ + A-) / (2 (A+ - A-))`` for a classical field and
    ``A- / (A+ - A-)`` for a quantum one, with ``A+- = |chi[+-omega_m]|^2``.
    """
    if model not in MODELS:
        raise ValueError(f"model must be one of {MODELS}")
    gamma, omega = effective_dynamics(cp)
    chi_p = abs(cp.chi(omega)) ** 2
    chi_n = abs(cp.chi(-omega)) ** 2
    if model == "classical":
        n = cp.alpha * (chi_p + chi_n) / (2 * (chi_p - chi_n))
    else:
        n = chi_n / (chi_p - chi_n)
    return CoolingReport(gamma, omega, float(n), float(_inferred(n, cp, model)),
                         bool(n > cp.alpha / 2), model)


def resolved_sideband_occupancy(cp, model="classical"):
    """Strong-cooling, resolved-sideband limit at ``Delta_2 = -omega_m``."""
    if model not in MODELS:
        raise ValueError(f"model must be one of {MODELS}")
    gamma, omega = effective_dynamics(cp)
    heat = (cp.kappa / (4 * omega)) ** 2
    n = cp.gamma_m0 * cp.n_th0 / gamma
    n += cp.alpha * (0.5 + heat) if model == "classical" else heat
    return CoolingReport(gamma, omega, float(n), float(_inferred(n, cp, model)),
                         bool(n > cp.alpha / 2), model)


def coupling_for_damping(ratio, *, Delta_2, kappa, omega_m0, gamma_m0=1.0):
    """``G_2`` giving ``gamma_m/gamma_m0 = ratio``, neglecting the spring shift."""
    chi_p = abs(chi_c(omega_m0, kappa, Delta_2)) ** 2
    chi_n = abs(chi_c(-omega_m0, kappa, Delta_2)) ** 2
    net = kappa * (chi_p - chi_n)
    if net <= 0:
        raise AntiDamping("cooling beam must be red detuned")
    return float(np.sqrt((ratio - 1) * gamma_m0 / net))


@dataclass(frozen=True)
class CoolingSweep:
    Delta_2: np.ndarray
    ratio: np.ndarray
    G_2: np.ndarray
    gamma_m_eff: np.ndarray
    omega_m_eff: np.ndarray
    n_classical: np.ndarray
    n_quantum: np.ndarray
    n_inf: np.ndarray
    alpha: float

    @property
    def classical_floor_ok(self):
        return bool(np.nanmin(self.n_classical) > self.alpha / 2)


def cooling_sweep(Delta_2, ratios, *, kappa, omega_m0, gamma_m0=1.0, n_th0=0.0,
                  alpha=1.0, p=0.0):
    """Tabulate both models over detunings and target damping ratios.

    Returns arrays shaped ``(len(Delta_2), len(ratios))``. Points that fail
    (no convergence, anti-damping) are left as NaN.
    """
    D = np.asarray(Delta_2, dtype=float)
    R = np.asarray(ratios, dtype=float)
    shape = (len(D), len(R))
    out = {k: np.full(shape, np.nan) for k in ("G", "g", "w", "nc", "nq", "ni")}
    for i, d in enumerate(D):
        for j, r in enumerate(R):
            try:
                G = coupling_for_damping(r, Delta_2=d, kappa=kappa, omega_m0=omega_m0,
                                         gamma_m0=gamma_m0)
                cp = CoolingParams(d, G, kappa, omega_m0, gamma_m0, n_th0, alpha, p=p)
                c = cooled_occupancy(cp, "classical")
                q = cooled_occupancy(cp, "quantum")
            except (AntiDamping, NoConvergence):
                continue
            out["G"][i, j] = G
            out["g"][i, j] = c.gamma_m_eff
            out["w"][i, j] = c.omega_m_eff
            out["nc"][i, j] = c.n_th_eff
            out["nq"][i, j] = q.n_th_eff
            out["ni"][i, j] = c.n_inf
    Dm, Rm = np.meshgrid(D, R, indexing="ij")
    return CoolingSweep(Dm, Rm, out["G"], out["g"], out["w"], out["nc"], out["nq"],
                        out["ni"], alpha)
