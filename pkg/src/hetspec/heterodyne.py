"""Closed-form heterodyne photocurrent spectra and sideband thermometry.

A sideband window is parameterized by ``omega_tilde`` near ``omega_m``; the red
sideband is ``S[omega_if + omega_tilde]`` and the blue one
``S[omega_if - omega_tilde]``. Every spectrum is split as
``S = S_o + S_om + S_m``: white floor, optomechanical field-motion
correlations and the mechanical contribution.

All expressions assume zero detuning. The image Lorentzians ``L[-omega_tilde]``
are kept unless ``image_terms=False``; they are ``O((gamma_m/omega_m)^2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import constants
from scipy.optimize import least_squares

from .errors import (
    BackactionTooLarge,
    DegenerateFit,
    GridMismatch,
    NoConvergence,
    NumericalError,
    UnsupportedCombo,
)
from .params import DETECTOR_MODELS, FIELD_KINDS
from .response import chi_c, chi_m, default_grid, lorentzian, sxx_with_backaction


@dataclass(frozen=True)
class ModelCombo:
    field: str
    detector: str

    def __post_init__(self):
        if self.field not in FIELD_KINDS or self.detector not in DETECTOR_MODELS:
            raise UnsupportedCombo(f"unsupported model combination {self.field}/{self.detector}")

    @classmethod
    def of(cls, params, noise=None):
        noise = params.noise if noise is None else noise
        return cls(noise.kind, params.detector.model)

    def __str__(self):
        return f"{self.field}_{self.detector}"


@dataclass(frozen=True)
class Sideband:
    grid: np.ndarray
    S_o: np.ndarray
    S_om: np.ndarray
    S_m: np.ndarray

    @property
    def total(self):
        return self.S_o + self.S_om + self.S_m


@dataclass(frozen=True)
class SpectrumCurve:
    grid: np.ndarray
    red: Sideband
    blue: Sideband
    combo: ModelCombo
    n_eff: float


def _combo(combo, params, noise):
    if combo is None:
        return ModelCombo.of(params, noise)
    if isinstance(combo, str):
        field, det = combo.replace("/", "_").split("_")
        return ModelCombo(field, det)
    return combo


def _n_eff(params, noise):
    return params.n_th + params.p * (noise.alpha + noise.laser_backaction)


def _images(grid, params, image_terms):
    w = np.asarray(grid, dtype=float)
    L = lorentzian(w, params.omega_m, params.gamma_m)
    Li = lorentzian(-w, params.omega_m, params.gamma_m) if image_terms else np.zeros_like(w)
    return L, Li


def noise_floor(combo, params, noise=None):
    """White photocurrent floor ``S_o`` in units of the caller's ``Z2``.

    The floor coefficient is ``alpha`` for a classical field seen by a
    classical detector, 1 for vacuum noise seen by a symmetrizing detector and
    the shot-noise ratio ``i0_ratio`` for a photon-counting (QUA) detector; a
    classical field with intrinsic noise adds its ``alpha`` on top of the shot
    noise. Laser noise adds a filtered term evaluated at the sideband centre.
    """
    noise = params.noise if noise is None else noise
    combo = _combo(combo, params, noise)
    det = params.detector
    if combo.detector == "SCL":
        base = noise.alpha if combo.field == "classical" else 1.0
    else:
        base = det.i0_ratio + (noise.alpha if combo.field == "classical" else 0.0)
    laser = noise.laser
    if laser is not None and not laser.is_zero:
        cav = params.cavity
        filt = abs(cav.kappa_ext * chi_c(-params.omega_m, cav.kappa) - cav.lam) ** 2
        base += laser.r**2 * cav.kappa / (4 * cav.kappa_ext) * filt * (laser.C_xx + laser.C_yy)
    return det.Z2 * base


def _s_om_red(combo, params, noise, L, Li):
    if combo.field == "quantum" and combo.detector == "QUA":
        return np.zeros_like(L)
    return 2 * noise.alpha * params.p * params.kappa_bar_ext * params.detector.Z2 * (L - Li)


def _s_m_red(combo, params, noise, L, Li):
    n = _n_eff(params, noise)
    scale = 4 * params.p * params.kappa_bar_ext * params.detector.Z2
    beta = params.beta
    if combo.detector == "SCL":
        return scale * (n + beta / 2) * (L + Li)
    return scale * ((n + beta) * L + n * Li)


def s_om(combo, params, grid, noise=None, image_terms=True):
    """Optomechanical correlation term as ``(red, blue)`` arrays over ``grid``."""
    noise = params.noise if noise is None else noise
    combo = _combo(combo, params, noise)
    L, Li = _images(grid, params, image_terms)
    return _s_om_red(combo, params, noise, L, Li), _s_om_red(combo, params, noise, Li, L)


def s_m(combo, params, grid, noise=None, image_terms=True):
    """Mechanical term as ``(red, blue)`` arrays over ``grid``."""
    noise = params.noise if noise is None else noise
    combo = _combo(combo, params, noise)
    L, Li = _images(grid, params, image_terms)
    return _s_m_red(combo, params, noise, L, Li), _s_m_red(combo, params, noise, Li, L)


def spectrum(combo, params, grid, noise=None, image_terms=True):
    """Full decomposition of both sidebands for one model combination."""
    noise = params.noise if noise is None else noise
    combo = _combo(combo, params, noise)
    grid = np.asarray(grid, dtype=float)
    L, Li = _images(grid, params, image_terms)
    floor = np.full_like(grid, noise_floor(combo, params, noise))
    red = Sideband(grid, floor, _s_om_red(combo, params, noise, L, Li),
                   _s_m_red(combo, params, noise, L, Li))
    blue = Sideband(grid, floor.copy(), _s_om_red(combo, params, noise, Li, L),
                    _s_m_red(combo, params, noise, Li, L))
    tol = 1e-12 * floor[0]
    if min(red.total.min(), blue.total.min()) < -tol:
        raise NumericalError("closed-form photocurrent spectrum went negative")
    return SpectrumCurve(grid, red, blue, combo, _n_eff(params, noise))


def sidebands(combo, params, grid, noise=None, image_terms=True):
    """``(S_rr, S_bb)`` as :class:`Sideband` records."""
    curve = spectrum(combo, params, grid, noise, image_terms)
    return curve.red, curve.blue


def standard_sidebands(grid, n, p, kappa_bar_ext, *, omega_m, gamma_m=1.0, Z2=1.0,
                       image_terms=True):
    """Quantum-form sidebands ``Z2 [1 + 4 p kbar ((n+1) L + n L_image)]`` and mirror.

    ``n`` may be any real number, which is how classical predictions are
    expressed through the inferred occupancy.
    """
    w = np.asarray(grid, dtype=float)
    L = lorentzian(w, omega_m, gamma_m)
    Li = lorentzian(-w, omega_m, gamma_m) if image_terms else np.zeros_like(w)
    s = 4 * p * kappa_bar_ext
    red = Z2 * (1 + s * ((n + 1) * L + n * Li))
    blue = Z2 * (1 + s * (n * L + (n + 1) * Li))
    return red, blue


@dataclass(frozen=True)
class Asymmetry:
    grid: np.ndarray
    delta: np.ndarray
    peak_ratio: float


def asymmetry(red, blue, omega_m):
    """``Delta S = S_rr - S_bb`` and its value at ``omega_m`` relative to the floor.

    The peak value is linearly interpolated, which undershoots a Lorentzian
    top; put ``omega_m`` on the grid when the exact value matters.
    """
    if red.grid.shape != blue.grid.shape or not np.array_equal(red.grid, blue.grid):
        raise GridMismatch("red and blue sidebands are on different grids")
    delta = red.total - blue.total
    at_peak = np.interp(omega_m, red.grid, delta)
    floor = np.interp(omega_m, red.grid, red.S_o)
    return Asymmetry(red.grid, delta, float(at_peak / floor))


def cavity_filter_asymmetry(params):
    """``|chi_c[-omega_m]|^2 - |chi_c[omega_m]|^2``; zero at zero detuning."""
    cav = params.cavity
    return float(abs(chi_c(-params.omega_m, cav.kappa, cav.Delta)) ** 2
                 - abs(chi_c(params.omega_m, cav.kappa, cav.Delta)) ** 2)


# ---------------------------------------------------------------- fitting


@dataclass(frozen=True)
class ThermometryReport:
    floor: float
    floor_r: float
    floor_b: float
    h_r: float
    h_b: float
    h_r_err: float
    h_b_err: float
    gamma_fit: float
    omega_m_fit: float
    ratio_method_n: float
    floor_method_n: float
    delta_ratio: float
    squashing: bool
    chi2_red: float
    image_terms: bool
    shape_fixed: bool = False
    ratio_method_n_err: float = math.nan

    @property
    def squashing_sigma(self):
        """Significance of a negative blue height, in standard errors."""
        return -self.h_b / self.h_b_err if self.h_b_err > 0 else math.inf

    def as_dict(self):
        return {k: (bool(v) if isinstance(v, (bool, np.bool_)) else float(v))
                for k, v in self.__dict__.items()}


def _fit_basis(w, omega0, gamma, image_terms):
    L = lorentzian(w, omega0, gamma)
    Li = lorentzian(-w, omega0, gamma) if image_terms else np.zeros_like(w)
    return L, Li


def _design(w, omega0, gamma, image_terms):
    """Linear design matrix for (a_r, a_b, h_r, h_b) over stacked red/blue data."""
    L, Li = _fit_basis(w, omega0, gamma, image_terms)
    one, zero = np.ones_like(w), np.zeros_like(w)
    top = np.column_stack([one, zero, L, Li])
    bottom = np.column_stack([zero, one, Li, L])
    return np.vstack([top, bottom])


def _dL(w, omega0, gamma):
    """Partial derivatives of the unit Lorentzian wrt centre and width."""
    h2 = (gamma / 2) ** 2
    d = w - omega0
    den = (h2 + d**2) ** 2
    return 2 * h2 * d / den, gamma / 2 * d**2 / den


def _initial_guess(w, red, blue, omega_guess, gamma_guess):
    diff = red - blue
    k = max(3, len(w) // 50) | 1
    smooth = np.convolve(diff, np.ones(k) / k, mode="same")
    if np.ptp(smooth) <= 0:
        return omega_guess, gamma_guess
    i = int(np.argmax(np.abs(smooth)))
    half = np.abs(smooth) >= np.abs(smooth[i]) / 2
    lo = i
    while lo > 0 and half[lo - 1]:
        lo -= 1
    hi = i
    while hi < len(w) - 1 and half[hi + 1]:
        hi += 1
    dw = w[1] - w[0] if len(w) > 1 else 1.0
    fwhm = max((hi - lo + 1) * dw, 2 * dw)
    return float(w[i]), float(fwhm)


def fit_sidebands(grid, red, blue, *, stderr_red=None, stderr_blue=None, p=None,
                  kappa_bar_ext=None, omega_guess=None, gamma_guess=1.0, image_terms=True):
    """Joint two-Lorentzian fit of the red and blue sideband windows.

    Model: ``red = a_r + h_r L + h_b L_image``, ``blue = a_b + h_b L + h_r L_image``
    with a shared centre ``omega0`` and width ``gamma``. The four linear
    amplitudes are projected out and the two nonlinear parameters solved with
    Levenberg-Marquardt; uncertainties come from the full Jacobian. When the
    fitted centre leaves the window or the width is unresolvable (no visible
    peak), the shape is pinned to ``(omega_guess, gamma_guess)`` and the report
    is flagged with ``shape_fixed``.

    Parameters
    ----------
    grid, red, blue : array_like
        ``omega_tilde`` grid and the two sideband windows (arrays or
        :class:`Sideband` records).
    stderr_red, stderr_blue : array_like, optional
        Per-point standard errors. Without them, unit weights are used and
        the covariance is scaled by the residual variance.
    p, kappa_bar_ext : float, optional
        Needed only for ``floor_method_n``.
    """
    w = np.asarray(grid, dtype=float)
    yr = np.asarray(getattr(red, "total", red), dtype=float)
    yb = np.asarray(getattr(blue, "total", blue), dtype=float)
    if yr.shape != w.shape or yb.shape != w.shape:
        raise GridMismatch("sideband arrays do not match the grid")
    if len(w) < 8:
        raise DegenerateFit("need at least 8 points per sideband")
    weighted = stderr_red is not None and stderr_blue is not None
    sig = (np.concatenate([np.asarray(stderr_red, float), np.asarray(stderr_blue, float)])
           if weighted else np.ones(2 * len(w)))
    if np.any(sig <= 0):
        raise DegenerateFit("standard errors must be positive")
    y = np.concatenate([yr, yb]) / sig

    def project(theta):
        A = _design(w, theta[0], abs(theta[1]), image_terms) / sig[:, None]
        coef, *_ = np.linalg.lstsq(A, y, rcond=None)
        return coef, y - A @ coef

    if omega_guess is None:
        omega_guess = float(w[len(w) // 2])
    w0, g0 = _initial_guess(w, yr, yb, omega_guess, gamma_guess)
    scan = [g for g in g0 * np.geomspace(0.25, 4, 9)]
    costs = [np.sum(project((w0, g))[1] ** 2) for g in scan]
    g0 = scan[int(np.argmin(costs))]

    sol = least_squares(lambda th: project(th)[1], x0=[w0, g0], method="lm",
                        xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=2000)
    if not np.all(np.isfinite(sol.x)):
        raise NoConvergence("sideband fit diverged")
    omega0, gamma = float(sol.x[0]), float(abs(sol.x[1]))
    dw = abs(w[1] - w[0])
    shape_fixed = not (w.min() <= omega0 <= w.max() and 2 * dw <= gamma <= np.ptp(w) / 2)
    if shape_fixed:
        # no resolvable peak: report heights at the nominal centre and width
        omega0, gamma = float(omega_guess), float(gamma_guess)
    coef, resid = project((omega0, gamma))
    a_r, a_b, h_r, h_b = (float(c) for c in coef)

    # full Jacobian in (a_r, a_b, h_r, h_b, omega0, gamma)
    A = _design(w, omega0, gamma, image_terms)
    dLo, dLg = _dL(w, omega0, gamma)
    if image_terms:
        dLio, dLig = _dL(-w, omega0, gamma)
        dLio = -dLio  # image Lorentzian is centred at -omega0
    else:
        dLio = dLig = np.zeros_like(w)
    d_omega = np.concatenate([h_r * dLo + h_b * dLio, h_b * dLo + h_r * dLio])
    d_gamma = np.concatenate([h_r * dLg + h_b * dLig, h_b * dLg + h_r * dLig])
    J = np.column_stack([A, d_omega, d_gamma]) / sig[:, None]
    if shape_fixed:
        J = J[:, :4]
    dof = max(len(y) - J.shape[1], 1)
    chi2_red = float(resid @ resid / dof)
    try:
        cov = np.linalg.inv(J.T @ J)
    except np.linalg.LinAlgError as exc:
        raise DegenerateFit("singular fit Jacobian") from exc
    if not weighted:
        cov = cov * chi2_red
    err = np.sqrt(np.clip(np.diag(cov), 0, None))

    floor = (a_r + a_b) / 2
    diff = h_r - h_b
    ratio_n = h_b / diff if diff > 0 else math.nan
    # linear propagation through the (h_r, h_b) block of the covariance
    grad = np.array([-h_b, h_r]) / diff**2 if diff > 0 else np.full(2, math.nan)
    ratio_err = float(np.sqrt(grad @ cov[2:4, 2:4] @ grad))
    if p is not None and kappa_bar_ext is not None and p > 0:
        floor_n = h_b / floor / (4 * p * kappa_bar_ext)
    else:
        floor_n = math.nan
    return ThermometryReport(
        floor=floor, floor_r=a_r, floor_b=a_b, h_r=h_r, h_b=h_b,
        h_r_err=float(err[2]), h_b_err=float(err[3]),
        gamma_fit=gamma, omega_m_fit=omega0,
        ratio_method_n=ratio_n, floor_method_n=floor_n,
        delta_ratio=diff / floor, squashing=h_b < 0,
        chi2_red=chi2_red, image_terms=image_terms, shape_fixed=shape_fixed,
        ratio_method_n_err=ratio_err,
    )


def sideband_model(fit, grid):
    """Evaluate the fitted ``(red, blue)`` model on ``grid``."""
    w = np.asarray(grid, dtype=float)
    L, Li = _fit_basis(w, fit.omega_m_fit, fit.gamma_fit, fit.image_terms)
    return fit.floor_r + fit.h_r * L + fit.h_b * Li, fit.floor_b + fit.h_b * L + fit.h_r * Li


def inferred_occupancy(fit):
    """Occupancy read off by the ratio method, ``h_b / (h_r - h_b)``."""
    if not fit.h_r > fit.h_b:
        raise DegenerateFit(f"ratio method needs h_r > h_b (got {fit.h_r}, {fit.h_b})")
    return fit.h_b / (fit.h_r - fit.h_b)


def classical_inferred_occupancy(n_th, alpha, p):
    """Occupancy a quantum analysis assigns to a classical oscillator."""
    return n_th / alpha + p - 0.5


# ----------------------------------------------------- blue sideband vs Q


@dataclass(frozen=True)
class BlueCurves:
    Q: np.ndarray
    quantum: np.ndarray
    classical: np.ndarray
    dquantum: np.ndarray
    dclassical: np.ndarray
    alpha: float
    p: float

    @property
    def bound_ok(self):
        """Classical slope exceeds ``alpha/4`` everywhere the curve is above ``p``."""
        mask = self.classical > self.p
        return bool(np.all(np.abs(self.dclassical[mask]) > self.alpha / 4))


def blue_height_vs_Q(Q, alpha=1.0, p=0.1):
    """Blue sideband height (units of ``4 p kbar Z2``) vs normalized inverse temperature."""
    Q = np.asarray(Q, dtype=float)
    if np.any(Q <= 0):
        raise ValueError("Q must be positive")
    em1 = np.expm1(Q)
    quantum = 1 / em1 + p
    classical = 1 / (alpha * Q) + p - 0.5
    # d/dQ of 1/(e^Q - 1), written to avoid overflow at large Q
    with np.errstate(over="ignore"):
        dquantum = -np.exp(-Q) / (-np.expm1(-Q)) ** 2
    dclassical = -1 / (alpha * Q**2)
    return BlueCurves(Q, quantum, classical, dquantum, dclassical, alpha, p)


def classical_zero_crossing(alpha=1.0, p=0.1):
    """``Q`` at which the classical blue height changes sign."""
    if p >= 0.5:
        raise BackactionTooLarge("no zero crossing for p >= 1/2")
    return 1 / (alpha * (0.5 - p))


def detectability_bound(alpha, p, omega_m):
    """Temperature [K] below which a classical blue sideband would be negative.

    ``omega_m`` is the mechanical angular frequency in rad/s.
    """
    if p >= 0.5:
        raise BackactionTooLarge(f"p = {p} must be below 1/2")
    return constants.hbar * omega_m * alpha / constants.k * (0.5 - p)


def dark_noise_floor(alpha, B, q, v):
    """Lasers-off photocurrent noise a classical field model would predict."""
    return B * (q * v**2 * alpha / 2) ** 2


# ------------------------------------------------------- consistency checks


@dataclass(frozen=True)
class EquivalenceResult:
    residual: float
    commutator_residual: float
    lhs: np.ndarray
    rhs: np.ndarray


def commutator_cross_spectrum(omega, params, alpha=None):
    """Cross spectrum of the vacuum-noise force with position at zero detuning."""
    alpha = params.alpha if alpha is None else alpha
    cav = params.cavity
    G = params.G
    om, gm = params.omega_m, params.gamma_m
    return (-1j * G * alpha * np.sqrt(cav.kappa_ext)
            * (cav.kappa * chi_c(omega, cav.kappa) - 1) * chi_c(-omega, cav.kappa)
            * (chi_m(-omega, om, gm) - np.conj(chi_m(omega, om, gm))))


def detector_equivalence_check(params, grid=None, noise=None):
    """Compare the two detector models and test the commutator relation.

    ``residual`` is ``max |S_SCL - S_QUA| / floor`` over both sidebands with
    a vacuum-noise field. ``commutator_residual`` compares the cross-spectrum
    form against ``S_xx[w] - S_xx[-w]``, relative to the peak of the latter.
    Both vanish only when ``alpha == beta``.
    """
    noise = params.noise if noise is None else noise
    qnoise = replace(noise, kind="quantum")
    if grid is None:
        grid = default_grid(params.omega_m, params.gamma_m)
    grid = np.asarray(grid, dtype=float)
    scl = spectrum(ModelCombo("quantum", "SCL"), params, grid, qnoise)
    qua = spectrum(ModelCombo("quantum", "QUA"), params, grid, qnoise)
    floor = scl.red.S_o[0]
    residual = max(np.max(np.abs(scl.red.total - qua.red.total)),
                   np.max(np.abs(scl.blue.total - qua.blue.total))) / floor

    rhs = (sxx_with_backaction(grid, params, qnoise).values
           - sxx_with_backaction(-grid, params, qnoise).values)
    G = params.G
    if G == 0:
        return EquivalenceResult(float(residual), 0.0, np.zeros_like(grid), rhs)
    S = commutator_cross_spectrum(grid, params, qnoise.alpha)
    chi = chi_c(grid, params.kappa)
    lhs = 2 * np.imag(np.conj(G) * np.conj(chi) * S) / (
        np.sqrt(params.kappa_ext) * abs(G) ** 2 * np.abs(chi) ** 2)
    scale = np.max(np.abs(rhs)) or 1.0
    return EquivalenceResult(float(residual), float(np.max(np.abs(lhs - rhs)) / scale), lhs, rhs)
