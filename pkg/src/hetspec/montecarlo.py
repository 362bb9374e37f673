"""Stochastic time-domain oracle for the closed-form spectra.

The linearized cavity and mechanical amplitudes ``(d, c)`` obey a linear
stochastic differential equation driven by white noise. Quantum noise is
represented by its symmetrically ordered c-number equivalent (field noise
``alpha/2`` and mechanical bath ``n_th + beta/2`` per ordering), which makes the
simulated photocurrent follow the symmetrized detector model.

Each step uses the exact propagator of the drift and the exact joint
covariance of the state increment and the bin-averaged output field, so no
step-size bias enters linewidths or heights. The resulting linear recursion
is evaluated in a triangular (Schur) basis with one first-order filter per
component.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy import linalg, signal

from .errors import (
    MissingOutputTrace,
    StepTooLarge,
    TooFewSamples,
    UnstableDrift,
    UnsupportedCombo,
    WindowOutOfRange,
)
from .heterodyne import fit_sidebands, sideband_model

N_STATE = 4  # (Re d, Re c, Im d, Im c)
N_NOISE = 8  # xi_ext (2), xi_int (2), eta (2), laser delta_x, delta_y


def max_threads():
    env = os.environ.get("HETSPEC_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


@dataclass(frozen=True)
class Scenario:
    """Numerical settings of a Monte Carlo run (rates in ``gamma_m`` units).

    ``dt`` defaults to ``min(0.05/kappa, 2 pi / (16 (omega_if + omega_m)))`` and
    ``omega_if`` to the detector value, else ``8 omega_m``.
    """

    segments: int = 64
    T_seg: float = 100.0
    dt: float | None = None
    omega_if: float | None = None
    window: str = "rect"
    halfwidth: float = 10.0
    abar_out: complex = 0.0
    i0: float = 0.0
    tag: str = "custom"

    def resolve(self, params):
        """Fill defaults and snap the record so ``omega_if`` sits on a frequency bin."""
        omega_if = self.omega_if or params.detector.omega_if or 8 * params.omega_m
        dt = self.dt or min(0.05 / params.kappa, 2 * np.pi / (16 * (omega_if + params.omega_m)))
        n = int(np.ceil(self.T_seg / dt))
        m = max(1, round(omega_if * n * dt / (2 * np.pi)))
        dt = 2 * np.pi * m / (omega_if * n)
        return replace(self, dt=dt, omega_if=omega_if), n


@dataclass(frozen=True)
class TimeTrace:
    """One simulated record. ``d_out`` holds bin averages over ``[t_k, t_k + dt]``."""

    dt: float
    x: np.ndarray
    d: np.ndarray
    d_out: np.ndarray | None
    field: str
    tag: str = "custom"
    i: np.ndarray | None = None

    @property
    def duration(self):
        return self.dt * len(self.x)


def _check_combo(params, noise):
    kind, model = noise.kind, params.detector.model
    if kind == "quantum":
        if noise.alpha != 1:
            raise UnsupportedCombo("quantum field simulation needs alpha = 1")
        if model == "QUA" and (params.beta != 1 or params.detector.i0_ratio != 1):
            raise UnsupportedCombo(
                "quantum/QUA is simulated through its symmetrized equivalent, "
                "which requires beta = 1 and i0_ratio = 1")
    elif model == "QUA" and params.beta != 0:
        raise UnsupportedCombo("classical field with QUA detector needs beta = 0")


def _laser_factor(noise):
    if noise.laser is None or noise.laser.is_zero:
        return np.zeros((2, 2)), 0.0
    las = noise.laser
    C = np.array([[las.C_xx, las.C_xy], [las.C_xy, las.C_yy]])
    vals, vecs = np.linalg.eigh(C)
    return vecs * np.sqrt(np.clip(vals, 0, None)), las.r


class LinearSystem:
    """Drift, noise and output matrices plus their exact one-step discretization."""

    def __init__(self, params, noise, dt):
        if dt > 0.1 / params.kappa:
            raise StepTooLarge(f"dt = {dt:.4g} exceeds 0.1/kappa = {0.1 / params.kappa:.4g}")
        cav = params.cavity
        G = complex(params.G)
        kap, ke, ki = cav.kappa, cav.kappa_ext, cav.kappa - cav.kappa_ext
        gam, om = params.gamma_m, params.omega_m
        M = np.array([[-(kap / 2 - 1j * cav.Delta), -1j * G],
                      [-1j * np.conj(G), -(gam / 2 + 1j * om)]])
        Nm = np.array([[0, -1j * G], [-1j * G, 0]])
        self.A = np.block([[M.real + Nm.real, -M.imag + Nm.imag],
                           [M.imag + Nm.imag, M.real - Nm.real]])
        if np.max(np.linalg.eigvals(self.A).real) >= 0:
            raise UnstableDrift("drift matrix has a non-decaying mode")

        a = np.sqrt(noise.alpha / 4)
        b = np.sqrt((params.n_th + params.beta / 2) / 2)
        Lc, r = _laser_factor(noise)
        B = np.zeros((N_STATE, N_NOISE))
        B[0, 0], B[2, 1] = np.sqrt(ke) * a, np.sqrt(ke) * a
        B[0, 2], B[2, 3] = np.sqrt(ki) * a, np.sqrt(ki) * a
        B[1, 4], B[3, 5] = np.sqrt(gam) * b, np.sqrt(gam) * b
        B[0, 6:] = r * np.sqrt(kap) / 2 * Lc[0]
        B[2, 6:] = r * np.sqrt(kap) / 2 * Lc[1]
        self.B = B

        C = np.zeros((2, N_STATE))
        C[0, 0] = C[1, 2] = np.sqrt(ke)
        D = np.zeros((2, N_NOISE))
        D[0, 0] = D[1, 1] = -a
        lam_r = cav.lam * r * np.sqrt(kap / ke) / 2
        D[0, 6:] = -lam_r * Lc[0]
        D[1, 6:] = -lam_r * Lc[1]
        self.C, self.D = C, D
        self.dt = dt
        self._discretize()

    def _discretize(self):
        n, m, dt = N_STATE, N_NOISE, self.dt
        size = 2 * n + m
        F = np.zeros((size, size))
        F[:n, :n] = self.A
        F[n:2 * n, :n] = np.eye(n)
        Gx = np.vstack([self.B, np.zeros((n, m)), np.eye(m)])
        # Van Loan: exact propagator and increment covariance of [s, int s, int w]
        VL = np.zeros((2 * size, 2 * size))
        VL[:size, :size] = -F
        VL[:size, size:] = Gx @ Gx.T
        VL[size:, size:] = F.T
        E = linalg.expm(VL * dt)
        Phi_x = E[size:, size:].T
        Q = Phi_x @ E[:size, size:]
        self.Phi = Phi_x[:n, :n]
        self.Psi = Phi_x[n:2 * n, :n]

        T = np.zeros((n + 2, size))
        T[:n, :n] = np.eye(n)
        T[n:, n:2 * n] = self.C / dt
        T[n:, 2 * n:] = self.D / dt
        cov = T @ Q @ T.T
        cov = (cov + cov.T) / 2
        vals, vecs = np.linalg.eigh(cov)
        self.noise_sqrt = vecs * np.sqrt(np.clip(vals, 0, None))

        stat = linalg.solve_continuous_lyapunov(self.A, -self.B @ self.B.T)
        vals, vecs = np.linalg.eigh((stat + stat.T) / 2)
        self.stationary = (stat + stat.T) / 2
        self.stationary_sqrt = vecs * np.sqrt(np.clip(vals, 0, None))

        self.T_schur, self.Z_schur = linalg.schur(self.Phi, output="complex")

    def run(self, n_steps, rng):
        """Propagate ``n_steps`` from a stationary initial state.

        Returns the states at the start of each step (shape ``(n_steps, 4)``)
        and the bin-averaged output ``d_out`` (complex, length ``n_steps``).
        """
        n = N_STATE
        s0 = self.stationary_sqrt @ rng.standard_normal(n)
        e = rng.standard_normal((n_steps, n + 2)) @ self.noise_sqrt.T
        Tm, Z = self.T_schur, self.Z_schur
        f = e[:, :n] @ Z.conj()  # rows of Z^H e_k
        z0 = Z.conj().T @ s0
        z = np.empty((n_steps, n), dtype=complex)
        for i in range(n - 1, -1, -1):
            u = f[:-1, i].copy()
            for j in range(i + 1, n):
                u += Tm[i, j] * z[:-1, j]
            a = Tm[i, i]
            z[0, i] = z0[i]
            z[1:, i] = signal.lfilter([1.0], [1.0, -a], u, zi=[a * z0[i]])[0]
        s = (z @ Z.T).real
        y = s @ (self.C @ self.Psi / self.dt).T + e[:, n:]
        return s, y[:, 0] + 1j * y[:, 1]


def integrate(params, noise=None, *, seed=0, dt=None, T_s=100.0, tag="custom", rng=None):
    """Simulate one stationary record of length ``T_s``.

    Parameters
    ----------
    params : ValidatedParams
    noise : FieldNoise, optional
        Defaults to ``params.noise``.
    seed : int
        Seed for a Philox generator, ignored when ``rng`` is given.
    dt : float, optional
        Step; defaults as in :class:`Scenario`. Must satisfy ``dt <= 0.1/kappa``.
    """
    noise = params.noise if noise is None else noise
    if dt is None:
        dt, _ = Scenario(T_seg=T_s).resolve(params)[0].dt, None
    system = LinearSystem(params, noise, dt)
    n_steps = int(np.ceil(T_s / dt))
    if rng is None:
        rng = np.random.Generator(np.random.Philox(seed))
    s, y = system.run(n_steps, rng)
    return TimeTrace(dt, 2 * s[:, 1], s[:, 0] + 1j * s[:, 2], y, noise.kind, tag)


def synthesize_photocurrent(trace, detector, *, omega_if, seed=0, rng=None, abar_out=0.0,
                            i0=0.0, shot_noise=None):
    """Heterodyne photocurrent ``i0 + 2 Re(Z e^{i omega_if t}(abar_out + d_out))``.

    ``Z = i sqrt(Z2)``. A QUA detector observing a classical field adds
    independent white shot noise of two-sided intensity ``Z2 * i0_ratio``;
    for a vacuum-noise field the symmetrized trace already carries an
    equivalent floor, so nothing is added unless ``shot_noise=True``.
    """
    if trace.d_out is None:
        raise MissingOutputTrace("trace has no output field")
    n = len(trace.d_out)
    t = (np.arange(n) + 0.5) * trace.dt
    Z = 1j * np.sqrt(detector.Z2)
    cur = i0 + 2 * np.real(Z * np.exp(1j * omega_if * t) * (abar_out + trace.d_out))
    if shot_noise is None:
        shot_noise = detector.model == "QUA" and trace.field == "classical"
    if shot_noise:
        if rng is None:
            rng = np.random.Generator(np.random.Philox(seed))
        cur = cur + np.sqrt(detector.Z2 * detector.i0_ratio / trace.dt) * rng.standard_normal(n)
    return cur


# --------------------------------------------------------------------- PSD


@dataclass(frozen=True)
class PsdEstimate:
    """Two-sided PSD in angular frequency, ``int S domega/2pi = <i^2>``."""

    omega: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    segments: int
    dt: float
    mean_square: float

    @property
    def parseval_ratio(self):
        domega = 2 * np.pi / (len(self.omega) * self.dt)
        return float(np.sum(self.mean) * domega / (2 * np.pi) / self.mean_square)


def _window(name, n):
    if name == "rect":
        return np.ones(n)
    if name == "hann":
        return signal.get_window("hann", n)
    raise ValueError(f"unknown window {name!r}")


def periodogram(x, dt, window="rect"):
    """Single-segment periodogram on the ``fftfreq`` ordering."""
    x = np.asarray(x)
    n = len(x)
    w = _window(window, n)
    U = np.mean(w**2)
    X = np.fft.ifft(w * x) * n  # sum_k w x e^{+i omega t}
    return dt / (n * U) * np.abs(X) ** 2


class _Accumulator:
    def __init__(self):
        self.k = 0
        self.s1 = self.s2 = None
        self.msq = 0.0

    def add(self, P, msq):
        if self.s1 is None:
            self.s1, self.s2 = np.zeros_like(P), np.zeros_like(P)
        self.s1 += P
        self.s2 += P * P
        self.msq += msq
        self.k += 1

    def result(self, dt):
        k = self.k
        mean = self.s1 / k
        var = np.clip(self.s2 / k - mean**2, 0, None) * k / (k - 1)
        n = len(mean)
        omega = np.fft.fftshift(2 * np.pi * np.fft.fftfreq(n, dt))
        return PsdEstimate(omega, np.fft.fftshift(mean), np.fft.fftshift(np.sqrt(var / k)),
                           k, dt, self.msq / k)


def estimate_psd(x, dt, segments=16, window="rect", min_segments=16):
    """Averaged periodogram over ``segments`` equal, non-overlapping pieces.

    A white process of two-sided intensity ``S0`` reads ``S0``.
    """
    x = np.asarray(x)
    if segments < min_segments:
        raise TooFewSamples(f"need at least {min_segments} segments for error bars, got {segments}")
    n = len(x) // segments
    if n < 2:
        raise TooFewSamples("record too short for the requested segmentation")
    acc = _Accumulator()
    for k in range(segments):
        piece = x[k * n:(k + 1) * n]
        acc.add(periodogram(piece, dt, window), float(np.mean(np.abs(piece) ** 2)))
    return acc.result(dt)


@dataclass(frozen=True)
class SidebandData:
    grid: np.ndarray
    red: np.ndarray
    blue: np.ndarray
    red_err: np.ndarray
    blue_err: np.ndarray


def extract_sidebands(psd, omega_if, omega_m, window_halfwidth):
    """Red ``S[omega_if + w]`` and blue ``S[omega_if - w]`` for ``|w - omega_m| <= halfwidth``."""
    om = psd.omega
    domega = om[1] - om[0]
    lo, hi = omega_m - window_halfwidth, omega_m + window_halfwidth
    if lo <= 0 or omega_if - hi <= 0 or omega_if + hi > -om[0]:
        raise WindowOutOfRange("sideband window falls outside the resolvable band")
    i_if = int(np.argmin(np.abs(om - omega_if)))
    if abs(om[i_if] - omega_if) > 1e-6 * domega:
        raise WindowOutOfRange("omega_if is not on the frequency grid")
    k = np.arange(int(np.ceil(lo / domega)), int(np.floor(hi / domega)) + 1)
    grid = k * domega
    return SidebandData(grid, psd.mean[i_if + k], psd.mean[i_if - k],
                        psd.stderr[i_if + k], psd.stderr[i_if - k])


# ------------------------------------------------------------ full runs


@dataclass(frozen=True)
class SimulationResult:
    psd: PsdEstimate
    sidebands: SidebandData
    fit: object
    scenario: Scenario
    seed: int


def simulate_psd(params, noise=None, scenario=None, seed=0, threads=None):
    """Photocurrent PSD from ``scenario.segments`` independent stationary records.

    Segments get independent Philox streams spawned from ``seed`` and are
    reduced in index order, so results do not depend on ``threads``.
    """
    noise = params.noise if noise is None else noise
    scenario = scenario or Scenario()
    _check_combo(params, noise)
    if scenario.segments < 16:
        raise TooFewSamples("need at least 16 segments")
    sc, n_steps = scenario.resolve(params)
    system = LinearSystem(params, noise, sc.dt)
    children = np.random.SeedSequence(seed).spawn(sc.segments)

    def one(k):
        rng_state, rng_shot = (np.random.Generator(np.random.Philox(s))
                               for s in children[k].spawn(2))
        s, y = system.run(n_steps, rng_state)
        trace = TimeTrace(sc.dt, 2 * s[:, 1], s[:, 0] + 1j * s[:, 2], y, noise.kind, sc.tag)
        cur = synthesize_photocurrent(trace, params.detector, omega_if=sc.omega_if,
                                      rng=rng_shot, abar_out=sc.abar_out, i0=sc.i0)
        return periodogram(cur, sc.dt, sc.window), float(np.mean(cur**2))

    acc = _Accumulator()
    threads = min(threads or max_threads(), sc.segments)
    if threads == 1:
        for k in range(sc.segments):
            acc.add(*one(k))
    else:
        with ThreadPoolExecutor(threads) as pool:
            for k0 in range(0, sc.segments, threads):
                for res in pool.map(one, range(k0, min(k0 + threads, sc.segments))):
                    acc.add(*res)
    return acc.result(sc.dt), sc


def simulate_sidebands(params, noise=None, scenario=None, seed=0, threads=None,
                       image_terms=True):
    """Simulate, extract both sideband windows and fit them."""
    psd, sc = simulate_psd(params, noise, scenario, seed, threads)
    sb = extract_sidebands(psd, sc.omega_if, params.omega_m, sc.halfwidth)
    fit = fit_sideband_data(sb, p=params.p, kappa_bar_ext=params.kappa_bar_ext,
                            omega_guess=params.omega_m, gamma_guess=params.gamma_m,
                            image_terms=image_terms)
    return SimulationResult(psd, sb, fit, sc, seed)


def fit_sideband_data(sb, **kwargs):
    """Fit estimated sidebands with weights taken from a first-pass model.

    Per-bin standard errors estimated from the same periodograms are
    correlated with the bin means and would bias the floor and heights low;
    the relative error of an averaged periodogram is nearly uniform, so the
    weights are rebuilt as ``model * median(stderr/mean)``.
    """
    first = fit_sidebands(sb.grid, sb.red, sb.blue, **kwargs)
    rel = float(np.median(np.concatenate([sb.red_err / sb.red, sb.blue_err / sb.blue])))
    red_m, blue_m = sideband_model(first, sb.grid)
    return fit_sidebands(sb.grid, sb.red, sb.blue, stderr_red=np.abs(red_m) * rel,
                         stderr_blue=np.abs(blue_m) * rel, **kwargs)


def empirical_autocorrelation(x, dt, max_lag):
    """Unbiased estimate of ``<x(t + tau) x(t)>`` for ``0 <= tau <= max_lag``."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    m = int(max_lag / dt)
    size = 1 << int(np.ceil(np.log2(2 * n)))
    X = np.fft.rfft(x, size)
    ac = np.fft.irfft(np.abs(X) ** 2, size)[: m + 1]
    return np.arange(m + 1) * dt, ac / (n - np.arange(m + 1))
