"""Parameter records, validation and derived coupling quantities.

All rates handed to the rest of the package are expressed in units of the
mechanical damping rate (``gamma_m == 1``). :func:`validate` performs that
normalization and rejects inputs outside the linearized, high-Q regime.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from scipy import constants

from .errors import (
    DetuningNotZeroForClosedForm,
    NonPositiveRate,
    NonPositiveTemperature,
    RegimeViolation,
)

FIELD_KINDS = ("classical", "quantum")
DETECTOR_MODELS = ("SCL", "QUA")

HBAR = constants.hbar
K_B = constants.k


@dataclass(frozen=True)
class LaserNoise:
    """White amplitude/phase noise of the probe laser.

    ``C_xx``, ``C_xy`` and ``C_yy`` are the (frequency independent) spectral
    coefficients of the amplitude and phase quadratures, ``r`` the drive
    strength relative to the reference power at which they were specified.
    """

    C_xx: float = 0.0
    C_xy: float = 0.0
    C_yy: float = 0.0
    r: float = 0.0

    def __post_init__(self):
        if self.C_xx < 0 or self.C_yy < 0:
            raise ValueError("laser noise coefficients C_xx, C_yy must be >= 0")
        if self.C_xy**2 > self.C_xx * self.C_yy * (1 + 1e-12):
            raise ValueError("laser noise violates |C_xy|^2 <= C_xx * C_yy")
        if self.r < 0:
            raise ValueError("r must be >= 0")

    @property
    def backaction(self):
        """Amplitude-noise heating weight ``r * C_xx``."""
        return self.r * self.C_xx

    @property
    def is_zero(self):
        return self.r == 0 or (self.C_xx == 0 and self.C_yy == 0)


@dataclass(frozen=True)
class FieldNoise:
    """Noise model of the electromagnetic input field.

    ``kind`` is ``"classical"`` (intrinsic classical noise of strength
    ``alpha``) or ``"quantum"`` (vacuum noise, ``alpha == 1`` in standard
    quantum theory; other values are kept for bookkeeping).
    """

    kind: str = "quantum"
    alpha: float = 1.0
    laser: LaserNoise | None = None

    def __post_init__(self):
        if self.kind not in FIELD_KINDS:
            raise ValueError(f"unknown field kind {self.kind!r}; expected one of {FIELD_KINDS}")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")

    @classmethod
    def classical(cls, alpha=1.0, laser=None):
        return cls("classical", alpha, laser)

    @classmethod
    def quantum(cls, alpha=1.0, laser=None):
        return cls("quantum", alpha, laser)

    @property
    def laser_backaction(self):
        return 0.0 if self.laser is None else self.laser.backaction


@dataclass(frozen=True)
class MechParams:
    """Mechanical mode: frequency, energy damping rate and bath.

    If ``T`` (kelvin) is given, ``n_th`` is derived from it during validation,
    which requires ``omega_m`` in rad/s. ``beta`` tags the quantum part of the
    bath noise (1 in quantum theory, 0 for a classical oscillator).
    """

    omega_m: float
    gamma_m: float = 1.0
    n_th: float = 0.0
    beta: float = 1.0
    T: float | None = None


@dataclass(frozen=True)
class CavityParams:
    """Cavity mode. ``lam`` is 0 for measurement in transmission, 1 in reflection.

    The many-photon coupling ``G`` is either given directly or derived as
    ``g0 * abar`` with ``abar = Omega / (kappa/2 - i Delta)``.
    """

    kappa: float
    kappa_ext: float
    Delta: float = 0.0
    G: float | complex | None = None
    Omega: float | None = None
    g0: float | None = None
    lam: int = 0

    @property
    def kappa_int(self):
        return self.kappa - self.kappa_ext

    @property
    def abar(self):
        if self.Omega is None:
            return None
        return self.Omega / (self.kappa / 2 - 1j * self.Delta)

    def coupling(self):
        if self.G is not None:
            return self.G
        if self.g0 is not None and self.Omega is not None:
            G = self.g0 * self.abar
            return G.real if G.imag == 0 else G
        return 0.0


@dataclass(frozen=True)
class DetectorParams:
    """Heterodyne detector.

    ``model`` selects symmetrized (``"SCL"``) or normal and time ordered
    (``"QUA"``) photocurrent correlations. ``i0_ratio`` is the shot-noise
    floor ``q v^2 i0`` of the QUA model in units of ``Z2``. The beamsplitter
    and local-oscillator fields are only used by diagnostics.
    """

    model: str = "QUA"
    Z2: float = 1.0
    omega_if: float | None = None
    i0_ratio: float = 1.0
    T_bs: float | None = None
    a_lo: float | None = None
    q: float | None = None
    v: float | None = None
    B: float | None = None

    def __post_init__(self):
        if self.model not in DETECTOR_MODELS:
            raise ValueError(f"unknown detector model {self.model!r}; expected one of {DETECTOR_MODELS}")


@dataclass(frozen=True)
class SystemParams:
    mech: MechParams
    cavity: CavityParams
    noise: FieldNoise = field(default_factory=FieldNoise)
    detector: DetectorParams = field(default_factory=DetectorParams)


@dataclass(frozen=True)
class DerivedCoupling:
    p: float
    C: float
    kappa_bar_ext: float


@dataclass(frozen=True)
class ValidatedParams:
    """Validated record with every rate in units of ``gamma_m`` (so ``gamma_m == 1``).

    ``time_unit`` is the mechanical damping rate in the caller's original units;
    multiply a normalized rate by it to convert back.
    """

    mech: MechParams
    cavity: CavityParams
    noise: FieldNoise
    detector: DetectorParams
    coupling: DerivedCoupling
    time_unit: float = 1.0

    omega_m = property(lambda self: self.mech.omega_m)
    gamma_m = property(lambda self: self.mech.gamma_m)
    n_th = property(lambda self: self.mech.n_th)
    beta = property(lambda self: self.mech.beta)
    kappa = property(lambda self: self.cavity.kappa)
    kappa_ext = property(lambda self: self.cavity.kappa_ext)
    Delta = property(lambda self: self.cavity.Delta)
    alpha = property(lambda self: self.noise.alpha)
    p = property(lambda self: self.coupling.p)
    C = property(lambda self: self.coupling.C)
    kappa_bar_ext = property(lambda self: self.coupling.kappa_bar_ext)

    @property
    def G(self):
        return self.cavity.coupling()

    @property
    def n_eff(self):
        """Mechanical occupancy including probe backaction heating."""
        return self.n_th + self.p * (self.alpha + self.noise.laser_backaction)

    def with_noise(self, noise):
        return replace(self, noise=noise)

    def with_detector(self, **changes):
        return replace(self, detector=replace(self.detector, **changes))

    def with_mech(self, **changes):
        return replace(self, mech=replace(self.mech, **changes))


def occupancy_from_temperature(T, omega_m, classical=False):
    """Thermal occupancy of a mode at angular frequency ``omega_m`` [rad/s].

    Quantum: Bose-Einstein ``1/(exp(x) - 1)``; classical: equipartition
    ``1/x``, with ``x = hbar omega_m / (k_B T)``.
    """
    if T <= 0:
        raise NonPositiveTemperature(f"temperature must be positive, got {T}")
    if omega_m <= 0:
        raise NonPositiveRate(f"omega_m must be positive, got {omega_m}")
    return occupancy_from_Q(HBAR * omega_m / (K_B * T), classical=classical)


def occupancy_from_Q(Q, classical=False):
    """Occupancy as a function of the normalized inverse temperature ``Q``."""
    if classical:
        return 1.0 / Q
    return 1.0 / math.expm1(Q)


def coupling_for_p(p, kappa, omega_m, gamma_m=1.0):
    """Inverse of :func:`derive_coupling` at zero detuning: the ``G`` that gives ``p``."""
    chi2 = 1.0 / ((kappa / 2) ** 2 + omega_m**2)
    C = 4 * p / (kappa**2 * chi2)
    return math.sqrt(C * kappa * gamma_m / 4)


def derive_coupling(params):
    """Cooperativity ``C``, backaction number ``p`` and ``kappa_ext/kappa``.

    Accepts :class:`SystemParams` or :class:`ValidatedParams`; the results are
    dimensionless and do not depend on the time unit.
    """
    mech, cav = params.mech, params.cavity
    G = cav.coupling()
    C = 4 * abs(G) ** 2 / (cav.kappa * mech.gamma_m)
    chi_c2 = 1.0 / ((cav.kappa / 2) ** 2 + (mech.omega_m + cav.Delta) ** 2)
    p = cav.kappa**2 * chi_c2 / 4 * C
    return DerivedCoupling(p=p, C=C, kappa_bar_ext=cav.kappa_ext / cav.kappa)


def _regime(force, name, value, bound, ok):
    if not ok and not force:
        raise RegimeViolation(name, value, bound)


def validate(
    params,
    *,
    closed_form=True,
    force=False,
    min_quality=10.0,
    max_coupling_ratio=0.1,
    min_if_margin=5.0,
):
    """Check ``params`` and return a :class:`ValidatedParams` in ``gamma_m`` units.

    Parameters
    ----------
    params : SystemParams
    closed_form : bool
        Require zero detuning, as the explicit spectra only exist there.
    force : bool
        Downgrade regime violations (high-Q guard, weak coupling guard,
        intermediate-frequency margin) to no-ops. Non-positive rates are
        always rejected.
    min_quality : float
        Lower bound on ``omega_m / gamma_m``.
    max_coupling_ratio : float
        Upper bound on ``|G| / kappa``.
    min_if_margin : float
        ``omega_if`` must exceed ``omega_m + min_if_margin * gamma_m``.
    """
    mech, cav, noise, det = params.mech, params.cavity, params.noise, params.detector
    for name, value in (
        ("gamma_m", mech.gamma_m),
        ("omega_m", mech.omega_m),
        ("kappa", cav.kappa),
        ("kappa_ext", cav.kappa_ext),
        ("Z2", det.Z2),
    ):
        if not value > 0:
            raise NonPositiveRate(f"{name} must be positive, got {value}")
    if cav.kappa_ext > cav.kappa:
        raise RegimeViolation("kappa_ext", cav.kappa_ext, f"<= kappa = {cav.kappa}")
    if cav.lam not in (0, 1):
        raise RegimeViolation("lam", cav.lam, "in {0, 1}")
    if closed_form and cav.Delta != 0:
        raise DetuningNotZeroForClosedForm(
            f"closed-form spectra require Delta = 0, got Delta = {cav.Delta}"
        )

    n_th = mech.n_th
    if mech.T is not None:
        n_th = occupancy_from_temperature(mech.T, mech.omega_m, classical=(mech.beta == 0))
    if n_th < 0:
        raise RegimeViolation("n_th", n_th, ">= 0")
    if mech.beta < 0:
        raise RegimeViolation("beta", mech.beta, ">= 0")

    Q = mech.omega_m / mech.gamma_m
    _regime(force, "omega_m/gamma_m", Q, f">= {min_quality}", Q >= min_quality)
    G = cav.coupling()
    _regime(force, "|G|/kappa", abs(G) / cav.kappa, f"<= {max_coupling_ratio}",
            abs(G) <= max_coupling_ratio * cav.kappa)
    if det.omega_if is not None:
        bound = mech.omega_m + min_if_margin * mech.gamma_m
        _regime(force, "omega_if", det.omega_if, f"> {bound}", det.omega_if > bound)
    if det.T_bs is not None:
        _regime(force, "T_bs", det.T_bs, "0 < T_bs <= 1 and 1 - T_bs <= 0.1",
                0 < det.T_bs <= 1 and 1 - det.T_bs <= 0.1)

    s = mech.gamma_m
    scaled_mech = MechParams(omega_m=mech.omega_m / s, gamma_m=1.0, n_th=n_th, beta=mech.beta)
    scaled_cav = CavityParams(
        kappa=cav.kappa / s,
        kappa_ext=cav.kappa_ext / s,
        Delta=cav.Delta / s,
        G=G / s,
        Omega=None if cav.Omega is None else cav.Omega / s,
        g0=None if cav.g0 is None else cav.g0 / s,
        lam=cav.lam,
    )
    scaled_det = replace(
        det,
        omega_if=None if det.omega_if is None else det.omega_if / s,
        B=None if det.B is None else det.B / s,
    )
    out = ValidatedParams(
        mech=scaled_mech,
        cavity=scaled_cav,
        noise=noise,
        detector=scaled_det,
        coupling=DerivedCoupling(0.0, 0.0, 1.0),
        time_unit=s,
    )
    return replace(out, coupling=derive_coupling(out))


def make_params(
    *,
    omega_m,
    kappa,
    kappa_bar_ext=1.0,
    p=None,
    G=None,
    n_th=0.0,
    beta=1.0,
    field="quantum",
    alpha=1.0,
    laser=None,
    detector="QUA",
    Z2=1.0,
    omega_if=None,
    i0_ratio=1.0,
    lam=0,
    gamma_m=1.0,
    **validate_kwargs,
):
    """Build and validate a zero-detuning system from the usual knobs.

    Exactly one of ``p`` or ``G`` may be given; ``p`` is converted with
    :func:`coupling_for_p`.
    """
    if p is not None and G is not None:
        raise ValueError("give either p or G, not both")
    if p is not None:
        G = coupling_for_p(p, kappa, omega_m, gamma_m)
    sp = SystemParams(
        mech=MechParams(omega_m=omega_m, gamma_m=gamma_m, n_th=n_th, beta=beta),
        cavity=CavityParams(kappa=kappa, kappa_ext=kappa_bar_ext * kappa, G=G or 0.0, lam=lam),
        noise=FieldNoise(field, alpha, laser),
        detector=DetectorParams(model=detector, Z2=Z2, omega_if=omega_if, i0_ratio=i0_ratio),
    )
    return validate(sp, **validate_kwargs)
