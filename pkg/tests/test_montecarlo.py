import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hetspec import make_params
from hetspec.errors import (
    MissingOutputTrace,
    StepTooLarge,
    TooFewSamples,
    UnstableDrift,
    UnsupportedCombo,
    WindowOutOfRange,
)
from hetspec.heterodyne import noise_floor
from hetspec.montecarlo import (
    LinearSystem,
    PsdEstimate,
    Scenario,
    TimeTrace,
    empirical_autocorrelation,
    estimate_psd,
    extract_sidebands,
    integrate,
    periodogram,
    simulate_psd,
    simulate_sidebands,
    synthesize_photocurrent,
)
from hetspec.params import CavityParams, DetectorParams, MechParams, SystemParams, validate
from hetspec.response import MechMoments, autocorrelation_x


def philox(seed):
    return np.random.Generator(np.random.Philox(seed))


def batch_mean(v, batches=20):
    parts = np.array([b.mean() for b in np.array_split(v, batches)])
    return parts.mean(), parts.std(ddof=1) / np.sqrt(batches)


# ---------------------------------------------------------------- dynamics


def test_null_dynamics():
    pr = make_params(omega_m=50, kappa=500, p=0.1, n_th=0.0, beta=0.0, field="classical",
                     alpha=0.0)
    tr = integrate(pr, seed=3, T_s=5)
    assert not tr.x.any() and not tr.d.any() and not tr.d_out.any()


def test_decoupled_stationary_variance():
    pr = make_params(omega_m=50, kappa=500, G=0.0, n_th=0.0)
    ls = LinearSystem(pr, pr.noise, 1e-4)
    assert 4 * ls.stationary[1, 1] == pytest.approx(1.0, rel=1e-12)
    # the sample check uses a narrower cavity for a 10x coarser step
    pr = make_params(omega_m=50, kappa=50, G=0.0, n_th=0.0)
    tr = integrate(pr, seed=11, T_s=2000)
    m, se = batch_mean(tr.x**2)
    assert abs(m - 1.0) < 3 * se


def test_backaction_heating():
    pr = make_params(omega_m=50, kappa=500, kappa_bar_ext=0.8, p=0.1, n_th=0.0)
    ls = LinearSystem(pr, pr.noise, 1e-4)
    # weak-coupling closed form; the exact linear system differs at O(gamma/kappa)
    assert 4 * ls.stationary[1, 1] / 2 - 0.5 == pytest.approx(0.1, rel=1e-3)
    pr = make_params(omega_m=50, kappa=50, kappa_bar_ext=0.8, p=0.1, n_th=0.0)
    tr = integrate(pr, seed=12, T_s=2000)
    m, se = batch_mean(tr.x**2 / 2 - 0.5)
    assert abs(m - 0.1) < 3 * se


def test_determinism():
    pr = make_params(omega_m=50, kappa=500, p=0.1, n_th=0.5)
    a = integrate(pr, seed=5, T_s=2)
    b = integrate(pr, seed=5, T_s=2)
    c = integrate(pr, seed=6, T_s=2)
    assert np.array_equal(a.x, b.x) and np.array_equal(a.d_out, b.d_out)
    assert not np.array_equal(a.x, c.x)


def test_step_too_large():
    pr = make_params(omega_m=50, kappa=500, p=0.1)
    with pytest.raises(StepTooLarge):
        integrate(pr, dt=1e-3, T_s=1)


def test_unstable_drift():
    # optical anti-damping of about 2.6 gamma_m at this detuning
    sp = SystemParams(MechParams(omega_m=50.0), CavityParams(kappa=500, kappa_ext=400,
                                                             Delta=250.0, G=40.0))
    pr = validate(sp, closed_form=False)
    with pytest.raises(UnstableDrift):
        LinearSystem(pr, pr.noise, 1e-4)


def test_unsupported_combos():
    sc = Scenario(segments=16, T_seg=1)
    with pytest.raises(UnsupportedCombo):
        simulate_psd(make_params(omega_m=50, kappa=500, p=0.1, alpha=2.0), scenario=sc)
    with pytest.raises(UnsupportedCombo):
        simulate_psd(make_params(omega_m=50, kappa=500, p=0.1, beta=0.0), scenario=sc)
    with pytest.raises(UnsupportedCombo):
        simulate_psd(make_params(omega_m=50, kappa=500, p=0.1, field="classical"), scenario=sc)


# ---------------------------------------------------------- photocurrent


def _quiet_trace(n=4096, dt=1e-3, field="classical"):
    return TimeTrace(dt, np.zeros(n), np.zeros(n, complex), np.zeros(n, complex), field)


def test_photocurrent_pure_tone():
    det = DetectorParams(model="SCL", Z2=4.0)
    tr = _quiet_trace()
    t = (np.arange(4096) + 0.5) * 1e-3
    w = 2 * np.pi * 64 / (4096 * 1e-3)
    i = synthesize_photocurrent(tr, det, omega_if=w, abar_out=0.5, i0=3.0)
    # 2 Re(2i e^{iwt} / 2) = -2 sin(wt)
    assert np.allclose(i, 3.0 - 2 * np.sin(w * t), atol=1e-12)


def test_photocurrent_shot_noise_floor():
    det = DetectorParams(model="QUA", Z2=2.0, i0_ratio=1.5)
    dt = 1e-3
    tr = _quiet_trace(n=1 << 18, dt=dt)
    i = synthesize_photocurrent(tr, det, omega_if=100.0, seed=7)
    psd = estimate_psd(i, dt, segments=64)
    assert abs(np.mean(psd.mean) - 3.0) < 3 * np.sqrt(np.mean(psd.stderr**2) / len(psd.mean))
    # the SCL detector adds nothing
    assert not synthesize_photocurrent(tr, DetectorParams(model="SCL"), omega_if=100.0).any()
    # a vacuum-noise field already carries its floor unless asked
    q = _quiet_trace(field="quantum")
    assert not synthesize_photocurrent(q, det, omega_if=100.0).any()
    assert synthesize_photocurrent(q, det, omega_if=100.0, shot_noise=True).any()


def test_missing_output():
    tr = TimeTrace(1e-3, np.zeros(4), np.zeros(4, complex), None, "classical")
    with pytest.raises(MissingOutputTrace):
        synthesize_photocurrent(tr, DetectorParams(), omega_if=1.0)


def test_classical_field_floor_without_detector_noise():
    pr = make_params(omega_m=50, kappa=500, G=0.0, beta=0.0, field="classical", alpha=2.0,
                     detector="SCL", Z2=1.5, omega_if=400)
    psd, _ = simulate_psd(pr, scenario=Scenario(segments=16, T_seg=5), seed=1)
    floor = noise_floor("classical_SCL", pr)
    assert floor == 3.0
    band = np.abs(psd.omega) < 1000
    # exponential periodogram bins: relative error 1/sqrt(segments) per bin
    pooled = floor / np.sqrt(psd.segments * band.sum())
    assert abs(np.mean(psd.mean[band]) - floor) < 3 * pooled


# ------------------------------------------------------------------- PSD


def test_white_noise_calibration():
    dt = 0.01
    x = philox(1).standard_normal(1 << 18) / np.sqrt(dt)
    psd = estimate_psd(x, dt, segments=64)
    se = 1 / np.sqrt(psd.segments)
    # bins are nearly Gaussian at 64 segments; 3-sigma excursions stay rare
    assert np.mean(np.abs(psd.mean - 1.0) < 3 * se) > 0.99
    assert abs(np.mean(psd.mean) - 1.0) < 3 * se / np.sqrt(len(psd.mean))
    # the sample standard errors agree with the exponential-law value
    assert np.median(psd.stderr / psd.mean) == pytest.approx(se, rel=0.05)
    assert psd.parseval_ratio == pytest.approx(1.0, abs=1e-2)


@pytest.mark.parametrize("window", ["rect", "hann"])
def test_sinusoid_area(window):
    dt, n, m, A = 0.01, 4096, 205, 1.7
    t = np.arange(n * 16) * dt
    w0 = 2 * np.pi * m / (n * dt)
    psd = estimate_psd(A * np.cos(w0 * t), dt, segments=16, window=window)
    dw = psd.omega[1] - psd.omega[0]
    near = np.abs(psd.omega - w0) < 4 * dw
    area = np.sum(psd.mean[near]) * dw / (2 * np.pi)
    pos = psd.omega > 0
    assert psd.omega[pos][np.argmax(psd.mean[pos])] == pytest.approx(w0, abs=1e-9)
    assert area == pytest.approx(A**2 / 4, rel=1e-6 if window == "rect" else 2e-2)
    assert np.sum(psd.mean) * dw / (2 * np.pi) == pytest.approx(A**2 / 2, rel=1e-9 if window == "rect" else 2e-2)


def test_psd_errors():
    with pytest.raises(TooFewSamples):
        estimate_psd(np.zeros(1000), 0.1, segments=8)
    with pytest.raises(TooFewSamples):
        estimate_psd(np.zeros(20), 0.1, segments=16)
    with pytest.raises(ValueError):
        periodogram(np.zeros(8), 0.1, window="kaiser")
    with pytest.raises(TooFewSamples):
        simulate_psd(make_params(omega_m=50, kappa=500, p=0.1), scenario=Scenario(segments=4))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(16, 512))
def test_real_signal_symmetric_psd(seed, n):
    x = philox(seed).standard_normal(16 * n)
    psd = estimate_psd(x, 0.1)
    # fftshift places the Nyquist bin first for even n
    start = 1 if n % 2 == 0 else 0
    v = psd.mean[start:]
    assert np.allclose(v, v[::-1], rtol=1e-10, atol=1e-14)
    assert np.all(psd.mean >= 0)
    assert psd.parseval_ratio == pytest.approx(1.0, rel=1e-10)


# ------------------------------------------------------------ sidebands


def test_extract_sidebands_symmetric_psd():
    n, dt = 2048, 0.005
    omega = np.fft.fftshift(2 * np.pi * np.fft.fftfreq(n, dt))
    dw = omega[1] - omega[0]
    w_if = 64 * dw
    vals = 1 + np.exp(-((np.abs(omega) - w_if) ** 2) / 50)
    psd = PsdEstimate(omega, vals, 0.1 * vals, 16, dt, 1.0)
    sb = extract_sidebands(psd, w_if, 30 * dw, 10 * dw)
    assert np.allclose(sb.red, sb.blue, rtol=1e-12)
    assert sb.grid[0] == pytest.approx(20 * dw) and len(sb.grid) == 21
    with pytest.raises(WindowOutOfRange):
        extract_sidebands(psd, w_if, 70 * dw, 10 * dw)
    with pytest.raises(WindowOutOfRange):
        extract_sidebands(psd, w_if + dw / 3, 30 * dw, 10 * dw)


def test_thread_count_does_not_change_result():
    pr = make_params(omega_m=50, kappa=500, p=0.1, n_th=0.4, omega_if=400)
    sc = Scenario(segments=16, T_seg=2)
    a, _ = simulate_psd(pr, scenario=sc, seed=9, threads=1)
    b, _ = simulate_psd(pr, scenario=sc, seed=9, threads=3)
    assert np.array_equal(a.mean, b.mean) and np.array_equal(a.stderr, b.stderr)


def test_scenario_snaps_if_to_bin():
    pr = make_params(omega_m=50, kappa=500, p=0.1, omega_if=400)
    sc, n = Scenario(T_seg=100).resolve(pr)
    dw = 2 * np.pi / (n * sc.dt)
    assert sc.dt <= 0.05 / 500 * (1 + 1e-6)
    assert abs(sc.omega_if / dw - round(sc.omega_if / dw)) < 1e-9
    assert 2 * np.pi / sc.dt > 8 * (400 + 50)


def test_cold_bath_sidebands():
    # n_th = 0: only backaction populates the mode, n_eff = p
    pr = make_params(omega_m=50, kappa=50, kappa_bar_ext=0.8, p=0.1, n_th=0.0,
                     detector="SCL", omega_if=400)
    r = simulate_sidebands(pr, scenario=Scenario(segments=48, T_seg=100), seed=4)
    f = r.fit
    # quantum/SCL heights 4 p kbar (n_eff + 1/2) -+ 2 p kbar
    assert abs(f.h_r - 0.352) < 3 * f.h_r_err
    assert abs(f.h_b - 0.032) < 3 * f.h_b_err
    assert f.h_r - f.h_b > 3 * np.hypot(f.h_r_err, f.h_b_err)


def test_classical_squashing_blue_dip():
    pr = make_params(omega_m=20, kappa=20, kappa_bar_ext=0.8, p=0.05, n_th=0.1, beta=0.0,
                     field="classical", alpha=1.0, detector="SCL", omega_if=100)
    r = simulate_sidebands(pr, scenario=Scenario(segments=32, T_seg=200), seed=2)
    assert r.fit.h_b < 0


# --------------------------------------------------------- autocorrelation


def test_classical_autocorrelation_matches_propagator():
    n, p, alpha = 2.0, 0.1, 1.0
    pr = make_params(omega_m=50, kappa=50, kappa_bar_ext=0.8, p=p, n_th=n, beta=0.0,
                     field="classical", alpha=alpha, detector="SCL")
    x2 = 2 * (n + p * alpha)
    lags = np.array([0.0, 0.25, 0.5, 1.0, 2.0])
    rng = philox(21)
    runs = []
    for _ in range(12):
        tr = integrate(pr, T_s=100, rng=rng)
        tau, ac = empirical_autocorrelation(tr.x, tr.dt, 2.0)
        runs.append(np.interp(lags, tau, ac))
    runs = np.array(runs)
    est, se = runs.mean(0), runs.std(0, ddof=1) / np.sqrt(len(runs))
    oracle = autocorrelation_x(lags, MechMoments(x2), omega_m=50).real
    assert np.all(np.abs(est - oracle) < 3 * se + 1e-2 * x2)


def test_empirical_autocorrelation_oracle():
    x = np.array([1.0, 2.0, 3.0])
    tau, ac = empirical_autocorrelation(x, 0.5, 1.0)
    assert np.allclose(tau, [0, 0.5, 1.0])
    assert np.allclose(ac, [14 / 3, 8 / 2, 3 / 1])


# ---------------------------------------------------- multi-seed oracle


@pytest.mark.slow
def test_fitted_heights_converge_over_seeds():
    pr = make_params(omega_m=50, kappa=50, kappa_bar_ext=0.8, p=0.1, n_th=0.4, omega_if=400)
    target_r = 4 * 0.1 * 0.8 * 1.5
    target_b = 4 * 0.1 * 0.8 * 0.5
    hr, hb, er, eb = [], [], [], []
    for seed in range(20):
        f = simulate_sidebands(pr, scenario=Scenario(segments=16, T_seg=100), seed=seed).fit
        hr.append(f.h_r), hb.append(f.h_b), er.append(f.h_r_err), eb.append(f.h_b_err)
    hr, hb, er, eb = map(np.array, (hr, hb, er, eb))
    # pooled mean against the closed form
    assert abs(hr.mean() - target_r) < 3 * hr.std(ddof=1) / np.sqrt(20)
    assert abs(hb.mean() - target_b) < 3 * hb.std(ddof=1) / np.sqrt(20)
    # per-seed error bars are calibrated: at most one 3-sigma excursion in 20
    z = np.concatenate([(hr - target_r) / er, (hb - target_b) / eb])
    assert np.sum(np.abs(z) > 3) <= 1
