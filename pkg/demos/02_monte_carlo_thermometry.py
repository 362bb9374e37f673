"""
Thermometry on simulated photocurrents
======================================

The closed forms are checked against a time-domain simulation: the linear
Langevin equations are integrated exactly step by step, the heterodyne
current is synthesized, and its averaged periodogram is fitted like
laboratory data. A narrow-band version of the quantum scenario keeps the run
to a few seconds.
"""

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from hetspec import make_params
from hetspec.heterodyne import sideband_model, spectrum
from hetspec.montecarlo import Scenario, simulate_sidebands

OUT = os.path.join(os.path.dirname(__file__), "out")
os.makedirs(OUT, exist_ok=True)

# kappa = 50 relaxes the step size tenfold compared with kappa = 500;
# p is defined at omega_m, so the sideband heights are unchanged
params = make_params(omega_m=50, kappa=50, kappa_bar_ext=0.8, p=0.1, n_th=0.4, omega_if=400)
res = simulate_sidebands(params, scenario=Scenario(segments=32, T_seg=100), seed=1)
sb, fit = res.sidebands, res.fit

closed = spectrum(None, params, sb.grid)
red_fit, blue_fit = sideband_model(fit, sb.grid)

fig, ax = plt.subplots(figsize=(6, 4))
ax.errorbar(sb.grid, sb.red, sb.red_err, fmt=".", color="C3", ms=3, alpha=0.5, label="red (sim)")
ax.errorbar(sb.grid, sb.blue, sb.blue_err, fmt=".", color="C0", ms=3, alpha=0.5, label="blue (sim)")
ax.plot(sb.grid, closed.red.total, "C3", label="red closed form")
ax.plot(sb.grid, closed.blue.total, "C0", label="blue closed form")
ax.plot(sb.grid, red_fit, "k--", lw=1, label="joint fit")
ax.plot(sb.grid, blue_fit, "k--", lw=1)
ax.set_xlabel(r"$\tilde\omega/\gamma_m$")
ax.set_ylabel(r"$S/|Z|^2$")
ax.legend(fontsize=8)
fig.tight_layout()
fig.savefig(os.path.join(OUT, "02_monte_carlo_thermometry.png"), dpi=120)

print(f"h_r = {fit.h_r:.3f} +- {fit.h_r_err:.3f}   (closed form 0.48)")
print(f"h_b = {fit.h_b:.3f} +- {fit.h_b_err:.3f}   (closed form 0.16)")
print(f"ratio method n = {fit.ratio_method_n:.2f} +- {fit.ratio_method_n_err:.2f}   (0.5)")
print(f"Parseval ratio of the PSD: {res.psd.parseval_ratio:.6f}")
