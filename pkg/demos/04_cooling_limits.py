"""
How cold can a classical field cool?
====================================

A second, red-detuned beam damps the oscillator. With intrinsic classical
field noise alpha the occupancy never drops below alpha/2, while the quantum
description reaches the backaction limit (kappa/4 omega_m)^2 in the resolved
sideband regime. The sweep covers detunings from -5 kappa to -0.01 kappa and
damping enhancements from 10 to 10^4.
"""

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from hetspec.cooling import CoolingParams, cooled_occupancy, cooling_sweep

OUT = os.path.join(os.path.dirname(__file__), "out")
os.makedirs(OUT, exist_ok=True)

kappa, omega_m = 1e6, 4e6
D = np.linspace(-5 * kappa, -0.01 * kappa, 60)
R = np.array([10.0, 100.0, 1e3, 1e4])
sw = cooling_sweep(D, R, kappa=kappa, omega_m0=omega_m, gamma_m0=1.0, n_th0=1e3, alpha=1.0)

fig, ax = plt.subplots(figsize=(6, 4))
for j, r in enumerate(R):
    ax.semilogy(D / kappa, sw.n_classical[:, j], color=f"C{j}", label=f"classical, x{r:g}")
    ax.semilogy(D / kappa, sw.n_quantum[:, j], color=f"C{j}", ls="--")
ax.axhline(0.5, color="k", lw=0.8, ls=":")
ax.set_xlabel(r"$\Delta_2/\kappa$")
ax.set_ylabel("cooled occupancy")
ax.set_title("solid: classical field, dashed: quantum")
ax.legend(fontsize=8)
fig.tight_layout()
fig.savefig(os.path.join(OUT, "04_cooling_limits.png"), dpi=120)

print(f"classical minimum over the sweep: {np.nanmin(sw.n_classical):.4f} (floor 0.5)")
print(f"quantum minimum over the sweep:   {np.nanmin(sw.n_quantum):.4f}")

# deep resolved-sideband case, omega_m = 100 kappa
cp = CoolingParams(Delta_2=-100.0, G_2=0.05, kappa=1.0, omega_m0=100.0, gamma_m0=1e-9)
print(f"resolved sideband, quantum:   {cooled_occupancy(cp, 'quantum').n_th_eff:.3e}")
print(f"resolved sideband, classical: {cooled_occupancy(cp, 'classical').n_th_eff:.6f}")
