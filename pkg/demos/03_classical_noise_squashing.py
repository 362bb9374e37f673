"""
When the classical model fails
==============================

A classical field with intrinsic noise alpha produces sidebands of exactly
the quantum shape, but the occupancy they imply is shifted by -1/2. At low
temperature the implied occupancy goes negative and the blue sideband dips
below the floor (noise squashing), which is the signature that separates the
two descriptions. The second panel follows the blue height as the
temperature falls, in units of hbar omega_m / k T.
"""

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from hetspec import make_params
from hetspec.heterodyne import (
    blue_height_vs_Q,
    classical_inferred_occupancy,
    classical_zero_crossing,
    sidebands,
)

OUT = os.path.join(os.path.dirname(__file__), "out")
os.makedirs(OUT, exist_ok=True)

params = make_params(omega_m=20, kappa=20, kappa_bar_ext=0.8, p=0.05, n_th=0.1, beta=0,
                     field="classical", alpha=1.0, detector="SCL", omega_if=100)
grid = np.linspace(10, 30, 1001)
red, blue = sidebands("classical_SCL", params, grid)
print(f"implied occupancy: {classical_inferred_occupancy(0.1, 1.0, 0.05):+.2f}")

Q = np.linspace(0.2, 10, 981)
bc = blue_height_vs_Q(Q, alpha=1.0, p=0.1)

fig, (a1, a2) = plt.subplots(1, 2, figsize=(10, 4))
a1.plot(grid, red.total, "C3", label="red")
a1.plot(grid, blue.total, "C0", label="blue")
a1.axhline(red.S_o[0], color="gray", ls=":", lw=1)
a1.set_xlabel(r"$\tilde\omega/\gamma_m$")
a1.set_ylabel(r"$S/|Z|^2$")
a1.set_title("classical field, n_th = 0.1")
a1.legend()
a2.plot(Q, bc.quantum, label="quantum")
a2.plot(Q, bc.classical, label="classical")
a2.axhline(0, color="gray", lw=0.8)
a2.set_ylim(-0.6, 2)
a2.set_xlabel(r"$Q = \hbar\omega_m / k_B T$")
a2.set_ylabel("blue height / (4 p kbar)")
a2.legend()
fig.tight_layout()
fig.savefig(os.path.join(OUT, "03_classical_noise_squashing.png"), dpi=120)

print(f"classical curve crosses zero at Q = {classical_zero_crossing(1.0, 0.1):.6f}")
print(f"slope bound |dn/dQ| > 1/4 above n = p holds: {bc.bound_ok}")
