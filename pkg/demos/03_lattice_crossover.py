"""
Hopping drives the lattice towards chaos
========================================

Three cavity-spin sites with spin S=4 in one excitation/parity sector.  At
zero hopping each site conserves its own excitation number and the
spectrum looks Poissonian; switching on J mixes them and level repulsion
appears.  Takes a few minutes on one core.
"""
import numpy as np
import matplotlib.pyplot as plt

from tclchaos.basis import LatticeParams, sector_dimension
from tclchaos.crossover import sweep
from tclchaos.stats import GOE_MEAN_R, POISSON_MEAN_R

fixed = dict(L=3, S=4, lam=1.0)
n_ex = 17
print("sector dimension:", sector_dimension(LatticeParams(**fixed), n_ex, "symmetric"))

grid = [0.02, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.7, 1.0]
curve = sweep("lattice", grid, fixed, n_ex=n_ex)
curve.to_csv("lattice_curve.csv")
for J, b, r in zip(curve.control, curve.b, curve.mean_r):
    print(f"J/lambda = {J:5.2f}   b = {b:.3f}   <r> = {r:.3f}")

fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8, 3.2))
ax1.errorbar(curve.scaled_control, curve.mean_r, curve.r_err, fmt="o-", ms=3)
ax1.axhline(POISSON_MEAN_R, color="k", ls="--", lw=0.8)
ax1.axhline(GOE_MEAN_R, color="k", ls=":", lw=0.8)
ax1.set_xscale("log")
ax1.set_xlabel(r"$J/\lambda \cdot S^{1/4}$")
ax1.set_ylabel(r"$\langle r\rangle$")
ax2.errorbar(curve.scaled_control, curve.b, curve.b_err, fmt="o-", ms=3)
ax2.set_xscale("log")
ax2.set_xlabel(r"$J/\lambda \cdot S^{1/4}$")
ax2.set_ylabel("Brody b")
fig.tight_layout()
fig.savefig("lattice_crossover.svg")
