"""
A driven single site as a stand-in for the lattice
==================================================

A coherent drive mu breaks the U(1) symmetry of one cavity-spin site.  The
gap ratio rises from Poisson to GOE and falls again at strong drive.
Curves for several S collapse when mu is scaled by S^(3/4).  If the lattice
curve from 03_lattice_crossover.py is present, the diagnostic is eliminated
to give the map mu(J/lambda).  About ten minutes on one core.
"""
import os

import numpy as np
import matplotlib.pyplot as plt

from tclchaos.crossover import DiagnosticCurve, collapse_check, extract_map, sweep

x = np.array([0.5, 1, 2, 4, 6, 8, 10, 12, 14, 16, 20, 24])
cutoff = {8: 256, 16: 256, 32: 128}
curves = {}
for S in (8, 16, 32):
    curves[S] = sweep("impurity", x / S**0.75, dict(S=S, lam=1.0, n_cutoff=cutoff[S]))
    print(f"S = {S:2d}: <r> = {np.round(curves[S].mean_r, 3)}")
curves[16].to_csv("impurity_curve_S16.csv")

for e in (0.0, 0.25, 0.5, 0.75, 1.0):
    print(f"collapse score at exponent {e:.2f}: {collapse_check(curves.values(), e):.4f}")

fig, ax = plt.subplots(figsize=(5, 3.5))
for S, c in curves.items():
    ax.errorbar(c.scaled_control, c.mean_r, c.r_err, fmt="o-", ms=3, label=f"S={S}")
ax.set_xscale("log")
ax.set_xlabel(r"$\mu S^{3/4}$")
ax.set_ylabel(r"$\langle r\rangle$")
ax.legend(frameon=False)
fig.tight_layout()
fig.savefig("impurity_collapse.svg")

if os.path.exists("lattice_curve.csv"):
    lat = DiagnosticCurve.from_csv("lattice_curve.csv", "lattice", 4, 0.25)
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for d in ("b", "r"):
        m = extract_map(lat, curves[16], d)
        ax.fill_between(m.j_over_lambda, m.band_low, m.band_high, alpha=0.3, lw=0)
        ax.plot(m.j_over_lambda, m.mu, label=f"via {d}")
        print(f"map via {d}: window {np.round(m.window, 3)}")
    ax.set_ylim(0, 2)
    ax.set_xlabel(r"$J/\lambda$")
    ax.set_ylabel(r"$\mu$")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig("map.svg")
