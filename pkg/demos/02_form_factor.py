"""
Spectral form factor
====================

Block-averaged |Tr exp(iHt)|^2 for unfolded GOE spectra and Poisson
levels, against the analytic curves.  The GOE curve shows the dip, the
linear-ish ramp and the plateau at N; Poisson levels jump straight to it.
"""
import numpy as np
import matplotlib.pyplot as plt

from tclchaos.sff import sff
from tclchaos.spectra import trim_spectrum
from tclchaos.stats import goe_sample_spectrum, poisson_levels
from tclchaos.unfolding import unfold

N = 100
t = np.geomspace(1e-2, 1e2, 400)

# 25 matrices, each unfolded on its own and shifted apart so blocks never straddle two
levels = []
for k in range(25):
    spec = trim_spectrum(goe_sample_spectrum(500, seed=k), 0.1, 0.1)
    levels.append(unfold(spec).values + 1e4 * k)
goe = sff(np.concatenate(levels), N, t)
poi = sff(poisson_levels(100 * N, seed=0), N, t)
print(f"{goe.n_blocks} GOE blocks, {poi.n_blocks} Poisson blocks of {N}")

fig, ax = plt.subplots(figsize=(5.5, 4))
ax.loglog(t, goe.values, color="tab:blue", lw=0.8, label="GOE samples")
ax.loglog(t, goe.goe, "k-", lw=0.8)
ax.loglog(t, poi.values, color="tab:orange", lw=0.8, label="Poisson samples")
ax.loglog(t, poi.poisson, "k--", lw=0.8)
ax.axhline(N, color="0.5", ls=":")
ax.set_xlabel("t")
ax.set_ylabel("K(t)")
ax.legend(frameon=False)
fig.tight_layout()
fig.savefig("form_factor.svg")

late = (t > 10 * np.pi) & (t < 20 * np.pi)
print("late-time average:", goe.values[late].mean().round(1), poi.values[late].mean().round(1))
