"""
Level statistics of random spectra
==================================

Poisson levels and GOE eigenvalues are the two reference points for every
diagnostic in the package.  Here we unfold both, fit the Brody parameter
and compare adjacent gap ratios with their known means.
"""
import numpy as np
import matplotlib.pyplot as plt

from tclchaos.spectra import Spectrum, trim_spectrum
from tclchaos.stats import (GOE_MEAN_R, POISSON_MEAN_R, brody_pdf, fit_brody, gap_ratios,
                            goe_sample_spectrum, poisson_levels, reference_spacing_pdf, spacings)
from tclchaos.unfolding import unfold

# uncorrelated levels: exponential gaps, already at unit density
poisson = Spectrum(poisson_levels(20000, seed=0))

# one large GOE matrix; the semicircle edges are cut before unfolding
goe = trim_spectrum(goe_sample_spectrum(2000, seed=0), 0.1, 0.1)

fig, ax = plt.subplots(figsize=(5, 3.5))
s_grid = np.linspace(0, 4, 300)
for name, spec, color in [("Poisson", poisson, "tab:orange"), ("GOE", goe, "tab:blue")]:
    s = spacings(unfold(spec))
    fit = fit_brody(s)
    r = gap_ratios(spec)
    print(f"{name:8s} b = {fit.b:.3f} +- {fit.stderr:.3f}   <r> = {r.mean_r:.4f}")
    ax.hist(s, bins=60, range=(0, 4), density=True, alpha=0.4, color=color, label=name)
    ax.plot(s_grid, brody_pdf(fit.b, s_grid), color=color)

print(f"reference <r>: Poisson {POISSON_MEAN_R:.4f}, GOE surmise {GOE_MEAN_R:.4f}")

ax.plot(s_grid, reference_spacing_pdf("poisson", s_grid), "k--", lw=0.8)
ax.plot(s_grid, reference_spacing_pdf("goe", s_grid), "k:", lw=0.8)
ax.set_xlabel("s")
ax.set_ylabel("p(s)")
ax.legend(frameon=False)
fig.tight_layout()
fig.savefig("level_statistics.svg")
