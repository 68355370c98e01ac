"""
Classical limit: regular and chaotic Poincare sections
======================================================

In the large-S limit the driven site becomes a two-degree-of-freedom
Hamiltonian system.  Sections at p_s = 0 are smooth curves for weak drive
near the bottom of the spectrum, and fill areas for strong drive.  The
correlation dimension of the points makes this quantitative.
"""
import matplotlib.pyplot as plt

from tclchaos.basis import ImpurityParams
from tclchaos.classical import minimum_energy, poincare_section, section_dimension

rows = [(0.1, 0.5), (0.1, 1.0), (1.8, 1.0), (1.8, 2.0)]
fig, axes = plt.subplots(1, len(rows), figsize=(3.2 * len(rows), 3.2))
for ax, (mu, dE) in zip(axes, rows):
    p = ImpurityParams(S=1, lam=1.0, mu=mu)
    E = minimum_energy(p)[0] + dE
    sec = poincare_section(p, E, n_seeds=8, n_crossings=500, seed=0)
    dim = section_dimension(sec)
    print(f"mu = {mu}, E = E_min + {dE}: dimension {dim:.2f}, truncated {sum(sec.truncated)}")
    for pts in sec.points:
        ax.plot(pts[:, 0], pts[:, 1], ".", ms=1)
    ax.set_title(rf"$\mu$={mu}, $E-E_{{min}}$={dE}, d={dim:.2f}", fontsize=9)
    ax.set_xlabel(r"$x_c$")
axes[0].set_ylabel(r"$p_c$")
fig.tight_layout()
fig.savefig("poincare_sections.svg")
