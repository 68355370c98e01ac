"""Static SVG figures drawn from the CSV/JSON artifacts of the batch driver."""
from __future__ import annotations

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .stats import GOE_MEAN_R, POISSON_MEAN_R, brody_pdf, reference_ratio_pdf, reference_spacing_pdf  # noqa: E402


def _save(fig, path) -> Path:
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
    return Path(path)


def _read_values(path) -> np.ndarray:
    vals = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line and not line.startswith("#") and line != "eigenvalue":
                vals.append(float(line))
    return np.array(vals)


def plot_dos(spectrum_csv, out, unfolded_csv=None, bins: int = 50) -> Path:
    """Density of states before (and after) unfolding."""
    n = 2 if unfolded_csv else 1
    fig, axes = plt.subplots(1, n, figsize=(4.5 * n, 3.5), squeeze=False)
    ax = axes[0, 0]
    ax.hist(_read_values(spectrum_csv), bins=bins, color="0.4")
    ax.set_xlabel("E")
    ax.set_ylabel("count")
    ax.set_title("raw")
    if unfolded_csv:
        ax = axes[0, 1]
        ax.hist(_read_values(unfolded_csv), bins=bins, color="tab:blue")
        ax.set_xlabel(r"$\tilde E$")
        ax.set_title("unfolded")
    return _save(fig, Path(out) / "dos.svg")


def plot_stats(stats_json, out) -> list:
    """Spacing histogram with Brody fit and references; gap-ratio histogram."""
    with open(stats_json) as fh:
        rep = json.load(fh)
    paths = []
    h = rep["histograms"]["spacing"]
    edges, dens = np.array(h["edges"]), np.array(h["density"])
    s = np.linspace(0, edges[-1], 400)
    fig, ax = plt.subplots(figsize=(4.5, 3.5))
    ax.stairs(dens, edges, fill=True, color="0.8", label="data")
    ax.plot(s, reference_spacing_pdf("poisson", s), "k--", label="Poisson")
    ax.plot(s, reference_spacing_pdf("goe", s), "k:", label="GOE")
    ax.plot(s, brody_pdf(rep["b"], s), "r-", label=f"Brody b={rep['b']:.2f}")
    ax.set_xlabel("s")
    ax.set_ylabel("p(s)")
    ax.legend(frameon=False)
    paths.append(_save(fig, Path(out) / "spacing.svg"))

    h = rep["histograms"]["ratio"]
    edges, dens = np.array(h["edges"]), np.array(h["density"])
    r = np.linspace(0, 1, 400)
    fig, ax = plt.subplots(figsize=(4.5, 3.5))
    ax.stairs(dens, edges, fill=True, color="0.8", label=rf"data, $\langle r\rangle$={rep['mean_r']:.3f}")
    ax.plot(r, reference_ratio_pdf("poisson", r), "k--", label="Poisson")
    ax.plot(r, reference_ratio_pdf("goe", r), "k:", label="GOE")
    ax.set_xlabel("r")
    ax.set_ylabel("P(r)")
    ax.legend(frameon=False)
    paths.append(_save(fig, Path(out) / "ratio.svg"))
    return paths


def plot_sff(sff_csv, out) -> Path:
    d = np.loadtxt(sff_csv, delimiter=",", skiprows=1, ndmin=2)
    t, k, se, goe, poi, nb = d[:, 0], d[:, 1], d[:, 2], d[:, 3], d[:, 4], int(d[0, 6])
    fig, ax = plt.subplots(figsize=(5, 3.8))
    ax.fill_between(t, np.maximum(k - se, 1e-3), k + se, color="tab:blue", alpha=0.3, lw=0)
    ax.loglog(t, k, color="tab:blue", lw=1, label="measured")
    ax.loglog(t, goe, "k-", lw=0.8, label="GOE")
    ax.loglog(t, poi, "k--", lw=0.8, label="Poisson")
    ax.axhline(nb, color="0.5", ls=":", lw=0.8, label=f"plateau N={nb}")
    ax.set_xlabel("t")
    ax.set_ylabel("K(t)")
    ax.legend(frameon=False)
    return _save(fig, Path(out) / "sff.svg")


def plot_curve(curve_csv, out) -> Path:
    d = np.loadtxt(curve_csv, delimiter=",", skiprows=1, ndmin=2)
    fig, ax = plt.subplots(figsize=(4.5, 3.5))
    ax.errorbar(d[:, 1], d[:, 4], yerr=d[:, 5], fmt="o-", ms=3)
    ax.axhline(POISSON_MEAN_R, color="k", ls="--", lw=0.8)
    ax.axhline(GOE_MEAN_R, color="k", ls=":", lw=0.8)
    ax.set_xscale("log")
    ax.set_xlabel("scaled control")
    ax.set_ylabel(r"$\langle r\rangle$")
    return _save(fig, Path(out) / "ratio_ramp.svg")


def plot_section(section_csv, out) -> Path:
    d = np.loadtxt(section_csv, delimiter=",", skiprows=1, ndmin=2)
    fig, ax = plt.subplots(figsize=(4.2, 4.2))
    for tid in np.unique(d[:, 0]):
        sel = d[:, 0] == tid
        ax.plot(d[sel, 2], d[sel, 3], ".", ms=1.5)
    ax.set_xlabel(r"$x_c$")
    ax.set_ylabel(r"$p_c$")
    return _save(fig, Path(out) / "poincare.svg")


def plot_map(map_csv, out) -> Path:
    d = np.loadtxt(map_csv, delimiter=",", skiprows=1, usecols=(0, 1, 2, 3), ndmin=2)
    fig, ax = plt.subplots(figsize=(4.5, 3.5))
    ax.fill_between(d[:, 0], d[:, 2], d[:, 3], alpha=0.3, lw=0)
    ax.plot(d[:, 0], d[:, 1])
    ax.set_xlabel(r"$J/\lambda$")
    ax.set_ylabel(r"$\mu$")
    return _save(fig, Path(out) / "map.svg")


def plot_artifacts(files: dict, out) -> list:
    """Draw every figure whose input is present in ``files``."""
    out = Path(out)
    paths = []
    if "spectrum" in files:
        paths.append(plot_dos(files["spectrum"], out, files.get("unfolded")))
    if "stats" in files:
        paths += plot_stats(files["stats"], out)
    if "sff" in files:
        paths.append(plot_sff(files["sff"], out))
    if "curve" in files:
        paths.append(plot_curve(files["curve"], out))
    if "section" in files:
        paths.append(plot_section(files["section"], out))
    if "map" in files:
        paths.append(plot_map(files["map"], out))
    return paths
