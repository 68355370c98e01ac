"""Parameter sweeps, dynamic-scaling collapse and the lattice-to-impurity map.

A sweep runs the whole pipeline (basis, Hamiltonian, eigenvalues, trims,
unfolding, statistics) once per control value and collects the Brody
parameter and the mean gap ratio.  Two such curves, one per model, are
related by eliminating the shared diagnostic:

    mu(J) = f2^{-1}(f1(J))

on the range where both are invertible.
"""
from __future__ import annotations

import itertools
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq, isotonic_regression

from .basis import ImpurityParams, LatticeParams, build_impurity_basis, build_sector_basis
from .hamiltonian import assemble_impurity_hamiltonian, assemble_lattice_hamiltonian
from .spectra import diagonalize, trim_spectrum
from .stats import fit_brody, gap_ratios, spacings
from .unfolding import DEFAULT_DEGREE, unfold

log = logging.getLogger(__name__)

DIAGNOSTICS = ("b", "r")
#: default edge trims (low, high) per model
DEFAULT_TRIMS = {"lattice": (0.02, 0.02), "impurity": (0.1, 0.5)}
#: dynamic-scaling exponents of the control parameter
SCALING_EXPONENTS = {"lattice": 0.25, "impurity": 0.75}
MIN_IMPURITY_MU = 0.01


class MapError(ValueError):
    pass


@dataclass
class DiagnosticCurve:
    """Diagnostics along a sweep of one control parameter.

    ``control`` holds raw ``J/lambda`` or ``mu``; ``scaled_control``
    multiplies by ``S**exponent``.
    """

    model: str
    S: int
    control: np.ndarray
    b: np.ndarray
    b_err: np.ndarray
    mean_r: np.ndarray
    r_err: np.ndarray
    exponent: float = 0.0
    failed: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.control = np.asarray(self.control, dtype=float)
        for name in ("b", "b_err", "mean_r", "r_err"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))
        if np.any(np.diff(self.control) <= 0):
            raise ValueError("control values must be strictly increasing")

    @property
    def scaled_control(self) -> np.ndarray:
        return self.control * float(self.S) ** self.exponent

    def diagnostic(self, name: str):
        """``(values, standard errors)`` of ``"b"`` or ``"r"``."""
        if name == "b":
            return self.b, self.b_err
        if name == "r":
            return self.mean_r, self.r_err
        raise ValueError(f"unknown diagnostic {name!r}")

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("control,scaled_control,b,b_err,mean_r,r_err\n")
            for row in zip(self.control, self.scaled_control, self.b, self.b_err, self.mean_r, self.r_err):
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")

    @classmethod
    def from_csv(cls, path, model: str, S: int, exponent: float = 0.0) -> "DiagnosticCurve":
        d = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(model, S, d[:, 0], d[:, 2], d[:, 3], d[:, 4], d[:, 5], exponent)


def _point(model, control, fixed, n_ex, parity, trims, degree, method):
    """Full pipeline for one control value; returns ``(b, b_err, r, r_err, n_levels)``."""
    if model == "lattice":
        params = LatticeParams(J=control, **fixed)
        basis = build_sector_basis(params, n_ex, parity)
        H = assemble_lattice_hamiltonian(basis)
    else:
        params = ImpurityParams(mu=control, **fixed)
        H = assemble_impurity_hamiltonian(build_impurity_basis(params))
    spec = trim_spectrum(diagonalize(H), *trims)
    fit = fit_brody(spacings(unfold(spec, degree)), method)
    gr = gap_ratios(spec)
    return fit.b, fit.stderr, gr.mean_r, gr.stderr, len(spec)


def _point_safe(args):
    try:
        return _point(*args), None
    except Exception as exc:  # noqa: BLE001 - failures are reported per point
        return None, f"{type(exc).__name__}: {exc}"


def sweep(model: str, grid, fixed: dict, n_ex: int | None = None, parity: str = "symmetric",
          trims=None, degree: int = DEFAULT_DEGREE, method: str = "mle",
          workers: int = 1, exponent: float | None = None) -> DiagnosticCurve:
    """Run the pipeline along ``grid`` (``J/lambda`` for the lattice, ``mu`` for the impurity).

    ``fixed`` holds the remaining model parameters (``L, S, lam, ...`` or
    ``S, lam, n_cutoff, ...``).  Failed points are logged, skipped and
    listed in ``curve.failed``.
    """
    if model not in DEFAULT_TRIMS:
        raise ValueError(f"unknown model {model!r}")
    grid = np.sort(np.asarray(grid, dtype=float))
    if grid.size == 0:
        raise ValueError("empty control grid")
    if model == "lattice" and n_ex is None:
        raise ValueError("lattice sweeps need n_ex")
    if model == "impurity" and grid[0] < MIN_IMPURITY_MU:
        # mu = 0 restores U(1); the unresolved blocks mimic Poisson statistics
        raise ValueError(f"impurity sweeps need mu >= {MIN_IMPURITY_MU}")
    trims = DEFAULT_TRIMS[model] if trims is None else tuple(trims)
    jobs = [(model, float(c), fixed, n_ex, parity, trims, degree, method) for c in grid]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_point_safe, jobs))
    else:
        results = [_point_safe(j) for j in jobs]
    rows, failed = [], []
    for c, (res, err) in zip(grid, results):
        if err is None:
            rows.append((c, *res))
        else:
            log.warning("sweep point %s=%g failed: %s", model, c, err)
            failed.append((float(c), err))
    if not rows:
        raise RuntimeError(f"every sweep point failed: {failed}")
    c, b, be, r, re_, n = map(np.array, zip(*rows))
    S = fixed["S"]
    expo = SCALING_EXPONENTS[model] if exponent is None else exponent
    meta = {"n_ex": n_ex, "parity": parity, "trims": list(trims), "degree": degree,
            "method": method, "n_levels": n.tolist(), **fixed}
    return DiagnosticCurve(model, S, c, b, be, r, re_, expo, failed, meta)


def _log_interp(x_new, x, y):
    """Linear interpolation in ``log x`` (linear in ``x`` if any value is non-positive)."""
    if np.all(x > 0) and np.all(x_new > 0):
        return np.interp(np.log(x_new), np.log(x), y)
    return np.interp(x_new, x, y)


def collapse_check(curves, exponent: float, diagnostic: str = "r", n_grid: int = 200) -> float:
    """Mean pairwise RMS distance between curves after scaling controls by ``S**exponent``."""
    curves = list(curves)
    if len(curves) < 2:
        raise ValueError("need at least two curves")
    xs = [c.control * float(c.S) ** exponent for c in curves]
    lo = max(x[0] for x in xs)
    hi = min(x[-1] for x in xs)
    if not lo < hi:
        raise ValueError(f"rescaled control ranges do not overlap at exponent {exponent}")
    grid = np.geomspace(lo, hi, n_grid) if lo > 0 else np.linspace(lo, hi, n_grid)
    ys = [_log_interp(grid, x, c.diagnostic(diagnostic)[0]) for x, c in zip(xs, curves)]
    dists = [math.sqrt(np.mean((a - b) ** 2)) for a, b in itertools.combinations(ys, 2)]
    return float(np.mean(dists))


@dataclass
class CrossoverMap:
    j_over_lambda: np.ndarray
    mu: np.ndarray
    band_low: np.ndarray
    band_high: np.ndarray
    diagnostic: str
    window: tuple
    meta: dict = field(default_factory=dict)

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("j_over_lambda,mu,band_low,band_high,diagnostic\n")
            for row in zip(self.j_over_lambda, self.mu, self.band_low, self.band_high):
                fh.write(",".join(f"{v:.17g}" for v in row) + f",{self.diagnostic}\n")

    @classmethod
    def from_csv(cls, path) -> "CrossoverMap":
        d = np.loadtxt(path, delimiter=",", skiprows=1, usecols=(0, 1, 2, 3), ndmin=2)
        with open(path) as fh:
            fh.readline()
            diag = fh.readline().strip().rsplit(",", 1)[-1]
        return cls(d[:, 0], d[:, 1], d[:, 2], d[:, 3], diag, (float(d[0, 0]), float(d[-1, 0])))


def increasing_branch(x, y, err=None):
    """Isotonic fit of the rising part of a curve, reduced to strictly increasing knots.

    The curve is cut at the maximum of its isotonic-smoothed values (so a
    re-entrant tail is dropped).  Runs of tied values are merged into one
    knot at their mean control.  Returns ``(x, y, err)`` knots.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    err = np.ones_like(y) if err is None else np.asarray(err, dtype=float)
    w = 1.0 / np.where(np.isfinite(err) & (err > 0), err, np.nanmedian(err[err > 0]) if np.any(err > 0) else 1.0) ** 2
    # the cut minimizes the misfit of an up-then-down (unimodal) isotonic model
    best, cut = np.inf, len(y)
    for k in range(2, len(y) + 1):
        up = isotonic_regression(y[:k], weights=w[:k], increasing=True).x
        cost = np.sum(w[:k] * (y[:k] - up) ** 2)
        if k < len(y):
            down = isotonic_regression(y[k:], weights=w[k:], increasing=False).x
            cost += np.sum(w[k:] * (y[k:] - down) ** 2)
        if cost < best - 1e-12:
            best, cut = cost, k
    xs, ys, es = x[:cut], isotonic_regression(y[:cut], weights=w[:cut]).x, err[:cut]
    kx, ky, ke = [], [], []
    start = 0
    for i in range(1, len(ys) + 1):
        if i == len(ys) or ys[i] > ys[start] + 1e-15:
            blk = slice(start, i)
            kx.append(xs[blk].mean())
            ky.append(ys[start])
            ke.append(math.sqrt(np.sum(es[blk] ** 2)) / (i - start))
            start = i
    if len(kx) < 2:
        raise MapError("curve has no strictly increasing part after isotonic smoothing")
    return np.array(kx), np.array(ky), np.array(ke)


def extract_map(lattice_curve: DiagnosticCurve, impurity_curve: DiagnosticCurve,
                diagnostic: str = "r", n_grid: int = 101, grid=None) -> CrossoverMap:
    """``mu = f2^{-1}(f1(J/lambda))`` with linearized one-sigma error bands.

    Both curves are reduced to their increasing branch, interpolated with
    monotone cubics (PCHIP), and the impurity interpolant is inverted by
    root finding.  The validity window is the set of ``J/lambda`` whose
    diagnostic lies inside the impurity curve's range.
    """
    x1, y1, e1 = increasing_branch(lattice_curve.control, *lattice_curve.diagnostic(diagnostic))
    x2, y2, e2 = increasing_branch(impurity_curve.control, *impurity_curve.diagnostic(diagnostic))
    f1 = PchipInterpolator(x1, y1)
    f2 = PchipInterpolator(x2, y2)
    df2 = f2.derivative()
    lo_y, hi_y = max(y1[0], y2[0]), min(y1[-1], y2[-1])
    if not lo_y < hi_y:
        raise MapError("diagnostic ranges of the two curves do not overlap")
    # f1 is monotone, so the window in J is an interval
    inv1 = lambda yv: brentq(lambda t: f1(t) - yv, x1[0], x1[-1], xtol=1e-14)  # noqa: E731
    j_lo = x1[0] if y1[0] >= lo_y else inv1(lo_y)
    j_hi = x1[-1] if y1[-1] <= hi_y else inv1(hi_y)
    if grid is None:
        grid = np.geomspace(j_lo, j_hi, n_grid) if j_lo > 0 else np.linspace(j_lo, j_hi, n_grid)
    else:
        grid = np.asarray(grid, dtype=float)
        grid = grid[(grid >= j_lo) & (grid <= j_hi)]
    target = np.clip(f1(grid), y2[0], y2[-1])
    mu = np.array([
        x2[0] if t <= y2[0] else x2[-1] if t >= y2[-1]
        else brentq(lambda m: f2(m) - t, x2[0], x2[-1], xtol=1e-14)
        for t in target
    ])
    s1 = _log_interp(grid, x1, e1)
    s2 = _log_interp(mu, x2, e2)
    slope = np.maximum(df2(mu), 1e-300)
    sig = np.sqrt(s1**2 + s2**2) / slope
    meta = {"interpolation": "pchip", "pre_smoothing": "isotonic", "band": "1 sigma, linearized",
            "lattice_S": lattice_curve.S, "impurity_S": impurity_curve.S}
    return CrossoverMap(grid, mu, mu - sig, mu + sig, diagnostic, (float(j_lo), float(j_hi)), meta)


def band_overlap_fraction(map_a: CrossoverMap, map_b: CrossoverMap, n_grid: int = 201) -> float:
    """Fraction of the shared window where the two maps' error bands intersect."""
    lo = max(map_a.window[0], map_b.window[0])
    hi = min(map_a.window[1], map_b.window[1])
    if not lo < hi:
        return 0.0
    grid = np.geomspace(lo, hi, n_grid) if lo > 0 else np.linspace(lo, hi, n_grid)

    def at(m, arr):
        return _log_interp(grid, m.j_over_lambda, arr)

    a_lo, a_hi = at(map_a, map_a.band_low), at(map_a, map_a.band_high)
    b_lo, b_hi = at(map_b, map_b.band_low), at(map_b, map_b.band_high)
    return float(np.mean((a_lo <= b_hi) & (b_lo <= a_hi)))
